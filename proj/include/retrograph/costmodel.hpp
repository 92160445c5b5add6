#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "retrograph/molspace.hpp"
#include "retrograph/policygnn.hpp"
#include "retrograph/searchgraph.hpp"
#include "retrograph/valuenet.hpp"

namespace retrograph {

enum class CostVariant { Zero, ValueNet, Gnn };

const char* to_string(CostVariant v);
/// Accepts "zero", "value" (or "value_net") and "gnn".
CostVariant parse_cost_variant(const std::string& s);

/// Total cost of open nodes: historical cost plus a heuristic estimate of
/// the future cost. Implementations are immutable and safe to share between
/// concurrent planning runs.
class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual CostVariant variant() const = 0;

  /// Heuristic term for every node of g.open_nodes(), in the same order.
  virtual std::vector<double> open_heuristics(const SearchGraph& g, const ExpansionOracle& domain) const = 0;

  /// hist_cost + heuristic for every open node, in g.open_nodes() order.
  std::vector<double> open_costs(const SearchGraph& g, const ExpansionOracle& domain) const;

  /// Total cost of one open node. Throws ContractViolation if v is not open.
  double total_cost(const SearchGraph& g, NodeId v, const ExpansionOracle& domain) const;

  /// Softmax-normalized policy scores over the open nodes. Only the GNN
  /// variant has them; others throw ContractViolation.
  virtual std::map<NodeId, double> score_open_nodes(const SearchGraph& g, const ExpansionOracle& domain) const;
};

class ZeroCost final : public CostModel {
 public:
  CostVariant variant() const override { return CostVariant::Zero; }
  std::vector<double> open_heuristics(const SearchGraph& g, const ExpansionOracle& domain) const override;
};

/// h(v) = max(0, net(features(v))).
class ValueNetCost final : public CostModel {
 public:
  explicit ValueNetCost(ValueNet net) : net_(std::move(net)) {}
  CostVariant variant() const override { return CostVariant::ValueNet; }
  std::vector<double> open_heuristics(const SearchGraph& g, const ExpansionOracle& domain) const override;
  const ValueNet& net() const noexcept { return net_; }

 private:
  ValueNet net_;
};

/// h(v) = -lambda * ln(score(v)), score = softmax of the policy logits over
/// the open nodes, computed once per call for the whole graph.
class GnnCost final : public CostModel {
 public:
  explicit GnnCost(GnnParameters params, double lambda = 1.0);
  CostVariant variant() const override { return CostVariant::Gnn; }
  std::vector<double> open_heuristics(const SearchGraph& g, const ExpansionOracle& domain) const override;
  std::map<NodeId, double> score_open_nodes(const SearchGraph& g, const ExpansionOracle& domain) const override;
  const GnnParameters& params() const noexcept { return params_; }
  double lambda() const noexcept { return lambda_; }

 private:
  std::vector<OpenNodeScore> scores(const SearchGraph& g, const ExpansionOracle& domain) const;
  GnnParameters params_;
  double lambda_;
};

/// Builds a cost model; value and gnn variants load `checkpoint`.
std::unique_ptr<CostModel> make_cost_model(CostVariant v, const std::filesystem::path& checkpoint,
                                           double lambda = 1.0);

}  // namespace retrograph
