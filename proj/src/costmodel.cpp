#include "retrograph/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "retrograph/error.hpp"
#include "retrograph/snapshot.hpp"

namespace retrograph {

const char* to_string(CostVariant v) {
  switch (v) {
    case CostVariant::Zero: return "zero";
    case CostVariant::ValueNet: return "value";
    case CostVariant::Gnn: return "gnn";
  }
  return "?";
}

CostVariant parse_cost_variant(const std::string& s) {
  if (s == "zero") return CostVariant::Zero;
  if (s == "value" || s == "value_net") return CostVariant::ValueNet;
  if (s == "gnn") return CostVariant::Gnn;
  throw ConfigError("unknown cost model '" + s + "' (expected zero, value or gnn)");
}

std::vector<double> CostModel::open_costs(const SearchGraph& g, const ExpansionOracle& domain) const {
  std::vector<double> h = open_heuristics(g, domain);
  const auto open = g.open_nodes();
  if (h.size() != open.size()) throw ContractViolation("cost model returned the wrong number of heuristics");
  for (std::size_t i = 0; i < open.size(); ++i) {
    h[i] += g.hist_cost(open[i]);
    if (!std::isfinite(h[i])) {
      throw ContractViolation("non-finite total cost for open molecule " + g.node(open[i]).molecule.key());
    }
  }
  return h;
}

double CostModel::total_cost(const SearchGraph& g, NodeId v, const ExpansionOracle& domain) const {
  if (!g.node(v).open()) throw ContractViolation("total_cost: node is not open");
  const auto open = g.open_nodes();
  const auto it = std::lower_bound(open.begin(), open.end(), v);
  return open_costs(g, domain)[static_cast<std::size_t>(it - open.begin())];
}

std::map<NodeId, double> CostModel::score_open_nodes(const SearchGraph&, const ExpansionOracle&) const {
  throw ContractViolation(std::string("score_open_nodes is only defined for the gnn cost model, not '") +
                          to_string(variant()) + "'");
}

std::vector<double> ZeroCost::open_heuristics(const SearchGraph& g, const ExpansionOracle&) const {
  return std::vector<double>(g.open_count(), 0.0);
}

std::vector<double> ValueNetCost::open_heuristics(const SearchGraph& g, const ExpansionOracle& domain) const {
  const auto open = g.open_nodes();
  if (open.empty()) return {};
  std::vector<std::vector<std::uint32_t>> rows;
  rows.reserve(open.size());
  for (NodeId v : open) rows.push_back(domain.features(g.node(v).molecule, net_.config.feature_bits).on_bits());
  nn::Tape t(false);
  const nn::Matrix& out = net_.forward(t, rows).value();
  std::vector<double> h(open.size());
  for (std::size_t i = 0; i < open.size(); ++i) h[i] = std::max(0.0, out(static_cast<nn::Index>(i), 0));
  return h;
}

GnnCost::GnnCost(GnnParameters params, double lambda) : params_(std::move(params)), lambda_(lambda) {
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw ConfigError("gnn lambda must be finite and >= 0");
}

std::vector<OpenNodeScore> GnnCost::scores(const SearchGraph& g, const ExpansionOracle& domain) const {
  if (g.open_count() == 0) throw ContractViolation("score_open_nodes: no open nodes");
  return score(take_snapshot(g, &domain, params_.config.feature_bits), params_);
}

std::vector<double> GnnCost::open_heuristics(const SearchGraph& g, const ExpansionOracle& domain) const {
  if (g.open_count() == 0) return {};
  const auto s = scores(g, domain);
  double mx = s[0].logit;
  for (const auto& x : s) mx = std::max(mx, x.logit);
  double z = 0.0;
  for (const auto& x : s) z += std::exp(x.logit - mx);
  const double lse = mx + std::log(z);
  std::vector<double> h;
  h.reserve(s.size());
  for (const auto& x : s) h.push_back(lambda_ * (lse - x.logit));  // -lambda * ln softmax
  return h;
}

std::map<NodeId, double> GnnCost::score_open_nodes(const SearchGraph& g, const ExpansionOracle& domain) const {
  std::map<NodeId, double> out;
  for (const auto& x : scores(g, domain)) out.emplace(NodeId{x.node}, x.normalized);
  return out;
}

std::unique_ptr<CostModel> make_cost_model(CostVariant v, const std::filesystem::path& checkpoint, double lambda) {
  switch (v) {
    case CostVariant::Zero: return std::make_unique<ZeroCost>();
    case CostVariant::ValueNet:
      if (checkpoint.empty()) throw ConfigError("the value cost model needs --checkpoint");
      return std::make_unique<ValueNetCost>(ValueNet::load(checkpoint));
    case CostVariant::Gnn:
      if (checkpoint.empty()) throw ConfigError("the gnn cost model needs --checkpoint");
      return std::make_unique<GnnCost>(GnnParameters::load(checkpoint), lambda);
  }
  throw ConfigError("unknown cost model");
}

}  // namespace retrograph
