#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrograph/costmodel.hpp"
#include "retrograph/molspace.hpp"
#include "retrograph/searchgraph.hpp"

namespace retrograph {

struct PlanConfig {
  int budget = 500;
  int k = 50;
  GraphMode mode = GraphMode::Graph;
  /// Not owned; nullptr means the zero heuristic.
  const CostModel* cost_model = nullptr;

  /// Throws ConfigError.
  void validate() const;
};

/// Extracted synthesis plan. A node with children is the product of the
/// chosen reaction (cost `reaction_cost`); a node without children is an
/// inventory molecule.
struct RouteTree {
  MoleculeId molecule;
  double reaction_cost = 0.0;
  std::vector<RouteTree> children;

  bool is_leaf() const noexcept { return children.empty(); }
};

struct RouteStats {
  int length = 0;     // reactions in the tree
  double cost = 0.0;  // sum of their costs
};

RouteStats route_stats(const RouteTree& r);

/// Checks every RouteTree invariant and that each reaction is one the oracle
/// proposes within its top k. Returns an empty string when valid, else the
/// first problem found.
std::string validate_route(const RouteTree& r, const Inventory& inv, const ExpansionOracle& oracle, int k);

/// One planning iteration as seen by observers and the metrics layer.
struct IterationRecord {
  int iteration = 0;  // 1-based
  std::string expanded;
  std::size_t reactions_added = 0;
  std::size_t molecule_nodes = 0;
  std::size_t reaction_nodes = 0;
  std::vector<bool> target_success;
};

using PlanObserver = std::function<void(const IterationRecord&)>;

struct TargetResult {
  MoleculeId target;
  bool success = false;
  std::optional<int> first_success_iteration;
  std::optional<RouteTree> route;
};

struct PlanResult {
  GraphMode mode = GraphMode::Graph;
  int budget = 0;
  int iterations = 0;
  std::size_t molecule_nodes = 0;
  std::size_t reaction_nodes = 0;
  std::size_t distinct_molecules = 0;
  std::vector<TargetResult> targets;
  std::vector<IterationRecord> trace;

  std::size_t success_count() const;
  bool all_success() const { return success_count() == targets.size(); }
  /// Expanded molecule keys in order.
  std::vector<std::string> expanded() const;
};

/// Graph and result of one run.
struct PlanRun {
  SearchGraph graph;
  std::vector<NodeId> target_nodes;
  PlanResult result;
};

/// argmin of the cost model's total cost over the open nodes, ties to the
/// lowest NodeId. Throws ContractViolation on an empty open set.
NodeId select_next(const SearchGraph& g, const CostModel& cm, const ExpansionOracle& oracle);

/// Select / expand / update until the budget is spent, every target has
/// succeeded, or no open node is left. Targets must be non-empty and
/// distinct. Oracle failures raise PlanningError naming the molecule.
PlanRun run_plan(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle, const Inventory& inv,
                 const PlanConfig& cfg, const PlanObserver& observer = {});

PlanResult plan(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle, const Inventory& inv,
                const PlanConfig& cfg, const PlanObserver& observer = {});

/// Minimal-cost route for a successful target. Each molecule's reaction is
/// fixed the first time its best cost is settled, so the result is acyclic.
/// Throws ContractViolation if the target has not succeeded.
RouteTree extract_route(const SearchGraph& g, NodeId target);

struct BatchConfig {
  int batch_size = 1;
  int clusters = 1;
  std::uint64_t seed = 0;
  std::size_t feature_bits = 2048;

  void validate(std::size_t target_count) const;
};

/// Targets of each batch, as indices into the input list. Targets are
/// clustered on their fingerprints and batches are cut inside clusters in
/// input order; clusters are visited by their lowest member index.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<MoleculeId>& targets,
                                                   const ExpansionOracle& oracle, const BatchConfig& bc);

/// Plans each batch in one shared graph with budget cfg.budget x batch size.
std::vector<PlanResult> batch_plan(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle,
                                   const Inventory& inv, const PlanConfig& cfg, const BatchConfig& bc);

/// Per-target results of a batch run, back in input order.
std::vector<TargetResult> per_target(const std::vector<MoleculeId>& targets, const std::vector<PlanResult>& batches);

nlohmann::json to_json(const RouteTree& r);
RouteTree route_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PlanResult& r, bool include_trace = false);
PlanResult plan_result_from_json(const nlohmann::json& j);

/// CSV of the trace: iteration,expanded,reactions_added,molecule_nodes,reaction_nodes,solved
std::string trace_csv(const PlanResult& r);

}  // namespace retrograph
