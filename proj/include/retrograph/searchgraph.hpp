#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "retrograph/molspace.hpp"

namespace retrograph {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/// Dense node index, never reused. Molecule and reaction nodes share the
/// index space.
struct NodeId {
  std::uint32_t value = 0;

  friend bool operator==(NodeId, NodeId) = default;
  friend auto operator<=>(NodeId, NodeId) = default;
};

struct NodeIdHash {
  std::size_t operator()(NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

enum class NodeKind : std::uint8_t { Molecule, Reaction };

/// One node of the AND-OR graph. Molecule nodes are OR nodes, reaction nodes
/// AND nodes; edges always alternate kinds.
struct Node {
  NodeKind kind = NodeKind::Molecule;
  MoleculeId molecule;          // molecule nodes only
  double reaction_cost = 0.0;   // reaction nodes only
  bool in_inventory = false;
  bool expanded = false;
  bool success = false;
  double hist_cost = kInfiniteCost;
  std::vector<NodeId> successors;
  std::vector<NodeId> predecessors;

  bool is_molecule() const noexcept { return kind == NodeKind::Molecule; }
  bool is_reaction() const noexcept { return kind == NodeKind::Reaction; }
  /// Unexpanded, not purchasable: eligible for selection.
  bool open() const noexcept { return is_molecule() && !in_inventory && !expanded; }
  /// Expanded but the single-step model had nothing to offer.
  bool dead_end() const noexcept { return is_molecule() && expanded && successors.empty(); }
};

/// Graph mode merges identical molecules through a global memory; tree mode
/// creates a fresh node for every reactant occurrence.
enum class GraphMode { Graph, Tree };

const char* to_string(GraphMode mode);
GraphMode parse_graph_mode(const std::string& s);

/// Nodes whose success flag or historical cost may have changed after an
/// expansion.
struct AffectedSet {
  std::vector<NodeId> nodes;
};

class SearchGraph {
 public:
  explicit SearchGraph(GraphMode mode = GraphMode::Graph) : mode_(mode) {}

  GraphMode mode() const noexcept { return mode_; }

  /// Adds (or finds) a target molecule node with historical cost 0.
  NodeId add_target(const MoleculeId& m, const Inventory& inv);

  /// Attaches one reaction node per reaction under the open molecule `v`,
  /// reusing reactant nodes through the molecule memory in graph mode, and
  /// closes `v`. An empty reaction list closes `v` as a dead end.
  /// Throws ContractViolation if `v` is not an open molecule node or a
  /// reaction's product is not v's molecule.
  AffectedSet merge_expand(NodeId v, const std::vector<Reaction>& reactions, const Inventory& inv);

  /// From-scratch least fixpoint of the AND-OR success rule.
  void recompute_success();
  /// From-scratch shortest-path relaxation of historical costs from targets.
  void recompute_hist_cost();
  /// Incremental bottom-up success update plus downward cost relaxation,
  /// equivalent to both recompute_* calls.
  void propagate_update(const AffectedSet& affected);

  double hist_cost(NodeId v) const { return node(v).hist_cost; }

  /// Open molecule nodes in ascending id order.
  std::vector<NodeId> open_nodes() const { return {open_.begin(), open_.end()}; }
  std::size_t open_count() const noexcept { return open_.size(); }

  const Node& node(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t molecule_count() const noexcept { return molecule_count_; }
  std::size_t reaction_count() const noexcept { return nodes_.size() - molecule_count_; }
  std::size_t edge_count() const noexcept { return edge_count_; }
  const std::vector<NodeId>& targets() const noexcept { return targets_; }
  bool is_target(NodeId id) const;

  /// Molecule memory lookup (graph mode); in tree mode only targets are
  /// registered.
  std::optional<NodeId> find(const MoleculeId& m) const;
  std::size_t memory_size() const noexcept { return memory_.size(); }

  /// Number of distinct molecule keys across all molecule nodes.
  std::size_t distinct_molecules() const;

  /// Structural checks: bipartite edges, single-product reactions, symmetric
  /// adjacency, dedup bijection in graph mode. Throws ContractViolation.
  void check_invariants() const;

 private:
  NodeId new_molecule(const MoleculeId& m, const Inventory& inv);
  NodeId new_reaction(double cost);
  void add_edge(NodeId from, NodeId to);
  Node& mut(NodeId id) { return nodes_[id.value]; }
  bool evaluate_success(const Node& n) const;

  GraphMode mode_;
  std::vector<Node> nodes_;
  std::unordered_map<MoleculeId, NodeId, MoleculeIdHash> memory_;
  std::vector<NodeId> targets_;
  std::set<NodeId> open_;
  std::size_t molecule_count_ = 0;
  std::size_t edge_count_ = 0;
};

}  // namespace retrograph
