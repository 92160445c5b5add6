#include "retrograph/searchgraph.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <unordered_set>

#include "retrograph/error.hpp"

namespace retrograph {

const char* to_string(GraphMode mode) { return mode == GraphMode::Graph ? "graph" : "tree"; }

GraphMode parse_graph_mode(const std::string& s) {
  if (s == "graph") return GraphMode::Graph;
  if (s == "tree") return GraphMode::Tree;
  throw std::invalid_argument("mode must be 'graph' or 'tree', got '" + s + "'");
}

const Node& SearchGraph::node(NodeId id) const {
  if (id.value >= nodes_.size()) {
    throw ContractViolation("node id " + std::to_string(id.value) + " does not exist");
  }
  return nodes_[id.value];
}

bool SearchGraph::is_target(NodeId id) const {
  return std::find(targets_.begin(), targets_.end(), id) != targets_.end();
}

std::optional<NodeId> SearchGraph::find(const MoleculeId& m) const {
  auto it = memory_.find(m);
  if (it == memory_.end()) return std::nullopt;
  return it->second;
}

std::size_t SearchGraph::distinct_molecules() const {
  std::unordered_set<std::string> keys;
  for (const auto& n : nodes_) {
    if (n.is_molecule()) keys.insert(n.molecule.key());
  }
  return keys.size();
}

NodeId SearchGraph::new_molecule(const MoleculeId& m, const Inventory& inv) {
  NodeId id{static_cast<std::uint32_t>(nodes_.size())};
  Node n;
  n.kind = NodeKind::Molecule;
  n.molecule = m;
  n.in_inventory = inv.contains(m);
  n.success = n.in_inventory;
  nodes_.push_back(std::move(n));
  ++molecule_count_;
  if (nodes_.back().open()) open_.insert(id);
  return id;
}

NodeId SearchGraph::new_reaction(double cost) {
  NodeId id{static_cast<std::uint32_t>(nodes_.size())};
  Node n;
  n.kind = NodeKind::Reaction;
  n.reaction_cost = cost;
  nodes_.push_back(std::move(n));
  return id;
}

void SearchGraph::add_edge(NodeId from, NodeId to) {
  mut(from).successors.push_back(to);
  mut(to).predecessors.push_back(from);
  ++edge_count_;
}

NodeId SearchGraph::add_target(const MoleculeId& m, const Inventory& inv) {
  std::optional<NodeId> existing;
  if (mode_ == GraphMode::Graph) {
    existing = find(m);
  } else {
    for (NodeId t : targets_) {
      if (nodes_[t.value].molecule == m) existing = t;
    }
  }
  NodeId id;
  if (existing) {
    id = *existing;
  } else {
    id = new_molecule(m, inv);
    memory_.emplace(m, id);
  }
  if (!is_target(id)) targets_.push_back(id);
  mut(id).hist_cost = 0.0;
  return id;
}

AffectedSet SearchGraph::merge_expand(NodeId v, const std::vector<Reaction>& reactions,
                                      const Inventory& inv) {
  if (v.value >= nodes_.size() || !nodes_[v.value].open()) {
    throw ContractViolation("merge_expand: node " + std::to_string(v.value) +
                            " is not an open molecule node");
  }
  const MoleculeId product = nodes_[v.value].molecule;
  for (const auto& r : reactions) {
    if (r.product != product) {
      throw ContractViolation("merge_expand: reaction product '" + r.product.key() +
                              "' does not match expanded molecule '" + product.key() + "'");
    }
  }

  AffectedSet affected;
  affected.nodes.push_back(v);
  mut(v).expanded = true;
  open_.erase(v);

  for (const auto& r : reactions) {
    NodeId rid = new_reaction(r.cost);
    add_edge(v, rid);
    for (const auto& m : r.reactants) {
      NodeId mid;
      if (mode_ == GraphMode::Graph) {
        auto it = memory_.find(m);
        if (it != memory_.end()) {
          mid = it->second;
        } else {
          mid = new_molecule(m, inv);
          memory_.emplace(m, mid);
        }
      } else {
        mid = new_molecule(m, inv);
      }
      add_edge(rid, mid);
      affected.nodes.push_back(mid);
    }
    affected.nodes.push_back(rid);
  }
#ifndef NDEBUG
  check_invariants();
#endif
  return affected;
}

bool SearchGraph::evaluate_success(const Node& n) const {
  if (n.is_reaction()) {
    if (n.successors.empty()) return false;
    return std::all_of(n.successors.begin(), n.successors.end(),
                       [&](NodeId s) { return nodes_[s.value].success; });
  }
  if (n.in_inventory) return true;
  return std::any_of(n.successors.begin(), n.successors.end(),
                     [&](NodeId s) { return nodes_[s.value].success; });
}

void SearchGraph::recompute_success() {
  // Counter-based least fixpoint: a reaction turns true once all of its
  // distinct successors are true, a molecule once any successor is.
  std::vector<std::size_t> pending(nodes_.size(), 0);
  std::deque<NodeId> queue;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    n.success = n.is_molecule() && n.in_inventory;
    if (n.is_reaction()) pending[i] = n.successors.size();
    if (n.success) queue.push_back(NodeId{static_cast<std::uint32_t>(i)});
  }
  while (!queue.empty()) {
    NodeId x = queue.front();
    queue.pop_front();
    for (NodeId p : nodes_[x.value].predecessors) {
      Node& pn = nodes_[p.value];
      if (pn.success) continue;
      if (pn.is_reaction()) {
        if (--pending[p.value] != 0) continue;
      }
      pn.success = true;
      queue.push_back(p);
    }
  }
}

void SearchGraph::recompute_hist_cost() {
  for (auto& n : nodes_) n.hist_cost = kInfiniteCost;
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (NodeId t : targets_) {
    nodes_[t.value].hist_cost = 0.0;
    heap.emplace(0.0, t.value);
  }
  while (!heap.empty()) {
    auto [d, x] = heap.top();
    heap.pop();
    if (d > nodes_[x].hist_cost) continue;
    for (NodeId s : nodes_[x].successors) {
      Node& sn = nodes_[s.value];
      double cand = sn.is_reaction() ? d + sn.reaction_cost : d;
      if (cand < sn.hist_cost) {
        sn.hist_cost = cand;
        heap.emplace(cand, s.value);
      }
    }
  }
}

void SearchGraph::propagate_update(const AffectedSet& affected) {
  // Success flows bottom-up: recompute each affected node, and whenever a
  // node is (or becomes) true, revisit its predecessors.
  std::deque<NodeId> work;
  std::vector<char> queued(nodes_.size(), 0);
  for (NodeId a : affected.nodes) {
    if (!queued[a.value]) {
      queued[a.value] = 1;
      work.push_back(a);
    }
  }
  while (!work.empty()) {
    NodeId x = work.front();
    work.pop_front();
    queued[x.value] = 0;
    Node& n = nodes_[x.value];
    bool now = evaluate_success(n);
    if (now && !n.success) {
      n.success = true;
      for (NodeId p : n.predecessors) {
        if (!queued[p.value] && !nodes_[p.value].success) {
          queued[p.value] = 1;
          work.push_back(p);
        }
      }
    }
  }

  // Historical cost flows top-down and only ever decreases.
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (NodeId a : affected.nodes) {
    Node& n = nodes_[a.value];
    double best = is_target(a) ? 0.0 : n.hist_cost;
    for (NodeId p : n.predecessors) {
      const Node& pn = nodes_[p.value];
      double cand = n.is_reaction() ? pn.hist_cost + n.reaction_cost : pn.hist_cost;
      best = std::min(best, cand);
    }
    n.hist_cost = best;
    heap.emplace(best, a.value);
  }
  while (!heap.empty()) {
    auto [d, x] = heap.top();
    heap.pop();
    if (d > nodes_[x].hist_cost) continue;
    for (NodeId s : nodes_[x].successors) {
      Node& sn = nodes_[s.value];
      double cand = sn.is_reaction() ? d + sn.reaction_cost : d;
      if (cand < sn.hist_cost) {
        sn.hist_cost = cand;
        heap.emplace(cand, s.value);
      }
    }
  }
}

void SearchGraph::check_invariants() const {
  std::size_t molecules = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    const std::string where = "node " + std::to_string(i);
    for (NodeId s : n.successors) {
      if (s.value >= nodes_.size()) throw ContractViolation(where + ": dangling successor");
      if (nodes_[s.value].kind == n.kind) throw ContractViolation(where + ": edge between same kinds");
    }
    for (NodeId p : n.predecessors) {
      if (p.value >= nodes_.size()) throw ContractViolation(where + ": dangling predecessor");
      const auto& ps = nodes_[p.value].successors;
      if (std::find(ps.begin(), ps.end(), NodeId{static_cast<std::uint32_t>(i)}) == ps.end()) {
        throw ContractViolation(where + ": asymmetric adjacency");
      }
    }
    if (n.is_reaction()) {
      if (n.predecessors.size() != 1) throw ContractViolation(where + ": reaction needs one product");
      if (n.successors.empty()) throw ContractViolation(where + ": reaction without reactants");
    } else {
      ++molecules;
      if (n.in_inventory && !n.successors.empty()) {
        throw ContractViolation(where + ": inventory molecule was expanded");
      }
      if (n.in_inventory && !n.success) throw ContractViolation(where + ": inventory molecule not successful");
      if (n.open() != (open_.count(NodeId{static_cast<std::uint32_t>(i)}) != 0)) {
        throw ContractViolation(where + ": open set out of sync");
      }
    }
  }
  if (molecules != molecule_count_) throw ContractViolation("molecule count out of sync");
  if (mode_ == GraphMode::Graph) {
    if (memory_.size() != molecule_count_) {
      throw ContractViolation("molecule memory is not a bijection with molecule nodes");
    }
    for (const auto& [m, id] : memory_) {
      if (id.value >= nodes_.size() || nodes_[id.value].molecule != m) {
        throw ContractViolation("molecule memory entry for '" + m.key() + "' is stale");
      }
    }
  }
}

}  // namespace retrograph
