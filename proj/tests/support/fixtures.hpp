#pragma once

#include <functional>
#include <string>
#include <vector>

#include "retrograph/benchmarks.hpp"
#include "retrograph/molspace.hpp"
#include "retrograph/rng.hpp"
#include "retrograph/searchgraph.hpp"

namespace fixture {

using namespace retrograph;

inline TableDomain figure2() { return TableDomain::load_jsonl(RETROGRAPH_FIXTURES "/figure2.jsonl"); }

inline Inventory figure2_inventory(const ExpansionOracle& d) {
  return load_inventory(RETROGRAPH_FIXTURES "/figure2_inventory.txt", d);
}

/// Expands the named molecule node with every reaction the domain offers and
/// runs the incremental update.
inline void expand(SearchGraph& g, const ExpansionOracle& d, const Inventory& inv, const std::string& m) {
  auto id = g.find(MoleculeId(m));
  auto affected = g.merge_expand(*id, d.expand(MoleculeId(m), 50), inv);
  g.propagate_update(affected);
}

/// Grows a search graph over a random reaction table by expanding randomly
/// chosen open nodes, calling `after` after each expansion.
inline SearchGraph grow_random(std::uint64_t seed, std::size_t molecules, std::size_t max_nodes,
                               GraphMode mode = GraphMode::Graph,
                               const std::function<void(const SearchGraph&)>& after = {}) {
  RandomTableConfig rc;
  rc.molecules = molecules;
  rc.seed = seed;
  auto bench = random_table(rc);
  SearchGraph g(mode);
  for (const auto& t : bench.targets) g.add_target(t, bench.inventory);
  Rng rng(hash_combine(seed, 0x9a7));
  while (g.open_count() > 0 && g.size() < max_nodes) {
    auto open = g.open_nodes();
    NodeId v = open[rng.below(open.size())];
    auto reactions = bench.domain.expand(g.node(v).molecule, 50);
    auto affected = g.merge_expand(v, reactions, bench.inventory);
    g.propagate_update(affected);
    if (after) after(g);
  }
  return g;
}

}  // namespace fixture

#include "retrograph/snapshot.hpp"

namespace fixture {

/// T <- {A, B} (1.2), T <- {C} (0.8), A in the inventory: six nodes with
/// B and C open. B is labeled positive, C negative.
inline GraphSnapshot six_node_snapshot(std::size_t bits) {
  TableDomain d({make_reaction(MoleculeId("T"), {MoleculeId("A"), MoleculeId("B")}, 1.2),
                 make_reaction(MoleculeId("T"), {MoleculeId("C")}, 0.8)});
  Inventory inv{{MoleculeId("A")}};
  SearchGraph g;
  NodeId t = g.add_target(MoleculeId("T"), inv);
  g.propagate_update(g.merge_expand(t, d.expand(MoleculeId("T"), 5), inv));
  GraphSnapshot s = take_snapshot(g, &d, bits);
  for (auto& n : s.nodes) {
    if (n.open) n.label = n.molecule == "B" ? Label::Positive : Label::Negative;
  }
  return s;
}

/// Random labeled snapshot from a random growth, every open node labeled by
/// a seeded coin, at least one of each label when possible.
inline GraphSnapshot random_labeled_snapshot(std::uint64_t seed, std::size_t max_nodes, std::size_t bits) {
  RandomTableConfig rc;
  rc.molecules = 12;
  rc.seed = seed;
  auto bench = random_table(rc);
  SearchGraph g;
  for (const auto& t : bench.targets) g.add_target(t, bench.inventory);
  Rng rng(hash_combine(seed, 0x51));
  while (g.open_count() > 0 && g.size() < max_nodes) {
    auto open = g.open_nodes();
    NodeId v = open[rng.below(open.size())];
    if (g.size() + rc.max_reactions * (1 + rc.max_reactants) > max_nodes && g.size() > 1) break;
    g.propagate_update(g.merge_expand(v, bench.domain.expand(g.node(v).molecule, 50), bench.inventory));
  }
  GraphSnapshot s = take_snapshot(g, &bench.domain, bits);
  auto open = s.open_nodes();
  for (std::size_t i = 0; i < open.size(); ++i) {
    s.nodes[open[i]].label = (i == 0 || (i > 1 && rng.below(2) == 0)) ? Label::Positive : Label::Negative;
  }
  return s;
}

}  // namespace fixture
