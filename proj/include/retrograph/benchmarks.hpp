#pragma once

#include <cstdint>
#include <vector>

#include "retrograph/molspace.hpp"

namespace retrograph {

/// `count` distinct integers drawn uniformly from [lo, hi] (seeded), skipping
/// the values in `exclude`, returned in draw order.
std::vector<MoleculeId> sample_integer_targets(std::size_t count, std::uint64_t lo, std::uint64_t hi,
                                               std::uint64_t seed,
                                               const std::vector<MoleculeId>& exclude = {});

/// A table-driven benchmark: domain, targets and inventory.
struct TableBenchmark {
  TableDomain domain;
  std::vector<MoleculeId> targets;
  Inventory inventory;
};

struct HubFamilyConfig {
  std::size_t targets = 50;
  std::size_t hub_length = 30;
  std::size_t chain_min = 5;
  std::size_t chain_max = 25;
  /// Each chain or hub molecule also gets a reaction into a dead end with
  /// this probability.
  double distractor_rate = 0.5;
  std::uint64_t seed = 7;
};

/// Targets that all need one long shared intermediate chain (the hub) plus a
/// private chain of random length:
///   T_j <- {C_j1, H_0},  C_ji <- {C_j(i+1), s},  C_jL <- {s}
///   H_i <- {H_(i+1), s}, H_last <- {s}
/// with `s` the single inventory molecule.
TableBenchmark hub_family(const HubFamilyConfig& cfg);

struct RandomTableConfig {
  std::size_t molecules = 40;
  std::size_t max_reactions = 3;
  std::size_t max_reactants = 3;
  double inventory_fraction = 0.2;
  std::uint64_t seed = 1;
};

/// Random reaction table over molecules "m0".."m(n-1)". Reactants are drawn
/// from all molecules, so cycles are common; m0 is the target and is never
/// in the inventory.
TableBenchmark random_table(const RandomTableConfig& cfg);

}  // namespace retrograph
