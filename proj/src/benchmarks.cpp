#include "retrograph/benchmarks.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "retrograph/rng.hpp"

namespace retrograph {

std::vector<MoleculeId> sample_integer_targets(std::size_t count, std::uint64_t lo, std::uint64_t hi,
                                               std::uint64_t seed, const std::vector<MoleculeId>& exclude) {
  if (hi < lo) throw std::invalid_argument("sample_integer_targets: empty range");
  std::set<std::string> used;
  for (const auto& m : exclude) used.insert(m.key());
  const std::uint64_t span = hi - lo + 1;
  if (span < count) throw std::invalid_argument("sample_integer_targets: range too small");
  Rng rng(seed);
  std::vector<MoleculeId> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100 * (count + 10) + span * 10) {
      throw std::invalid_argument("sample_integer_targets: not enough values left in range");
    }
    const std::string key = std::to_string(lo + rng.below(span));
    if (used.insert(key).second) out.emplace_back(key);
  }
  return out;
}

namespace {

double draw_cost(Rng& rng) { return 0.5 + rng.uniform(); }

}  // namespace

TableBenchmark hub_family(const HubFamilyConfig& cfg) {
  if (cfg.hub_length < 1 || cfg.chain_min < 1 || cfg.chain_max < cfg.chain_min) {
    throw std::invalid_argument("hub_family: bad chain lengths");
  }
  Rng rng(cfg.seed);
  const MoleculeId s("S");
  std::vector<Reaction> rx;
  std::size_t dead = 0;
  auto maybe_distract = [&](const MoleculeId& m) {
    if (rng.uniform() < cfg.distractor_rate) {
      rx.push_back(make_reaction(m, {MoleculeId("X" + std::to_string(dead++))}, draw_cost(rng)));
    }
  };
  auto hub = [](std::size_t i) { return MoleculeId("H" + std::to_string(i)); };
  for (std::size_t i = 0; i < cfg.hub_length; ++i) {
    if (i + 1 < cfg.hub_length) {
      rx.push_back(make_reaction(hub(i), {hub(i + 1), s}, draw_cost(rng)));
    } else {
      rx.push_back(make_reaction(hub(i), {s}, draw_cost(rng)));
    }
    maybe_distract(hub(i));
  }
  std::vector<MoleculeId> targets;
  for (std::size_t j = 0; j < cfg.targets; ++j) {
    const std::size_t len = cfg.chain_min + rng.below(cfg.chain_max - cfg.chain_min + 1);
    auto chain = [j](std::size_t i) { return MoleculeId("T" + std::to_string(j) + "_" + std::to_string(i)); };
    targets.push_back(chain(0));
    rx.push_back(make_reaction(chain(0), {chain(1), hub(0)}, draw_cost(rng)));
    maybe_distract(chain(0));
    for (std::size_t i = 1; i <= len; ++i) {
      if (i < len) {
        rx.push_back(make_reaction(chain(i), {chain(i + 1), s}, draw_cost(rng)));
      } else {
        rx.push_back(make_reaction(chain(i), {s}, draw_cost(rng)));
      }
      maybe_distract(chain(i));
    }
  }
  return TableBenchmark{TableDomain(std::move(rx), "hub_family"), std::move(targets), Inventory({s})};
}

TableBenchmark random_table(const RandomTableConfig& cfg) {
  if (cfg.molecules < 2 || cfg.max_reactants < 1) throw std::invalid_argument("random_table: bad config");
  Rng rng(cfg.seed);
  auto mol = [](std::size_t i) { return MoleculeId("m" + std::to_string(i)); };
  std::vector<MoleculeId> inv;
  std::vector<bool> in_inv(cfg.molecules, false);
  for (std::size_t i = 1; i < cfg.molecules; ++i) {
    if (rng.uniform() < cfg.inventory_fraction) {
      in_inv[i] = true;
      inv.push_back(mol(i));
    }
  }
  std::vector<Reaction> rx;
  for (std::size_t i = 0; i < cfg.molecules; ++i) {
    if (in_inv[i]) continue;
    const std::size_t nr = rng.below(cfg.max_reactions + 1);
    for (std::size_t r = 0; r < nr; ++r) {
      const std::size_t na = 1 + rng.below(cfg.max_reactants);
      std::vector<MoleculeId> reactants;
      for (std::size_t a = 0; a < na; ++a) reactants.push_back(mol(rng.below(cfg.molecules)));
      rx.push_back(make_reaction(mol(i), std::move(reactants), 0.1 + 2.0 * rng.uniform()));
    }
  }
  return TableBenchmark{TableDomain(std::move(rx), "random"), {mol(0)}, Inventory(std::move(inv))};
}

}  // namespace retrograph
