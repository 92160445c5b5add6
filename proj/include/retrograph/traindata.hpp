#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "retrograph/planner.hpp"
#include "retrograph/rng.hpp"
#include "retrograph/snapshot.hpp"
#include "retrograph/valuenet.hpp"

namespace retrograph {

struct GenerateConfig {
  /// Baseline search used to find routes (zero or value-net cost model).
  PlanConfig baseline;
  std::size_t feature_bits = 2048;
  /// Replay with the route's own reaction at each step instead of the
  /// oracle's full top-k list.
  bool route_only = false;
  unsigned threads = 1;
};

/// Labeled snapshot tagged with where it came from.
struct TrainingExample {
  std::string target;
  int step = 0;
  GraphSnapshot graph;
};

struct GeneratedData {
  std::vector<TrainingExample> examples;
  std::vector<ValueExample> values;
  std::size_t solved_targets = 0;
  std::vector<std::string> warnings;
};

/// Replays one successful route from a target-only graph, one route molecule
/// per step in `expansion_order` order (molecules missing from it go last,
/// by key). Before each expansion the open route molecules are labeled
/// positive and every other open node negative.
std::vector<TrainingExample> replay_route(const RouteTree& route, const std::vector<std::string>& expansion_order,
                                          const ExpansionOracle& oracle, const Inventory& inv, int k,
                                          bool route_only, std::size_t feature_bits);

/// Value-net examples: every non-leaf route molecule with its subtree cost.
std::vector<ValueExample> route_value_examples(const RouteTree& route, const ExpansionOracle& oracle,
                                               std::size_t feature_bits);

/// Runs the baseline on each target and replays the successful routes.
/// Output is ordered by target key whatever the thread count. Targets whose
/// oracle fails are skipped with a warning.
GeneratedData generate(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle, const Inventory& inv,
                       const GenerateConfig& cfg);

/// Seeded disjoint split into (train, val, test); each part keeps the input
/// order. Throws std::invalid_argument if val_n + test_n > size.
template <typename T>
std::tuple<std::vector<T>, std::vector<T>, std::vector<T>> split(const std::vector<T>& data, std::size_t val_n,
                                                                 std::size_t test_n, std::uint64_t seed) {
  if (val_n + test_n > data.size()) throw std::invalid_argument("split: validation + test exceed dataset size");
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<int> part(data.size(), 0);
  for (std::size_t i = 0; i < val_n; ++i) part[idx[i]] = 1;
  for (std::size_t i = val_n; i < val_n + test_n; ++i) part[idx[i]] = 2;
  std::tuple<std::vector<T>, std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (part[i] == 0) std::get<0>(out).push_back(data[i]);
    if (part[i] == 1) std::get<1>(out).push_back(data[i]);
    if (part[i] == 2) std::get<2>(out).push_back(data[i]);
  }
  return out;
}

inline constexpr int kDatasetSchemaVersion = 1;

/// Header line then one example per line.
std::string dataset_to_jsonl(const std::vector<TrainingExample>& examples, std::size_t feature_bits);
std::vector<TrainingExample> dataset_from_jsonl(const std::string& text);
void save_dataset(const std::filesystem::path& path, const std::vector<TrainingExample>& examples,
                  std::size_t feature_bits);
std::vector<TrainingExample> load_dataset(const std::filesystem::path& path);

std::string value_examples_to_jsonl(const std::vector<ValueExample>& values, std::size_t feature_bits);
std::vector<ValueExample> value_examples_from_jsonl(const std::string& text);

std::vector<GraphSnapshot> graphs_of(const std::vector<TrainingExample>& examples);

}  // namespace retrograph
