#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "retrograph/molspace.hpp"
#include "retrograph/searchgraph.hpp"

namespace retrograph {

/// Node label carried in training examples. Only open nodes are labeled.
enum class Label : std::int8_t { None = -1, Negative = 0, Positive = 1 };

struct SnapshotNode {
  NodeKind kind = NodeKind::Molecule;
  std::string molecule;          // molecule nodes
  double reaction_cost = 0.0;    // reaction nodes
  bool open = false;
  bool success = false;
  double hist_cost = 0.0;
  std::vector<std::uint32_t> features;  // set fingerprint bits, molecule nodes
  Label label = Label::None;
};

/// Self-contained copy of a search graph: everything the policy network needs,
/// detached from the domain that produced it.
struct GraphSnapshot {
  static constexpr int kSchemaVersion = 1;

  std::size_t feature_bits = 0;
  std::vector<SnapshotNode> nodes;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // (src, dst)
  std::vector<std::uint32_t> targets;

  std::vector<std::uint32_t> open_nodes() const;
  std::size_t labeled_count(Label which) const;
};

/// Copies `g`; fingerprints are computed through `domain` when it is given.
GraphSnapshot take_snapshot(const SearchGraph& g, const ExpansionOracle* domain,
                            std::size_t feature_bits);

nlohmann::json to_json(const GraphSnapshot& s);
/// Throws ConfigError on malformed input.
GraphSnapshot snapshot_from_json(const nlohmann::json& j);

}  // namespace retrograph
