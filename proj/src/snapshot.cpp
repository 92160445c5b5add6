#include "retrograph/snapshot.hpp"

#include <cmath>

#include "retrograph/error.hpp"

namespace retrograph {

using nlohmann::json;

std::vector<std::uint32_t> GraphSnapshot::open_nodes() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].open) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::size_t GraphSnapshot::labeled_count(Label which) const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.label == which;
  return n;
}

GraphSnapshot take_snapshot(const SearchGraph& g, const ExpansionOracle* domain,
                            std::size_t feature_bits) {
  GraphSnapshot s;
  s.feature_bits = feature_bits;
  s.nodes.reserve(g.size());
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(NodeId{i});
    SnapshotNode sn;
    sn.kind = n.kind;
    sn.open = n.open();
    sn.success = n.success;
    sn.hist_cost = n.hist_cost;
    if (n.is_molecule()) {
      sn.molecule = n.molecule.key();
      if (domain != nullptr) sn.features = domain->features(n.molecule, feature_bits).on_bits();
    } else {
      sn.reaction_cost = n.reaction_cost;
    }
    for (NodeId succ : n.successors) s.edges.emplace_back(i, succ.value);
    s.nodes.push_back(std::move(sn));
  }
  for (NodeId t : g.targets()) s.targets.push_back(t.value);
  return s;
}

namespace {

json cost_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double cost_from_json(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

json to_json(const GraphSnapshot& s) {
  json nodes = json::array();
  json labels = json::array();
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    json jn;
    if (n.kind == NodeKind::Molecule) {
      jn["kind"] = "mol";
      jn["molecule"] = n.molecule;
      jn["features"] = n.features;
    } else {
      jn["kind"] = "rxn";
      jn["cost"] = n.reaction_cost;
    }
    jn["open"] = n.open;
    jn["success"] = n.success;
    jn["hist_cost"] = cost_to_json(n.hist_cost);
    nodes.push_back(std::move(jn));
    if (n.label != Label::None) labels.push_back({i, static_cast<int>(n.label)});
  }
  json edges = json::array();
  for (auto [a, b] : s.edges) edges.push_back({a, b});
  return json{{"schema_version", GraphSnapshot::kSchemaVersion},
              {"feature_bits", s.feature_bits},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)},
              {"targets", s.targets},
              {"labels", std::move(labels)}};
}

GraphSnapshot snapshot_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != GraphSnapshot::kSchemaVersion) {
      throw ConfigError("unsupported snapshot schema version");
    }
    GraphSnapshot s;
    s.feature_bits = j.at("feature_bits").get<std::size_t>();
    for (const auto& jn : j.at("nodes")) {
      SnapshotNode n;
      const auto kind = jn.at("kind").get<std::string>();
      if (kind == "mol") {
        n.kind = NodeKind::Molecule;
        n.molecule = jn.at("molecule").get<std::string>();
        n.features = jn.at("features").get<std::vector<std::uint32_t>>();
      } else if (kind == "rxn") {
        n.kind = NodeKind::Reaction;
        n.reaction_cost = jn.at("cost").get<double>();
      } else {
        throw ConfigError("unknown node kind '" + kind + "'");
      }
      n.open = jn.at("open").get<bool>();
      n.success = jn.at("success").get<bool>();
      n.hist_cost = cost_from_json(jn.at("hist_cost"));
      s.nodes.push_back(std::move(n));
    }
    for (const auto& e : j.at("edges")) {
      auto a = e.at(0).get<std::uint32_t>();
      auto b = e.at(1).get<std::uint32_t>();
      if (a >= s.nodes.size() || b >= s.nodes.size()) throw ConfigError("edge endpoint out of range");
      s.edges.emplace_back(a, b);
    }
    s.targets = j.at("targets").get<std::vector<std::uint32_t>>();
    for (const auto& l : j.at("labels")) {
      auto idx = l.at(0).get<std::size_t>();
      int v = l.at(1).get<int>();
      if (idx >= s.nodes.size() || !s.nodes[idx].open || (v != 0 && v != 1)) {
        throw ConfigError("label must reference an open node with value 0 or 1");
      }
      s.nodes[idx].label = static_cast<Label>(v);
    }
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed graph snapshot: ") + e.what());
  }
}

}  // namespace retrograph
