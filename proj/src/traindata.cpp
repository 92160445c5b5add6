#include "retrograph/traindata.hpp"

#include <atomic>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "retrograph/error.hpp"
#include "retrograph/weights_io.hpp"

namespace retrograph {

using nlohmann::json;

namespace {

struct RouteStep {
  std::vector<MoleculeId> reactants;
  double cost = 0.0;
};

void collect_steps(const RouteTree& r, std::map<std::string, RouteStep>& out) {
  if (r.is_leaf()) return;
  if (!out.count(r.molecule.key())) {
    RouteStep s;
    for (const auto& c : r.children) s.reactants.push_back(c.molecule);
    s.cost = r.reaction_cost;
    out.emplace(r.molecule.key(), std::move(s));
  }
  for (const auto& c : r.children) collect_steps(c, out);
}

}  // namespace

std::vector<TrainingExample> replay_route(const RouteTree& route, const std::vector<std::string>& expansion_order,
                                          const ExpansionOracle& oracle, const Inventory& inv, int k,
                                          bool route_only, std::size_t feature_bits) {
  std::map<std::string, RouteStep> steps;
  collect_steps(route, steps);
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < expansion_order.size(); ++i) rank.emplace(expansion_order[i], i);

  SearchGraph g(GraphMode::Graph);
  const NodeId target = g.add_target(route.molecule, inv);
  std::vector<TrainingExample> out;
  for (int step = 0;; ++step) {
    std::vector<std::pair<NodeId, const std::string*>> frontier;
    for (const auto& [key, _] : steps) {
      auto id = g.find(MoleculeId(key));
      if (id && g.node(*id).open()) frontier.emplace_back(*id, &key);
    }
    if (frontier.empty()) break;

    GraphSnapshot snap = take_snapshot(g, &oracle, feature_bits);
    for (auto& n : snap.nodes) {
      if (n.open) n.label = Label::Negative;
    }
    for (auto [id, _] : frontier) snap.nodes[id.value].label = Label::Positive;
    out.push_back(TrainingExample{route.molecule.key(), step, std::move(snap)});

    auto key_rank = [&](const std::string& key) {
      auto it = rank.find(key);
      return it == rank.end() ? std::numeric_limits<std::size_t>::max() : it->second;
    };
    auto next = frontier.front();
    for (const auto& f : frontier) {
      const auto a = key_rank(*f.second), b = key_rank(*next.second);
      if (a < b || (a == b && *f.second < *next.second)) next = f;
    }
    const MoleculeId m(*next.second);
    const RouteStep& rs = steps.at(*next.second);
    std::vector<Reaction> reactions;
    if (route_only) {
      reactions.push_back(make_reaction(m, rs.reactants, rs.cost));
    } else {
      reactions = oracle.expand(m, k);
    }
    g.propagate_update(g.merge_expand(next.first, reactions, inv));
  }
  if (!out.empty() && !g.node(target).success) {
    throw ContractViolation("route replay for " + route.molecule.key() + " did not reach success");
  }
  return out;
}

std::vector<ValueExample> route_value_examples(const RouteTree& route, const ExpansionOracle& oracle,
                                               std::size_t feature_bits) {
  std::vector<ValueExample> out;
  std::map<std::string, bool> seen;
  auto visit = [&](auto&& self, const RouteTree& r) -> void {
    if (r.is_leaf()) return;
    if (!seen[r.molecule.key()]) {
      seen[r.molecule.key()] = true;
      out.push_back(ValueExample{oracle.features(r.molecule, feature_bits).on_bits(), route_stats(r).cost});
    }
    for (const auto& c : r.children) self(self, c);
  };
  visit(visit, route);
  return out;
}

namespace {

struct TargetOutput {
  std::vector<TrainingExample> examples;
  std::vector<ValueExample> values;
  bool solved = false;
  std::string warning;
};

TargetOutput generate_one(const MoleculeId& t, const ExpansionOracle& oracle, const Inventory& inv,
                          const GenerateConfig& cfg) {
  TargetOutput out;
  try {
    PlanResult res = plan({t}, oracle, inv, cfg.baseline);
    const TargetResult& tr = res.targets.front();
    if (!tr.success) return out;
    out.solved = true;
    out.examples = replay_route(*tr.route, res.expanded(), oracle, inv, cfg.baseline.k, cfg.route_only,
                                cfg.feature_bits);
    out.values = route_value_examples(*tr.route, oracle, cfg.feature_bits);
  } catch (const PlanningError& e) {
    out = TargetOutput{};
    out.warning = "skipping target " + t.key() + ": " + e.what();
  }
  return out;
}

}  // namespace

GeneratedData generate(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle, const Inventory& inv,
                       const GenerateConfig& cfg) {
  cfg.baseline.validate();
  if (cfg.feature_bits < 8) throw ConfigError("feature_bits must be >= 8");
  std::vector<MoleculeId> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<TargetOutput> outputs(sorted.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(sorted.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < sorted.size(); ++i) outputs[i] = generate_one(sorted[i], oracle, inv, cfg);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < sorted.size(); i = next++) {
            outputs[i] = generate_one(sorted[i], oracle, inv, cfg);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  GeneratedData data;
  for (auto& o : outputs) {
    data.solved_targets += o.solved;
    if (!o.warning.empty()) data.warnings.push_back(std::move(o.warning));
    for (auto& e : o.examples) data.examples.push_back(std::move(e));
    for (auto& v : o.values) data.values.push_back(std::move(v));
  }
  return data;
}

std::string dataset_to_jsonl(const std::vector<TrainingExample>& examples, std::size_t feature_bits) {
  std::string out = json{{"format", "retrograph-dataset"},
                         {"schema_version", kDatasetSchemaVersion},
                         {"feature_bits", feature_bits},
                         {"examples", examples.size()}}
                        .dump();
  out.push_back('\n');
  for (const auto& e : examples) {
    if (e.graph.feature_bits != feature_bits) throw ContractViolation("dataset example has a different fingerprint width");
    out += json{{"target", e.target}, {"step", e.step}, {"graph", to_json(e.graph)}}.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<TrainingExample> dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset is empty (no header line)");
  json header;
  try {
    header = json::parse(line);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("dataset header is not JSON: ") + e.what());
  }
  if (header.value("format", "") != "retrograph-dataset") throw ConfigError("not a retrograph dataset");
  if (header.value("schema_version", 0) != kDatasetSchemaVersion) throw ConfigError("unsupported dataset schema");
  const auto bits = header.at("feature_bits").get<std::size_t>();
  std::vector<TrainingExample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      TrainingExample e{j.at("target").get<std::string>(), j.at("step").get<int>(), snapshot_from_json(j.at("graph"))};
      if (e.graph.feature_bits != bits) throw ConfigError("fingerprint width differs from the header");
      out.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw ConfigError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.size() != header.at("examples").get<std::size_t>()) throw ConfigError("dataset example count mismatch");
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<TrainingExample>& examples,
                  std::size_t feature_bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << dataset_to_jsonl(examples, feature_bits);
  if (!out) throw ConfigError("failed writing " + path.string());
}

std::vector<TrainingExample> load_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_file_bytes(path));
}

std::string value_examples_to_jsonl(const std::vector<ValueExample>& values, std::size_t feature_bits) {
  std::string out = json{{"format", "retrograph-value-dataset"},
                         {"schema_version", kDatasetSchemaVersion},
                         {"feature_bits", feature_bits},
                         {"examples", values.size()}}
                        .dump();
  out.push_back('\n');
  for (const auto& v : values) {
    out += json{{"features", v.features}, {"cost", v.cost}}.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<ValueExample> value_examples_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("value dataset is empty (no header line)");
  try {
    json header = json::parse(line);
    if (header.value("format", "") != "retrograph-value-dataset") throw ConfigError("not a value dataset");
    std::vector<ValueExample> out;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      out.push_back(ValueExample{j.at("features").get<std::vector<std::uint32_t>>(), j.at("cost").get<double>()});
    }
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed value dataset: ") + e.what());
  }
}

std::vector<GraphSnapshot> graphs_of(const std::vector<TrainingExample>& examples) {
  std::vector<GraphSnapshot> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.graph);
  return out;
}

}  // namespace retrograph
