#include "retrograph/planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "retrograph/error.hpp"
#include "retrograph/kmeans.hpp"

namespace retrograph {

using nlohmann::json;

void PlanConfig::validate() const {
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (k < 1) throw ConfigError("k must be >= 1");
}

RouteStats route_stats(const RouteTree& r) {
  RouteStats s;
  if (r.is_leaf()) return s;
  s.length = 1;
  s.cost = r.reaction_cost;
  for (const auto& c : r.children) {
    const RouteStats cs = route_stats(c);
    s.length += cs.length;
    s.cost += cs.cost;
  }
  return s;
}

namespace {

std::string validate_node(const RouteTree& r, const Inventory& inv, const ExpansionOracle& oracle, int k,
                          std::vector<std::string>& path) {
  if (std::find(path.begin(), path.end(), r.molecule.key()) != path.end()) {
    return "molecule " + r.molecule.key() + " repeats on a root-to-leaf path";
  }
  if (r.is_leaf()) {
    if (!inv.contains(r.molecule)) return "leaf " + r.molecule.key() + " is not in the inventory";
    return {};
  }
  std::vector<MoleculeId> reactants;
  for (const auto& c : r.children) reactants.push_back(c.molecule);
  std::sort(reactants.begin(), reactants.end());
  if (std::adjacent_find(reactants.begin(), reactants.end()) != reactants.end()) {
    return "reaction for " + r.molecule.key() + " lists a reactant twice";
  }
  bool found = false;
  for (const auto& rx : oracle.expand(r.molecule, k)) {
    if (rx.product == r.molecule && rx.reactants == reactants && rx.cost == r.reaction_cost) {
      found = true;
      break;
    }
  }
  if (!found) return "reaction for " + r.molecule.key() + " is not proposed by the oracle";
  path.push_back(r.molecule.key());
  for (const auto& c : r.children) {
    std::string why = validate_node(c, inv, oracle, k, path);
    if (!why.empty()) return why;
  }
  path.pop_back();
  return {};
}

}  // namespace

std::string validate_route(const RouteTree& r, const Inventory& inv, const ExpansionOracle& oracle, int k) {
  std::vector<std::string> path;
  return validate_node(r, inv, oracle, k, path);
}

std::size_t PlanResult::success_count() const {
  return static_cast<std::size_t>(
      std::count_if(targets.begin(), targets.end(), [](const TargetResult& t) { return t.success; }));
}

std::vector<std::string> PlanResult::expanded() const {
  std::vector<std::string> out;
  out.reserve(trace.size());
  for (const auto& r : trace) out.push_back(r.expanded);
  return out;
}

NodeId select_next(const SearchGraph& g, const CostModel& cm, const ExpansionOracle& oracle) {
  const auto open = g.open_nodes();
  if (open.empty()) throw ContractViolation("select_next: no open nodes");
  const auto costs = cm.open_costs(g, oracle);
  std::size_t best = 0;
  for (std::size_t i = 1; i < open.size(); ++i) {
    if (costs[i] < costs[best]) best = i;
  }
  return open[best];
}

PlanRun run_plan(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle, const Inventory& inv,
                 const PlanConfig& cfg, const PlanObserver& observer) {
  cfg.validate();
  if (targets.empty()) throw ContractViolation("plan: no targets");
  {
    std::set<MoleculeId> seen(targets.begin(), targets.end());
    if (seen.size() != targets.size()) throw ContractViolation("plan: duplicate targets");
  }
  static const ZeroCost kZero;
  const CostModel& cm = cfg.cost_model ? *cfg.cost_model : kZero;

  PlanRun run{SearchGraph(cfg.mode), {}, {}};
  SearchGraph& g = run.graph;
  PlanResult& res = run.result;
  res.mode = cfg.mode;
  res.budget = cfg.budget;
  for (const auto& t : targets) {
    run.target_nodes.push_back(g.add_target(t, inv));
    TargetResult tr;
    tr.target = t;
    res.targets.push_back(std::move(tr));
  }

  auto note_successes = [&](int iteration) {
    bool all = true;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (g.node(run.target_nodes[i]).success) {
        if (!res.targets[i].success) {
          res.targets[i].success = true;
          res.targets[i].first_success_iteration = iteration;
        }
      } else {
        all = false;
      }
    }
    return all;
  };

  bool all = note_successes(0);
  int iteration = 0;
  while (iteration < cfg.budget && !all && g.open_count() > 0) {
    const NodeId v = select_next(g, cm, oracle);
    const MoleculeId& m = g.node(v).molecule;
    std::vector<Reaction> reactions;
    try {
      reactions = oracle.expand(m, cfg.k);
    } catch (const std::exception& e) {
      throw PlanningError("expansion of molecule '" + m.key() + "' failed: " + e.what());
    }
    if (reactions.size() > static_cast<std::size_t>(cfg.k)) reactions.resize(static_cast<std::size_t>(cfg.k));
    const std::string key = m.key();
    const AffectedSet affected = g.merge_expand(v, reactions, inv);
    g.propagate_update(affected);
    ++iteration;
    all = note_successes(iteration);

    IterationRecord rec;
    rec.iteration = iteration;
    rec.expanded = key;
    rec.reactions_added = reactions.size();
    rec.molecule_nodes = g.molecule_count();
    rec.reaction_nodes = g.reaction_count();
    rec.target_success.reserve(targets.size());
    for (const auto& t : res.targets) rec.target_success.push_back(t.success);
    if (observer) observer(rec);
    res.trace.push_back(std::move(rec));
  }

  res.iterations = iteration;
  res.molecule_nodes = g.molecule_count();
  res.reaction_nodes = g.reaction_count();
  res.distinct_molecules = g.distinct_molecules();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (res.targets[i].success) res.targets[i].route = extract_route(g, run.target_nodes[i]);
  }
  return run;
}

PlanResult plan(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle, const Inventory& inv,
                const PlanConfig& cfg, const PlanObserver& observer) {
  return run_plan(targets, oracle, inv, cfg, observer).result;
}

namespace {

RouteTree build_route(const SearchGraph& g, NodeId m, const std::vector<std::int64_t>& choice) {
  RouteTree t;
  const Node& n = g.node(m);
  t.molecule = n.molecule;
  const std::int64_t r = choice[m.value];
  if (r < 0) return t;
  const Node& rn = g.node(NodeId{static_cast<std::uint32_t>(r)});
  t.reaction_cost = rn.reaction_cost;
  std::vector<NodeId> kids = rn.successors;
  std::sort(kids.begin(), kids.end(),
            [&](NodeId a, NodeId b) { return g.node(a).molecule < g.node(b).molecule; });
  for (NodeId c : kids) t.children.push_back(build_route(g, c, choice));
  return t;
}

}  // namespace

RouteTree extract_route(const SearchGraph& g, NodeId target) {
  const Node& tn = g.node(target);
  if (!tn.is_molecule()) throw ContractViolation("extract_route: target is not a molecule node");
  if (!tn.success) throw ContractViolation("extract_route: target " + tn.molecule.key() + " has not succeeded");

  const std::size_t n = g.size();
  std::vector<double> best(n, kInfiniteCost);
  std::vector<std::int64_t> choice(n, -1);
  std::vector<char> done(n, 0);
  std::vector<std::size_t> pending(n, 0);
  std::vector<double> acc(n, 0.0);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::uint32_t i = 0; i < n; ++i) {
    const Node& node = g.node(NodeId{i});
    if (node.is_reaction()) {
      pending[i] = node.successors.size();
    } else if (node.in_inventory) {
      best[i] = 0.0;
      heap.emplace(0.0, i);
    }
  }
  while (!heap.empty()) {
    auto [c, m] = heap.top();
    heap.pop();
    if (done[m]) continue;
    done[m] = 1;
    if (m == target.value) break;
    for (NodeId r : g.node(NodeId{m}).predecessors) {
      acc[r.value] += c;
      if (--pending[r.value] != 0) continue;
      const Node& rn = g.node(r);
      const NodeId p = rn.predecessors.front();
      if (done[p.value]) continue;
      const double cand = rn.reaction_cost + acc[r.value];
      if (cand < best[p.value] || (cand == best[p.value] && r.value < choice[p.value])) {
        best[p.value] = cand;
        choice[p.value] = r.value;
        heap.emplace(cand, p.value);
      }
    }
  }
  if (!done[target.value]) {
    throw ContractViolation("extract_route: no inventory-terminated route for " + tn.molecule.key());
  }
  return build_route(g, target, choice);
}

void BatchConfig::validate(std::size_t target_count) const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (clusters < 1) throw ConfigError("clusters must be >= 1");
  if (static_cast<std::size_t>(clusters) > target_count) {
    throw ConfigError("clusters (" + std::to_string(clusters) + ") exceed the number of targets (" +
                      std::to_string(target_count) + ")");
  }
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<MoleculeId>& targets,
                                                   const ExpansionOracle& oracle, const BatchConfig& bc) {
  bc.validate(targets.size());
  std::vector<int> assign(targets.size(), 0);
  if (bc.clusters > 1) {
    std::vector<FeatureVector> fps;
    fps.reserve(targets.size());
    for (const auto& t : targets) fps.push_back(oracle.features(t, bc.feature_bits));
    assign = kmeans(fps, bc.clusters, bc.seed);
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < targets.size(); ++i) members[assign[i]].push_back(i);
  std::vector<std::vector<std::size_t>> clusters;
  for (auto& [c, idx] : members) clusters.push_back(std::move(idx));
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  std::vector<std::vector<std::size_t>> batches;
  for (const auto& idx : clusters) {
    for (std::size_t s = 0; s < idx.size(); s += static_cast<std::size_t>(bc.batch_size)) {
      const std::size_t e = std::min(idx.size(), s + static_cast<std::size_t>(bc.batch_size));
      batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(s), idx.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  return batches;
}

std::vector<PlanResult> batch_plan(const std::vector<MoleculeId>& targets, const ExpansionOracle& oracle,
                                   const Inventory& inv, const PlanConfig& cfg, const BatchConfig& bc) {
  cfg.validate();
  std::vector<PlanResult> out;
  for (const auto& batch : make_batches(targets, oracle, bc)) {
    std::vector<MoleculeId> ts;
    for (auto i : batch) ts.push_back(targets[i]);
    PlanConfig c = cfg;
    c.budget = cfg.budget * static_cast<int>(ts.size());
    out.push_back(plan(ts, oracle, inv, c));
  }
  return out;
}

std::vector<TargetResult> per_target(const std::vector<MoleculeId>& targets, const std::vector<PlanResult>& batches) {
  std::map<MoleculeId, const TargetResult*> by_key;
  for (const auto& b : batches) {
    for (const auto& t : b.targets) by_key[t.target] = &t;
  }
  std::vector<TargetResult> out;
  out.reserve(targets.size());
  for (const auto& t : targets) {
    auto it = by_key.find(t);
    if (it == by_key.end()) throw ContractViolation("per_target: target " + t.key() + " missing from batches");
    out.push_back(*it->second);
  }
  return out;
}

json to_json(const RouteTree& r) {
  json j{{"molecule", r.molecule.key()}};
  if (!r.is_leaf()) {
    json kids = json::array();
    for (const auto& c : r.children) kids.push_back(to_json(c));
    j["reaction"] = {{"cost", r.reaction_cost}, {"reactants", std::move(kids)}};
  }
  return j;
}

RouteTree route_from_json(const json& j) {
  RouteTree r;
  r.molecule = MoleculeId(j.at("molecule").get<std::string>());
  if (j.contains("reaction")) {
    const auto& rx = j.at("reaction");
    r.reaction_cost = rx.at("cost").get<double>();
    for (const auto& c : rx.at("reactants")) r.children.push_back(route_from_json(c));
    if (r.children.empty()) throw ConfigError("route reaction without reactants");
  }
  return r;
}

json to_json(const PlanResult& r, bool include_trace) {
  json targets = json::array();
  for (const auto& t : r.targets) {
    json jt{{"target", t.target.key()},
            {"success", t.success},
            {"first_success_iteration",
             t.first_success_iteration ? json(*t.first_success_iteration) : json(nullptr)}};
    if (t.route) {
      const RouteStats s = route_stats(*t.route);
      jt["route_length"] = s.length;
      jt["route_cost"] = s.cost;
      jt["route"] = to_json(*t.route);
    } else {
      jt["route"] = nullptr;
    }
    targets.push_back(std::move(jt));
  }
  json j{{"mode", to_string(r.mode)},
         {"budget", r.budget},
         {"iterations", r.iterations},
         {"molecule_nodes", r.molecule_nodes},
         {"reaction_nodes", r.reaction_nodes},
         {"distinct_molecules", r.distinct_molecules},
         {"success_count", r.success_count()},
         {"targets", std::move(targets)}};
  if (include_trace) {
    json trace = json::array();
    for (const auto& it : r.trace) {
      trace.push_back({{"iteration", it.iteration},
                       {"expanded", it.expanded},
                       {"reactions_added", it.reactions_added},
                       {"molecule_nodes", it.molecule_nodes},
                       {"reaction_nodes", it.reaction_nodes},
                       {"target_success", it.target_success}});
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

PlanResult plan_result_from_json(const json& j) {
  try {
    PlanResult r;
    r.mode = parse_graph_mode(j.at("mode").get<std::string>());
    r.budget = j.at("budget").get<int>();
    r.iterations = j.at("iterations").get<int>();
    r.molecule_nodes = j.at("molecule_nodes").get<std::size_t>();
    r.reaction_nodes = j.at("reaction_nodes").get<std::size_t>();
    r.distinct_molecules = j.at("distinct_molecules").get<std::size_t>();
    for (const auto& jt : j.at("targets")) {
      TargetResult t;
      t.target = MoleculeId(jt.at("target").get<std::string>());
      t.success = jt.at("success").get<bool>();
      if (!jt.at("first_success_iteration").is_null()) {
        t.first_success_iteration = jt.at("first_success_iteration").get<int>();
      }
      if (!jt.at("route").is_null()) t.route = route_from_json(jt.at("route"));
      r.targets.push_back(std::move(t));
    }
    if (j.contains("trace")) {
      for (const auto& it : j.at("trace")) {
        IterationRecord rec;
        rec.iteration = it.at("iteration").get<int>();
        rec.expanded = it.at("expanded").get<std::string>();
        rec.reactions_added = it.at("reactions_added").get<std::size_t>();
        rec.molecule_nodes = it.at("molecule_nodes").get<std::size_t>();
        rec.reaction_nodes = it.at("reaction_nodes").get<std::size_t>();
        rec.target_success = it.at("target_success").get<std::vector<bool>>();
        r.trace.push_back(std::move(rec));
      }
    }
    return r;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed plan result: ") + e.what());
  }
}

std::string trace_csv(const PlanResult& r) {
  std::string out = "iteration,expanded,reactions_added,molecule_nodes,reaction_nodes,solved\n";
  for (const auto& it : r.trace) {
    const auto solved = std::count(it.target_success.begin(), it.target_success.end(), true);
    out += std::to_string(it.iteration) + "," + it.expanded + "," + std::to_string(it.reactions_added) + "," +
           std::to_string(it.molecule_nodes) + "," + std::to_string(it.reaction_nodes) + "," +
           std::to_string(solved) + "\n";
  }
  return out;
}

}  // namespace retrograph
