// retrograph: command-line driver for planning, data generation, training
// and evaluation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "retrograph/costmodel.hpp"
#include "retrograph/error.hpp"
#include "retrograph/metrics.hpp"
#include "retrograph/planner.hpp"
#include "retrograph/policygnn.hpp"
#include "retrograph/traindata.hpp"
#include "retrograph/valuenet.hpp"
#include "retrograph/weights_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace retrograph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;
constexpr std::uint64_t kDefaultSeed = 2023;

/// Values given on the command line; unset ones fall back to the config file.
struct Flags {
  std::string config;
  std::optional<std::string> domain, inventory, targets, mode, cost, checkpoint, out, data, model;
  std::optional<int> budget, k, batch_size, clusters, epochs, hidden, layers, threads;
  std::optional<std::uint64_t> seed, inventory_max;
  std::optional<std::size_t> feature_bits, val_n, test_n, train_batch;
  std::optional<double> lr, lambda, dropout;
  std::vector<std::string> results;
  std::vector<int> limits;
  bool route_only = false;
};

struct RunConfig {
  std::string domain = "factor";
  std::string inventory;
  std::uint64_t inventory_max = 3;
  std::string targets;
  GraphMode mode = GraphMode::Graph;
  CostVariant cost = CostVariant::Zero;
  std::string checkpoint;
  double lambda = 1.0;
  int budget = 500;
  int k = 50;
  int batch_size = 1;
  int clusters = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string out = "out";
  std::size_t feature_bits = 2048;
  std::vector<int> limits{100, 200, 300, 400, 500};
  std::vector<std::string> results;
  std::string data;
  std::string model = "gnn";
  int epochs = 20;
  std::size_t train_batch = 32;
  double lr = 1e-4;
  int hidden = 128;
  int layers = 3;
  double dropout = 0.1;
  std::size_t val_n = 0;
  std::size_t test_n = 0;
  bool route_only = false;
  int threads = 1;

  json to_json() const {
    return json{{"domain", domain},         {"inventory", inventory}, {"inventory_max", inventory_max},
                {"targets", targets},       {"mode", to_string(mode)}, {"cost", to_string(cost)},
                {"checkpoint", checkpoint}, {"lambda", lambda},       {"budget", budget},
                {"k", k},                   {"batch_size", batch_size}, {"clusters", clusters},
                {"seed", seed},             {"feature_bits", feature_bits}};
  }
};

template <typename T>
void pick(T& dst, const std::optional<T>& flag, const json& cfg, const char* key) {
  if (flag) {
    dst = *flag;
  } else if (cfg.contains(key)) {
    try {
      dst = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

RunConfig resolve(const Flags& f) {
  json cfg = json::object();
  if (!f.config.empty()) {
    try {
      cfg = json::parse(read_file_bytes(f.config));
    } catch (const json::exception& e) {
      throw ConfigError("config file " + f.config + " is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  RunConfig c;
  if (const char* env = std::getenv("RETROGRAPH_SEED")) {
    try {
      c.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("RETROGRAPH_SEED is not an integer: ") + env);
    }
  }
  pick(c.domain, f.domain, cfg, "domain");
  pick(c.inventory, f.inventory, cfg, "inventory");
  pick(c.inventory_max, f.inventory_max, cfg, "inventory_max");
  pick(c.targets, f.targets, cfg, "targets");
  std::string mode = to_string(c.mode), cost = to_string(c.cost);
  pick(mode, f.mode, cfg, "mode");
  pick(cost, f.cost, cfg, "cost");
  try {
    c.mode = parse_graph_mode(mode);
    c.cost = parse_cost_variant(cost);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  pick(c.checkpoint, f.checkpoint, cfg, "checkpoint");
  pick(c.lambda, f.lambda, cfg, "lambda");
  pick(c.budget, f.budget, cfg, "budget");
  pick(c.k, f.k, cfg, "k");
  pick(c.batch_size, f.batch_size, cfg, "batch_size");
  pick(c.clusters, f.clusters, cfg, "clusters");
  pick(c.seed, f.seed, cfg, "seed");
  pick(c.out, f.out, cfg, "out");
  pick(c.feature_bits, f.feature_bits, cfg, "feature_bits");
  pick(c.data, f.data, cfg, "data");
  pick(c.model, f.model, cfg, "model");
  pick(c.epochs, f.epochs, cfg, "epochs");
  pick(c.train_batch, f.train_batch, cfg, "train_batch");
  pick(c.lr, f.lr, cfg, "lr");
  pick(c.hidden, f.hidden, cfg, "hidden");
  pick(c.layers, f.layers, cfg, "layers");
  pick(c.dropout, f.dropout, cfg, "dropout");
  pick(c.val_n, f.val_n, cfg, "val_n");
  pick(c.test_n, f.test_n, cfg, "test_n");
  pick(c.threads, f.threads, cfg, "threads");
  std::optional<std::vector<int>> limits;
  if (!f.limits.empty()) limits = f.limits;
  pick(c.limits, limits, cfg, "limits");
  std::optional<std::vector<std::string>> results;
  if (!f.results.empty()) results = f.results;
  pick(c.results, results, cfg, "results");
  std::optional<bool> route_only;
  if (f.route_only) route_only = true;
  pick(c.route_only, route_only, cfg, "route_only");

  if (c.budget < 1) throw ConfigError("budget must be >= 1");
  if (c.k < 1) throw ConfigError("k must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.clusters < 1) throw ConfigError("clusters must be >= 1");
  if (c.feature_bits < 8) throw ConfigError("feature_bits must be >= 8");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.train_batch < 1) throw ConfigError("train_batch must be >= 1");
  if (!(c.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (c.limits.empty() || !std::is_sorted(c.limits.begin(), c.limits.end()) || c.limits.front() < 0) {
    throw ConfigError("limits must be a non-empty ascending list of non-negative integers");
  }
  if (c.out.empty()) throw ConfigError("out directory must not be empty");
  return c;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path prepare_out(const RunConfig& c) {
  fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out + ": " + ec.message());
  return out;
}

/// Domain, inventory and targets of a planning-style command.
struct Workspace {
  std::unique_ptr<ExpansionOracle> domain;
  Inventory inventory;
  std::vector<MoleculeId> targets;
  std::unique_ptr<CostModel> cost_model;
};

Workspace load_workspace(const RunConfig& c, bool need_targets, bool need_cost = true) {
  Workspace w;
  if (c.domain != "additive" && c.domain != "factor") require_file(c.domain, "domain reaction file");
  if (!c.inventory.empty()) require_file(c.inventory, "inventory file");
  if (need_targets) require_file(c.targets, "targets file (--targets)");
  if (need_cost && c.cost != CostVariant::Zero) require_file(c.checkpoint, "checkpoint (--checkpoint)");

  w.domain = make_domain(c.domain, c.seed, c.inventory_max);
  if (!c.inventory.empty()) {
    w.inventory = load_inventory(c.inventory, *w.domain);
  } else if (auto inv = w.domain->default_inventory()) {
    w.inventory = *inv;
  } else {
    throw ConfigError("domain '" + c.domain + "' has no built-in inventory; pass --inventory");
  }
  if (need_targets) {
    w.targets = load_molecule_list(c.targets, *w.domain);
    std::vector<MoleculeId> uniq;
    for (const auto& t : w.targets) {
      if (std::find(uniq.begin(), uniq.end(), t) == uniq.end()) uniq.push_back(t);
    }
    w.targets = std::move(uniq);
  }
  if (need_cost) w.cost_model = make_cost_model(c.cost, c.checkpoint, c.lambda);
  return w;
}

PlanConfig plan_config(const RunConfig& c, const Workspace& w) {
  PlanConfig p;
  p.budget = c.budget;
  p.k = c.k;
  p.mode = c.mode;
  p.cost_model = w.cost_model.get();
  return p;
}

json per_target_json(const std::vector<TargetResult>& targets) {
  json arr = json::array();
  for (const auto& t : targets) {
    json jt{{"target", t.target.key()},
            {"success", t.success},
            {"first_success_iteration", t.first_success_iteration ? json(*t.first_success_iteration) : json(nullptr)}};
    if (t.route) {
      const RouteStats s = route_stats(*t.route);
      jt["route_length"] = s.length;
      jt["route_cost"] = s.cost;
    }
    arr.push_back(std::move(jt));
  }
  return arr;
}

int exit_for(std::size_t solved, std::size_t total) { return solved == total ? kExitOk : kExitPartial; }

int cmd_plan(const RunConfig& c) {
  Workspace w = load_workspace(c, true);
  const fs::path out = prepare_out(c);
  const PlanConfig pc = plan_config(c, w);
  json runs = json::array();
  std::vector<TargetResult> all;
  std::string trace = "target,iteration,expanded,reactions_added,molecule_nodes,reaction_nodes,solved\n";
  for (const auto& t : w.targets) {
    PlanResult r = plan({t}, *w.domain, w.inventory, pc);
    const std::string body = trace_csv(r);
    std::size_t nl = body.find('\n');
    std::size_t pos = nl + 1;
    while (pos < body.size()) {
      std::size_t e = body.find('\n', pos);
      trace += t.key() + "," + body.substr(pos, e - pos) + "\n";
      pos = e + 1;
    }
    all.push_back(r.targets.front());
    runs.push_back(to_json(r));
  }
  std::size_t solved = 0;
  for (const auto& t : all) solved += t.success;
  write_json(out / "plan_result.json", json{{"command", "plan"},
                                             {"config", c.to_json()},
                                             {"targets", w.targets.size()},
                                             {"success_count", solved},
                                             {"per_target", per_target_json(all)},
                                             {"runs", std::move(runs)}});
  write_text(out / "trace.csv", trace);
  std::cout << "solved " << solved << " / " << w.targets.size() << " targets\n";
  return exit_for(solved, w.targets.size());
}

int cmd_batch_plan(const RunConfig& c) {
  Workspace w = load_workspace(c, true);
  BatchConfig bc;
  bc.batch_size = c.batch_size;
  bc.clusters = c.clusters;
  bc.seed = c.seed;
  bc.feature_bits = c.feature_bits;
  bc.validate(w.targets.size());
  const fs::path out = prepare_out(c);
  const auto batches = batch_plan(w.targets, *w.domain, w.inventory, plan_config(c, w), bc);
  const auto all = per_target(w.targets, batches);
  json runs = json::array();
  for (const auto& b : batches) runs.push_back(to_json(b));
  std::size_t solved = 0;
  for (const auto& t : all) solved += t.success;
  write_json(out / "batch_result.json", json{{"command", "batch-plan"},
                                              {"config", c.to_json()},
                                              {"targets", w.targets.size()},
                                              {"batches", batches.size()},
                                              {"success_count", solved},
                                              {"per_target", per_target_json(all)},
                                              {"runs", std::move(runs)}});
  std::cout << "solved " << solved << " / " << w.targets.size() << " targets in " << batches.size()
            << " batches\n";
  return exit_for(solved, w.targets.size());
}

int cmd_gen_data(const RunConfig& c) {
  Workspace w = load_workspace(c, true);
  const fs::path out = prepare_out(c);
  GenerateConfig gc;
  gc.baseline = plan_config(c, w);
  gc.baseline.mode = GraphMode::Graph;
  gc.feature_bits = c.feature_bits;
  gc.route_only = c.route_only;
  gc.threads = static_cast<unsigned>(c.threads);
  GeneratedData d = generate(w.targets, *w.domain, w.inventory, gc);
  for (const auto& warn : d.warnings) std::cerr << "warning: " << warn << "\n";
  save_dataset(out / "dataset.jsonl", d.examples, c.feature_bits);
  write_text(out / "value_dataset.jsonl", value_examples_to_jsonl(d.values, c.feature_bits));
  write_json(out / "gen_summary.json", json{{"command", "gen-data"},
                                             {"config", c.to_json()},
                                             {"route_only", c.route_only},
                                             {"targets", w.targets.size()},
                                             {"solved_targets", d.solved_targets},
                                             {"examples", d.examples.size()},
                                             {"value_examples", d.values.size()},
                                             {"warnings", d.warnings}});
  std::cout << d.examples.size() << " examples from " << d.solved_targets << " solved targets\n";
  return kExitOk;
}

int cmd_train(const RunConfig& c) {
  require_file(c.data, "dataset (--data)");
  const fs::path out = prepare_out(c);
  if (c.model == "value") {
    auto values = value_examples_from_jsonl(read_file_bytes(c.data));
    if (values.empty()) throw ConfigError("value dataset has no examples");
    ValueNetConfig vc;
    vc.feature_bits = c.feature_bits;
    ValueTrainConfig tc;
    tc.epochs = c.epochs;
    tc.batch_size = c.train_batch;
    tc.adam.lr = c.lr;
    tc.seed = c.seed;
    auto r = train_value_net(values, ValueNet::initialized(vc, c.seed), tc);
    r.model.save(out / "value.weights");
    std::string csv = "epoch,mse\n";
    for (std::size_t e = 0; e < r.mse.size(); ++e) csv += std::to_string(e) + "," + format_double(r.mse[e]) + "\n";
    write_text(out / "train_log.csv", csv);
    write_json(out / "train_summary.json",
               json{{"command", "train"}, {"model", "value"}, {"examples", values.size()}, {"final_mse", r.mse.back()}});
    std::cout << "value net mse " << r.mse.front() << " -> " << r.mse.back() << "\n";
    return kExitOk;
  }
  if (c.model != "gnn") throw ConfigError("--model must be gnn or value");
  auto examples = load_dataset(c.data);
  if (examples.empty()) throw ConfigError("dataset has no examples");
  auto [tr, val, test] = split(examples, c.val_n, c.test_n, c.seed);
  if (tr.empty()) throw ConfigError("no training examples left after the validation/test split");
  GnnConfig gc = GnnConfig::with_hidden(c.hidden);
  gc.layers = c.layers;
  gc.dropout = c.dropout;
  gc.feature_bits = tr.front().graph.feature_bits;
  gc.validate();
  GnnTrainConfig tc;
  tc.epochs = c.epochs;
  tc.batch_size = c.train_batch;
  tc.adam.lr = c.lr;
  tc.seed = c.seed;
  auto r = train_gnn(graphs_of(tr), graphs_of(val), GnnParameters::initialized(gc, c.seed), tc);
  r.best.save(out / "gnn.weights");
  write_text(out / "train_log.csv", training_log_csv(r.log));
  json summary{{"command", "train"},
               {"model", "gnn"},
               {"train_examples", tr.size()},
               {"val_examples", val.size()},
               {"test_examples", test.size()},
               {"best_epoch", r.best_epoch},
               {"epoch0_total", r.log.front().total},
               {"final_total", r.log.back().total}};
  if (!test.empty()) summary["test_pairwise_accuracy"] = pairwise_accuracy(graphs_of(test), r.best).rate();
  if (!val.empty()) summary["val_pairwise_accuracy"] = pairwise_accuracy(graphs_of(val), r.best).rate();
  write_json(out / "train_summary.json", summary);
  std::cout << "total loss " << r.log.front().total << " -> " << r.log.back().total << ", best epoch "
            << r.best_epoch << "\n";
  return kExitOk;
}

std::vector<PlanResult> results_from_file(const std::string& path) {
  require_file(path, "results file");
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw ConfigError("results file " + path + " is not JSON: " + e.what());
  }
  if (!j.contains("runs")) throw ConfigError("results file " + path + " has no 'runs'");
  std::vector<PlanResult> out;
  for (const auto& r : j.at("runs")) out.push_back(plan_result_from_json(r));
  return out;
}

int cmd_eval(const RunConfig& c) {
  std::vector<PlanResult> results;
  if (!c.results.empty()) {
    for (const auto& p : c.results) {
      auto rs = results_from_file(p);
      results.insert(results.end(), rs.begin(), rs.end());
    }
  } else {
    Workspace w = load_workspace(c, true);
    PlanConfig pc = plan_config(c, w);
    pc.budget = std::max(pc.budget, c.limits.back());
    for (const auto& t : w.targets) results.push_back(plan({t}, *w.domain, w.inventory, pc));
  }
  const fs::path out = prepare_out(c);
  const SuccessCurve curve = success_curve(results, c.limits);
  const ReuseHistogram reuse = reuse_histogram(routes_of(results));
  json summary{{"command", "eval"}, {"curve", to_json(curve)}, {"reuse", to_json(reuse)}};
  double len = 0.0, cost = 0.0;
  std::size_t n = 0;
  for (const auto& r : routes_of(results)) {
    const RouteStats s = route_stats(r);
    len += s.length;
    cost += s.cost;
    ++n;
  }
  summary["routes"] = n;
  summary["mean_route_length"] = n ? len / static_cast<double>(n) : 0.0;
  summary["mean_route_cost"] = n ? cost / static_cast<double>(n) : 0.0;
  write_text(out / "curve.csv", curve_csv(curve));
  write_text(out / "reuse.csv", reuse_csv(reuse));
  write_json(out / "eval_summary.json", summary);
  for (const auto& row : curve.rows) {
    std::cout << "limit " << row.limit << ": " << row.solved << " / " << curve.targets << "\n";
  }
  return kExitOk;
}

int cmd_study_redundancy(const RunConfig& c) {
  Workspace w = load_workspace(c, true);
  const fs::path out = prepare_out(c);
  json summary{{"command", "study-redundancy"}, {"config", c.to_json()}};
  for (GraphMode mode : {GraphMode::Tree, GraphMode::Graph}) {
    PlanConfig pc = plan_config(c, w);
    pc.mode = mode;
    std::vector<PlanResult> runs;
    for (const auto& t : w.targets) runs.push_back(plan({t}, *w.domain, w.inventory, pc));
    const std::string name = to_string(mode);
    const auto points = redundancy_points(runs);
    write_text(out / ("redundancy_" + name + ".csv"), redundancy_csv(RedundancyStudy{points}));
    try {
      summary[name] = to_json(redundancy_study(points));
    } catch (const std::invalid_argument& e) {
      std::size_t expanded = 0, unique = 0;
      for (const auto& p : points) {
        expanded += p.expanded;
        unique += p.unique;
      }
      summary[name] = json{{"points", points.size()}, {"expanded_total", expanded}, {"unique_total", unique},
                           {"fit_error", e.what()}};
    }
    std::size_t solved = 0;
    for (const auto& r : runs) solved += r.success_count();
    summary[name]["solved"] = solved;
  }
  write_json(out / "redundancy_summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its values");
  sub->add_option("--domain", f.domain, "additive | factor | path to a JSONL reaction table");
  sub->add_option("--inventory", f.inventory, "inventory file, one molecule per line");
  sub->add_option("--inventory-max", f.inventory_max, "integer domains: inventory is {1..P}");
  sub->add_option("--targets", f.targets, "target file, one molecule per line");
  sub->add_option("--mode", f.mode, "graph | tree");
  sub->add_option("--cost", f.cost, "zero | value | gnn");
  sub->add_option("--checkpoint", f.checkpoint, "weights for the value or gnn cost model");
  sub->add_option("--lambda", f.lambda, "gnn heuristic scale");
  sub->add_option("--budget", f.budget, "expansions per target");
  sub->add_option("--k", f.k, "reactions per expansion");
  sub->add_option("--batch-size", f.batch_size, "targets per shared graph");
  sub->add_option("--clusters", f.clusters, "k-means clusters for batching");
  sub->add_option("--seed", f.seed, "global seed (default: $RETROGRAPH_SEED, else 2023)");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--feature-bits", f.feature_bits, "fingerprint length");
  sub->add_option("--threads", f.threads, "worker threads for data generation");
}

}  // namespace

int main(int argc, char** argv) {
  nn::tune_allocator();
  CLI::App app{"retrograph: AND-OR graph retrosynthetic planning"};
  app.require_subcommand(1);
  Flags f;
  auto* plan_cmd = app.add_subcommand("plan", "plan each target independently");
  auto* batch_cmd = app.add_subcommand("batch-plan", "plan clustered batches of targets in shared graphs");
  auto* gen_cmd = app.add_subcommand("gen-data", "generate policy training data from baseline routes");
  auto* train_cmd = app.add_subcommand("train", "train the gnn policy or the value net");
  auto* eval_cmd = app.add_subcommand("eval", "success curve and route statistics");
  auto* red_cmd = app.add_subcommand("study-redundancy", "tree vs graph expansion redundancy");
  for (auto* s : {plan_cmd, batch_cmd, gen_cmd, train_cmd, eval_cmd, red_cmd}) add_common(s, f);
  gen_cmd->add_flag("--route-only", f.route_only, "replay only the route's reactions");
  train_cmd->add_option("--data", f.data, "dataset file from gen-data");
  train_cmd->add_option("--model", f.model, "gnn | value");
  train_cmd->add_option("--epochs", f.epochs, "training epochs");
  train_cmd->add_option("--lr", f.lr, "Adam learning rate");
  train_cmd->add_option("--train-batch", f.train_batch, "graphs per minibatch");
  train_cmd->add_option("--hidden", f.hidden, "gnn hidden width");
  train_cmd->add_option("--layers", f.layers, "gnn meta layers");
  train_cmd->add_option("--dropout", f.dropout, "gnn dropout rate");
  train_cmd->add_option("--val", f.val_n, "validation examples");
  train_cmd->add_option("--test", f.test_n, "test examples");
  eval_cmd->add_option("--results", f.results, "plan_result.json / batch_result.json files");
  eval_cmd->add_option("--limits", f.limits, "iteration limits, ascending");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const RunConfig c = resolve(f);
    if (*plan_cmd) return cmd_plan(c);
    if (*batch_cmd) return cmd_batch_plan(c);
    if (*gen_cmd) return cmd_gen_data(c);
    if (*train_cmd) return cmd_train(c);
    if (*eval_cmd) return cmd_eval(c);
    if (*red_cmd) return cmd_study_redundancy(c);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainSyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PlanningError& e) {
    std::cerr << "planning failed: " << e.what() << "\n";
    return kExitPartial;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitPartial;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
