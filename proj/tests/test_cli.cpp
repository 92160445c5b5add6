#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "retrograph/molspace.hpp"
#include "retrograph/planner.hpp"
#include "retrograph/traindata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = RETROGRAPH_CLI;
const std::string kDemo = RETROGRAPH_FIXTURES "/demo";

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("retrograph_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& s) const { return (dir / s).string(); }
};

}  // namespace

TEST_CASE("plan: target in the inventory exits 0 with zero iterations") {
  Scratch s("inv");
  spit(s / "t.txt", "2\n3\n");
  REQUIRE(run("plan --domain factor --targets " + (s / "t.txt") + " --out " + (s / "out")) == 0);
  auto j = json::parse(slurp(s / "out/plan_result.json"));
  CHECK(j["success_count"] == 2);
  for (const auto& r : j["runs"]) CHECK(r["iterations"] == 0);
}

TEST_CASE("plan: partial failure exits 1") {
  Scratch s("partial");
  spit(s / "t.txt", "12\n97\n");
  CHECK(run("plan --domain factor --budget 20 --targets " + (s / "t.txt") + " --out " + (s / "out")) == 1);
  CHECK(fs::exists(s / "out/trace.csv"));
}

TEST_CASE("config errors exit 2 before any output is written") {
  Scratch s("cfg");
  spit(s / "t.txt", "12\n");
  const std::string t = " --targets " + (s / "t.txt") + " --out " + (s / "out");
  CHECK(run("plan --domain factor --budget 0" + t) == 2);
  CHECK(run("plan --domain factor --k 0" + t) == 2);
  CHECK(run("plan --domain factor --mode forest" + t) == 2);
  CHECK(run("plan --domain factor --cost gnn" + t) == 2);  // no checkpoint
  CHECK(run("plan --domain /missing/table.jsonl" + t) == 2);
  CHECK(run("plan --domain factor --targets " + (s / "missing.txt") + " --out " + (s / "out")) == 2);
  CHECK(run("batch-plan --domain factor --clusters 3" + t) == 2);
  CHECK(run("plan --domain factor --no-such-flag" + t) == 2);
  CHECK_FALSE(fs::exists(s / "out/plan_result.json"));
  spit(s / "bad.txt", "12\nabc\n");
  CHECK(run("plan --domain factor --targets " + (s / "bad.txt") + " --out " + (s / "out")) == 2);
  spit(s / "cfg.json", "{\"budget\": \"many\"}");
  CHECK(run("plan --domain factor --config " + (s / "cfg.json") + t) == 2);
}

TEST_CASE("flags override the config file") {
  Scratch s("override");
  CHECK(run("plan --config " + kDemo + "/config.json --targets " + kDemo + "/targets.txt --budget 3 --out " +
            (s / "out")) == 1);
  auto j = json::parse(slurp(s / "out/plan_result.json"));
  CHECK(j["config"]["budget"] == 3);
  CHECK(j["config"]["k"] == 10);
  for (const auto& r : j["runs"]) CHECK(r["iterations"].get<int>() <= 3);
}

TEST_CASE("plan: demo config matches the golden result") {
  Scratch s("golden");
  CHECK(run("plan --config " + kDemo + "/config.json --targets " + kDemo + "/targets.txt --out " + (s / "out")) == 1);
  auto got = json::parse(slurp(s / "out/plan_result.json"));
  auto golden = json::parse(slurp(kDemo + "/golden_plan.json"));
  CHECK(got["per_target"] == golden["per_target"]);
  CHECK(got["runs"] == golden["runs"]);

  // The golden runs agree with planning in-process.
  retrograph::FactorSplitDomain d(2023, 3);
  retrograph::PlanConfig pc;
  pc.budget = 40;
  pc.k = 10;
  auto targets = retrograph::load_molecule_list(kDemo + "/targets.txt", d);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto r = retrograph::plan({targets[i]}, d, *d.default_inventory(), pc);
    CHECK(retrograph::to_json(r) == golden["runs"][i]);
    if (r.targets[0].route) CHECK(retrograph::validate_route(*r.targets[0].route, *d.default_inventory(), d, 10).empty());
  }
}

TEST_CASE("seed precedence: flag, then config, then environment") {
  Scratch s("seed");
  spit(s / "t.txt", "12\n");
  const std::string t = " --domain additive --targets " + (s / "t.txt");
  REQUIRE(run("plan" + t + " --out " + (s / "a")) == 0);
  CHECK(json::parse(slurp(s / "a/plan_result.json"))["config"]["seed"] == 2023);
  REQUIRE(std::system(("RETROGRAPH_SEED=99 " + kCli + " plan" + t + " --out " + (s / "b") + " >/dev/null").c_str()) == 0);
  CHECK(json::parse(slurp(s / "b/plan_result.json"))["config"]["seed"] == 99);
  REQUIRE(std::system(("RETROGRAPH_SEED=99 " + kCli + " plan" + t + " --seed 5 --out " + (s / "c") + " >/dev/null")
                          .c_str()) == 0);
  CHECK(json::parse(slurp(s / "c/plan_result.json"))["config"]["seed"] == 5);
}

TEST_CASE("batch-plan with batch size 1 matches plan") {
  Scratch s("batch");
  const std::string t = " --config " + kDemo + "/config.json --targets " + kDemo + "/targets.txt";
  run("plan" + t + " --out " + (s / "p"));
  run("batch-plan" + t + " --batch-size 1 --out " + (s / "b"));
  auto p = json::parse(slurp(s / "p/plan_result.json"));
  auto b = json::parse(slurp(s / "b/batch_result.json"));
  CHECK(p["per_target"] == b["per_target"]);
}

TEST_CASE("gen-data, train and eval end to end") {
  Scratch s("pipeline");
  spit(s / "t.txt", "12\n18\n20\n24\n28\n30\n36\n40\n");
  const std::string common = " --domain factor --k 10 --budget 40 --feature-bits 64 --seed 3";
  REQUIRE(run("gen-data" + common + " --targets " + (s / "t.txt") + " --out " + (s / "data")) == 0);
  auto data = retrograph::load_dataset(s / "data/dataset.jsonl");
  REQUIRE_FALSE(data.empty());

  REQUIRE(run("train --data " + (s / "data/dataset.jsonl") +
              " --hidden 8 --layers 1 --epochs 2 --train-batch 4 --val 1 --test 1 --seed 3 --out " + (s / "m")) == 0);
  const auto log = slurp(s / "m/train_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 1 + 3);
  CHECK(fs::exists(s / "m/gnn.weights"));

  REQUIRE(run("train --model value --data " + (s / "data/value_dataset.jsonl") +
              " --feature-bits 64 --epochs 2 --out " + (s / "v")) == 0);

  CHECK(run("plan" + common + " --cost gnn --checkpoint " + (s / "m/gnn.weights") + " --targets " + (s / "t.txt") +
            " --out " + (s / "pg")) <= 1);
  CHECK(run("plan" + common + " --cost value --checkpoint " + (s / "v/value.weights") + " --targets " +
            (s / "t.txt") + " --out " + (s / "pv")) <= 1);
  REQUIRE(run("eval --results " + (s / "pg/plan_result.json") + " --limits 5 20 40 --out " + (s / "e")) == 0);
  auto curve = slurp(s / "e/curve.csv");
  CHECK(curve.rfind("limit,solved,targets,success_rate\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 4);
}

TEST_CASE("gen-data: empty target list gives a valid empty dataset") {
  Scratch s("empty");
  spit(s / "t.txt", "# nothing here\n");
  REQUIRE(run("gen-data --domain factor --targets " + (s / "t.txt") + " --out " + (s / "d")) == 0);
  CHECK(retrograph::load_dataset(s / "d/dataset.jsonl").empty());
}

TEST_CASE("train: zero learning rate keeps the initial weights") {
  Scratch s("lr0");
  spit(s / "t.txt", "12\n18\n20\n24\n");
  REQUIRE(run("gen-data --domain factor --k 10 --feature-bits 32 --targets " + (s / "t.txt") + " --out " +
              (s / "d")) == 0);
  const std::string train = "train --data " + (s / "d/dataset.jsonl") + " --hidden 8 --layers 1 --train-batch 2 --seed 4";
  REQUIRE(run(train + " --epochs 0 --out " + (s / "a")) == 0);
  REQUIRE(run(train + " --epochs 2 --lr 0 --out " + (s / "b")) == 0);
  CHECK(slurp(s / "a/gnn.weights") == slurp(s / "b/gnn.weights"));
}

TEST_CASE("study-redundancy") {
  Scratch s("redundancy");
  spit(s / "t.txt", "523\n731\n937\n1044\n1252\n");
  REQUIRE(run("study-redundancy --domain additive --inventory-max 1 --k 3 --budget 30 --targets " + (s / "t.txt") +
              " --out " + (s / "r")) == 0);
  auto j = json::parse(slurp(s / "r/redundancy_summary.json"));
  CHECK(j["graph"]["unique_total"] == j["graph"]["expanded_total"]);
  CHECK(j["tree"]["unique_total"].get<int>() < j["tree"]["expanded_total"].get<int>());
}

TEST_CASE("reruns are byte-identical") {
  Scratch s("rerun");
  spit(s / "t.txt", "12\n18\n20\n24\n28\n");
  const std::string plan = "plan --config " + kDemo + "/config.json --targets " + kDemo + "/targets.txt";
  run(plan + " --out " + (s / "p1"));
  run(plan + " --out " + (s / "p2"));
  CHECK(slurp(s / "p1/plan_result.json") == slurp(s / "p2/plan_result.json"));
  CHECK(slurp(s / "p1/trace.csv") == slurp(s / "p2/trace.csv"));
  const std::string gen = "gen-data --domain factor --k 10 --feature-bits 32 --targets " + (s / "t.txt");
  run(gen + " --out " + (s / "g1"));
  run(gen + " --threads 2 --out " + (s / "g2"));
  CHECK(slurp(s / "g1/dataset.jsonl") == slurp(s / "g2/dataset.jsonl"));
}
