#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "retrograph/error.hpp"
#include "retrograph/molspace.hpp"
#include "support/oracles.hpp"

using namespace retrograph;

namespace {

MoleculeId id(const char* s) { return MoleculeId(s); }

}  // namespace

TEST_CASE("integer canonicalization") {
  AdditiveSplitDomain d;
  CHECK(d.canonical("42").key() == "42");
  CHECK(d.canonical(" 007 ").key() == "7");
  CHECK(d.canonical("0042") == d.canonical("42"));
  CHECK_THROWS_AS(d.canonical("0"), DomainSyntaxError);
  CHECK_THROWS_AS(d.canonical(""), DomainSyntaxError);
  CHECK_THROWS_AS(d.canonical("-3"), DomainSyntaxError);
  CHECK_THROWS_AS(d.canonical("4a"), DomainSyntaxError);
  CHECK_THROWS_AS(d.canonical("99999999999999999999999"), DomainSyntaxError);
}

TEST_CASE("additive expansion matches the weight oracle") {
  AdditiveSplitDomain d;
  auto rs = d.expand(d.canonical("6"), 3);
  REQUIRE(rs.size() == 3);
  const double w1 = d.split_weight(6, 1), w2 = d.split_weight(6, 2), w3 = d.split_weight(6, 3);
  const double total = w1 + w2 + w3;
  std::map<std::string, double> expect = {
      {"1.5", -std::log(w1 / total)}, {"2.4", -std::log(w2 / total)}, {"3", -std::log(w3 / total)}};
  for (const auto& r : rs) {
    CHECK(r.product.key() == "6");
    REQUIRE(expect.count(r.reactant_key()));
    CHECK(r.cost == doctest::Approx(expect[r.reactant_key()]).epsilon(1e-12));
  }
  CHECK(rs[0].cost <= rs[1].cost);
  CHECK(rs[1].cost <= rs[2].cost);
}

TEST_CASE("expansion truncates to k and keeps the cheapest") {
  AdditiveSplitDomain d;
  auto all = d.expand(d.canonical("20"), 50);
  auto top = d.expand(d.canonical("20"), 4);
  REQUIRE(all.size() == 10);
  REQUIRE(top.size() == 4);
  for (std::size_t i = 0; i < top.size(); ++i) CHECK(top[i].reactant_key() == all[i].reactant_key());
  CHECK_THROWS_AS(d.expand(d.canonical("20"), 0), std::invalid_argument);
}

TEST_CASE("weights stay in range and costs are positive") {
  FactorSplitDomain d;
  for (std::uint64_t n = 2; n <= 200; ++n) {
    for (const auto& c : d.candidates(n)) {
      CHECK(c.weight >= 0.1);
      CHECK(c.weight <= 1.0);
    }
    for (const auto& r : d.expand(d.canonical(std::to_string(n)), 50)) {
      CHECK(r.cost > 0.0);
      CHECK(std::isfinite(r.cost));
    }
  }
}

TEST_CASE("single-candidate molecules get the cost floor") {
  AdditiveSplitDomain d;
  auto rs = d.expand(d.canonical("3"), 5);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].cost == kMinReactionCost);
  CHECK(rs[0].reactant_key() == "1.2");
}

TEST_CASE("expansion is deterministic and seed dependent") {
  AdditiveSplitDomain a(2023), b(2023), c(99);
  auto ra = a.expand(a.canonical("30"), 50);
  auto rb = b.expand(b.canonical("30"), 50);
  auto rc = c.expand(c.canonical("30"), 50);
  REQUIRE(ra.size() == rb.size());
  bool differs = false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].cost == rb[i].cost);
    CHECK(ra[i].reactant_key() == rb[i].reactant_key());
    differs = differs || ra[i].cost != rc[i].cost;
  }
  CHECK(differs);
}

TEST_CASE("factor split: primes are dead ends, composites add divisor splits") {
  FactorSplitDomain d;
  CHECK(d.expand(d.canonical("97"), 50).empty());
  CHECK(d.expand(d.canonical("2"), 50).empty());
  auto c12 = d.candidates(12);
  std::set<std::vector<std::uint64_t>> sets;
  for (const auto& c : c12) sets.insert(c.reactants);
  CHECK(sets.count({2, 6}));
  CHECK(sets.count({3, 4}));
  CHECK(sets.count({1, 11}));
  CHECK(sets.count({6, 6}));
  CHECK(c12.size() == 2 + 6);
}

TEST_CASE("default inventory is 1..P") {
  AdditiveSplitDomain d(2023, 3);
  auto inv = d.default_inventory();
  REQUIRE(inv);
  CHECK(inv->size() == 3);
  CHECK(inv->contains(d.canonical("3")));
  CHECK_FALSE(inv->contains(d.canonical("4")));
}

TEST_CASE("additive reachability agrees with brute force") {
  AdditiveSplitDomain d;
  Inventory inv = *d.default_inventory();
  for (int n = 1; n <= 30; ++n) {
    std::set<std::string> path;
    std::map<std::string, bool> memo;
    CHECK(oracle::synthesizable(d, d.canonical(std::to_string(n)), inv, 50, path, memo));
  }
}

TEST_CASE("factor reachability: primes above P fail, everything else succeeds") {
  FactorSplitDomain d;
  Inventory inv = *d.default_inventory();
  auto is_prime = [](int n) {
    if (n < 2) return false;
    for (int a = 2; a * a <= n; ++a)
      if (n % a == 0) return false;
    return true;
  };
  for (int n = 1; n <= 30; ++n) {
    std::set<std::string> path;
    std::map<std::string, bool> memo;
    const bool ok = oracle::synthesizable(d, d.canonical(std::to_string(n)), inv, 50, path, memo);
    CHECK_MESSAGE(ok == (n <= 3 || !is_prime(n)), "n=" << n);
  }
}

TEST_CASE("fingerprints are deterministic, sized and sparse-sorted") {
  AdditiveSplitDomain d;
  auto f = d.features(d.canonical("1234"), 64);
  CHECK(f.size() == 64);
  CHECK(f == d.features(d.canonical("1234"), 64));
  CHECK(std::is_sorted(f.on_bits().begin(), f.on_bits().end()));
  CHECK_FALSE(f.on_bits().empty());
  auto dense = f.dense();
  for (auto b : f.on_bits()) CHECK(dense[b] == 1.0);
  CHECK(hash_tokens({"a", "b"}, 16) == hash_tokens({"b", "a"}, 16));
}

TEST_CASE("make_reaction validates and normalizes") {
  auto r = make_reaction(id("P"), {id("B"), id("A"), id("B")}, 2.0);
  REQUIRE(r.reactants.size() == 2);
  CHECK(r.reactant_key() == "A.B");
  CHECK_THROWS_AS(make_reaction(id("P"), {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_reaction(id("P"), {id("A")}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_reaction(id("P"), {id("A")}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_reaction(id("P"), {id("A")}, std::nan("")), std::invalid_argument);
}

TEST_CASE("table domain loads and orders reactions") {
  auto t = TableDomain::load_jsonl(RETROGRAPH_FIXTURES "/figure2.jsonl");
  auto m0 = t.expand(t.canonical("M0"), 10);
  REQUIRE(m0.size() == 2);
  CHECK(m0[0].reactant_key() == "M3.M4");
  CHECK(m0[0].cost == 0.8);
  CHECK(t.expand(t.canonical("M0"), 1).size() == 1);
  CHECK(t.expand(t.canonical("M8"), 10).empty());
  CHECK(t.contains(m0[1]));
  auto inv = load_inventory(RETROGRAPH_FIXTURES "/figure2_inventory.txt", t);
  CHECK(inv.size() == 2);
  CHECK(inv.contains(id("M9")));
}

TEST_CASE("table domain rejects malformed lines") {
  CHECK_THROWS_AS(TableDomain::parse_jsonl("{\"product\": \"A\"}\n"), ConfigError);
  CHECK_THROWS_AS(TableDomain::parse_jsonl("not json\n"), ConfigError);
  CHECK_THROWS(TableDomain::parse_jsonl("{\"product\":\"A\",\"reactants\":[\"B\"],\"cost\":-1}\n"));
}

TEST_CASE("make_domain dispatch") {
  CHECK(make_domain("additive", 1, 3)->name() == "additive");
  CHECK(make_domain("factor", 1, 3)->name() == "factor");
  CHECK(make_domain(RETROGRAPH_FIXTURES "/figure2.jsonl", 1, 3)->expand(MoleculeId("M1"), 5).size() == 2);
  CHECK_THROWS(make_domain("/nonexistent/path.jsonl", 1, 3));
}
