#include "retrograph/molspace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "retrograph/error.hpp"
#include "retrograph/rng.hpp"

namespace retrograph {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string Reaction::reactant_key() const {
  std::string key;
  for (std::size_t i = 0; i < reactants.size(); ++i) {
    if (i) key += '.';
    key += reactants[i].key();
  }
  return key;
}

Reaction make_reaction(MoleculeId product, std::vector<MoleculeId> reactants, double cost) {
  if (reactants.empty()) {
    throw std::invalid_argument("reaction for '" + product.key() + "' has no reactants");
  }
  if (!std::isfinite(cost) || cost <= 0.0) {
    throw std::invalid_argument("reaction for '" + product.key() +
                                "' must have a positive finite cost");
  }
  std::sort(reactants.begin(), reactants.end());
  reactants.erase(std::unique(reactants.begin(), reactants.end()), reactants.end());
  return Reaction{std::move(product), std::move(reactants), cost};
}

void sort_reactions(std::vector<Reaction>& reactions) {
  std::stable_sort(reactions.begin(), reactions.end(), [](const Reaction& a, const Reaction& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.reactant_key() < b.reactant_key();
  });
}

Inventory::Inventory(std::vector<MoleculeId> members) {
  for (auto& m : members) members_.insert(std::move(m));
}

std::vector<MoleculeId> Inventory::sorted() const {
  std::vector<MoleculeId> out(members_.begin(), members_.end());
  std::sort(out.begin(), out.end());
  return out;
}

bool is_available(const MoleculeId& m, const Inventory& inv) { return inv.contains(m); }

FeatureVector::FeatureVector(std::size_t bits, std::vector<std::uint32_t> on)
    : bits_(bits), on_(std::move(on)) {
  std::sort(on_.begin(), on_.end());
  on_.erase(std::unique(on_.begin(), on_.end()), on_.end());
  if (!on_.empty() && on_.back() >= bits_) {
    throw std::out_of_range("feature bit outside vector length");
  }
}

bool FeatureVector::test(std::size_t i) const {
  return std::binary_search(on_.begin(), on_.end(), static_cast<std::uint32_t>(i));
}

std::vector<double> FeatureVector::dense() const {
  std::vector<double> out(bits_, 0.0);
  for (auto i : on_) out[i] = 1.0;
  return out;
}

FeatureVector hash_tokens(const std::vector<std::string>& tokens, std::size_t bits) {
  if (bits < 8) throw std::invalid_argument("feature vectors need at least 8 bits");
  std::vector<std::uint32_t> on;
  on.reserve(tokens.size());
  for (const auto& t : tokens) {
    on.push_back(static_cast<std::uint32_t>(splitmix64(fnv1a(t)) % bits));
  }
  return FeatureVector(bits, std::move(on));
}

std::vector<std::string> ExpansionOracle::feature_tokens(const MoleculeId& m) const {
  const std::string& k = m.key();
  std::vector<std::string> tokens;
  tokens.push_back("len:" + std::to_string(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) {
    tokens.push_back("c:" + k.substr(i, 1));
    if (i + 1 < k.size()) tokens.push_back("b:" + k.substr(i, 2));
    if (i + 2 < k.size()) tokens.push_back("t:" + k.substr(i, 3));
  }
  return tokens;
}

FeatureVector ExpansionOracle::features(const MoleculeId& m, std::size_t bits) const {
  return hash_tokens(feature_tokens(m), bits);
}

MoleculeId canonical_id(std::string_view raw, const ExpansionOracle& domain) {
  return domain.canonical(raw);
}

std::vector<Reaction> expand(const ExpansionOracle& domain, const MoleculeId& m, int k) {
  if (k < 1) throw std::invalid_argument("expand: k must be >= 1");
  return domain.expand(m, k);
}

FeatureVector features(const ExpansionOracle& domain, const MoleculeId& m, std::size_t bits) {
  return domain.features(m, bits);
}

// ---------------------------------------------------------------------------
// Integer domains

MoleculeId IntegerDomain::canonical(std::string_view raw) const {
  std::string_view s = trim(raw);
  if (s.empty()) throw DomainSyntaxError("integer domain: empty molecule '" + std::string(raw) + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') {
      throw DomainSyntaxError("integer domain: '" + std::string(raw) + "' is not a positive integer");
    }
    if (v > (UINT64_MAX - 9) / 10) {
      throw DomainSyntaxError("integer domain: '" + std::string(raw) + "' is too large");
    }
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (v == 0) throw DomainSyntaxError("integer domain: '" + std::string(raw) + "' is not positive");
  return MoleculeId(std::to_string(v));
}

std::uint64_t IntegerDomain::value(const MoleculeId& m) {
  std::uint64_t v = 0;
  if (m.key().empty()) throw DomainSyntaxError("integer domain: empty molecule key");
  for (char c : m.key()) {
    if (c < '0' || c > '9') throw DomainSyntaxError("integer domain: bad key '" + m.key() + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

double IntegerDomain::weight(std::uint64_t salt, std::uint64_t n, std::uint64_t a) const {
  std::uint64_t h = hash_combine(hash_combine(hash_combine(seed_, salt), n), a);
  return 0.1 + 0.9 * to_unit(h);
}

std::vector<std::string> IntegerDomain::feature_tokens(const MoleculeId& m) const {
  const std::string& k = m.key();
  const std::uint64_t v = value(m);
  std::vector<std::string> tokens;
  tokens.push_back("len:" + std::to_string(k.size()));
  int bitlen = 0;
  for (std::uint64_t x = v; x; x >>= 1) ++bitlen;
  tokens.push_back("bitlen:" + std::to_string(bitlen));
  for (std::size_t i = 0; i < k.size(); ++i) {
    tokens.push_back("d:" + k.substr(i, 1));
    tokens.push_back("dpos:" + std::to_string(k.size() - i) + ":" + k.substr(i, 1));
    if (i + 1 < k.size()) tokens.push_back("bg:" + k.substr(i, 2));
  }
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13}) {
    tokens.push_back("mod" + std::to_string(p) + ":" + std::to_string(v % p));
  }
  return tokens;
}

std::optional<Inventory> IntegerDomain::default_inventory() const {
  Inventory inv;
  for (std::uint64_t i = 1; i <= inventory_max_; ++i) inv.insert(MoleculeId(std::to_string(i)));
  return inv;
}

std::vector<Reaction> IntegerDomain::expand(const MoleculeId& m, int k) const {
  if (k < 1) throw std::invalid_argument("expand: k must be >= 1");
  const std::uint64_t n = value(m);
  auto cands = candidates(n);
  double total = 0.0;
  for (const auto& c : cands) total += c.weight;
  std::vector<Reaction> out;
  out.reserve(cands.size());
  for (const auto& c : cands) {
    std::vector<MoleculeId> reactants;
    for (auto r : c.reactants) reactants.emplace_back(std::to_string(r));
    out.push_back(make_reaction(m, std::move(reactants), std::max(-std::log(c.weight / total), kMinReactionCost)));
  }
  sort_reactions(out);
  if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
  return out;
}

std::vector<IntegerDomain::Candidate> AdditiveSplitDomain::candidates(std::uint64_t n) const {
  std::vector<Candidate> out;
  for (std::uint64_t a = 1; a <= n / 2; ++a) out.push_back({{a, n - a}, split_weight(n, a)});
  return out;
}

std::vector<IntegerDomain::Candidate> FactorSplitDomain::candidates(std::uint64_t n) const {
  std::vector<Candidate> out;
  bool composite = false;
  for (std::uint64_t a = 2; a * a <= n; ++a) {
    if (n % a == 0) {
      composite = true;
      out.push_back({{a, n / a}, divisor_weight(n, a)});
    }
  }
  if (!composite) return {};
  for (std::uint64_t a = 1; a <= n / 2; ++a) out.push_back({{a, n - a}, additive_weight(n, a)});
  return out;
}

// ---------------------------------------------------------------------------
// Table domain

TableDomain::TableDomain(std::vector<Reaction> reactions, std::string name)
    : name_(std::move(name)), all_(std::move(reactions)) {
  for (const auto& r : all_) by_product_[r.product].push_back(r);
  for (auto& [_, list] : by_product_) sort_reactions(list);
}

TableDomain TableDomain::parse_jsonl(std::string_view text, std::string name) {
  std::vector<Reaction> reactions;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto canon = [&](const std::string& raw) {
    std::string_view s = trim(raw);
    if (s.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty molecule key");
    return MoleculeId(std::string(s));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::vector<MoleculeId> reactants;
      for (const auto& r : j.at("reactants")) reactants.push_back(canon(r.get<std::string>()));
      double cost = j.at("cost").get<double>();
      if (!(cost > 0.0) || !std::isfinite(cost)) {
        throw ConfigError("line " + std::to_string(lineno) + ": cost must be > 0");
      }
      reactions.push_back(
          make_reaction(canon(j.at("product").get<std::string>()), std::move(reactants), cost));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("reaction table line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return TableDomain(std::move(reactions), std::move(name));
}

TableDomain TableDomain::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reaction table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str(), "table");
}

MoleculeId TableDomain::canonical(std::string_view raw) const {
  std::string_view s = trim(raw);
  if (s.empty()) throw DomainSyntaxError("table domain: empty molecule '" + std::string(raw) + "'");
  return MoleculeId(std::string(s));
}

std::vector<Reaction> TableDomain::expand(const MoleculeId& m, int k) const {
  if (k < 1) throw std::invalid_argument("expand: k must be >= 1");
  auto it = by_product_.find(m);
  if (it == by_product_.end()) return {};
  std::vector<Reaction> out = it->second;
  if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
  return out;
}

bool TableDomain::contains(const Reaction& r) const {
  auto it = by_product_.find(r.product);
  if (it == by_product_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [&](const Reaction& x) {
    return x.reactants == r.reactants && x.cost == r.cost;
  });
}

// ---------------------------------------------------------------------------

std::vector<MoleculeId> load_molecule_list(const std::filesystem::path& path,
                                           const ExpansionOracle& domain) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open molecule list " + path.string());
  std::vector<MoleculeId> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    out.push_back(domain.canonical(s));
  }
  return out;
}

Inventory load_inventory(const std::filesystem::path& path, const ExpansionOracle& domain) {
  return Inventory(load_molecule_list(path, domain));
}

std::unique_ptr<ExpansionOracle> make_domain(const std::string& spec, std::uint64_t seed,
                                             std::uint64_t inventory_max) {
  if (spec == "additive") return std::make_unique<AdditiveSplitDomain>(seed, inventory_max);
  if (spec == "factor") return std::make_unique<FactorSplitDomain>(seed, inventory_max);
  if (std::filesystem::exists(spec)) {
    return std::make_unique<TableDomain>(TableDomain::load_jsonl(spec));
  }
  throw ConfigError("unknown domain '" + spec + "' (expected additive, factor or a JSONL file)");
}

}  // namespace retrograph
