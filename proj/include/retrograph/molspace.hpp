#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace retrograph {

/// Canonical identity of a molecule inside one domain. Equality is byte
/// equality of the canonical key; construct through a domain's canonical().
class MoleculeId {
 public:
  MoleculeId() = default;
  explicit MoleculeId(std::string key) : key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

  friend bool operator==(const MoleculeId&, const MoleculeId&) = default;
  friend std::strong_ordering operator<=>(const MoleculeId& a, const MoleculeId& b) {
    return a.key_.compare(b.key_) <=> 0;
  }

 private:
  std::string key_;
};

struct MoleculeIdHash {
  std::size_t operator()(const MoleculeId& m) const noexcept {
    return std::hash<std::string>{}(m.key());
  }
};

/// One retrosynthetic step: product <- reactants, with a positive cost.
/// Reactants are kept sorted and deduplicated.
struct Reaction {
  MoleculeId product;
  std::vector<MoleculeId> reactants;
  double cost = 1.0;

  /// Reactant keys joined with '.', used for deterministic tie breaking.
  std::string reactant_key() const;
};

/// Validates and normalizes a reaction (sorts and dedups reactants).
/// Throws std::invalid_argument on an empty reactant set or a cost that is
/// not strictly positive and finite.
Reaction make_reaction(MoleculeId product, std::vector<MoleculeId> reactants, double cost);

/// Orders reactions by ascending cost, ties by reactant key.
void sort_reactions(std::vector<Reaction>& reactions);

class Inventory {
 public:
  Inventory() = default;
  explicit Inventory(std::vector<MoleculeId> members);

  bool contains(const MoleculeId& m) const { return members_.count(m) != 0; }
  void insert(MoleculeId m) { members_.insert(std::move(m)); }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }

  /// Members in key order.
  std::vector<MoleculeId> sorted() const;

 private:
  std::unordered_set<MoleculeId, MoleculeIdHash> members_;
};

bool is_available(const MoleculeId& m, const Inventory& inv);

/// Fixed-length binary structural fingerprint, stored sparsely as the sorted
/// list of set positions.
class FeatureVector {
 public:
  FeatureVector() = default;
  FeatureVector(std::size_t bits, std::vector<std::uint32_t> on);

  std::size_t size() const noexcept { return bits_; }
  const std::vector<std::uint32_t>& on_bits() const noexcept { return on_; }
  bool test(std::size_t i) const;
  std::vector<double> dense() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint32_t> on_;
};

/// Hashes a set of feature tokens into `bits` positions.
FeatureVector hash_tokens(const std::vector<std::string>& tokens, std::size_t bits);

/// Single-step expansion model: proposes at most k reactions producing a
/// molecule. Implementations are immutable after construction and safe for
/// concurrent use.
class ExpansionOracle {
 public:
  virtual ~ExpansionOracle() = default;

  virtual std::string name() const = 0;

  /// Parses and canonicalizes a raw molecule string. Throws DomainSyntaxError.
  virtual MoleculeId canonical(std::string_view raw) const = 0;

  /// At most k reactions with product m, sorted by ascending cost.
  virtual std::vector<Reaction> expand(const MoleculeId& m, int k) const = 0;

  /// Structural sub-feature tokens of m; hashed by features().
  virtual std::vector<std::string> feature_tokens(const MoleculeId& m) const;

  FeatureVector features(const MoleculeId& m, std::size_t bits) const;

  /// Inventory implied by the domain itself, if any.
  virtual std::optional<Inventory> default_inventory() const { return std::nullopt; }
};

MoleculeId canonical_id(std::string_view raw, const ExpansionOracle& domain);
std::vector<Reaction> expand(const ExpansionOracle& domain, const MoleculeId& m, int k);
FeatureVector features(const ExpansionOracle& domain, const MoleculeId& m, std::size_t bits);

/// Floor on synthetic reaction costs: a molecule with a single candidate
/// would otherwise get cost -ln(1) = 0.
inline constexpr double kMinReactionCost = 1e-3;

/// Positive-integer molecules shared by the two synthetic domains.
class IntegerDomain : public ExpansionOracle {
 public:
  IntegerDomain(std::uint64_t seed, std::uint64_t inventory_max)
      : seed_(seed), inventory_max_(inventory_max) {}

  MoleculeId canonical(std::string_view raw) const override;
  std::vector<std::string> feature_tokens(const MoleculeId& m) const override;
  std::optional<Inventory> default_inventory() const override;

  std::vector<Reaction> expand(const MoleculeId& m, int k) const override;

  /// Every reaction the rule set allows for n, unnormalized weight attached
  /// as `cost` (callers normalize). Exposed for oracle tests.
  struct Candidate {
    std::vector<std::uint64_t> reactants;
    double weight;
  };
  virtual std::vector<Candidate> candidates(std::uint64_t n) const = 0;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t inventory_max() const noexcept { return inventory_max_; }

  static std::uint64_t value(const MoleculeId& m);

 protected:
  /// Deterministic weight in [0.1, 1.0] keyed by (seed, salt, n, a).
  double weight(std::uint64_t salt, std::uint64_t n, std::uint64_t a) const;

 private:
  std::uint64_t seed_;
  std::uint64_t inventory_max_;
};

/// n -> {a, n - a} for a = 1..floor(n/2).
class AdditiveSplitDomain final : public IntegerDomain {
 public:
  explicit AdditiveSplitDomain(std::uint64_t seed = 2023, std::uint64_t inventory_max = 3)
      : IntegerDomain(seed, inventory_max) {}
  std::string name() const override { return "additive"; }
  std::vector<Candidate> candidates(std::uint64_t n) const override;
  double split_weight(std::uint64_t n, std::uint64_t a) const { return weight(0, n, a); }
};

/// Composite n -> {a, n/a} for divisors 2 <= a <= sqrt(n), plus the
/// additive splits. Primes have no reactions, so primes above the inventory
/// bound are dead ends.
class FactorSplitDomain final : public IntegerDomain {
 public:
  explicit FactorSplitDomain(std::uint64_t seed = 2023, std::uint64_t inventory_max = 3)
      : IntegerDomain(seed, inventory_max) {}
  std::string name() const override { return "factor"; }
  std::vector<Candidate> candidates(std::uint64_t n) const override;
  double additive_weight(std::uint64_t n, std::uint64_t a) const { return weight(0, n, a); }
  double divisor_weight(std::uint64_t n, std::uint64_t a) const { return weight(1, n, a); }
};

/// Reactions listed explicitly, one JSON object per line:
/// {"product": "...", "reactants": ["...", ...], "cost": 1.5}
class TableDomain final : public ExpansionOracle {
 public:
  explicit TableDomain(std::vector<Reaction> reactions, std::string name = "table");

  static TableDomain load_jsonl(const std::filesystem::path& path);
  static TableDomain parse_jsonl(std::string_view text, std::string name = "table");

  std::string name() const override { return name_; }
  MoleculeId canonical(std::string_view raw) const override;
  std::vector<Reaction> expand(const MoleculeId& m, int k) const override;

  /// True if the exact reaction (product, reactant set, cost) is listed.
  bool contains(const Reaction& r) const;
  const std::vector<Reaction>& reactions() const noexcept { return all_; }

 private:
  std::string name_;
  std::vector<Reaction> all_;
  std::unordered_map<MoleculeId, std::vector<Reaction>, MoleculeIdHash> by_product_;
};

/// Reads one molecule per line (blank lines and '#' comments skipped),
/// canonicalized through the domain.
std::vector<MoleculeId> load_molecule_list(const std::filesystem::path& path,
                                           const ExpansionOracle& domain);
Inventory load_inventory(const std::filesystem::path& path, const ExpansionOracle& domain);

/// Builds a domain from a name ("additive", "factor") or a JSONL path.
std::unique_ptr<ExpansionOracle> make_domain(const std::string& spec, std::uint64_t seed,
                                             std::uint64_t inventory_max);

}  // namespace retrograph
