#pragma once

// One agent's collaborative belief world: its own (zero-order) facts, what it
// believes each collaborator knows (first-order facts), and the consensus rules
// every stored fact must conform to.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cobel/scenario.hpp"
#include "cobel/sbl.hpp"

namespace cobel {

using sbl::AtomicBelief;
using sbl::BeliefRule;
using sbl::Binding;

using FactSet = std::set<AtomicBelief>;

/// Which store a fact goes into: the owner's own view, or its model of a collaborator.
struct Partition {
  std::optional<std::string> collaborator;  // nullopt = zero-order

  static Partition zero() { return {}; }
  static Partition first(std::string c) { return {std::move(c)}; }
  bool is_zero() const { return !collaborator.has_value(); }
  friend bool operator==(const Partition&, const Partition&) = default;
};

class RuleViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownCollaborator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MisalignmentReport {
  std::vector<AtomicBelief> facts;  // sorted
  bool empty() const { return facts.empty(); }
  friend bool operator==(const MisalignmentReport&, const MisalignmentReport&) = default;
};

/// Relation symbols with special store semantics.
namespace rel {
inline constexpr const char* kIn = "IN";
inline constexpr const char* kAt = "AT";
inline constexpr const char* kHold = "HOLD";
inline constexpr const char* kContain = "CONTAIN";
inline constexpr const char* kExplored = "EXPLORED";
}  // namespace rel

/// The item a location-type fact places, if any: IN/AT subjects that are not
/// agents, HOLD/CONTAIN objects.
std::optional<sbl::Term> located_item(const AtomicBelief& f);

/// Key under which a fact is single-valued within one partition, if any.
/// Two facts with equal keys cannot coexist.
std::optional<std::string> functional_key(const AtomicBelief& f);

/// The 16 consensus rules (8 zero-order, 8 first-order), in canonical order.
const std::vector<BeliefRule>& canonical_rules();

class BeliefWorld {
 public:
  BeliefWorld(std::string owner, std::vector<std::string> collaborators, std::vector<BeliefRule> rules,
              CatalogPtr catalog = nullptr);

  const std::string& owner() const { return owner_; }
  const std::vector<BeliefRule>& rules() const { return rules_; }
  std::vector<std::string> collaborators() const;
  const CatalogPtr& catalog() const { return catalog_; }

  const FactSet& zero() const { return zero_; }
  const FactSet& first(const std::string& collaborator) const;
  const FactSet& facts(const Partition& p) const;

  /// Wraps a body in the partition's implicit believer chain.
  sbl::BeliefExpr wrap(const Partition& p, const AtomicBelief& f) const;
  bool conforms(const Partition& p, const AtomicBelief& f) const;

  /// Inserts a ground fact. Functional slots are overwritten (newest wins);
  /// hand limits are enforced. Throws RuleViolation / UnknownCollaborator.
  void assert_fact(const Partition& p, const AtomicBelief& f);
  /// Removes a fact if present; returns whether anything changed.
  bool retract(const Partition& p, const AtomicBelief& f);

  /// All bindings of `pattern` (a body with variables) over the partition,
  /// ordered by the serialized matching fact.
  std::vector<Binding> query(const Partition& p, const AtomicBelief& pattern) const;
  /// Same, for a full rule whose believer chain must fit the partition.
  std::vector<Binding> query(const Partition& p, const BeliefRule& pattern) const;

  /// Facts the owner knows that it believes `collaborator` does not.
  MisalignmentReport misalignment(const std::string& collaborator) const;

  /// Canonical sorted dump: header lines then one full belief expression per line.
  std::string snapshot() const;
  /// Rebuilds a world from a snapshot; rules come from the caller.
  static BeliefWorld load(const std::string& text, std::vector<BeliefRule> rules, CatalogPtr catalog = nullptr);

  friend bool operator==(const BeliefWorld& a, const BeliefWorld& b) {
    return a.owner_ == b.owner_ && a.zero_ == b.zero_ && a.first_ == b.first_ && a.rules_ == b.rules_;
  }

 private:
  FactSet& mutable_facts(const Partition& p);
  bool is_container_item(const sbl::Term& t) const;

  std::string owner_;
  std::vector<BeliefRule> rules_;
  std::vector<BeliefRule> linear_rules_;
  CatalogPtr catalog_;
  FactSet zero_;
  std::map<std::string, FactSet> first_;
};

/// Serialized-fact order used for query results and reports.
bool canonical_less(const AtomicBelief& a, const AtomicBelief& b);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace cobel
