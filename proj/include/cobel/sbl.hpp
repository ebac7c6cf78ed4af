#pragma once

// Symbolic Belief Language: terms, belief expressions, parser, canonical
// printer and unifier.
//
//   expr   := believer BELIEVE [believer BELIEVE] atom
//   atom   := entity RELATION (entity | state)
//   entity := Agent | <name>(id) | ?var
//   state  := lowercase-identifier | ?var
//
// A parsed expression containing any variable is a rule; otherwise it is
// ground. Nesting deeper than one collaborator is rejected.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cobel::sbl {

enum class TermKind : std::uint8_t { Agent, Object, Variable, State };

/// One SBL token in an entity or state position.
struct Term {
  TermKind kind = TermKind::Agent;
  std::string name;      // agent name, object name, variable name (no '?'), or state value
  std::uint64_t id = 0;  // only meaningful for Object

  static Term agent(std::string name) { return {TermKind::Agent, std::move(name), 0}; }
  static Term object(std::string name, std::uint64_t id) {
    return {TermKind::Object, std::move(name), id};
  }
  static Term variable(std::string name) { return {TermKind::Variable, std::move(name), 0}; }
  static Term state(std::string value) { return {TermKind::State, std::move(value), 0}; }

  bool is_variable() const { return kind == TermKind::Variable; }
  bool is_entity() const { return kind == TermKind::Agent || kind == TermKind::Object; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

/// Canonical text: `Alice`, `<apple>(123)`, `?room`, `part`.
std::string to_string(const Term& t);

using ObjectRef = Term;

/// Predicate relations take an entity on the right; attributes take a state.
/// A variable on the right leaves the kind open until unification.
enum class RelationKind : std::uint8_t { Predicate, Attribute, Open };

struct AtomicBelief {
  Term subject;
  std::string relation;
  Term object;

  RelationKind kind() const;
  bool is_ground() const { return !subject.is_variable() && !object.is_variable(); }

  friend bool operator==(const AtomicBelief&, const AtomicBelief&) = default;
  friend auto operator<=>(const AtomicBelief&, const AtomicBelief&) = default;
};

std::string to_string(const AtomicBelief& a);

/// A believer chain of length 1 (zero-order) or 2 (first-order) over a body.
struct BeliefExpr {
  std::vector<Term> believers;
  AtomicBelief body;

  int order() const { return static_cast<int>(believers.size()) - 1; }
  bool is_ground() const;
  bool is_rule() const { return !is_ground(); }
  std::vector<std::string> variables() const;  // distinct, first-occurrence order

  friend bool operator==(const BeliefExpr&, const BeliefExpr&) = default;
  friend auto operator<=>(const BeliefExpr&, const BeliefExpr&) = default;
};

using BeliefRule = BeliefExpr;

/// Variable name (without '?') to ground term. Ordered for deterministic output.
using Binding = std::map<std::string, Term>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t token_index, std::size_t char_offset);
  std::size_t token_index() const { return token_index_; }
  std::size_t char_offset() const { return char_offset_; }

 private:
  std::size_t token_index_;
  std::size_t char_offset_;
};

class SubstitutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kBelieve = "BELIEVE";
inline constexpr std::size_t kMaxBelievers = 2;

BeliefExpr parse(std::string_view text);
std::optional<BeliefExpr> try_parse(std::string_view text);

/// Parses a bare atom `subject REL object` (no believer chain).
AtomicBelief parse_atom(std::string_view text);

/// Parses a single term token (`Alice`, `<bed>(9)`, `?x`, `all`).
Term parse_term(std::string_view text);

std::string serialize(const BeliefExpr& e);

bool is_relation_symbol(std::string_view s);
bool is_agent_name(std::string_view s);
bool is_state_value(std::string_view s);
bool is_valid_object_name(std::string_view s);

/// Matches a rule against a ground expression. Returns the unique binding
/// or nullopt. Repeated variables must bind to the same term.
std::optional<Binding> unify(const BeliefRule& rule, const BeliefExpr& ground);

/// Replaces every variable in `rule`; throws SubstitutionError("unbound ?x").
BeliefExpr substitute(const BeliefRule& rule, const Binding& binding);
AtomicBelief substitute(const AtomicBelief& pattern, const Binding& binding);

/// Matches a body pattern against a ground atom, extending `binding`.
bool unify_atom(const AtomicBelief& pattern, const AtomicBelief& ground, Binding& binding);

/// Renames every variable occurrence apart (`?agent`, `?agent` -> `?agent`,
/// `?agent#1`), so each position matches independently.
BeliefRule linearize(const BeliefRule& rule);

}  // namespace cobel::sbl
