#pragma once

// Deterministic planning heuristics over a fact set. The scripted reasoner
// answers every planning-related prompt with these functions.
//
// Candidate order for an agent `owner` viewing `facts`:
//   1. put a loose held target into the held container (if it has room)
//   2. grab a container lying in the current room (when >= 2 targets remain)
//   3. grab a known target in the current room (+ put into held container)
//   4. transport, if nothing more can be carried or nothing is left to fetch
//   5. fetch the nearest known target elsewhere: [go to R, grasp T (, put)]
//   6. explore the nearest room not explored `all` (none before part), only
//      while some goal targets have no known location
//   7. transport whatever is held
// Ties break by room-graph distance, then ascending room id, then item id.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cobel/actions.hpp"
#include "cobel/belief_store.hpp"
#include "cobel/scenario.hpp"
#include "cobel/world_sim.hpp"

namespace cobel::planning {

/// What `owner` can read off a fact set.
struct View {
  std::string owner;
  std::optional<ObjectRef> room;
  std::vector<ObjectRef> loose;  // held targets
  std::optional<ObjectRef> container;
  int contents = 0;
  std::vector<std::pair<ObjectRef, ObjectRef>> targets_in_rooms;     // (item, room), by item
  std::vector<std::pair<ObjectRef, ObjectRef>> containers_in_rooms;  // (container, room), by item
  std::map<ObjectRef, Exploration> levels;                           // missing = none
  int unaccounted = 0;                                               // goal targets with no location fact

  int held() const { return static_cast<int>(loose.size()) + (container ? 1 : 0); }
  int free_hands() const { return kHandSlots - held(); }
  int space() const { return container ? kContainerCapacity - contents : 0; }
  int carrying() const { return static_cast<int>(loose.size()) + contents; }
  Exploration level(const ObjectRef& room) const;
};

View make_view(const FactSet& facts, const std::string& owner, const Catalog& catalog);

/// All candidate plans in priority order, duplicates removed. Empty = done.
std::vector<Plan> candidate_plans(const FactSet& facts, const std::string& owner, const Catalog& catalog);

/// Top candidate; nullopt when there is nothing left to do.
std::optional<Plan> best_plan(const FactSet& facts, const std::string& owner, const Catalog& catalog);

/// What a step commits its agent to, for conflict purposes.
enum class ConflictKind : std::uint8_t { SameRoomExplore, SameGraspTarget, SameContainerGrab };
std::string_view to_string(ConflictKind k);

struct StepIntent {
  ConflictKind kind;
  ObjectRef entity;
  friend bool operator==(const StepIntent&, const StepIntent&) = default;
};

/// Per-step intents: explore R, grasp X; a `go to R` inherits the intent of
/// the step it leads into (explore R, or the grasp that follows it).
std::vector<std::optional<StepIntent>> intents(const Plan& p, const Catalog& catalog);

/// Plans ordered so that those sharing no intent with `avoid` come first;
/// relative order is otherwise preserved.
std::vector<Plan> avoiding(std::vector<Plan> plans, const std::vector<Plan>& avoid, const Catalog& catalog);

/// First candidate sharing no intent with `avoid`, else the first candidate.
std::optional<Plan> replan(const FactSet& facts, const std::string& owner, const Catalog& catalog,
                           const std::vector<Plan>& avoid);

/// Up to three distinct candidates, those clashing with `known_plans` last.
std::vector<Plan> top_candidates(const FactSet& facts, const std::string& owner, const Catalog& catalog,
                                 const std::vector<Plan>& known_plans);

struct Conflict {
  int my_step = 0;
  int their_plan = 0;
  int their_step = 0;
  ConflictKind kind = ConflictKind::SameRoomExplore;
  ObjectRef entity;
  friend bool operator==(const Conflict&, const Conflict&) = default;
};

std::vector<Conflict> find_conflicts(const Plan& mine, const std::vector<Plan>& theirs, const Catalog& catalog);

/// Facts about a goal target, or a room explored `all`.
bool goal_relevant(const AtomicBelief& f, const Catalog& catalog);

bool is_heavy(const std::vector<Conflict>& conflicts, const std::vector<AtomicBelief>& misaligned,
              const Catalog& catalog);

struct NextStep {
  enum class Kind : std::uint8_t { Act, SubplanDone, Stale };
  Kind kind = Kind::SubplanDone;
  std::optional<AtomicAction> action;
  std::string reason;  // Stale only
};

/// First step whose effect is not yet reflected in `facts` or `history`.
NextStep next_step(const FactSet& facts, const std::string& owner, const Catalog& catalog, const Plan& plan,
                   const std::vector<AtomicAction>& history);

/// `FACTS: f1; f2 | PLAN: s1; s2`, at most kMaxMessageChars. Goal-relevant
/// facts go first; facts are dropped from the end until the text fits.
std::string compose_message(const std::vector<AtomicBelief>& facts, const std::optional<Plan>& plan,
                            const Catalog* catalog);

struct ParsedMessage {
  std::vector<AtomicBelief> facts;
  std::optional<Plan> plan;
};

/// Inverse of compose_message; nullopt when the text is not in that grammar.
std::optional<ParsedMessage> parse_message(std::string_view text);

}  // namespace cobel::planning
