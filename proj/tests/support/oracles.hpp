#pragma once

// Random generators and brute-force reference implementations shared by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cobel/actions.hpp"
#include "cobel/belief_store.hpp"
#include "cobel/planning.hpp"
#include "cobel/sbl.hpp"
#include "cobel/scenario.hpp"
#include "cobel/world_sim.hpp"

namespace cobel::oracle {

using sbl::AtomicBelief;
using sbl::BeliefExpr;
using sbl::Binding;
using sbl::Term;

inline std::filesystem::path source_dir() { return COBEL_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path fixture_dir() { return source_dir() / "tests" / "fixtures"; }

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

/// A small world of named entities plus a scenario that registers them.
struct Universe {
  std::vector<Term> agents;
  std::vector<Term> targets;
  std::vector<Term> containers;
  std::vector<Term> rooms;
  Term bed;
  std::vector<Term> states{Term::state("none"), Term::state("part"), Term::state("all")};
  Scenario scenario;
  CatalogPtr catalog;

  std::vector<Term> items() const {
    auto out = targets;
    out.insert(out.end(), containers.begin(), containers.end());
    return out;
  }
  std::vector<Term> terms() const {
    std::vector<Term> out = agents;
    for (const auto* v : {&targets, &containers, &rooms, &states}) out.insert(out.end(), v->begin(), v->end());
    out.push_back(bed);
    return out;
  }
};

inline Universe make_universe(Rng& rng, int max_agents = 5, int max_objects = 5, int max_rooms = 4) {
  static const std::vector<std::string> kAgents{"Alice", "Bob", "Carol", "Dave", "Erin"};
  static const std::vector<std::string> kItems{"apple", "loaf_bread", "tv-stand", "Cup2", "pen", "burger", "key"};
  static const std::vector<std::string> kBoxes{"plate", "basket", "wooden_box"};
  static const std::vector<std::string> kRooms{"kitchen", "livingroom", "office", "bedroom"};
  Universe u;
  std::uint64_t next_id = static_cast<std::uint64_t>(uniform(rng, 1, 50));
  auto fresh = [&] { return next_id += static_cast<std::uint64_t>(uniform(rng, 1, 997)); };

  const int na = uniform(rng, 2, max_agents);
  for (int i = 0; i < na; ++i) u.agents.push_back(Term::agent(kAgents[i]));
  const int nr = uniform(rng, 1, max_rooms);
  for (int i = 0; i < nr; ++i) u.rooms.push_back(Term::object(kRooms[i], fresh()));
  const int no = uniform(rng, 1, max_objects);
  const int nc = std::min(uniform(rng, 0, 2), no - 1);
  for (int i = 0; i < no - nc; ++i) u.targets.push_back(Term::object(pick(rng, kItems), fresh()));
  for (int i = 0; i < nc; ++i) u.containers.push_back(Term::object(kBoxes[i], fresh()));
  u.bed = Term::object("bed", fresh());

  Scenario& s = u.scenario;
  s.name = "universe";
  s.rooms = u.rooms;
  for (int i = 1; i < nr; ++i) s.edges.push_back({u.rooms[i - 1].id, u.rooms[i].id, 100});
  s.bed_room = u.rooms.front().id;
  s.goal.bed = u.bed;
  for (const auto& t : u.targets) {
    s.objects.push_back({t, ObjectKind::Target, pick(rng, u.rooms).id});
    ++s.goal.target_counts[t.name];
  }
  for (const auto& c : u.containers) s.objects.push_back({c, ObjectKind::Container, pick(rng, u.rooms).id});
  for (const auto& a : u.agents) s.agents.push_back({a.name, s.bed_room});
  u.catalog = std::make_shared<Catalog>(s);
  return u;
}

// ---- SBL ----

inline Term random_var(Rng& rng) {
  static const std::vector<std::string> kVars{"agent", "agentA", "agentB", "room", "object", "x", "y_1", "container"};
  return Term::variable(pick(rng, kVars));
}

/// A well-formed expression over `u`; each slot is a variable with probability `var_p`.
inline BeliefExpr random_expr(Rng& rng, const Universe& u, double var_p) {
  static const std::vector<std::string> kRelations{"IN", "AT", "HOLD", "CONTAIN", "EXPLORED", "NEAR", "ON_TOP"};
  BeliefExpr e;
  const int believers = uniform(rng, 1, 2);
  for (int i = 0; i < believers; ++i) e.believers.push_back(coin(rng, var_p) ? random_var(rng) : pick(rng, u.agents));
  e.body.relation = pick(rng, kRelations);
  std::vector<Term> entities = u.agents;
  for (const auto& t : u.items()) entities.push_back(t);
  for (const auto& t : u.rooms) entities.push_back(t);
  entities.push_back(u.bed);
  e.body.subject = coin(rng, var_p) ? random_var(rng) : pick(rng, entities);
  if (coin(rng, var_p)) {
    e.body.object = random_var(rng);
  } else if (e.body.relation == "EXPLORED" || coin(rng, 0.15)) {
    e.body.object = pick(rng, u.states);
  } else {
    e.body.object = pick(rng, entities);
  }
  return e;
}

/// Replaces some slots of a ground expression with variables, sometimes
/// reusing one name across slots.
inline sbl::BeliefRule generalize(Rng& rng, const BeliefExpr& g) {
  sbl::BeliefRule r = g;
  std::vector<Term*> slots;
  for (auto& b : r.believers) slots.push_back(&b);
  slots.push_back(&r.body.subject);
  slots.push_back(&r.body.object);
  bool any = false;
  for (auto* s : slots) {
    if (coin(rng, 0.5)) {
      *s = random_var(rng);
      any = true;
    }
  }
  if (!any) *slots.back() = random_var(rng);
  return r;
}

/// Tries every assignment of the rule's variables over the universe's terms.
inline std::optional<Binding> enumerate_unify(const sbl::BeliefRule& rule, const BeliefExpr& ground,
                                              const std::vector<Term>& terms) {
  const auto vars = rule.variables();
  std::vector<std::size_t> idx(vars.size(), 0);
  std::optional<Binding> found;
  auto apply = [&](const Term& t, const Binding& b) {
    if (!t.is_variable()) return t;
    return b.at(t.name);
  };
  while (true) {
    Binding b;
    for (std::size_t i = 0; i < vars.size(); ++i) b[vars[i]] = terms[idx[i]];
    BeliefExpr cand;
    for (const auto& x : rule.believers) cand.believers.push_back(apply(x, b));
    cand.body = {apply(rule.body.subject, b), rule.body.relation, apply(rule.body.object, b)};
    if (cand == ground) {
      if (found) return std::nullopt;  // ambiguous; cannot happen when every variable occurs
      found = b;
    }
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == terms.size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return found;
}

// ---- belief store ----

inline std::optional<std::string> ref_key(const AtomicBelief& f) {
  const bool obj_subject = f.subject.kind == sbl::TermKind::Object;
  if (f.relation == "EXPLORED") return "E" + sbl::to_string(f.subject);
  if (f.relation == "AT" && f.subject.kind == sbl::TermKind::Agent) return "A" + f.subject.name;
  if ((f.relation == "IN" || f.relation == "AT") && obj_subject) return "L" + sbl::to_string(f.subject);
  if ((f.relation == "HOLD" || f.relation == "CONTAIN") && f.object.kind == sbl::TermKind::Object) {
    return "L" + sbl::to_string(f.object);
  }
  return std::nullopt;
}

/// Plain-set model of a belief world: newest fact wins per functional key,
/// hand limits reject the insert.
struct RefWorld {
  std::set<AtomicBelief> zero;
  std::map<std::string, std::set<AtomicBelief>> first;
  const Catalog* catalog = nullptr;

  std::set<AtomicBelief>& part(const std::optional<std::string>& c) { return c ? first[*c] : zero; }

  /// False when the insert violates the hand limits.
  bool add(const std::optional<std::string>& c, const AtomicBelief& f) {
    auto next = part(c);
    if (auto k = ref_key(f)) {
      for (auto it = next.begin(); it != next.end();) it = ref_key(*it) == k ? next.erase(it) : std::next(it);
    }
    next.insert(f);
    int held = 0, boxes = 0;
    for (const auto& g : next) {
      if (g.relation == "HOLD" && g.subject == f.subject) {
        ++held;
        boxes += catalog->is_container(g.object) ? 1 : 0;
      }
    }
    if (f.relation == "HOLD" && (held > 2 || boxes > 1)) return false;
    part(c) = std::move(next);
    return true;
  }

  std::vector<AtomicBelief> misalignment(const std::string& c) {
    std::vector<AtomicBelief> out;
    const auto& theirs = first[c];
    for (const auto& f : zero) {
      bool same = false;
      for (const auto& g : theirs) same = same || g == f;
      if (!same) out.push_back(f);
    }
    std::sort(out.begin(), out.end(),
              [](const AtomicBelief& a, const AtomicBelief& b) { return sbl::to_string(a) < sbl::to_string(b); });
    return out;
  }
};

/// A typed random fact from the five store relations.
inline AtomicBelief random_fact(Rng& rng, const Universe& u) {
  switch (uniform(rng, 0, 4)) {
    case 0: {
      std::vector<Term> placeable = u.items();
      placeable.push_back(u.bed);
      return {pick(rng, placeable), "IN", pick(rng, u.rooms)};
    }
    case 1:
      if (coin(rng, 0.7)) return {pick(rng, u.agents), "AT", pick(rng, u.rooms)};
      return {pick(rng, u.targets), "AT", u.bed};
    case 2: return {pick(rng, u.agents), "HOLD", pick(rng, u.items())};
    case 3:
      if (!u.containers.empty()) return {pick(rng, u.containers), "CONTAIN", pick(rng, u.targets)};
      return {pick(rng, u.rooms), "EXPLORED", pick(rng, u.states)};
    default: return {pick(rng, u.rooms), "EXPLORED", pick(rng, u.states)};
  }
}

// ---- simulator ----

/// Independent state check: every object in exactly one place, hands and
/// container limits respected. Returns the first violation found.
inline std::string state_violation(const World& w) {
  const auto& st = w.state();
  const auto& objs = w.scenario().objects;
  if (st.items.size() != objs.size()) return "object count changed";
  std::vector<int> in_hands(objs.size(), 0);
  for (std::size_t a = 0; a < st.agents.size(); ++a) {
    const auto& hands = st.agents[a].hands;
    if (hands.size() > 2) return "more than two items in hands";
    int boxes = 0;
    for (int h : hands) {
      if (h < 0 || h >= static_cast<int>(objs.size())) return "bad hand index";
      ++in_hands[h];
      if (objs[h].kind == ObjectKind::Container) ++boxes;
      const auto& loc = st.items[h];
      if (loc.kind != ItemLocation::Kind::Held || loc.holder != static_cast<int>(a)) return "hand and location disagree";
    }
    if (boxes > 1) return "two containers in hands";
  }
  std::vector<int> contents(objs.size(), 0);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto& loc = st.items[i];
    if (loc.kind == ItemLocation::Kind::Held && in_hands[i] != 1) return "held item not in exactly one hand";
    if (loc.kind != ItemLocation::Kind::Held && in_hands[i] != 0) return "item in hand but placed elsewhere";
    if (loc.kind == ItemLocation::Kind::InContainer) {
      if (objs[i].kind != ObjectKind::Target) return "container inside a container";
      if (loc.container < 0 || objs[loc.container].kind != ObjectKind::Container) return "bad container index";
      if (st.items[loc.container].kind == ItemLocation::Kind::AtBed) return "contents of a delivered container left behind";
      ++contents[loc.container];
    }
  }
  for (int c : contents) {
    if (c > 3) return "container over capacity";
  }
  return {};
}

/// Actions the agent could start now.
inline std::vector<AtomicAction> legal_actions(const World& w, int agent) {
  std::vector<AtomicAction> cand;
  const auto& cat = *w.catalog();
  for (const auto& r : cat.rooms()) cand.push_back(AtomicAction::go_to(r));
  for (const auto& r : cat.rooms()) cand.push_back(AtomicAction::explore(r));
  for (const auto& o : w.scenario().objects) cand.push_back(AtomicAction::grasp(o.ref));
  for (const auto& t : cat.targets()) {
    for (const auto& c : cat.containers()) cand.push_back(AtomicAction::put(t, c));
  }
  cand.push_back(AtomicAction::transport());
  std::vector<AtomicAction> out;
  for (auto& a : cand) {
    if (w.check_start(agent, a).empty()) out.push_back(std::move(a));
  }
  return out;
}

struct FuzzOutcome {
  int frames = 0;
  std::string violation;  // empty when every state was consistent
};

/// Drives every agent with random legal actions until each has started
/// `actions_per_agent` of them, checking the state after every frame.
inline FuzzOutcome fuzz_episode(const Scenario& s, std::uint64_t seed, int actions_per_agent) {
  World w(s, seed);
  Rng rng(seed * 7919 + 17);
  const int n = static_cast<int>(s.agents.size());
  std::vector<int> started(n, 0);
  FuzzOutcome out;
  auto fail = [&](const std::string& why) {
    out.violation = "frame " + std::to_string(w.state().frame) + ": " + why;
    return out;
  };
  if (auto v = state_violation(w); !v.empty()) return fail(v);
  while (w.state().frame < s.frame_budget) {
    std::vector<Intent> intents(n);
    bool pending = false;
    for (int i = 0; i < n; ++i) {
      if (w.state().agents[i].busy()) {
        pending = true;
        continue;
      }
      if (started[i] >= actions_per_agent) continue;
      const auto acts = legal_actions(w, i);
      if (acts.empty()) continue;
      intents[i] = Intent::start(pick(rng, acts));
      ++started[i];
      pending = true;
    }
    if (!pending) break;
    const int before = w.state().frame;
    w.apply(intents);
    if (w.state().frame != before + 1) return fail("frame did not advance by one");
    if (auto v = state_violation(w); !v.empty()) return fail(v);
    if (auto v = w.check_invariants(); !v.empty()) return fail(v.front());
  }
  out.frames = w.state().frame;
  return out;
}

// ---- plans and conflicts ----

/// Every 1-3 step plan over the given rooms, items and container.
inline std::vector<Plan> enumerate_plans(const std::vector<Term>& rooms, const std::vector<Term>& objects,
                                         const Term& container) {
  std::vector<AtomicAction> acts;
  for (const auto& r : rooms) acts.push_back(AtomicAction::go_to(r));
  for (const auto& r : rooms) acts.push_back(AtomicAction::explore(r));
  for (const auto& o : objects) acts.push_back(AtomicAction::grasp(o));
  acts.push_back(AtomicAction::grasp(container));
  for (const auto& o : objects) acts.push_back(AtomicAction::put(o, container));
  acts.push_back(AtomicAction::transport());
  std::vector<Plan> out;
  for (const auto& a : acts) out.push_back({{a}});
  for (const auto& a : acts) {
    for (const auto& b : acts) out.push_back({{a, b}});
  }
  for (const auto& a : acts) {
    for (const auto& b : acts) {
      for (const auto& c : acts) out.push_back({{a, b, c}});
    }
  }
  return out;
}

/// What step i of `p` is working towards, by direct recursion on the plan:
/// explore/grasp steps name themselves, a go-to takes the next step's aim
/// unless that step explores a different room.
inline std::optional<std::pair<planning::ConflictKind, Term>> ref_intent(const Plan& p, std::size_t i,
                                                                          const Catalog& cat) {
  const auto& a = p.steps[i];
  switch (a.type) {
    case ActionType::ExploreCurrent: return std::pair{planning::ConflictKind::SameRoomExplore, a.target};
    case ActionType::GoGrasp:
      return std::pair{cat.is_container(a.target) ? planning::ConflictKind::SameContainerGrab
                                                  : planning::ConflictKind::SameGraspTarget,
                       a.target};
    case ActionType::GoTo: {
      if (i + 1 >= p.steps.size()) return std::nullopt;
      const auto& n = p.steps[i + 1];
      if (n.type == ActionType::ExploreCurrent && !(n.target == a.target)) return std::nullopt;
      return ref_intent(p, i + 1, cat);
    }
    default: return std::nullopt;
  }
}

struct RefConflict {
  int my_step;
  int their_plan;
  int their_step;
  planning::ConflictKind kind;
  Term entity;
  friend bool operator==(const RefConflict&, const RefConflict&) = default;
  friend auto operator<=>(const RefConflict&, const RefConflict&) = default;
};

/// All step pairs whose aims coincide.
inline std::vector<RefConflict> pairwise_conflicts(const Plan& mine, const std::vector<Plan>& theirs,
                                                   const Catalog& cat) {
  std::vector<RefConflict> out;
  for (std::size_t j = 0; j < theirs.size(); ++j) {
    for (std::size_t i = 0; i < mine.steps.size(); ++i) {
      for (std::size_t k = 0; k < theirs[j].steps.size(); ++k) {
        const auto a = ref_intent(mine, i, cat);
        const auto b = ref_intent(theirs[j], k, cat);
        if (a && b && a->first == b->first && a->second == b->second) {
          out.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(k), a->first, a->second});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<RefConflict> as_ref(const std::vector<planning::Conflict>& cs) {
  std::vector<RefConflict> out;
  for (const auto& c : cs) out.push_back({c.my_step, c.their_plan, c.their_step, c.kind, c.entity});
  std::sort(out.begin(), out.end());
  return out;
}

/// Two rooms, two targets and one container.
inline Scenario conflict_universe() {
  Scenario s;
  s.name = "conflicts";
  s.rooms = {Term::object("kitchen", 1), Term::object("office", 2)};
  s.edges = {{1, 2, 100}};
  s.bed_room = 1;
  s.goal.bed = Term::object("bed", 9);
  s.objects = {{Term::object("apple", 3), ObjectKind::Target, 1},
               {Term::object("pen", 4), ObjectKind::Target, 2},
               {Term::object("plate", 5), ObjectKind::Container, 2}};
  s.goal.target_counts = {{"apple", 1}, {"pen", 1}};
  s.agents = {{"Alice", 1}, {"Bob", 1}};
  return s;
}

}  // namespace cobel::oracle
