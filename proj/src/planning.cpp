#include "cobel/planning.hpp"

#include <algorithm>
#include <tuple>

namespace cobel::planning {

namespace {

using sbl::Term;
using sbl::TermKind;

bool contains_plan(const std::vector<Plan>& plans, const Plan& p) {
  return std::find(plans.begin(), plans.end(), p) != plans.end();
}

Exploration parse_level(const std::string& s) {
  if (s == "all") return Exploration::All;
  if (s == "part") return Exploration::Part;
  return Exploration::None;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

int distance_from(const View& v, const Catalog& c, const ObjectRef& room) {
  return v.room ? c.distance(*v.room, room) : 0;
}

}  // namespace

Exploration View::level(const ObjectRef& room) const {
  auto it = levels.find(room);
  return it == levels.end() ? Exploration::None : it->second;
}

View make_view(const FactSet& facts, const std::string& owner, const Catalog& catalog) {
  View v;
  v.owner = owner;
  const Term me = Term::agent(owner);
  std::set<ObjectRef> located;
  for (const auto& f : facts) {
    if (f.relation == rel::kAt && f.subject == me && catalog.is_room(f.object)) v.room = f.object;
    if (f.relation == rel::kExplored && f.object.kind == TermKind::State) v.levels[f.subject] = parse_level(f.object.name);
    if (auto item = located_item(f)) {
      if (catalog.is_target(*item)) located.insert(*item);
    }
    if (f.relation == rel::kHold && f.subject == me) {
      if (catalog.is_container(f.object)) {
        v.container = f.object;
      } else if (catalog.is_target(f.object)) {
        v.loose.push_back(f.object);
      }
    }
    if (f.relation == rel::kIn && catalog.is_room(f.object)) {
      if (catalog.is_target(f.subject)) v.targets_in_rooms.emplace_back(f.subject, f.object);
      if (catalog.is_container(f.subject)) v.containers_in_rooms.emplace_back(f.subject, f.object);
    }
  }
  if (v.container) {
    for (const auto& f : facts) {
      if (f.relation == rel::kContain && f.subject == *v.container) ++v.contents;
    }
  }
  std::sort(v.loose.begin(), v.loose.end());
  std::sort(v.targets_in_rooms.begin(), v.targets_in_rooms.end());
  std::sort(v.containers_in_rooms.begin(), v.containers_in_rooms.end());
  v.unaccounted = std::max(0, catalog.goal().total() - static_cast<int>(located.size()));
  return v;
}

std::vector<Plan> candidate_plans(const FactSet& facts, const std::string& owner, const Catalog& catalog) {
  const View v = make_view(facts, owner, catalog);
  std::vector<Plan> out;
  auto add = [&](std::vector<AtomicAction> steps) {
    Plan p{std::move(steps)};
    if (!contains_plan(out, p)) out.push_back(std::move(p));
  };

  const bool can_stow = v.container && v.space() > 0 && !v.loose.empty();
  const bool can_take = v.free_hands() > 0 || can_stow;
  const int remaining = static_cast<int>(v.targets_in_rooms.size()) + v.unaccounted;
  const bool containers_worth = !v.container && remaining >= 2;

  if (can_stow) {
    for (const auto& t : v.loose) add({AtomicAction::put(t, *v.container)});
  }

  if (v.room && containers_worth && v.free_hands() > 0) {
    for (const auto& [box, room] : v.containers_in_rooms) {
      if (room != *v.room) continue;
      if (!v.loose.empty()) {
        add({AtomicAction::grasp(box), AtomicAction::put(v.loose.front(), box)});
      } else {
        add({AtomicAction::grasp(box)});
      }
    }
  }

  if (v.room && v.free_hands() > 0) {
    for (const auto& [t, room] : v.targets_in_rooms) {
      if (room != *v.room) continue;
      if (v.container && v.space() > 0) {
        add({AtomicAction::grasp(t), AtomicAction::put(t, *v.container)});
      } else {
        add({AtomicAction::grasp(t)});
      }
    }
  }

  const bool explorable =
      v.unaccounted > 0 && std::any_of(catalog.rooms().begin(), catalog.rooms().end(),
                                       [&](const ObjectRef& r) { return v.level(r) != Exploration::All; });
  if (v.carrying() > 0 && (!can_take || (v.targets_in_rooms.empty() && !explorable))) {
    add({AtomicAction::transport()});
  }

  if (v.free_hands() > 0) {
    std::vector<std::tuple<int, std::uint64_t, ObjectRef, ObjectRef>> fetch;
    for (const auto& [t, room] : v.targets_in_rooms) {
      if (v.room && room == *v.room) continue;
      fetch.emplace_back(distance_from(v, catalog, room), room.id, t, room);
    }
    std::sort(fetch.begin(), fetch.end());
    for (const auto& [d, rid, t, room] : fetch) {
      std::optional<ObjectRef> box_there;
      if (containers_worth && v.free_hands() == kHandSlots) {
        for (const auto& [box, broom] : v.containers_in_rooms) {
          if (broom == room) {
            box_there = box;
            break;
          }
        }
      }
      if (box_there) {
        add({AtomicAction::go_to(room), AtomicAction::grasp(*box_there), AtomicAction::grasp(t)});
      } else if (v.container && v.space() > 0) {
        add({AtomicAction::go_to(room), AtomicAction::grasp(t), AtomicAction::put(t, *v.container)});
      } else {
        if (v.free_hands() == kHandSlots) {
          for (const auto& [t2, room2] : v.targets_in_rooms) {
            if (room2 == room && !(t2 == t)) {
              add({AtomicAction::go_to(room), AtomicAction::grasp(t), AtomicAction::grasp(t2)});
              break;
            }
          }
        }
        add({AtomicAction::go_to(room), AtomicAction::grasp(t)});
      }
    }
  }

  if (v.unaccounted > 0) {
    std::vector<std::tuple<int, int, std::uint64_t, ObjectRef>> rooms;
    for (const auto& r : catalog.rooms()) {
      const Exploration lv = v.level(r);
      if (lv == Exploration::All) continue;
      rooms.emplace_back(distance_from(v, catalog, r), static_cast<int>(lv), r.id, r);
    }
    std::sort(rooms.begin(), rooms.end());
    for (const auto& [d, lv, id, r] : rooms) {
      if (v.room && r == *v.room) {
        add({AtomicAction::explore(r)});
      } else {
        add({AtomicAction::go_to(r), AtomicAction::explore(r)});
      }
    }
  }

  if (v.carrying() > 0) add({AtomicAction::transport()});
  return out;
}

std::optional<Plan> best_plan(const FactSet& facts, const std::string& owner, const Catalog& catalog) {
  auto all = candidate_plans(facts, owner, catalog);
  if (all.empty()) return std::nullopt;
  return all.front();
}

std::string_view to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::SameRoomExplore: return "same-room-explore";
    case ConflictKind::SameGraspTarget: return "same-grasp-target";
    case ConflictKind::SameContainerGrab: return "same-container-grab";
  }
  return "unknown";
}

std::vector<std::optional<StepIntent>> intents(const Plan& p, const Catalog& catalog) {
  std::vector<std::optional<StepIntent>> out(p.steps.size());
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const auto& a = p.steps[i];
    if (a.type == ActionType::ExploreCurrent) {
      out[i] = StepIntent{ConflictKind::SameRoomExplore, a.target};
    } else if (a.type == ActionType::GoGrasp) {
      out[i] = StepIntent{catalog.is_container(a.target) ? ConflictKind::SameContainerGrab
                                                         : ConflictKind::SameGraspTarget,
                          a.target};
    }
  }
  for (std::size_t i = p.steps.size(); i-- > 0;) {
    const auto& a = p.steps[i];
    if (a.type != ActionType::GoTo || i + 1 >= p.steps.size() || !out[i + 1]) continue;
    const auto& next = p.steps[i + 1];
    if (next.type == ActionType::ExploreCurrent && next.target != a.target) continue;
    out[i] = out[i + 1];
  }
  return out;
}

namespace {

bool shares_intent(const Plan& p, const std::vector<Plan>& others, const Catalog& catalog) {
  const auto mine = intents(p, catalog);
  for (const auto& o : others) {
    for (const auto& theirs : intents(o, catalog)) {
      if (!theirs) continue;
      for (const auto& m : mine) {
        if (m && *m == *theirs) return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<Plan> avoiding(std::vector<Plan> plans, const std::vector<Plan>& avoid, const Catalog& catalog) {
  if (avoid.empty()) return plans;
  std::stable_partition(plans.begin(), plans.end(),
                        [&](const Plan& p) { return !shares_intent(p, avoid, catalog); });
  return plans;
}

std::optional<Plan> replan(const FactSet& facts, const std::string& owner, const Catalog& catalog,
                           const std::vector<Plan>& avoid) {
  auto ordered = avoiding(candidate_plans(facts, owner, catalog), avoid, catalog);
  if (ordered.empty()) return std::nullopt;
  return ordered.front();
}

std::vector<Plan> top_candidates(const FactSet& facts, const std::string& owner, const Catalog& catalog,
                                 const std::vector<Plan>& known_plans) {
  auto ordered = avoiding(candidate_plans(facts, owner, catalog), known_plans, catalog);
  if (ordered.size() > 3) ordered.resize(3);
  return ordered;
}

std::vector<Conflict> find_conflicts(const Plan& mine, const std::vector<Plan>& theirs, const Catalog& catalog) {
  std::vector<Conflict> out;
  const auto my_intents = intents(mine, catalog);
  for (std::size_t j = 0; j < theirs.size(); ++j) {
    const auto their_intents = intents(theirs[j], catalog);
    for (std::size_t i = 0; i < my_intents.size(); ++i) {
      if (!my_intents[i]) continue;
      for (std::size_t k = 0; k < their_intents.size(); ++k) {
        if (their_intents[k] && *their_intents[k] == *my_intents[i]) {
          out.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(k), my_intents[i]->kind,
                         my_intents[i]->entity});
        }
      }
    }
  }
  return out;
}

bool goal_relevant(const AtomicBelief& f, const Catalog& catalog) {
  if (catalog.is_target(f.subject) || catalog.is_target(f.object)) return true;
  return f.relation == rel::kExplored && f.object == Term::state("all");
}

bool is_heavy(const std::vector<Conflict>& conflicts, const std::vector<AtomicBelief>& misaligned,
              const Catalog& catalog) {
  for (const auto& c : conflicts) {
    if (c.my_step == 0 && c.their_step == 0) return true;
  }
  return std::any_of(misaligned.begin(), misaligned.end(),
                     [&](const AtomicBelief& f) { return goal_relevant(f, catalog); });
}

NextStep next_step(const FactSet& facts, const std::string& owner, const Catalog& catalog, const Plan& plan,
                   const std::vector<AtomicAction>& history) {
  const View v = make_view(facts, owner, catalog);
  const Term me = Term::agent(owner);
  auto holds = [&](const ObjectRef& x) {
    if (facts.count({me, rel::kHold, x})) return true;
    return v.container && facts.count({*v.container, rel::kContain, x}) > 0;
  };
  auto done = [&](const AtomicAction& a) {
    if (std::find(history.begin(), history.end(), a) != history.end()) return true;
    switch (a.type) {
      case ActionType::GoTo: return v.room == a.target;
      case ActionType::ExploreCurrent: return v.level(a.target) == Exploration::All;
      case ActionType::GoGrasp: return holds(a.target);
      case ActionType::Put: return facts.count({a.container, rel::kContain, a.target}) > 0;
      case ActionType::Transport: return v.held() == 0;
      case ActionType::SendMessage: return true;
    }
    return false;
  };

  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& a = plan.steps[i];
    if (done(a)) continue;
    auto stale = [&](std::string why) { return NextStep{NextStep::Kind::Stale, a, std::move(why)}; };
    switch (a.type) {
      case ActionType::GoTo:
        break;
      case ActionType::ExploreCurrent:
        if (v.room != a.target) return stale("not in the room to explore");
        if (v.unaccounted == 0) return stale("every target is located");
        break;
      case ActionType::GoGrasp: {
        if (v.free_hands() <= 0) return stale("hands full");
        if (catalog.is_container(a.target) && v.container) return stale("already holding a container");
        bool lying = false;
        for (const auto& f : facts) {
          if (f.relation == rel::kIn && f.subject == a.target && catalog.is_room(f.object)) {
            lying = true;
            if (v.room != f.object) return stale("item is in another room");
          }
        }
        if (!lying) return stale("item location unknown or taken");
        break;
      }
      case ActionType::Put:
        if (!facts.count({me, rel::kHold, a.container})) return stale("container not held");
        if (!facts.count({me, rel::kHold, a.target})) return stale("object not held");
        if (v.space() <= 0) return stale("container full");
        break;
      case ActionType::Transport:
      case ActionType::SendMessage:
        break;
    }
    return {NextStep::Kind::Act, a, {}};
  }
  return {NextStep::Kind::SubplanDone, std::nullopt, {}};
}

std::string compose_message(const std::vector<AtomicBelief>& facts, const std::optional<Plan>& plan,
                            const Catalog* catalog) {
  std::vector<AtomicBelief> ordered = facts;
  if (catalog) {
    std::stable_partition(ordered.begin(), ordered.end(),
                          [&](const AtomicBelief& f) { return goal_relevant(f, *catalog); });
  }
  const std::string tail = " | PLAN: " + (plan ? to_text(*plan) : std::string("None"));
  std::vector<std::string> parts;
  std::size_t len = 0;
  for (const auto& f : ordered) {
    parts.push_back(sbl::to_string(f));
    len += parts.back().size() + 2;
  }
  auto total = [&] { return std::string("FACTS: ").size() + (len >= 2 ? len - 2 : 0) + tail.size(); };
  while (!parts.empty() && total() > kMaxMessageChars) {
    len -= parts.back().size() + 2;
    parts.pop_back();
  }
  std::string out = "FACTS: ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  if (parts.empty()) out.pop_back();
  out += tail;
  return out;
}

std::optional<ParsedMessage> parse_message(std::string_view text) {
  const std::string t = trim(text);
  if (t.rfind("FACTS:", 0) != 0) return std::nullopt;
  const auto bar = t.find("| PLAN:");
  if (bar == std::string::npos) return std::nullopt;
  ParsedMessage out;
  const std::string facts = t.substr(6, bar - 6);
  std::size_t start = 0;
  while (start <= facts.size()) {
    auto end = facts.find(';', start);
    if (end == std::string::npos) end = facts.size();
    const std::string item = trim(std::string_view(facts).substr(start, end - start));
    if (!item.empty()) {
      try {
        out.facts.push_back(sbl::parse_atom(item));
      } catch (const sbl::ParseError&) {
        return std::nullopt;
      }
    }
    start = end + 1;
  }
  const std::string plan = trim(std::string_view(t).substr(bar + 7));
  if (plan != "None" && !plan.empty()) {
    out.plan = parse_plan(plan);
    if (!out.plan) return std::nullopt;
  }
  return out;
}

}  // namespace cobel::planning
