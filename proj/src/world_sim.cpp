#include "cobel/world_sim.hpp"

#include <algorithm>
#include <random>

namespace cobel {

namespace {

double unit_interval(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::string_view to_string(Exploration e) {
  switch (e) {
    case Exploration::None: return "none";
    case Exploration::Part: return "part";
    case Exploration::All: return "all";
  }
  return "none";
}

std::string_view to_string(ActionResult::Status s) {
  switch (s) {
    case ActionResult::Status::Idle: return "idle";
    case ActionResult::Status::Started: return "started";
    case ActionResult::Status::InProgress: return "in_progress";
    case ActionResult::Status::Completed: return "completed";
    case ActionResult::Status::Rejected: return "rejected";
  }
  return "idle";
}

World::World(Scenario scenario, std::uint64_t seed) : seed_(seed) {
  if (auto errs = validate(scenario); !errs.empty()) throw ScenarioError(std::move(errs));
  scenario_ = std::make_shared<const Scenario>(std::move(scenario));
  catalog_ = std::make_shared<const Catalog>(*scenario_);

  const auto& s = *scenario_;
  const std::size_t n_items = s.objects.size();
  const std::size_t n_agents = s.agents.size();
  state_.items.reserve(n_items);
  for (const auto& o : s.objects) state_.items.push_back({ItemLocation::Kind::Room, o.room, -1, -1});
  state_.revealed.assign(n_agents, std::vector<bool>(n_items, false));
  state_.entry_reveal.assign(n_agents, std::vector<bool>(n_items, false));
  state_.exploration.resize(n_agents);
  for (std::size_t a = 0; a < n_agents; ++a) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), 0x5eedu};
    std::mt19937_64 rng(seq);
    for (std::size_t i = 0; i < n_items; ++i) state_.entry_reveal[a][i] = unit_interval(rng) < s.reveal_fraction;
    state_.agents.push_back({s.agents[a].name, s.agents[a].room, {}, std::nullopt, 0, {}});
  }
  for (std::size_t a = 0; a < n_agents; ++a) enter_room(static_cast<int>(a), s.agents[a].room);
}

int World::agent_index(const std::string& name) const {
  for (std::size_t i = 0; i < state_.agents.size(); ++i) {
    if (state_.agents[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::optional<int> World::item_index(const ObjectRef& ref) const {
  const auto& objs = scenario_->objects;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (objs[i].ref == ref) return static_cast<int>(i);
  }
  return std::nullopt;
}

ObjectRef World::room_ref(std::uint64_t id) const { return *catalog_->room_by_id(id); }

int World::contents_count(int container) const {
  return static_cast<int>(std::count_if(state_.items.begin(), state_.items.end(), [&](const ItemLocation& l) {
    return l.kind == ItemLocation::Kind::InContainer && l.container == container;
  }));
}

int World::frame_cost(int agent, const AtomicAction& a) const {
  const ObjectRef here = room_ref(state_.agents[agent].room);
  switch (a.type) {
    case ActionType::GoTo:
      return catalog_->is_room(a.target) ? std::max(1, catalog_->distance(here, a.target)) : 1;
    case ActionType::ExploreCurrent: return cost::kExplore;
    case ActionType::GoGrasp: return cost::kGrasp;
    case ActionType::Put: return cost::kPut;
    case ActionType::Transport: return catalog_->distance(here, catalog_->bed_room()) + cost::kTransportDrop;
    case ActionType::SendMessage: return cost::kSendMessage;
  }
  return 1;
}

std::string World::check_start(int agent, const AtomicAction& a) const {
  const auto& ag = state_.agents[agent];
  const auto& objs = scenario_->objects;
  auto holds = [&](int item) { return std::find(ag.hands.begin(), ag.hands.end(), item) != ag.hands.end(); };
  switch (a.type) {
    case ActionType::GoTo:
      return catalog_->is_room(a.target) ? "" : "not a room: " + sbl::to_string(a.target);
    case ActionType::ExploreCurrent:
      if (!catalog_->is_room(a.target)) return "not a room: " + sbl::to_string(a.target);
      return a.target.id == ag.room ? "" : "can only explore the current room";
    case ActionType::GoGrasp: {
      auto idx = item_index(a.target);
      if (!idx) return "unknown item " + sbl::to_string(a.target);
      const auto& loc = state_.items[*idx];
      if (loc.kind != ItemLocation::Kind::Room || loc.room != ag.room) return "item not in current room";
      if (static_cast<int>(ag.hands.size()) >= kHandSlots) return "hands full";
      if (objs[*idx].kind == ObjectKind::Container &&
          std::any_of(ag.hands.begin(), ag.hands.end(),
                      [&](int h) { return objs[h].kind == ObjectKind::Container; })) {
        return "already holding a container";
      }
      return "";
    }
    case ActionType::Put: {
      auto item = item_index(a.target);
      auto box = item_index(a.container);
      if (!item || !box) return "unknown item";
      if (objs[*item].kind != ObjectKind::Target) return "only targets go into containers";
      if (objs[*box].kind != ObjectKind::Container) return "not a container: " + sbl::to_string(a.container);
      if (!holds(*item) || !holds(*box)) return "must hold both the object and the container";
      if (contents_count(*box) >= scenario_->container_capacity) return "container full";
      return "";
    }
    case ActionType::Transport:
      return ag.hands.empty() ? "nothing to transport" : "";
    case ActionType::SendMessage:
      return a.text.size() <= kMaxMessageChars ? "" : "message longer than 500 characters";
  }
  return "unknown action";
}

std::string World::check_complete(int agent, const AtomicAction& a) const {
  if (a.type != ActionType::GoGrasp) return "";
  // Another agent may have taken the item while this grasp was in progress.
  return check_start(agent, a);
}

void World::enter_room(int agent, std::uint64_t room) {
  state_.agents[agent].room = room;
  for (std::size_t i = 0; i < state_.items.size(); ++i) {
    const auto& loc = state_.items[i];
    if (loc.kind == ItemLocation::Kind::Room && loc.room == room && state_.entry_reveal[agent][i]) {
      state_.revealed[agent][i] = true;
    }
  }
  auto& level = state_.exploration[agent][room];
  level = std::max(level, Exploration::Part);
}

void World::complete(int agent, const AtomicAction& a) {
  auto& ag = state_.agents[agent];
  switch (a.type) {
    case ActionType::GoTo:
      enter_room(agent, a.target.id);
      break;
    case ActionType::ExploreCurrent:
      for (std::size_t i = 0; i < state_.items.size(); ++i) {
        const auto& loc = state_.items[i];
        if (loc.kind == ItemLocation::Kind::Room && loc.room == ag.room) state_.revealed[agent][i] = true;
      }
      state_.exploration[agent][ag.room] = Exploration::All;
      break;
    case ActionType::GoGrasp: {
      const int idx = *item_index(a.target);
      state_.items[idx] = {ItemLocation::Kind::Held, 0, agent, -1};
      ag.hands.push_back(idx);
      break;
    }
    case ActionType::Put: {
      const int item = *item_index(a.target);
      const int box = *item_index(a.container);
      state_.items[item] = {ItemLocation::Kind::InContainer, 0, -1, box};
      ag.hands.erase(std::find(ag.hands.begin(), ag.hands.end(), item));
      break;
    }
    case ActionType::Transport: {
      for (int h : ag.hands) {
        state_.items[h] = {ItemLocation::Kind::AtBed, 0, -1, -1};
        for (auto& loc : state_.items) {
          if (loc.kind == ItemLocation::Kind::InContainer && loc.container == h) loc = {ItemLocation::Kind::AtBed, 0, -1, -1};
        }
      }
      ag.hands.clear();
      enter_room(agent, catalog_->bed_room().id);
      break;
    }
    case ActionType::SendMessage:
      for (std::size_t j = 0; j < state_.agents.size(); ++j) {
        if (static_cast<int>(j) != agent) state_.agents[j].inbox.push_back({ag.name, a.text, state_.frame});
      }
      break;
  }
}

std::vector<ActionResult> World::apply(const std::vector<Intent>& intents) {
  const std::size_t n = state_.agents.size();
  std::vector<ActionResult> results(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& ag = state_.agents[i];
    const Intent* intent = i < intents.size() ? &intents[i] : nullptr;
    if (ag.busy()) {
      if (intent && intent->action) {
        results[i] = {ActionResult::Status::Rejected, intent->action, "agent busy; send continue"};
      } else {
        results[i] = {ActionResult::Status::InProgress, ag.action, ""};
      }
      --ag.remaining;
    } else if (intent && intent->action) {
      const auto& a = *intent->action;
      if (auto reason = check_start(static_cast<int>(i), a); !reason.empty()) {
        results[i] = {ActionResult::Status::Rejected, a, reason};
      } else {
        ag.action = a;
        ag.remaining = frame_cost(static_cast<int>(i), a) - 1;
        results[i] = {ActionResult::Status::Started, a, ""};
      }
    }
  }
  // Completions commit in agent order; a lower index wins any grasp race.
  for (std::size_t i = 0; i < n; ++i) {
    auto& ag = state_.agents[i];
    if (!ag.action || ag.remaining > 0) continue;
    const AtomicAction a = *ag.action;
    ag.action.reset();
    ag.remaining = 0;
    if (auto reason = check_complete(static_cast<int>(i), a); !reason.empty()) {
      results[i] = {ActionResult::Status::Rejected, a, reason};
    } else {
      complete(static_cast<int>(i), a);
      results[i] = {ActionResult::Status::Completed, a, ""};
    }
  }
  ++state_.frame;
  return results;
}

HeldItem World::held_view(int item) const {
  HeldItem h{object_ref(item), {}};
  for (std::size_t i = 0; i < state_.items.size(); ++i) {
    const auto& loc = state_.items[i];
    if (loc.kind == ItemLocation::Kind::InContainer && loc.container == item) h.contents.push_back(object_ref(i));
  }
  std::sort(h.contents.begin(), h.contents.end());
  return h;
}

VisualObservation World::observe(int agent) const {
  const auto& ag = state_.agents[agent];
  VisualObservation obs;
  obs.agent = ag.name;
  obs.room = room_ref(ag.room);
  for (int h : ag.hands) obs.hands.push_back(held_view(h));
  const auto& levels = state_.exploration[agent];
  if (auto it = levels.find(ag.room); it != levels.end()) obs.level = it->second;
  for (std::size_t i = 0; i < state_.items.size(); ++i) {
    const auto& loc = state_.items[i];
    if (loc.kind == ItemLocation::Kind::Room && loc.room == ag.room && state_.revealed[agent][i]) {
      obs.items.push_back(object_ref(i));
    }
  }
  std::sort(obs.items.begin(), obs.items.end());
  for (std::size_t j = 0; j < state_.agents.size(); ++j) {
    const auto& other = state_.agents[j];
    if (static_cast<int>(j) == agent || other.room != ag.room) continue;
    AgentView v{other.name, room_ref(other.room), {}};
    for (int h : other.hands) v.hands.push_back(held_view(h));
    obs.others.push_back(std::move(v));
  }
  if (ag.room == catalog_->bed_room().id) {
    for (std::size_t i = 0; i < state_.items.size(); ++i) {
      if (state_.items[i].kind == ItemLocation::Kind::AtBed && scenario_->objects[i].kind == ObjectKind::Target) {
        obs.delivered.push_back(object_ref(i));
      }
    }
    std::sort(obs.delivered.begin(), obs.delivered.end());
  }
  return obs;
}

std::vector<Message> World::take_inbox(int agent) {
  std::vector<Message> out;
  out.swap(state_.agents[agent].inbox);
  return out;
}

int World::transported() const {
  int n = 0;
  for (std::size_t i = 0; i < state_.items.size(); ++i) {
    if (scenario_->objects[i].kind == ObjectKind::Target && state_.items[i].kind == ItemLocation::Kind::AtBed) ++n;
  }
  return n;
}

int World::total_targets() const { return scenario_->goal.total(); }

DoneStatus World::is_done() const {
  if (transported() == total_targets()) return {true, DoneStatus::Reason::Complete};
  if (state_.frame >= scenario_->frame_budget) return {true, DoneStatus::Reason::Timeout};
  return {};
}

std::vector<std::string> World::check_invariants() const {
  std::vector<std::string> errs;
  const auto& objs = scenario_->objects;
  const int n_agents = static_cast<int>(state_.agents.size());
  if (state_.items.size() != objs.size()) errs.emplace_back("item count changed");
  std::vector<int> held_count(state_.items.size(), 0);
  for (int a = 0; a < n_agents; ++a) {
    const auto& hands = state_.agents[a].hands;
    if (static_cast<int>(hands.size()) > kHandSlots) errs.push_back(state_.agents[a].name + " holds more than two items");
    int containers = 0;
    for (int h : hands) {
      if (h < 0 || h >= static_cast<int>(state_.items.size())) {
        errs.push_back("bad hand index");
        continue;
      }
      ++held_count[h];
      if (objs[h].kind == ObjectKind::Container) ++containers;
      const auto& loc = state_.items[h];
      if (loc.kind != ItemLocation::Kind::Held || loc.holder != a) {
        errs.push_back(sbl::to_string(objs[h].ref) + " in hands but location disagrees");
      }
    }
    if (containers > 1) errs.push_back(state_.agents[a].name + " holds more than one container");
  }
  for (std::size_t i = 0; i < state_.items.size(); ++i) {
    const auto& loc = state_.items[i];
    const std::string name = sbl::to_string(objs[i].ref);
    switch (loc.kind) {
      case ItemLocation::Kind::Room:
        if (!catalog_->room_by_id(loc.room)) errs.push_back(name + " in unknown room");
        if (held_count[i]) errs.push_back(name + " both in a room and in hands");
        break;
      case ItemLocation::Kind::Held:
        if (loc.holder < 0 || loc.holder >= n_agents || held_count[i] != 1) {
          errs.push_back(name + " held inconsistently");
        }
        break;
      case ItemLocation::Kind::InContainer:
        if (loc.container < 0 || loc.container >= static_cast<int>(objs.size()) ||
            objs[loc.container].kind != ObjectKind::Container || objs[i].kind != ObjectKind::Target) {
          errs.push_back(name + " inside a non-container");
        } else if (state_.items[loc.container].kind == ItemLocation::Kind::AtBed) {
          errs.push_back(name + " inside a delivered container");
        }
        if (held_count[i]) errs.push_back(name + " both in a container and in hands");
        break;
      case ItemLocation::Kind::AtBed:
        if (held_count[i]) errs.push_back(name + " both at bed and in hands");
        break;
    }
    if (objs[i].kind == ObjectKind::Container && contents_count(static_cast<int>(i)) > scenario_->container_capacity) {
      errs.push_back(name + " over capacity");
    }
  }
  if (state_.frame > scenario_->frame_budget) errs.emplace_back("frame beyond budget");
  return errs;
}

}  // namespace cobel
