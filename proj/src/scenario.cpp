#include "cobel/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

namespace cobel {

namespace {

constexpr int kUnreachable = std::numeric_limits<int>::max() / 4;

const char* const kAgentNamePool[] = {"Alice", "Bob",   "Carol", "Dave", "Eve",   "Frank",
                                      "Grace", "Heidi", "Ivan",  "Judy", "Mallory", "Niaj"};

std::string join_lines(const std::vector<std::string>& v) {
  std::string out = "invalid scenario:";
  for (const auto& s : v) out += "\n  - " + s;
  return out;
}

}  // namespace

int GoalSpec::total() const {
  int n = 0;
  for (const auto& [name, count] : target_counts) n += count;
  return n;
}

std::string GoalSpec::describe() const {
  std::string out = "Transport " + std::to_string(total()) + " target objects to " + sbl::to_string(bed) + ":";
  bool first = true;
  for (const auto& [name, count] : target_counts) {
    out += first ? " " : ", ";
    out += std::to_string(count) + " " + name;
    first = false;
  }
  return out;
}

ScenarioError::ScenarioError(std::vector<std::string> violations)
    : std::runtime_error(join_lines(violations)), violations_(std::move(violations)) {}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> errs;
  if (s.rooms.empty()) errs.emplace_back("no rooms");
  std::set<std::uint64_t> ids;
  std::set<std::uint64_t> room_ids;
  for (const auto& r : s.rooms) {
    if (r.kind != sbl::TermKind::Object || !sbl::is_valid_object_name(r.name)) {
      errs.push_back("invalid room name '" + r.name + "'");
    }
    if (!ids.insert(r.id).second) errs.push_back("duplicate id " + std::to_string(r.id));
    room_ids.insert(r.id);
  }
  for (const auto& e : s.edges) {
    if (!room_ids.count(e.a) || !room_ids.count(e.b)) {
      errs.push_back("edge references unknown room " + std::to_string(e.a) + "-" + std::to_string(e.b));
    }
    if (e.frames < 1) errs.push_back("edge frames must be >= 1");
  }
  if (!room_ids.empty()) {
    // Connectivity by BFS over undirected edges.
    std::set<std::uint64_t> seen{*room_ids.begin()};
    std::vector<std::uint64_t> frontier{*room_ids.begin()};
    while (!frontier.empty()) {
      const auto cur = frontier.back();
      frontier.pop_back();
      for (const auto& e : s.edges) {
        for (auto [from, to] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
          if (from == cur && room_ids.count(to) && seen.insert(to).second) frontier.push_back(to);
        }
      }
    }
    if (seen.size() != room_ids.size()) errs.emplace_back("room graph is disconnected");
  }
  if (!room_ids.count(s.bed_room)) errs.emplace_back("bed room is not a listed room");
  if (!sbl::is_valid_object_name(s.goal.bed.name)) errs.emplace_back("invalid bed name");
  if (!ids.insert(s.goal.bed.id).second) errs.push_back("duplicate id " + std::to_string(s.goal.bed.id));

  std::map<std::string, int> target_counts;
  for (const auto& o : s.objects) {
    if (!sbl::is_valid_object_name(o.ref.name)) errs.push_back("invalid object name '" + o.ref.name + "'");
    if (!ids.insert(o.ref.id).second) errs.push_back("duplicate id " + std::to_string(o.ref.id));
    if (!room_ids.count(o.room)) errs.push_back("object " + sbl::to_string(o.ref) + " placed in unknown room");
    if (o.kind == ObjectKind::Target) ++target_counts[o.ref.name];
  }
  if (target_counts.empty()) errs.emplace_back("scenario has no target objects");
  if (target_counts != s.goal.target_counts) errs.emplace_back("goal target counts do not match placed targets");
  if (s.container_capacity != kContainerCapacity) {
    errs.push_back("container capacity must be " + std::to_string(kContainerCapacity));
  }
  if (s.agents.empty()) errs.emplace_back("no agents");
  std::set<std::string> names;
  for (const auto& a : s.agents) {
    if (!sbl::is_agent_name(a.name)) errs.push_back("invalid agent name '" + a.name + "'");
    if (!names.insert(a.name).second) errs.push_back("duplicate agent " + a.name);
    if (!room_ids.count(a.room)) errs.push_back("agent " + a.name + " starts in unknown room");
  }
  if (s.frame_budget < 1) errs.emplace_back("frame budget must be positive");
  if (!(s.reveal_fraction >= 0.0 && s.reveal_fraction <= 1.0)) errs.emplace_back("reveal_fraction outside [0,1]");
  return errs;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.name = j.value("name", "");
  for (const auto& r : j.at("rooms")) s.rooms.push_back(ObjectRef::object(r.at("name"), r.at("id")));
  for (const auto& e : j.at("edges")) s.edges.push_back({e.at("a"), e.at("b"), e.value("frames", 100)});
  const auto& bed = j.at("bed");
  s.goal.bed = ObjectRef::object(bed.at("name"), bed.at("id"));
  s.bed_room = bed.at("room");
  for (const auto& o : j.at("objects")) {
    const std::string kind = o.at("kind");
    if (kind != "target" && kind != "container") throw ScenarioError({"unknown object kind '" + kind + "'"});
    s.objects.push_back({ObjectRef::object(o.at("name"), o.at("id")),
                         kind == "target" ? ObjectKind::Target : ObjectKind::Container, o.at("room")});
  }
  for (const auto& a : j.at("agents")) s.agents.push_back({a.at("name"), a.at("room")});
  for (const auto& [name, count] : j.at("goal").at("targets").items()) s.goal.target_counts[name] = count;
  s.container_capacity = j.value("container_capacity", kContainerCapacity);
  s.frame_budget = j.value("frame_budget", 3000);
  s.reveal_fraction = j.value("reveal_fraction", 0.5);
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["rooms"] = nlohmann::ordered_json::array();
  for (const auto& r : s.rooms) j["rooms"].push_back({{"name", r.name}, {"id", r.id}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : s.edges) j["edges"].push_back({{"a", e.a}, {"b", e.b}, {"frames", e.frames}});
  j["bed"] = {{"name", s.goal.bed.name}, {"id", s.goal.bed.id}, {"room", s.bed_room}};
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : s.objects) {
    j["objects"].push_back({{"name", o.ref.name},
                            {"id", o.ref.id},
                            {"kind", o.kind == ObjectKind::Target ? "target" : "container"},
                            {"room", o.room}});
  }
  j["agents"] = nlohmann::ordered_json::array();
  for (const auto& a : s.agents) j["agents"].push_back({{"name", a.name}, {"room", a.room}});
  j["goal"]["targets"] = s.goal.target_counts;
  j["container_capacity"] = s.container_capacity;
  j["frame_budget"] = s.frame_budget;
  j["reveal_fraction"] = s.reveal_fraction;
  return nlohmann::json::parse(j.dump());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({"cannot open scenario file " + path.string()});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError({path.string() + ": " + e.what()});
  }
  Scenario s;
  try {
    s = scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError({path.string() + ": " + e.what()});
  }
  if (auto errs = validate(s); !errs.empty()) throw ScenarioError(std::move(errs));
  return s;
}

Scenario with_agent_count(const Scenario& s, int n) {
  if (n < 1) throw ScenarioError({"agent count must be >= 1"});
  if (s.agents.empty()) throw ScenarioError({"no agents"});
  Scenario out = s;
  out.agents.clear();
  std::set<std::string> used;
  for (int i = 0; i < n && i < static_cast<int>(s.agents.size()); ++i) {
    out.agents.push_back(s.agents[i]);
    used.insert(s.agents[i].name);
  }
  std::size_t pool = 0;
  std::size_t suffix = 0;
  while (static_cast<int>(out.agents.size()) < n) {
    std::string name;
    while (name.empty() || used.count(name)) {
      if (pool < std::size(kAgentNamePool)) {
        name = kAgentNamePool[pool++];
      } else {
        name = "Agent" + std::to_string(suffix++);
      }
    }
    used.insert(name);
    const auto& proto = s.agents[out.agents.size() % s.agents.size()];
    out.agents.push_back({name, proto.room});
  }
  return out;
}

Catalog::Catalog(const Scenario& s) : goal_(s.goal) {
  rooms_ = s.rooms;
  std::sort(rooms_.begin(), rooms_.end(), [](const ObjectRef& a, const ObjectRef& b) { return a.id < b.id; });
  for (const auto& a : s.agents) agents_.push_back(a.name);
  for (const auto& o : s.objects) (o.kind == ObjectKind::Target ? targets_ : containers_).push_back(o.ref);
  std::sort(targets_.begin(), targets_.end());
  std::sort(containers_.begin(), containers_.end());

  const std::size_t n = rooms_.size();
  dist_.assign(n, std::vector<int>(n, kUnreachable));
  for (std::size_t i = 0; i < n; ++i) dist_[i][i] = 0;
  auto idx = [&](std::uint64_t id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < n; ++i) {
      if (rooms_[i].id == id) return i;
    }
    return std::nullopt;
  };
  for (const auto& e : s.edges) {
    auto a = idx(e.a);
    auto b = idx(e.b);
    if (!a || !b) continue;
    dist_[*a][*b] = std::min(dist_[*a][*b], e.frames);
    dist_[*b][*a] = std::min(dist_[*b][*a], e.frames);
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist_[i][j] = std::min(dist_[i][j], dist_[i][k] + dist_[k][j]);
    }
  }
  if (auto r = idx(s.bed_room)) bed_room_ = rooms_[*r];
}

bool Catalog::is_room(const sbl::Term& t) const {
  return t.kind == sbl::TermKind::Object && std::binary_search(rooms_.begin(), rooms_.end(), t,
                                                               [](const ObjectRef& a, const ObjectRef& b) {
                                                                 return a.id < b.id || (a.id == b.id && a < b);
                                                               });
}

bool Catalog::is_target(const sbl::Term& t) const { return std::binary_search(targets_.begin(), targets_.end(), t); }

bool Catalog::is_container(const sbl::Term& t) const {
  return std::binary_search(containers_.begin(), containers_.end(), t);
}

bool Catalog::is_agent(const sbl::Term& t) const { return t.kind == sbl::TermKind::Agent && is_agent(t.name); }

bool Catalog::is_agent(const std::string& name) const {
  return std::find(agents_.begin(), agents_.end(), name) != agents_.end();
}

bool Catalog::knows(const sbl::Term& t) const {
  return is_room(t) || is_target(t) || is_container(t) || is_bed(t) || is_agent(t);
}

std::optional<ObjectRef> Catalog::room_by_id(std::uint64_t id) const {
  for (const auto& r : rooms_) {
    if (r.id == id) return r;
  }
  return std::nullopt;
}

std::size_t Catalog::room_index(const ObjectRef& r) const {
  for (std::size_t i = 0; i < rooms_.size(); ++i) {
    if (rooms_[i] == r) return i;
  }
  throw std::out_of_range("unknown room " + sbl::to_string(r));
}

int Catalog::distance(const ObjectRef& from, const ObjectRef& to) const {
  return dist_[room_index(from)][room_index(to)];
}

}  // namespace cobel
