#pragma once

// Scenario description for the transport environment and the read-only
// registry (Catalog) derived from it.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cobel/sbl.hpp"

namespace cobel {

using sbl::ObjectRef;

enum class ObjectKind : std::uint8_t { Target, Container };

struct RoomEdge {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  int frames = 100;
};

struct ObjectSpec {
  ObjectRef ref;
  ObjectKind kind = ObjectKind::Target;
  std::uint64_t room = 0;
};

struct AgentSpec {
  std::string name;
  std::uint64_t room = 0;
};

/// Transport every target to the bed. Counts are keyed by target name.
struct GoalSpec {
  std::map<std::string, int> target_counts;
  ObjectRef bed;

  int total() const;
  std::string describe() const;
};

struct Scenario {
  std::string name;
  std::vector<ObjectRef> rooms;
  std::vector<RoomEdge> edges;
  std::uint64_t bed_room = 0;
  std::vector<ObjectSpec> objects;
  std::vector<AgentSpec> agents;
  GoalSpec goal;
  int container_capacity = 3;
  int frame_budget = 3000;
  double reveal_fraction = 0.5;
};

inline constexpr int kContainerCapacity = 3;
inline constexpr int kHandSlots = 2;
inline constexpr std::size_t kMaxMessageChars = 500;

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Returns every violated invariant; empty means valid.
std::vector<std::string> validate(const Scenario& s);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// Keeps the first n listed agents, synthesizing extra ones when n exceeds
/// the file's list (names from a fixed pool, start rooms cycling).
Scenario with_agent_count(const Scenario& s, int n);

/// Lookup tables over a validated scenario: room graph distances, entity
/// kinds and the goal. Shared read-only by the simulator and all agents.
class Catalog {
 public:
  explicit Catalog(const Scenario& s);

  const std::vector<ObjectRef>& rooms() const { return rooms_; }  // ascending id
  const std::vector<std::string>& agents() const { return agents_; }
  const GoalSpec& goal() const { return goal_; }
  const ObjectRef& bed() const { return goal_.bed; }
  const ObjectRef& bed_room() const { return bed_room_; }

  bool is_room(const sbl::Term& t) const;
  bool is_target(const sbl::Term& t) const;
  bool is_container(const sbl::Term& t) const;
  bool is_bed(const sbl::Term& t) const { return t == goal_.bed; }
  bool is_agent(const sbl::Term& t) const;
  bool is_agent(const std::string& name) const;
  /// True for any entity the scenario registers (rooms, items, bed, agents).
  bool knows(const sbl::Term& t) const;

  std::optional<ObjectRef> room_by_id(std::uint64_t id) const;
  /// Shortest-path frame distance between rooms; 0 for the same room.
  int distance(const ObjectRef& from, const ObjectRef& to) const;

  const std::vector<ObjectRef>& targets() const { return targets_; }
  const std::vector<ObjectRef>& containers() const { return containers_; }

 private:
  std::size_t room_index(const ObjectRef& r) const;

  std::vector<ObjectRef> rooms_;
  std::vector<std::string> agents_;
  std::vector<ObjectRef> targets_;
  std::vector<ObjectRef> containers_;
  std::vector<std::vector<int>> dist_;
  GoalSpec goal_;
  ObjectRef bed_room_;
};

using CatalogPtr = std::shared_ptr<const Catalog>;

}  // namespace cobel
