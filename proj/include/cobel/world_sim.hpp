#pragma once

// Lockstep transport environment. Each apply() call advances the global
// frame by one; multi-frame actions commit their effects atomically on their
// final frame.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cobel/actions.hpp"
#include "cobel/scenario.hpp"

namespace cobel {

enum class Exploration : std::uint8_t { None = 0, Part = 1, All = 2 };
std::string_view to_string(Exploration e);

/// Frame costs per action.
namespace cost {
inline constexpr int kGoToPerHop = 100;  // default edge weight; actual edges may override
inline constexpr int kExplore = 50;
inline constexpr int kGrasp = 20;
inline constexpr int kPut = 10;
inline constexpr int kTransportDrop = 20;
inline constexpr int kSendMessage = 1;
}  // namespace cost

struct ItemLocation {
  enum class Kind : std::uint8_t { Room, Held, InContainer, AtBed };
  Kind kind = Kind::Room;
  std::uint64_t room = 0;     // Room
  int holder = -1;            // Held: agent index
  int container = -1;         // InContainer: object index

  friend bool operator==(const ItemLocation&, const ItemLocation&) = default;
};

struct Message {
  std::string sender;
  std::string text;
  int frame = 0;
  friend bool operator==(const Message&, const Message&) = default;
};

struct AgentState {
  std::string name;
  std::uint64_t room = 0;
  std::vector<int> hands;  // object indices, at most two
  std::optional<AtomicAction> action;
  int remaining = 0;
  std::vector<Message> inbox;

  bool busy() const { return action.has_value(); }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct WorldState {
  int frame = 0;
  std::vector<ItemLocation> items;                     // parallel to Scenario::objects
  std::vector<AgentState> agents;                      // parallel to Scenario::agents
  std::vector<std::vector<bool>> revealed;             // [agent][item]
  std::vector<std::vector<bool>> entry_reveal;         // [agent][item], seeded coin flips
  std::vector<std::map<std::uint64_t, Exploration>> exploration;  // [agent] room id -> level

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

/// `continue` for busy agents, or nothing for idling.
struct Intent {
  std::optional<AtomicAction> action;
  static Intent keep_going() { return {}; }
  static Intent start(AtomicAction a) { return {std::move(a)}; }
};

struct ActionResult {
  enum class Status : std::uint8_t { Idle, Started, InProgress, Completed, Rejected };
  Status status = Status::Idle;
  std::optional<AtomicAction> action;
  std::string reason;  // Rejected only
};
std::string_view to_string(ActionResult::Status s);

struct HeldItem {
  ObjectRef item;
  std::vector<ObjectRef> contents;
  friend bool operator==(const HeldItem&, const HeldItem&) = default;
};

struct AgentView {
  std::string name;
  ObjectRef room;
  std::vector<HeldItem> hands;
  friend bool operator==(const AgentView&, const AgentView&) = default;
};

/// What one agent sees this frame: only its own room.
struct VisualObservation {
  std::string agent;
  ObjectRef room;
  std::vector<HeldItem> hands;
  Exploration level = Exploration::None;
  std::vector<ObjectRef> items;      // revealed to this agent and lying in this room
  std::vector<AgentView> others;     // co-located agents
  std::vector<ObjectRef> delivered;  // targets on the bed, visible from the bed room
  friend bool operator==(const VisualObservation&, const VisualObservation&) = default;
};

struct DoneStatus {
  bool done = false;
  enum class Reason : std::uint8_t { Running, Complete, Timeout } reason = Reason::Running;
};

class World {
 public:
  /// Throws ScenarioError on an invalid scenario.
  World(Scenario scenario, std::uint64_t seed);

  const Scenario& scenario() const { return *scenario_; }
  const CatalogPtr& catalog() const { return catalog_; }
  const WorldState& state() const { return state_; }
  std::uint64_t seed() const { return seed_; }

  int agent_index(const std::string& name) const;
  const ObjectRef& object_ref(int item) const { return scenario_->objects[item].ref; }
  std::optional<int> item_index(const ObjectRef& ref) const;

  /// Frame cost of starting `a` for agent `agent` in the current state.
  int frame_cost(int agent, const AtomicAction& a) const;
  /// Empty when the agent may start `a` now, otherwise the rejection reason.
  std::string check_start(int agent, const AtomicAction& a) const;

  /// Advances one frame. `intents` is indexed by agent; missing entries idle.
  std::vector<ActionResult> apply(const std::vector<Intent>& intents);

  VisualObservation observe(int agent) const;
  std::vector<Message> take_inbox(int agent);

  DoneStatus is_done() const;
  int transported() const;
  int total_targets() const;

  /// Conservation and capacity checks; empty when the state is consistent.
  std::vector<std::string> check_invariants() const;

 private:
  void enter_room(int agent, std::uint64_t room);
  std::string check_complete(int agent, const AtomicAction& a) const;
  void complete(int agent, const AtomicAction& a);
  HeldItem held_view(int item) const;
  ObjectRef room_ref(std::uint64_t id) const;
  int contents_count(int container) const;

  std::shared_ptr<const Scenario> scenario_;
  CatalogPtr catalog_;
  std::uint64_t seed_;
  WorldState state_;
};

}  // namespace cobel
