#pragma once

// Per-agent collaboration loop: update beliefs from what the agent sees and
// hears, predict its own and its collaborators' plans, detect
// miscoordination, and choose between communicating and acting.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobel/actions.hpp"
#include "cobel/belief_store.hpp"
#include "cobel/episode_log.hpp"
#include "cobel/planning.hpp"
#include "cobel/reasoner.hpp"
#include "cobel/world_sim.hpp"

namespace cobel {

using Json = nlohmann::ordered_json;

enum class CommMode : std::uint8_t { Adaptive, Always, Never };
std::string_view to_string(CommMode m);
std::optional<CommMode> comm_mode_from_string(std::string_view s);

class CorruptObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MiscoordReport {
  std::vector<planning::Conflict> conflicts;
  MisalignmentReport misaligned;
  bool heavy = false;
};

/// A structured record for the episode log.
struct Event {
  std::string kind;
  Json payload;
  std::optional<std::string> belief_hash;  // set on decision records
};

/// Every reasoner call made during one engine operation, for logging.
using CallLog = std::vector<Event>;

/// Asserts what the observation shows into `zero`. Returns warnings for
/// facts the rules reject. Throws CorruptObservation for unknown entities.
std::vector<std::string> update_from_visual(BeliefWorld& w, const VisualObservation& obs);

struct MessageUpdate {
  std::map<std::string, std::optional<Plan>> declared;  // sender -> stated plan (nullopt = "None")
  std::vector<std::string> warnings;
};

MessageUpdate update_from_messages(BeliefWorld& w, const std::vector<Message>& inbox, reasoner::Reasoner& r,
                                   CallLog* calls = nullptr);

std::optional<Plan> predict_self(const BeliefWorld& w, reasoner::Reasoner& r, CallLog* calls = nullptr);

/// Up to three candidates from first[collab] only. `my_declared` is the plan
/// the owner last told the collaborator, if still current.
std::vector<Plan> predict_collaborator(const BeliefWorld& w, const std::string& collab, reasoner::Reasoner& r,
                                       const std::optional<Plan>& my_declared = std::nullopt,
                                       CallLog* calls = nullptr);

/// Mechanical conflict and misalignment check.
MiscoordReport detect_miscoordination(const Plan& mine, const std::vector<Plan>& theirs, const BeliefWorld& w,
                                      const std::string& collab);

/// detect_miscoordination plus the reasoner's heavy/not-heavy judgement.
MiscoordReport assess(const BeliefWorld& w, const std::string& collab, const Plan& mine,
                      const std::vector<Plan>& theirs, reasoner::Reasoner& r, CallLog* calls = nullptr);

std::string compose_message(const BeliefWorld& w, const std::vector<AtomicBelief>& facts,
                            const std::optional<Plan>& plan, reasoner::Reasoner& r, CallLog* calls = nullptr);

planning::NextStep next_action(const BeliefWorld& w, const Plan& plan, const std::vector<AtomicAction>& history,
                               reasoner::Reasoner& r, CallLog* calls = nullptr);

std::optional<Plan> replan(const BeliefWorld& w, const std::vector<Plan>& collab_plans, reasoner::Reasoner& r,
                           CallLog* calls = nullptr);

Json to_json(const MiscoordReport& r);
std::string belief_hash(const BeliefWorld& w);

struct AgentConfig {
  CommMode mode = CommMode::Adaptive;
  int cooldown = 1;         // decision ticks between messages (adaptive)
  int idle_recheck = 50;    // frames a done agent waits before re-deciding
  int declared_ttl = 300;   // frames a collaborator's stated plan stays trusted
};

struct Decision {
  enum class Kind : std::uint8_t { Act, Communicate, Wait };
  Kind kind = Kind::Wait;
  std::optional<AtomicAction> action;  // Act
  std::string message;                 // Communicate
  int wait_frames = 0;                 // Wait
  std::vector<Event> events;
};

class CollabAgent {
 public:
  CollabAgent(std::string name, std::vector<std::string> collaborators, std::vector<BeliefRule> rules,
              CatalogPtr catalog, reasoner::Reasoner& r, AgentConfig cfg = {});

  Decision decide(const VisualObservation& obs, const std::vector<Message>& inbox, int frame);
  /// Feedback for the agent's own physical or message action.
  std::vector<Event> on_result(const ActionResult& res);

  const std::string& name() const { return world_.owner(); }
  const BeliefWorld& world() const { return world_; }
  const std::optional<Plan>& plan() const { return plan_; }
  int tick() const { return tick_; }

 private:
  struct Declared {
    Plan plan;
    int frame = 0;
  };

  std::optional<AtomicAction> ensure_step(CallLog& log);
  std::vector<Plan> live_declared() const;

  BeliefWorld world_;
  CatalogPtr catalog_;
  reasoner::Reasoner& r_;
  AgentConfig cfg_;
  std::optional<Plan> plan_;
  std::vector<AtomicAction> history_;
  std::map<std::string, Declared> declared_;
  std::optional<Plan> told_;
  int tick_ = 0;
  bool in_tick_ = false;
  int last_comm_tick_ = -1000000;
};

}  // namespace cobel
