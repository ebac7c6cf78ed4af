#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cobel/sbl.hpp"

namespace cobel {

using sbl::ObjectRef;

enum class ActionType : std::uint8_t { GoTo, ExploreCurrent, GoGrasp, Put, Transport, SendMessage };

struct AtomicAction {
  ActionType type = ActionType::Transport;
  ObjectRef target;     // room for GoTo/ExploreCurrent, item for GoGrasp/Put
  ObjectRef container;  // Put only
  std::string text;     // SendMessage only

  static AtomicAction go_to(ObjectRef room) { return {ActionType::GoTo, std::move(room), {}, {}}; }
  static AtomicAction explore(ObjectRef room) { return {ActionType::ExploreCurrent, std::move(room), {}, {}}; }
  static AtomicAction grasp(ObjectRef item) { return {ActionType::GoGrasp, std::move(item), {}, {}}; }
  static AtomicAction put(ObjectRef item, ObjectRef container) {
    return {ActionType::Put, std::move(item), std::move(container), {}};
  }
  static AtomicAction transport() { return {ActionType::Transport, {}, {}, {}}; }
  static AtomicAction send(std::string text) { return {ActionType::SendMessage, {}, {}, std::move(text)}; }

  friend bool operator==(const AtomicAction&, const AtomicAction&) = default;
};

/// Verb form used in messages and prompts: `go to <r>(1)`, `explore current room <r>(1)`,
/// `go grasp <x>(2)`, `put <x>(2) <c>(3)`, `transport`, `send message: ...`.
std::string to_text(const AtomicAction& a);
std::string_view type_name(ActionType t);

/// 1 to 3 physical steps; never contains SendMessage.
struct Plan {
  std::vector<AtomicAction> steps;

  bool valid() const;
  friend bool operator==(const Plan&, const Plan&) = default;
};

inline constexpr std::size_t kMaxPlanSteps = 3;

std::string to_text(const Plan& p);

/// Extracts actions from free text in the order their verbs appear.
/// Tolerates numbering, commas, `into`, and `<name> (id)` spacing.
std::vector<AtomicAction> parse_actions(std::string_view text);
/// Parses a plan; nullopt for `None`, empty text, or an invalid step list.
std::optional<Plan> parse_plan(std::string_view text);

}  // namespace cobel
