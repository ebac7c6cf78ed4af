#include "cobel/actions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace cobel {

namespace {

struct Verb {
  std::string_view text;
  ActionType type;
};

// Longest phrases first so prefixes do not shadow them.
constexpr Verb kVerbs[] = {
    {"explore current room", ActionType::ExploreCurrent},
    {"go to grasp", ActionType::GoGrasp},
    {"go grasp", ActionType::GoGrasp},
    {"go to", ActionType::GoTo},
    {"explore", ActionType::ExploreCurrent},
    {"grasp", ActionType::GoGrasp},
    {"transport", ActionType::Transport},
    {"put", ActionType::Put},
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<ObjectRef> object_refs(std::string_view s) {
  std::vector<ObjectRef> out;
  std::size_t i = 0;
  while ((i = s.find('<', i)) != std::string_view::npos) {
    const std::size_t close = s.find('>', i + 1);
    if (close == std::string_view::npos) break;
    const std::string_view name = s.substr(i + 1, close - i - 1);
    std::size_t j = close + 1;
    while (j < s.size() && s[j] == ' ') ++j;
    if (j < s.size() && s[j] == '(' && sbl::is_valid_object_name(name)) {
      std::size_t k = j + 1;
      while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
      std::uint64_t id = 0;
      if (k > j + 1 && k < s.size() && s[k] == ')' &&
          std::from_chars(s.data() + j + 1, s.data() + k, id).ec == std::errc{}) {
        out.push_back(ObjectRef::object(std::string(name), id));
        i = k + 1;
        continue;
      }
    }
    i = close + 1;
  }
  return out;
}

}  // namespace

std::string_view type_name(ActionType t) {
  switch (t) {
    case ActionType::GoTo: return "go_to";
    case ActionType::ExploreCurrent: return "explore";
    case ActionType::GoGrasp: return "grasp";
    case ActionType::Put: return "put";
    case ActionType::Transport: return "transport";
    case ActionType::SendMessage: return "send_message";
  }
  return "unknown";
}

std::string to_text(const AtomicAction& a) {
  switch (a.type) {
    case ActionType::GoTo: return "go to " + sbl::to_string(a.target);
    case ActionType::ExploreCurrent: return "explore current room " + sbl::to_string(a.target);
    case ActionType::GoGrasp: return "go grasp " + sbl::to_string(a.target);
    case ActionType::Put: return "put " + sbl::to_string(a.target) + " " + sbl::to_string(a.container);
    case ActionType::Transport: return "transport";
    case ActionType::SendMessage: return "send message: " + a.text;
  }
  return {};
}

bool Plan::valid() const {
  return !steps.empty() && steps.size() <= kMaxPlanSteps &&
         std::none_of(steps.begin(), steps.end(),
                      [](const AtomicAction& a) { return a.type == ActionType::SendMessage; });
}

std::string to_text(const Plan& p) {
  std::string out;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    if (i) out += "; ";
    out += to_text(p.steps[i]);
  }
  return out;
}

std::vector<AtomicAction> parse_actions(std::string_view text) {
  const std::string low = lower(text);
  struct Hit {
    std::size_t begin;
    std::size_t end;
    ActionType type;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < low.size();) {
    bool matched = false;
    if (i == 0 || !is_word_char(low[i - 1])) {
      for (const auto& v : kVerbs) {
        const std::size_t end = i + v.text.size();
        if (low.compare(i, v.text.size(), v.text) == 0 && (end >= low.size() || !is_word_char(low[end]))) {
          hits.push_back({i, end, v.type});
          i = end;
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }

  std::vector<AtomicAction> out;
  for (std::size_t h = 0; h < hits.size(); ++h) {
    const std::size_t seg_end = h + 1 < hits.size() ? hits[h + 1].begin : text.size();
    const auto refs = object_refs(text.substr(hits[h].end, seg_end - hits[h].end));
    switch (hits[h].type) {
      case ActionType::Transport:
        out.push_back(AtomicAction::transport());
        break;
      case ActionType::Put:
        if (refs.size() >= 2) out.push_back(AtomicAction::put(refs[0], refs[1]));
        break;
      case ActionType::GoTo:
        if (!refs.empty()) out.push_back(AtomicAction::go_to(refs[0]));
        break;
      case ActionType::ExploreCurrent:
        if (!refs.empty()) out.push_back(AtomicAction::explore(refs[0]));
        break;
      case ActionType::GoGrasp:
        if (!refs.empty()) out.push_back(AtomicAction::grasp(refs[0]));
        break;
      case ActionType::SendMessage:
        break;
    }
  }
  return out;
}

std::optional<Plan> parse_plan(std::string_view text) {
  Plan p{parse_actions(text)};
  if (!p.valid()) return std::nullopt;
  return p;
}

}  // namespace cobel
