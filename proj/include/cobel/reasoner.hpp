#pragma once

// Backend-agnostic reasoning calls. Every collaboration step is phrased as a
// prompt template plus `$VAR$` values; a backend answers with labeled
// sections. The scripted backend answers deterministically from the vars.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cobel/actions.hpp"
#include "cobel/belief_store.hpp"
#include "cobel/scenario.hpp"

namespace cobel::embedded {
const std::vector<std::pair<std::string_view, std::string_view>>& templates();
}

namespace cobel::reasoner {

enum class TemplateId : std::uint8_t {
  RulesPropose,
  RulesRefine,
  RulesReview,
  UpdateFirst,
  UpdateZero,
  PredictFirst,
  PredictZero,
  Adaptive,
  Communicate,
  PlanNext,
  Replan,
};

inline constexpr std::array<TemplateId, 11> kAllTemplates = {
    TemplateId::RulesPropose, TemplateId::RulesRefine, TemplateId::RulesReview, TemplateId::UpdateFirst,
    TemplateId::UpdateZero,   TemplateId::PredictFirst, TemplateId::PredictZero, TemplateId::Adaptive,
    TemplateId::Communicate,  TemplateId::PlanNext,    TemplateId::Replan,
};

std::string_view name(TemplateId id);
std::optional<TemplateId> template_from_name(std::string_view name);

struct PromptTemplate {
  TemplateId id;
  std::string name;
  std::string text;
  std::vector<std::string> required_vars;  // every $VAR$ in text, first-occurrence order
  std::vector<std::string> output_labels;  // may themselves contain $VAR$s
};

const PromptTemplate& get(TemplateId id);

using Vars = std::map<std::string, std::string>;

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Substitutes every `$VAR$`; throws RenderError("unbound NAME").
std::string render(const PromptTemplate& t, const Vars& vars);
/// Labels with the vars that are present substituted.
std::vector<std::string> rendered_labels(const PromptTemplate& t, const Vars& vars);

/// Which template a rendered prompt came from (by its literal text chunks).
std::optional<TemplateId> identify(std::string_view prompt);

enum class Backend : std::uint8_t { Scripted, Llm };
std::string_view to_string(Backend b);

struct ReasonerRequest {
  TemplateId id = TemplateId::PredictZero;
  Vars vars;
  int retry_budget = 1;
};

struct ReasonerResponse {
  std::vector<std::pair<std::string, std::string>> sections;  // in label order
  std::string raw;
  Backend backend = Backend::Scripted;
  bool fallback_used = false;
  std::vector<std::string> notes;  // failed attempts, HTTP errors

  /// Section text by position in the template's label list.
  const std::string& section(std::size_t i) const { return sections.at(i).second; }
};

class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(std::string message, std::string missing_label);
  const std::string& missing_label() const { return missing_label_; }

 private:
  std::string missing_label_;
};

/// Case-insensitive label matching at line starts; tolerates `:` spacing and
/// leading `{ * # -` decoration. Every label must appear, in order.
ReasonerResponse parse_sections(const PromptTemplate& t, std::string_view text, const Vars& vars = {});

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual ReasonerResponse complete(const ReasonerRequest& req) = 0;
};

/// Throws RenderError if `req` misses a required var.
void check_vars(const ReasonerRequest& req);

/// Deterministic backend: parses the vars and answers with the planning heuristics.
class ScriptedReasoner : public Reasoner {
 public:
  explicit ScriptedReasoner(CatalogPtr catalog);
  ReasonerResponse complete(const ReasonerRequest& req) override;
  /// The raw answer text for a request.
  std::string answer(const ReasonerRequest& req) const;

 private:
  CatalogPtr catalog_;
};

// Var encodings shared by the engine and the scripted backend.

/// One full belief expression per line; "None" when empty.
std::string format_beliefs(const BeliefWorld& w, const Partition& p);
std::string format_facts(const std::vector<AtomicBelief>& facts, std::string_view sep = "; ");
/// Reads facts back from free text: lines or `;`-separated items, either full
/// expressions or bare atoms. Items that do not parse are skipped.
std::vector<AtomicBelief> read_facts(std::string_view text);
std::string format_plan(const std::optional<Plan>& p);
/// `plan1: ...` lines; "None" when empty.
std::string format_plans(const std::vector<Plan>& plans);
/// Plans from lines, optional `planN:` prefixes, "None" lines skipped.
std::vector<Plan> read_plans(std::string_view text);
/// True for empty text or a bare "None"/"none"/"N/A".
bool is_none(std::string_view text);

inline constexpr std::string_view kSubplanDone = "SUBPLAN DONE";
inline constexpr std::string_view kStalePlan = "STALE PLAN";

}  // namespace cobel::reasoner
