#include "cobel/rule_consensus.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "cobel/belief_store.hpp"

namespace cobel::consensus {

namespace {

using reasoner::ParseFailure;
using reasoner::ReasonerRequest;
using reasoner::ReasonerResponse;
using reasoner::TemplateId;

struct Coverage {
  const char* relation;
  const char* what;
};

constexpr Coverage kCoverage[] = {
    {rel::kAt, "the agent's belief about its position"},
    {rel::kHold, "what an agent holds"},
    {rel::kExplored, "room exploration state"},
    {rel::kIn, "object locations"},
    {rel::kContain, "container contents"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool covers(const BeliefRule& r, const char* relation) {
  if (r.body.relation != relation) return false;
  if (std::string_view(relation) == rel::kAt) {
    return r.body.subject.is_variable() && r.body.subject.name.find("agent") != std::string::npos;
  }
  return true;
}

std::string strip_decoration(std::string line) {
  line = trim(line);
  const auto colon = line.find(':');
  if (colon != std::string::npos && line.find("BELIEVE") > colon) line = trim(line.substr(colon + 1));
  std::size_t i = 0;
  while (i < line.size() && (std::isdigit(static_cast<unsigned char>(line[i])) || line[i] == '.' || line[i] == ')' ||
                             line[i] == '-' || line[i] == '*' || line[i] == '`' || line[i] == ' ')) {
    ++i;
  }
  line = trim(line.substr(i));
  while (!line.empty() && std::string_view(";,.*` ").find(line.back()) != std::string_view::npos) line.pop_back();
  return line;
}

ReasonerResponse call(reasoner::Reasoner& r, const ReasonerRequest& req) {
  try {
    return r.complete(req);
  } catch (const ParseFailure&) {
  }
  try {
    return r.complete(req);
  } catch (const ParseFailure& e) {
    throw ConsensusFailure(std::string("unparseable ") + std::string(reasoner::name(req.id)) + " output: " + e.what(),
                           std::nullopt, std::nullopt, e.what());
  }
}

std::string rules_text(const std::vector<BeliefRule>& rules) {
  std::string out;
  for (const auto& r : rules) out += (out.empty() ? "" : "\n") + sbl::serialize(r);
  return out;
}

bool yes(std::string_view s) {
  const std::string t = trim(s);
  std::string low;
  for (char c : t) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return low.rfind("yes", 0) == 0 || low.rfind("satisfied", 0) == 0;
}

}  // namespace

std::vector<BeliefRule> RuleProposal::all() const {
  std::vector<BeliefRule> out = zero_rules;
  out.insert(out.end(), first_rules.begin(), first_rules.end());
  return out;
}

ConsensusFailure::ConsensusFailure(std::string message, std::optional<RuleProposal> proposal,
                                   std::optional<Review> review, std::string raw)
    : std::runtime_error(std::move(message)),
      proposal_(std::move(proposal)),
      review_(std::move(review)),
      raw_(std::move(raw)) {}

std::string belief_language() {
  return "A belief is written `believer BELIEVE subject RELATION object`. A first-order belief nests one more "
         "believer: `A BELIEVE B BELIEVE subject RELATION object`. Agents are capitalized names, other entities "
         "are written <name>(id), variables are written ?name. Relations: IN, AT, HOLD, CONTAIN (entity on the "
         "right) and EXPLORED (state none, part or all on the right).";
}

std::string task_description(const Catalog& catalog) {
  std::string rooms;
  for (const auto& r : catalog.rooms()) rooms += (rooms.empty() ? "" : ", ") + sbl::to_string(r);
  return catalog.goal().describe() + ". Rooms: " + rooms + ". Agents hold at most two things; a container holds "
         "up to three objects. Rooms are explored none, part or all.";
}

std::vector<BeliefRule> read_rules(std::string_view text, std::vector<std::string>* rejected) {
  std::vector<BeliefRule> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (line.find("BELIEVE") == std::string::npos) continue;
    const std::string cleaned = strip_decoration(line);
    auto e = sbl::try_parse(cleaned);
    if (e && e->is_rule()) {
      out.push_back(*e);
    } else if (rejected) {
      rejected->push_back(trim(line));
    }
  }
  return out;
}

RuleProposal read_proposal(std::string_view text) {
  RuleProposal p;
  for (auto& r : read_rules(text, &p.rejected_lines)) {
    (r.order() == 0 ? p.zero_rules : p.first_rules).push_back(std::move(r));
  }
  return p;
}

std::string format_proposal(const RuleProposal& p) {
  std::string out = "Zero order belief rules:";
  for (const auto& r : p.zero_rules) out += "\n" + sbl::serialize(r);
  out += "\nFirst order belief rules:";
  for (const auto& r : p.first_rules) out += "\n" + sbl::serialize(r);
  for (const auto& l : p.rejected_lines) out += "\n" + l;
  return out;
}

std::vector<BeliefRule> dedupe(const std::vector<BeliefRule>& rules) {
  std::vector<BeliefRule> out;
  std::set<std::string> seen;
  for (int order = 0; order <= 1; ++order) {
    for (const auto& r : rules) {
      if (r.order() == order && seen.insert(sbl::serialize(r)).second) out.push_back(r);
    }
  }
  return out;
}

std::vector<std::string> missing_coverage(const std::vector<BeliefRule>& rules, int order) {
  std::vector<std::string> out;
  for (const auto& c : kCoverage) {
    const bool ok = std::any_of(rules.begin(), rules.end(),
                                [&](const BeliefRule& r) { return r.order() == order && covers(r, c.relation); });
    if (!ok) out.push_back(c.relation);
  }
  return out;
}

Review scripted_review(std::string_view proposal_text) {
  const RuleProposal p = read_proposal(proposal_text);
  const auto rules = p.all();
  Review rv;
  std::vector<std::string> advice;
  for (const auto& l : p.rejected_lines) advice.push_back("Formatting error, not a belief rule: " + l);

  std::set<std::string> seen;
  for (const auto& r : rules) {
    const auto s = sbl::serialize(r);
    if (!seen.insert(s).second) advice.push_back("Delete the repeated rule: " + s);
  }
  for (int order = 0; order <= 1; ++order) {
    for (const auto& relation : missing_coverage(rules, order)) {
      const auto* c = std::find_if(std::begin(kCoverage), std::end(kCoverage),
                                   [&](const Coverage& k) { return relation == k.relation; });
      std::string example;
      for (const auto& r : canonical_rules()) {
        if (r.order() == order && covers(r, c->relation)) {
          example = sbl::serialize(r);
          break;
        }
      }
      advice.push_back(std::string(order == 0 ? "Zero" : "First") + "-order rules omit " + c->what + ": add " +
                       example);
    }
  }
  rv.satisfied = advice.empty();
  rv.reasoning = std::to_string(p.zero_rules.size()) + " zero-order and " + std::to_string(p.first_rules.size()) +
                 " first-order rules checked for format, repeats and coverage.";
  for (const auto& a : advice) rv.suggestions += (rv.suggestions.empty() ? "" : " ") + a + ".";
  return rv;
}

std::vector<BeliefRule> scripted_refine(std::string_view previous_text) {
  auto rules = dedupe(read_proposal(previous_text).all());
  for (int order = 0; order <= 1; ++order) {
    for (const auto& relation : missing_coverage(rules, order)) {
      for (const auto& r : canonical_rules()) {
        if (r.order() == order && covers(r, relation.c_str())) rules.push_back(r);
      }
    }
  }
  return dedupe(rules);
}

RuleProposal propose_rules(reasoner::Reasoner& r, const std::string& task, const Participants& who) {
  ReasonerRequest req{TemplateId::RulesPropose,
                      {{"AGENT_NAME", who.proposer},
                       {"OPPO_NAME", who.reviewer},
                       {"BELIEF_LANGUAGE", belief_language()},
                       {"TASK_DESCRIPTION", task}}};
  const auto resp = call(r, req);
  RuleProposal p = read_proposal(resp.section(1) + "\n" + resp.section(2));
  p.reasoning = resp.section(0);
  return p;
}

Review review_rules(reasoner::Reasoner& r, const RuleProposal& proposal, const std::string& task,
                    const Participants& who) {
  ReasonerRequest req{TemplateId::RulesReview,
                      {{"AGENT_NAME", who.reviewer},
                       {"OPPO_NAME", who.proposer},
                       {"BELIEF_LANGUAGE", belief_language()},
                       {"TASK_DESCRIPTION", task},
                       {"PROPOSAL_CONTENT", format_proposal(proposal)}}};
  const auto resp = call(r, req);
  Review rv{resp.section(0), resp.section(1), yes(resp.section(2))};
  if (reasoner::is_none(rv.suggestions)) rv.suggestions.clear();
  if (!rv.satisfied && rv.suggestions.empty()) rv.suggestions = "Revise the rules.";
  return rv;
}

RuleProposal refine_rules(reasoner::Reasoner& r, const RuleProposal& previous, const Review& review,
                          const std::string& task, const Participants& who) {
  ReasonerRequest req{TemplateId::RulesRefine,
                      {{"AGENT_NAME", who.proposer},
                       {"OPPO_NAME", who.reviewer},
                       {"BELIEF_LANGUAGE", belief_language()},
                       {"TASK_DESCRIPTION", task},
                       {"PREVIOUS_CONTENT", format_proposal(previous)},
                       {"SUGGESTIONS", review.suggestions}}};
  const auto resp = call(r, req);
  RuleProposal p = read_proposal(resp.section(1) + "\n" + resp.section(2));
  p.reasoning = resp.section(0);
  return p;
}

ConsensusResult consensus_loop(reasoner::Reasoner& proposer, reasoner::Reasoner& reviewer, const std::string& task,
                               int max_rounds, const Participants& who) {
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  RuleProposal p = propose_rules(proposer, task, who);
  for (int round = 1;; ++round) {
    Review rv = review_rules(reviewer, p, task, who);
    if (rv.satisfied) return {dedupe(p.all()), round};
    if (round >= max_rounds) {
      throw ConsensusFailure("no consensus after " + std::to_string(round) + " rounds", p, rv, rules_text(p.all()));
    }
    p = refine_rules(proposer, p, rv, task, who);
  }
}

}  // namespace cobel::consensus
