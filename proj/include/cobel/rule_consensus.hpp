#pragma once

// Propose-and-revise construction of the belief rules agents store facts under.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cobel/reasoner.hpp"
#include "cobel/sbl.hpp"

namespace cobel::consensus {

using sbl::BeliefRule;

struct RuleProposal {
  std::string reasoning;
  std::vector<BeliefRule> zero_rules;
  std::vector<BeliefRule> first_rules;
  std::vector<std::string> rejected_lines;  // rule-looking lines that failed to parse

  std::vector<BeliefRule> all() const;
};

struct Review {
  std::string reasoning;
  std::string suggestions;
  bool satisfied = false;
};

struct ConsensusResult {
  std::vector<BeliefRule> rules;  // duplicate-free, zero-order first
  int rounds = 0;
};

class ConsensusFailure : public std::runtime_error {
 public:
  ConsensusFailure(std::string message, std::optional<RuleProposal> proposal, std::optional<Review> review,
                   std::string raw = {});
  const std::optional<RuleProposal>& last_proposal() const { return proposal_; }
  const std::optional<Review>& last_review() const { return review_; }
  const std::string& raw() const { return raw_; }

 private:
  std::optional<RuleProposal> proposal_;
  std::optional<Review> review_;
  std::string raw_;
};

/// Description of the belief language handed to both participants.
std::string belief_language();
/// Task description for a scenario's goal.
std::string task_description(const Catalog& catalog);

/// Rules found in free text: every line mentioning BELIEVE, with labels,
/// numbering and bullets stripped. Lines that do not parse as rules land in
/// `rejected` (when given).
std::vector<BeliefRule> read_rules(std::string_view text, std::vector<std::string>* rejected = nullptr);
RuleProposal read_proposal(std::string_view text);
/// `Zero order belief rules:` / `First order belief rules:` blocks.
std::string format_proposal(const RuleProposal& p);
std::vector<BeliefRule> dedupe(const std::vector<BeliefRule>& rules);

/// Relations every order must cover: AT (position), HOLD, EXPLORED, IN, CONTAIN.
std::vector<std::string> missing_coverage(const std::vector<BeliefRule>& rules, int order);

/// Reviewer checks used by the scripted backend: parse, duplicates, coverage.
Review scripted_review(std::string_view proposal_text);
/// Proposer fix-up used by the scripted backend: drop duplicates, add
/// canonical rules for uncovered relations.
std::vector<BeliefRule> scripted_refine(std::string_view previous_text);

struct Participants {
  std::string proposer = "Alice";
  std::string reviewer = "Bob";
};

RuleProposal propose_rules(reasoner::Reasoner& r, const std::string& task_description,
                           const Participants& who = {});
Review review_rules(reasoner::Reasoner& r, const RuleProposal& proposal, const std::string& task_description,
                    const Participants& who = {});
RuleProposal refine_rules(reasoner::Reasoner& r, const RuleProposal& previous, const Review& review,
                          const std::string& task_description, const Participants& who = {});

/// propose -> review -> (refine -> review)...; throws ConsensusFailure when
/// no proposal is accepted within max_rounds reviews.
ConsensusResult consensus_loop(reasoner::Reasoner& proposer, reasoner::Reasoner& reviewer,
                               const std::string& task_description, int max_rounds = 3,
                               const Participants& who = {});

}  // namespace cobel::consensus
