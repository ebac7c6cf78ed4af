#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cobel/belief_store.hpp"
#include "cobel/rule_consensus.hpp"
#include "oracles.hpp"

using namespace cobel;
using namespace cobel::consensus;

namespace {

struct Fixture {
  Scenario scenario = load_scenario(oracle::data_dir() / "scenarios" / "food_small.json");
  CatalogPtr catalog = std::make_shared<Catalog>(scenario);
  reasoner::ScriptedReasoner alice{catalog};
  reasoner::ScriptedReasoner bob{catalog};
};

std::string missing_position_text() {
  std::ifstream in(oracle::fixture_dir() / "malformed" / "missing_position_rule.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Consensus, ScriptedPairAgreesOnCanonicalRulesInOneRound) {
  Fixture f;
  const auto res = consensus_loop(f.alice, f.bob, task_description(*f.catalog));
  EXPECT_EQ(res.rounds, 1);
  EXPECT_EQ(res.rules, canonical_rules());
}

TEST(Consensus, MissingPositionRuleIsRejected) {
  const auto text = missing_position_text();
  const auto proposal = read_proposal(text);
  EXPECT_EQ(proposal.all().size(), 15u);
  EXPECT_EQ(missing_coverage(proposal.all(), 0), std::vector<std::string>{"AT"});
  const auto review = scripted_review(text);
  EXPECT_FALSE(review.satisfied);
  EXPECT_NE(review.suggestions.find("position"), std::string::npos) << review.suggestions;
}

TEST(Consensus, RefineRestoresCoverage) {
  const auto fixed = scripted_refine(missing_position_text());
  EXPECT_TRUE(missing_coverage(fixed, 0).empty());
  EXPECT_TRUE(missing_coverage(fixed, 1).empty());
  RuleProposal p;
  for (const auto& r : fixed) (r.order() == 0 ? p.zero_rules : p.first_rules).push_back(r);
  EXPECT_TRUE(scripted_review(format_proposal(p)).satisfied);
}

TEST(Consensus, ProposalTextRoundTrip) {
  RuleProposal p;
  for (const auto& r : canonical_rules()) (r.order() == 0 ? p.zero_rules : p.first_rules).push_back(r);
  const auto back = read_proposal(format_proposal(p));
  EXPECT_EQ(back.zero_rules, p.zero_rules);
  EXPECT_EQ(back.first_rules, p.first_rules);
  EXPECT_TRUE(back.rejected_lines.empty());
}

TEST(Consensus, ReadRulesStripsNumberingAndKeepsBadLines) {
  std::vector<std::string> rejected;
  const auto rules = read_rules("1. ?agent BELIEVE ?object IN ?room\n- **?agent BELIEVE ?agent AT ?room**\n"
                                "3. ?agent BELIEVE ?object INSIDE\nplain prose line\n",
                                &rejected);
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(sbl::serialize(rules[1]), "?agent BELIEVE ?agent AT ?room");
  ASSERT_EQ(rejected.size(), 1u);
}

TEST(Consensus, DedupeKeepsFirstOccurrence) {
  auto rules = canonical_rules();
  rules.push_back(rules.front());
  EXPECT_EQ(dedupe(rules), canonical_rules());
}

namespace {

// Always proposes the same incomplete rule set and never repairs it.
class StubbornReasoner : public reasoner::Reasoner {
 public:
  reasoner::ReasonerResponse complete(const reasoner::ReasonerRequest& req) override {
    const auto& t = reasoner::get(req.id);
    std::string text;
    for (std::size_t i = 0; i < t.output_labels.size(); ++i) {
      text += reasoner::rendered_labels(t, req.vars)[i] + ": ";
      text += i == 0 ? "fine\n" : "?agent BELIEVE ?object IN ?room\n";
    }
    return reasoner::parse_sections(t, text, req.vars);
  }
};

}  // namespace

TEST(Consensus, FailureCarriesLastProposalAndReview) {
  Fixture f;
  StubbornReasoner stubborn;
  try {
    consensus_loop(stubborn, f.bob, task_description(*f.catalog), 2);
    FAIL();
  } catch (const ConsensusFailure& e) {
    ASSERT_TRUE(e.last_proposal());
    ASSERT_TRUE(e.last_review());
    EXPECT_FALSE(e.last_review()->satisfied);
  }
}
