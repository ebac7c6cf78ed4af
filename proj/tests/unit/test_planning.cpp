#include <gtest/gtest.h>

#include "cobel/collab_engine.hpp"
#include "cobel/planning.hpp"
#include "oracles.hpp"

using namespace cobel;
using sbl::Term;

namespace {

struct Fixture {
  Scenario scenario = oracle::conflict_universe();
  Catalog catalog{scenario};
  Term kitchen = Term::object("kitchen", 1);
  Term office = Term::object("office", 2);
  Term apple = Term::object("apple", 3);
  Term pen = Term::object("pen", 4);
  Term plate = Term::object("plate", 5);
  Term alice = Term::agent("Alice");
  std::vector<Plan> all = oracle::enumerate_plans({kitchen, office}, {apple, pen}, plate);
};

}  // namespace

TEST(Planning, EnumerationSize) {
  Fixture f;
  EXPECT_EQ(f.all.size(), 10u + 100u + 1000u);
}

TEST(Planning, IntentsFollowGoTo) {
  Fixture f;
  const Plan p{{AtomicAction::go_to(f.office), AtomicAction::go_to(f.office), AtomicAction::grasp(f.pen)}};
  const auto in = planning::intents(p, f.catalog);
  ASSERT_EQ(in.size(), 3u);
  for (const auto& x : in) {
    ASSERT_TRUE(x);
    EXPECT_EQ(x->kind, planning::ConflictKind::SameGraspTarget);
    EXPECT_EQ(x->entity, f.pen);
  }
  const Plan q{{AtomicAction::go_to(f.office), AtomicAction::explore(f.kitchen)}};
  EXPECT_FALSE(planning::intents(q, f.catalog)[0]);
  const Plan r{{AtomicAction::go_to(f.office), AtomicAction::grasp(f.plate)}};
  EXPECT_EQ(planning::intents(r, f.catalog)[0]->kind, planning::ConflictKind::SameContainerGrab);
}

TEST(Planning, FindConflictsMatchesPairwiseOracle) {
  Fixture f;
  oracle::Rng rng(31);
  int flagged = 0;
  for (int trial = 0; trial < 40000; ++trial) {
    const Plan& mine = oracle::pick(rng, f.all);
    std::vector<Plan> theirs{oracle::pick(rng, f.all)};
    if (oracle::coin(rng, 0.2)) theirs.push_back(oracle::pick(rng, f.all));
    const auto got = oracle::as_ref(planning::find_conflicts(mine, theirs, f.catalog));
    const auto want = oracle::pairwise_conflicts(mine, theirs, f.catalog);
    ASSERT_EQ(got, want) << to_text(mine) << " vs " << to_text(theirs[0]);
    flagged += !want.empty();
  }
  EXPECT_GT(flagged, 1000);
}

TEST(Planning, DetectMiscoordinationFlagsConflictsAndMisalignment) {
  Fixture f;
  auto cat = std::make_shared<Catalog>(f.scenario);
  BeliefWorld w("Alice", {"Bob"}, canonical_rules(), cat);
  const Plan mine{{AtomicAction::go_to(f.office), AtomicAction::grasp(f.pen)}};
  const Plan theirs{{AtomicAction::grasp(f.pen)}};
  auto rep = detect_miscoordination(mine, {theirs}, w, "Bob");
  ASSERT_EQ(rep.conflicts.size(), 2u);
  EXPECT_TRUE(rep.misaligned.empty());
  rep = detect_miscoordination(mine, {Plan{{AtomicAction::explore(f.kitchen)}}}, w, "Bob");
  EXPECT_TRUE(rep.conflicts.empty());
  EXPECT_FALSE(rep.heavy);
  w.assert_fact(Partition::zero(), {f.apple, "IN", f.kitchen});
  rep = detect_miscoordination(mine, {}, w, "Bob");
  EXPECT_EQ(rep.misaligned.facts.size(), 1u);
  EXPECT_TRUE(rep.heavy);
}

TEST(Planning, BestPlanGraspsLocalTarget) {
  Fixture f;
  FactSet facts{{f.alice, "AT", f.kitchen}, {f.apple, "IN", f.kitchen}, {f.pen, "IN", f.office}};
  const auto p = planning::best_plan(facts, "Alice", f.catalog);
  ASSERT_TRUE(p);
  ASSERT_FALSE(p->steps.empty());
  EXPECT_EQ(p->steps[0], AtomicAction::grasp(f.apple));
}

TEST(Planning, ExploresWhenTargetsUnknown) {
  Fixture f;
  FactSet facts{{f.alice, "AT", f.kitchen}, {f.kitchen, "EXPLORED", Term::state("all")}};
  const auto p = planning::best_plan(facts, "Alice", f.catalog);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->steps.back(), AtomicAction::explore(f.office));
}

TEST(Planning, ReplanAvoidsDeclaredPlans) {
  Fixture f;
  FactSet facts{{f.alice, "AT", f.kitchen}, {f.apple, "IN", f.kitchen}, {f.pen, "IN", f.office}};
  const auto first = planning::best_plan(facts, "Alice", f.catalog);
  ASSERT_TRUE(first);
  const auto alt = planning::replan(facts, "Alice", f.catalog, {*first});
  ASSERT_TRUE(alt);
  EXPECT_TRUE(planning::find_conflicts(*alt, {*first}, f.catalog).empty()) << to_text(*alt);

  facts = {{f.alice, "AT", f.kitchen}, {f.apple, "IN", f.office}, {f.pen, "IN", f.office}};
  const auto only = planning::best_plan(facts, "Alice", f.catalog);
  EXPECT_EQ(planning::replan(facts, "Alice", f.catalog, {*only}), only);
}

TEST(Planning, NextStepSkipsFinishedSteps) {
  Fixture f;
  const Plan p{{AtomicAction::go_to(f.office), AtomicAction::grasp(f.pen)}};
  FactSet facts{{f.alice, "AT", f.office}, {f.pen, "IN", f.office}};
  auto n = planning::next_step(facts, "Alice", f.catalog, p, {});
  ASSERT_EQ(n.kind, planning::NextStep::Kind::Act);
  EXPECT_EQ(*n.action, AtomicAction::grasp(f.pen));
  facts = {{f.alice, "AT", f.office}, {f.alice, "HOLD", f.pen}};
  EXPECT_EQ(planning::next_step(facts, "Alice", f.catalog, p, {}).kind, planning::NextStep::Kind::SubplanDone);
  facts = {{f.alice, "AT", f.kitchen}, {f.pen, "IN", f.office}};
  n = planning::next_step(facts, "Alice", f.catalog, p, {AtomicAction::go_to(f.office)});
  EXPECT_EQ(n.kind, planning::NextStep::Kind::Stale);
  EXPECT_EQ(n.reason, "item is in another room");
}

TEST(Planning, MessageRoundTrip) {
  Fixture f;
  const std::vector<AtomicBelief> facts{{f.apple, "IN", f.kitchen}, {f.office, "EXPLORED", Term::state("all")}};
  const Plan p{{AtomicAction::go_to(f.office), AtomicAction::grasp(f.pen)}};
  const auto text = planning::compose_message(facts, p, &f.catalog);
  const auto back = planning::parse_message(text);
  ASSERT_TRUE(back) << text;
  EXPECT_EQ(back->facts, facts);
  ASSERT_TRUE(back->plan);
  EXPECT_EQ(*back->plan, p);
  const auto empty = planning::parse_message(planning::compose_message({}, std::nullopt, nullptr));
  ASSERT_TRUE(empty);
  EXPECT_TRUE(empty->facts.empty());
  EXPECT_FALSE(empty->plan);
  EXPECT_FALSE(planning::parse_message("hello Bob"));
}

TEST(Planning, MessagesFitLimitAndKeepGoalFactsFirst) {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto u = oracle::make_universe(rng);
    std::vector<AtomicBelief> facts;
    const int n = oracle::uniform(rng, 0, 60);
    for (int i = 0; i < n; ++i) facts.push_back(oracle::random_fact(rng, u));
    const auto text = planning::compose_message(facts, std::nullopt, u.catalog.get());
    ASSERT_LE(text.size(), kMaxMessageChars);
    const auto back = planning::parse_message(text);
    ASSERT_TRUE(back) << text;
    bool seen_other = false;
    for (const auto& x : back->facts) {
      const bool rel = planning::goal_relevant(x, *u.catalog);
      ASSERT_FALSE(rel && seen_other) << text;
      seen_other = seen_other || !rel;
    }
  }
}
