#include <gtest/gtest.h>

#include "cobel/belief_store.hpp"
#include "cobel/sbl.hpp"
#include "oracles.hpp"

using namespace cobel;
using namespace cobel::sbl;

TEST(Sbl, CanonicalRulesRoundTrip) {
  ASSERT_EQ(canonical_rules().size(), 16u);
  for (const auto& r : canonical_rules()) {
    const std::string text = serialize(r);
    EXPECT_EQ(parse(text), r) << text;
    EXPECT_EQ(serialize(parse(text)), text);
  }
}

TEST(Sbl, RandomExpressionsRoundTrip) {
  oracle::Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto u = oracle::make_universe(rng);
    const auto e = oracle::random_expr(rng, u, 0.3);
    const std::string text = serialize(e);
    ASSERT_EQ(parse(text), e) << text;
  }
}

TEST(Sbl, ParsesLooseSpacing) {
  const auto e = parse("  Alice   BELIEVE <apple> (12)  IN <kitchen>(3) ");
  EXPECT_EQ(serialize(e), "Alice BELIEVE <apple>(12) IN <kitchen>(3)");
  EXPECT_TRUE(e.is_ground());
  EXPECT_EQ(e.order(), 0);
}

TEST(Sbl, StateAndVariableObjects) {
  const auto e = parse("Bob BELIEVE Alice BELIEVE <kitchen>(3) EXPLORED part");
  EXPECT_EQ(e.order(), 1);
  EXPECT_EQ(e.body.kind(), RelationKind::Attribute);
  EXPECT_EQ(parse("?a BELIEVE ?x IN ?r").body.kind(), RelationKind::Open);
  EXPECT_EQ(parse("?a BELIEVE ?a AT ?r").variables(), (std::vector<std::string>{"a", "r"}));
}

TEST(Sbl, RejectsMalformedInput) {
  for (const char* bad : {"", "Alice BELIEVE", "Alice BELIEVE <apple>(x) IN <kitchen>(3)",
                          "Alice BELIEVE Bob BELIEVE Carol BELIEVE <a>(1) IN <b>(2)", "Alice <a>(1) IN <b>(2)",
                          "Alice BELIEVE <a>(1) in <b>(2)", "Alice BELIEVE <a>(1) IN <b>(2) extra"}) {
    EXPECT_THROW(parse(bad), ParseError) << bad;
    EXPECT_FALSE(try_parse(bad).has_value()) << bad;
  }
}

TEST(Sbl, ParseErrorLocatesToken) {
  try {
    parse("Alice BELIEVE <apple>(12) IN kitchen(3)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.char_offset(), 0u);
  }
}

TEST(Sbl, UnifyBindsRepeatedVariablesConsistently) {
  const auto rule = parse("?agent BELIEVE ?agent AT ?room");
  const auto b = unify(rule, parse("Alice BELIEVE Alice AT <kitchen>(3)"));
  ASSERT_TRUE(b);
  EXPECT_EQ(b->at("agent"), Term::agent("Alice"));
  EXPECT_EQ(b->at("room"), Term::object("kitchen", 3));
  EXPECT_FALSE(unify(rule, parse("Alice BELIEVE Bob AT <kitchen>(3)")));
  EXPECT_FALSE(unify(rule, parse("Alice BELIEVE Bob BELIEVE Bob AT <kitchen>(3)")));
}

TEST(Sbl, UnifyMatchesExhaustiveEnumeration) {
  oracle::Rng rng(11);
  int matched = 0;
  for (int i = 0; i < 500; ++i) {
    const auto u = oracle::make_universe(rng);
    const auto ground = oracle::random_expr(rng, u, 0.0);
    const auto rule = oracle::coin(rng, 0.7) ? oracle::generalize(rng, ground) : oracle::random_expr(rng, u, 0.6);
    if (rule.is_ground()) continue;
    const auto expected = oracle::enumerate_unify(rule, ground, u.terms());
    const auto got = unify(rule, ground);
    ASSERT_EQ(got.has_value(), expected.has_value()) << serialize(rule) << " vs " << serialize(ground);
    if (got) {
      EXPECT_EQ(*got, *expected);
      EXPECT_EQ(substitute(rule, *got), ground);
      ++matched;
    }
  }
  EXPECT_GT(matched, 100);
}

TEST(Sbl, SubstituteReportsUnboundVariable) {
  EXPECT_THROW(substitute(parse("?a BELIEVE ?x IN ?r"), Binding{{"a", Term::agent("Alice")}}), SubstitutionError);
}

TEST(Sbl, LinearizeRenamesRepeats) {
  const auto lin = linearize(parse("?agent BELIEVE ?agent HOLD ?object"));
  EXPECT_EQ(lin.variables().size(), 3u);
  EXPECT_TRUE(unify(lin, parse("Alice BELIEVE Bob HOLD <apple>(1)")));
}
