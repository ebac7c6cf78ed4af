#include <gtest/gtest.h>

#include "cobel/collab_engine.hpp"
#include "oracles.hpp"
#include "recording.hpp"

using namespace cobel;
using sbl::Term;

namespace {

struct Fixture {
  Scenario scenario = load_scenario(oracle::data_dir() / "scenarios" / "food_small.json");
  World world{scenario, 42};
  reasoner::ScriptedReasoner scripted{world.catalog()};
  BeliefWorld alice{"Alice", {"Bob"}, canonical_rules(), world.catalog()};

  const ObjectRef& target(int i) const { return scenario.objects[i].ref; }
  ObjectRef room_of(int i) const { return *world.catalog()->room_by_id(scenario.objects[i].room); }
};

}  // namespace

TEST(Engine, VisualUpdateIsIdempotent) {
  Fixture f;
  const auto obs = f.world.observe(0);
  update_from_visual(f.alice, obs);
  const auto once = f.alice.snapshot();
  EXPECT_TRUE(f.alice.zero().count({Term::agent("Alice"), "AT", obs.room}));
  update_from_visual(f.alice, obs);
  EXPECT_EQ(f.alice.snapshot(), once);
}

TEST(Engine, VisualUpdateTracksHands) {
  Fixture f;
  VisualObservation obs = f.world.observe(0);
  obs.hands.push_back({f.target(0), {}});
  update_from_visual(f.alice, obs);
  EXPECT_TRUE(f.alice.zero().count({Term::agent("Alice"), "HOLD", f.target(0)}));
  obs.hands.clear();
  update_from_visual(f.alice, obs);
  EXPECT_FALSE(f.alice.zero().count({Term::agent("Alice"), "HOLD", f.target(0)}));
}

TEST(Engine, UnknownEntityIsCorruptObservation) {
  Fixture f;
  auto obs = f.world.observe(0);
  obs.items.push_back(Term::object("ghost", 987654));
  EXPECT_THROW(update_from_visual(f.alice, obs), CorruptObservation);
  obs = f.world.observe(0);
  obs.others.push_back({"Mallory", obs.room, {}});
  EXPECT_THROW(update_from_visual(f.alice, obs), CorruptObservation);
}

TEST(Engine, StructuredMessageUpdatesBothOrders) {
  Fixture f;
  const AtomicBelief fact{f.target(0), "IN", f.room_of(0)};
  const Plan plan{{AtomicAction::go_to(f.room_of(0)), AtomicAction::grasp(f.target(0))}};
  const std::string text = planning::compose_message({fact}, plan, f.world.catalog().get());
  const auto up = update_from_messages(f.alice, {{"Bob", text, 3}}, f.scripted);
  EXPECT_TRUE(f.alice.zero().count(fact));
  EXPECT_TRUE(f.alice.first("Bob").count(fact));
  ASSERT_TRUE(up.declared.count("Bob"));
  ASSERT_TRUE(up.declared.at("Bob"));
  EXPECT_EQ(*up.declared.at("Bob"), plan);
}

TEST(Engine, MessagesFromStrangersAreIgnored) {
  Fixture f;
  const auto before = f.alice.snapshot();
  const auto up = update_from_messages(f.alice, {{"Zed", "FACTS: | PLAN: None", 1}}, f.scripted);
  ASSERT_EQ(up.warnings.size(), 1u);
  EXPECT_EQ(f.alice.snapshot(), before);
}

TEST(Engine, MessageCannotOverrideWhatIHold) {
  Fixture f;
  auto obs = f.world.observe(0);
  obs.hands.push_back({f.target(0), {}});
  update_from_visual(f.alice, obs);
  const AtomicBelief claim{f.target(0), "IN", f.room_of(0)};
  update_from_messages(f.alice, {{"Bob", planning::compose_message({claim}, std::nullopt, nullptr), 5}}, f.scripted);
  EXPECT_TRUE(f.alice.zero().count({Term::agent("Alice"), "HOLD", f.target(0)}));
  EXPECT_FALSE(f.alice.zero().count(claim));
  EXPECT_TRUE(f.alice.first("Bob").count(claim));
}

TEST(Engine, BeliefHashFollowsContent) {
  Fixture f;
  BeliefWorld other{"Alice", {"Bob"}, canonical_rules(), f.world.catalog()};
  EXPECT_EQ(belief_hash(f.alice), belief_hash(other));
  f.alice.assert_fact(Partition::zero(), {f.target(0), "IN", f.room_of(0)});
  EXPECT_NE(belief_hash(f.alice), belief_hash(other));
  EXPECT_EQ(belief_hash(f.alice).size(), 16u);
}

TEST(Engine, AdaptiveCommunicatesOnlyAfterHeavyReport) {
  const auto s = load_scenario(oracle::data_dir() / "scenarios" / "food_small.json");
  int messages = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    World w(s, seed);
    reasoner::ScriptedReasoner r(w.catalog());
    const auto run = cobel::testing::run_agents(w, r, {CommMode::Adaptive}, 3000);
    for (const auto& per_agent : run.decisions) {
      for (const auto& d : per_agent) {
        if (d.kind != Decision::Kind::Communicate) continue;
        ++messages;
        EXPECT_LE(d.message.size(), kMaxMessageChars);
        bool heavy_before = false;
        for (const auto& e : d.events) {
          if (e.kind == "report" && e.payload.value("heavy", false)) heavy_before = true;
          if (e.kind == "communicate") break;
        }
        EXPECT_TRUE(heavy_before) << d.message;
      }
    }
  }
  EXPECT_GT(messages, 0);
}

TEST(Engine, ModesOrderMessageCounts) {
  const auto s = load_scenario(oracle::data_dir() / "scenarios" / "food_small.json");
  auto count = [&](CommMode m) {
    int n = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      World w(s, seed);
      reasoner::ScriptedReasoner r(w.catalog());
      const auto run = cobel::testing::run_agents(w, r, {m}, 3000);
      for (const auto& per_agent : run.decisions) {
        for (const auto& d : per_agent) n += d.kind == Decision::Kind::Communicate;
      }
    }
    return n;
  };
  EXPECT_EQ(count(CommMode::Never), 0);
  EXPECT_LT(count(CommMode::Adaptive), count(CommMode::Always));
}

TEST(Engine, ScriptedAgentsFinishFoodSmall) {
  const auto s = load_scenario(oracle::data_dir() / "scenarios" / "food_small.json");
  World w(s, 42);
  reasoner::ScriptedReasoner r(w.catalog());
  const auto run = cobel::testing::run_agents(w, r, {}, 3000);
  EXPECT_EQ(run.transported, 10);
  EXPECT_LT(run.frames, 3000);
  EXPECT_TRUE(w.check_invariants().empty());
}
