#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cobel/chat_backend.hpp"
#include "cobel/stub_server.hpp"
#include "oracles.hpp"

using namespace cobel;
using namespace cobel::reasoner;

namespace {

Vars vars_for(TemplateId id) {
  Vars v;
  for (const auto& name : get(id).required_vars) v[name] = "None";
  v["AGENT_NAME"] = "Alice";
  v["OPPO_NAME"] = "Bob";
  return v;
}

ChatConfig config(const stub::StubServer& s) {
  ChatConfig c;
  c.base_url = s.base_url();
  c.model = "stub-model";
  c.api_key = "test-key";
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  return c;
}

// Answers every template with its first label only; used as a recognizable fallback.
class MarkerReasoner : public Reasoner {
 public:
  ReasonerResponse complete(const ReasonerRequest& req) override {
    ReasonerResponse r;
    for (const auto& l : rendered_labels(get(req.id), req.vars)) r.sections.emplace_back(l, "marker");
    r.raw = "marker";
    return r;
  }
};

}  // namespace

TEST(ChatBackend, RequestsCarryFixedSamplingAndBearer) {
  stub::StubServer server(stub::transcript_handler(oracle::fixture_dir() / "transcripts"));
  server.start();
  ChatCompletionReasoner llm(config(server), std::make_shared<MarkerReasoner>());
  const auto resp = llm.complete({TemplateId::PlanNext, vars_for(TemplateId::PlanNext)});
  EXPECT_FALSE(resp.fallback_used);
  EXPECT_EQ(resp.backend, Backend::Llm);
  const auto reqs = server.captured();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].path, "/v1/chat/completions");
  EXPECT_EQ(reqs[0].authorization, "Bearer test-key");
  const auto body = nlohmann::json::parse(reqs[0].body);
  EXPECT_EQ(body["temperature"], 0.7);
  EXPECT_EQ(body["top_p"], 1.0);
  EXPECT_EQ(body["max_tokens"], 512);
  EXPECT_EQ(body["model"], "stub-model");
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(identify(stub::prompt_of(reqs[0])), TemplateId::PlanNext);
  server.stop();
}

TEST(ChatBackend, AllTranscriptsParseOverHttp) {
  const auto dir = oracle::fixture_dir() / "transcripts";
  std::ifstream in(dir / "expected.json");
  const auto expected = nlohmann::json::parse(in);
  stub::StubServer server(stub::transcript_handler(dir));
  server.start();
  ChatCompletionReasoner llm(config(server), std::make_shared<MarkerReasoner>());
  for (auto id : kAllTemplates) {
    const auto resp = llm.complete({id, vars_for(id)});
    const auto& want = expected.at(std::string(name(id)));
    EXPECT_FALSE(resp.fallback_used) << name(id);
    ASSERT_EQ(resp.sections.size(), want.size()) << name(id);
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(resp.section(i), want[i].get<std::string>());
  }
  EXPECT_EQ(server.captured().size(), kAllTemplates.size());
  server.stop();
}

TEST(ChatBackend, DoubleServerErrorFallsBack) {
  stub::StubServer server([](const stub::CapturedRequest&) { return stub::Reply{500, ""}; });
  server.start();
  ChatCompletionReasoner llm(config(server), std::make_shared<MarkerReasoner>());
  const auto resp = llm.complete({TemplateId::PredictZero, vars_for(TemplateId::PredictZero)});
  EXPECT_TRUE(resp.fallback_used);
  EXPECT_EQ(resp.section(0), "marker");
  EXPECT_EQ(server.captured().size(), 2u);
  EXPECT_FALSE(resp.notes.empty());
  server.stop();
}

TEST(ChatBackend, SingleServerErrorIsRetried) {
  std::atomic<int> calls{0};
  stub::StubServer server([&](const stub::CapturedRequest&) {
    return ++calls == 1 ? stub::Reply{503, ""} : stub::Reply{200, "reasoning: ok\nplan: transport"};
  });
  server.start();
  ChatCompletionReasoner llm(config(server), std::make_shared<MarkerReasoner>());
  const auto resp = llm.complete({TemplateId::PredictZero, vars_for(TemplateId::PredictZero)});
  EXPECT_FALSE(resp.fallback_used);
  EXPECT_EQ(resp.section(1), "transport");
  server.stop();
}

TEST(ChatBackend, FormatViolationGetsRepairPrompt) {
  std::atomic<int> calls{0};
  stub::StubServer server([&](const stub::CapturedRequest&) {
    return ++calls == 1 ? stub::Reply{200, "I would transport."} : stub::Reply{200, "reasoning: ok\nplan: transport"};
  });
  server.start();
  ChatCompletionReasoner llm(config(server), std::make_shared<MarkerReasoner>());
  const auto resp = llm.complete({TemplateId::PredictZero, vars_for(TemplateId::PredictZero)});
  EXPECT_FALSE(resp.fallback_used);
  EXPECT_EQ(resp.section(1), "transport");
  const auto reqs = server.captured();
  ASSERT_EQ(reqs.size(), 2u);
  const auto repair = repair_instruction(rendered_labels(get(TemplateId::PredictZero), {}), "reasoning");
  EXPECT_NE(stub::prompt_of(reqs[1]).find("did not follow the required format"), std::string::npos);
  EXPECT_NE(stub::prompt_of(reqs[1]).find(repair), std::string::npos);
  server.stop();
}

TEST(ChatBackend, PersistentFormatViolationFallsBack) {
  stub::StubServer server([](const stub::CapturedRequest&) { return stub::Reply{200, "no labels at all"}; });
  server.start();
  ChatCompletionReasoner llm(config(server), std::make_shared<MarkerReasoner>());
  const auto resp = llm.complete({TemplateId::PredictZero, vars_for(TemplateId::PredictZero), 1});
  EXPECT_TRUE(resp.fallback_used);
  EXPECT_EQ(server.captured().size(), 2u);
  server.stop();
}

TEST(ChatBackend, UnreachableServerFallsBack) {
  ChatConfig c;
  c.base_url = "http://127.0.0.1:1/v1";
  c.model = "m";
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(500);
  ChatCompletionReasoner llm(c, std::make_shared<MarkerReasoner>());
  EXPECT_TRUE(llm.complete({TemplateId::PlanNext, vars_for(TemplateId::PlanNext)}).fallback_used);
}
