#include "cobel/chat_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace cobel::reasoner {

ChatConfig ChatConfig::from_env(std::string base_url, std::string model) {
  ChatConfig c;
  c.base_url = std::move(base_url);
  c.model = std::move(model);
  if (const char* key = std::getenv("COBEL_API_KEY")) c.api_key = key;
  return c;
}

void InFlightLimit::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void InFlightLimit::release() {
  {
    std::lock_guard lock(mu_);
    ++free_;
  }
  cv_.notify_one();
}

std::string repair_instruction(const std::vector<std::string>& labels, const std::string& missing) {
  std::string out = "\n\nYour previous answer did not follow the required format (missing or misplaced label: " +
                    missing + "). Answer again strictly in this format:\n";
  for (const auto& l : labels) out += l + ":\n";
  return out;
}

ChatCompletionReasoner::ChatCompletionReasoner(ChatConfig cfg, std::shared_ptr<Reasoner> fallback,
                                               std::shared_ptr<InFlightLimit> limit)
    : cfg_(std::move(cfg)), fallback_(std::move(fallback)), limit_(std::move(limit)) {
  std::string url = cfg_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme = url.find("://");
  const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin_ = slash == std::string::npos ? url : url.substr(0, slash);
  path_ = (slash == std::string::npos ? std::string() : url.substr(slash)) + "/chat/completions";
}

std::string ChatCompletionReasoner::request_body(const std::string& prompt) const {
  nlohmann::ordered_json body;
  body["model"] = cfg_.model;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = cfg_.temperature;
  body["top_p"] = cfg_.top_p;
  body["max_tokens"] = cfg_.max_tokens;
  return body.dump();
}

ChatCompletionReasoner::Http ChatCompletionReasoner::post_once(const std::string& body) {
  Http out;
  try {
    httplib::Client cli(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);
    httplib::Headers headers{{"Authorization", "Bearer " + cfg_.api_key}};
    struct Slot {
      InFlightLimit* l;
      explicit Slot(InFlightLimit* x) : l(x) { if (l) l->acquire(); }
      ~Slot() { if (l) l->release(); }
    } slot(limit_.get());
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      out.error = "network error: " + httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    if (res->status < 200 || res->status >= 300) {
      out.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      return out;
    }
    const auto j = nlohmann::json::parse(res->body);
    out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = std::string("bad response: ") + e.what();
  }
  return out;
}

ChatCompletionReasoner::Http ChatCompletionReasoner::post(const std::string& body, std::vector<std::string>& notes) {
  auto delay = cfg_.backoff;
  for (int attempt = 0;; ++attempt) {
    Http h = post_once(body);
    if (h.ok) return h;
    notes.push_back(h.error);
    if (attempt >= 1) return h;
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

ReasonerResponse ChatCompletionReasoner::complete(const ReasonerRequest& req) {
  const auto& t = get(req.id);
  const std::string prompt = render(t, req.vars);
  const auto labels = rendered_labels(t, req.vars);
  std::vector<std::string> notes;
  std::string content = prompt;
  const int attempts = 1 + std::max(0, req.retry_budget);
  for (int a = 0; a < attempts; ++a) {
    Http h = post(request_body(content), notes);
    if (!h.ok) break;
    try {
      ReasonerResponse r = parse_sections(t, h.content, req.vars);
      r.backend = Backend::Llm;
      r.notes = std::move(notes);
      return r;
    } catch (const ParseFailure& e) {
      notes.push_back(std::string("parse failure (") + e.what() + "): " + h.content);
      content = prompt + repair_instruction(labels, e.missing_label());
    }
  }
  if (!fallback_) throw ParseFailure("no usable answer and no fallback", labels.front());
  ReasonerResponse r = fallback_->complete(req);
  r.fallback_used = true;
  notes.insert(notes.end(), r.notes.begin(), r.notes.end());
  r.notes = std::move(notes);
  return r;
}

}  // namespace cobel::reasoner
