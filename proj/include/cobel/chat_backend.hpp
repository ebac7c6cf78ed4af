#pragma once

// OpenAI-compatible chat-completion backend.
//
// Wire format (one call per reasoner request, no history):
//   POST {base_url}/chat/completions
//   Authorization: Bearer $COBEL_API_KEY
//   Content-Type: application/json
//   {"model": M, "messages": [{"role": "user", "content": PROMPT}],
//    "temperature": 0.7, "top_p": 1.0, "max_tokens": 512}
// The answer text is choices[0].message.content.

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>

#include "cobel/reasoner.hpp"

namespace cobel::reasoner {

struct ChatConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string model;
  std::string api_key;
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 512;
  std::chrono::milliseconds backoff{500};  // first retry delay, doubled per retry
  std::chrono::milliseconds timeout{60000};

  /// api_key from COBEL_API_KEY (empty if unset).
  static ChatConfig from_env(std::string base_url, std::string model);
};

/// Caps concurrent HTTP calls; share one across all episodes of a batch.
class InFlightLimit {
 public:
  explicit InFlightLimit(int max) : free_(max < 1 ? 1 : max) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

class ChatCompletionReasoner : public Reasoner {
 public:
  ChatCompletionReasoner(ChatConfig cfg, std::shared_ptr<Reasoner> fallback,
                         std::shared_ptr<InFlightLimit> limit = nullptr);

  /// Renders, posts, parses; one network retry, `retry_budget` format repairs,
  /// then the fallback's answer with fallback_used set.
  ReasonerResponse complete(const ReasonerRequest& req) override;

  /// Exact JSON request body for a prompt.
  std::string request_body(const std::string& prompt) const;

 private:
  struct Http {
    bool ok = false;
    int status = 0;
    std::string content;
    std::string error;
  };
  Http post_once(const std::string& body);
  Http post(const std::string& body, std::vector<std::string>& notes);

  ChatConfig cfg_;
  std::shared_ptr<Reasoner> fallback_;
  std::shared_ptr<InFlightLimit> limit_;
  std::string origin_;  // scheme://host:port
  std::string path_;    // path prefix + /chat/completions
};

/// Instruction appended to the prompt after a format violation.
std::string repair_instruction(const std::vector<std::string>& labels, const std::string& missing);

}  // namespace cobel::reasoner
