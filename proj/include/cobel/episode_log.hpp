#pragma once

// Line-delimited episode records and the metrics computed from them.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cobel {

using Json = nlohmann::ordered_json;

struct LogRecord {
  int frame = 0;
  std::string agent;  // empty for episode-level records
  std::string kind;
  Json payload;
  std::optional<std::string> belief_hash;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

Json to_json(const LogRecord& r);

class MalformedLog : public std::runtime_error {
 public:
  MalformedLog(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EpisodeLog {
 public:
  void add(LogRecord r) { records_.push_back(std::move(r)); }
  const std::vector<LogRecord>& records() const { return records_; }

  /// One JSON object per line, fixed key order.
  std::string to_jsonl() const;
  /// FNV-1a 64 of to_jsonl(), hex.
  std::string hash() const;

  /// Throws MalformedLog naming the 1-based line.
  static EpisodeLog parse(std::string_view text);
  static EpisodeLog read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<LogRecord> records_;
};

struct EpisodeMetrics {
  double transport_rate = 0.0;
  int transported = 0;
  int total_targets = 0;
  int frames_used = 0;
  int decision_ticks = 0;
  long comm_tokens = 0;
  long comm_chars = 0;
  int messages_sent = 0;
  int reasoner_fallbacks = 0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

Json to_json(const EpisodeMetrics& m);

/// Whitespace-delimited token count.
std::size_t count_tokens(std::string_view text);

/// Counts `communicate`, `act` and fallback `reasoner` records; transport and
/// frames come from the `end` record. Throws MalformedLog.
EpisodeMetrics metrics(const EpisodeLog& log);

}  // namespace cobel
