#include "cobel/episode_log.hpp"

#include <fstream>
#include <sstream>

#include "cobel/belief_store.hpp"

namespace cobel {

Json to_json(const LogRecord& r) {
  Json j;
  j["frame"] = r.frame;
  j["agent"] = r.agent;
  j["kind"] = r.kind;
  j["payload"] = r.payload;
  if (r.belief_hash) j["belief_hash"] = *r.belief_hash;
  return j;
}

MalformedLog::MalformedLog(std::size_t line, const std::string& what)
    : std::runtime_error("episode log line " + std::to_string(line) + ": " + what), line_(line) {}

std::string EpisodeLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::string EpisodeLog::hash() const { return hex64(fnv1a64(to_jsonl())); }

EpisodeLog EpisodeLog::parse(std::string_view text) {
  EpisodeLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedLog(line_no, std::string("not JSON: ") + e.what());
    }
    try {
      LogRecord r;
      r.frame = j.at("frame").get<int>();
      r.agent = j.at("agent").get<std::string>();
      r.kind = j.at("kind").get<std::string>();
      r.payload = j.at("payload");
      if (j.contains("belief_hash")) r.belief_hash = j.at("belief_hash").get<std::string>();
      if (r.kind.empty()) throw MalformedLog(line_no, "empty record kind");
      log.add(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedLog(line_no, std::string("bad record: ") + e.what());
    }
  }
  return log;
}

EpisodeLog EpisodeLog::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void EpisodeLog::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_jsonl();
}

Json to_json(const EpisodeMetrics& m) {
  Json j;
  j["transport_rate"] = m.transport_rate;
  j["transported"] = m.transported;
  j["total_targets"] = m.total_targets;
  j["frames_used"] = m.frames_used;
  j["decision_ticks"] = m.decision_ticks;
  j["comm_tokens"] = m.comm_tokens;
  j["comm_chars"] = m.comm_chars;
  j["messages_sent"] = m.messages_sent;
  j["reasoner_fallbacks"] = m.reasoner_fallbacks;
  return j;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

EpisodeMetrics metrics(const EpisodeLog& log) {
  EpisodeMetrics m;
  bool ended = false;
  std::size_t line = 0;
  for (const auto& r : log.records()) {
    ++line;
    try {
      if (r.kind == "communicate") {
        const auto text = r.payload.at("text").get<std::string>();
        ++m.messages_sent;
        m.comm_tokens += static_cast<long>(count_tokens(text));
        m.comm_chars += static_cast<long>(text.size());
      } else if (r.kind == "act") {
        ++m.decision_ticks;
      } else if (r.kind == "reasoner") {
        if (r.payload.at("fallback").get<bool>()) ++m.reasoner_fallbacks;
      } else if (r.kind == "end") {
        m.frames_used = r.payload.at("frames").get<int>();
        m.transported = r.payload.at("transported").get<int>();
        m.total_targets = r.payload.at("total").get<int>();
        ended = true;
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedLog(line, "bad " + r.kind + " payload: " + e.what());
    }
  }
  if (!ended) throw MalformedLog(line + 1, "missing end record");
  if (m.total_targets <= 0) throw MalformedLog(line, "end record has no targets");
  m.transport_rate = static_cast<double>(m.transported) / m.total_targets;
  return m;
}

}  // namespace cobel
