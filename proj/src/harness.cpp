#include "cobel/harness.hpp"

#include <atomic>
#include <charconv>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "cobel/chat_backend.hpp"
#include "cobel/rule_consensus.hpp"
#include "cobel/world_sim.hpp"

namespace cobel {

namespace fs = std::filesystem;

void validate(const RunConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("no seeds given");
  if (!std::filesystem::is_regular_file(cfg.scenario)) throw ConfigError("scenario not found: " + cfg.scenario.string());
  if (cfg.agents < 2) throw ConfigError("agent count must be at least 2");
  if (cfg.modes.empty()) throw ConfigError("no mode given");
  if (cfg.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
  if (cfg.cooldown < 0) throw ConfigError("cooldown must be non-negative");
  if (cfg.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (cfg.backend == reasoner::Backend::Llm && cfg.base_url.empty()) throw ConfigError("llm backend needs --base-url");
  if (cfg.backend == reasoner::Backend::Llm && cfg.model.empty()) throw ConfigError("llm backend needs --model");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      throw ConfigError("bad seed '" + std::string(s) + "' in '" + text + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    if (part.empty()) throw ConfigError("empty seed item in '" + text + "'");
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const auto lo = number(std::string_view(part).substr(0, dots));
    const auto hi = number(std::string_view(part).substr(dots + 2));
    if (hi < lo) throw ConfigError("empty seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no seeds given");
  return out;
}

namespace {

std::vector<std::unique_ptr<reasoner::Reasoner>> make_reasoners(const RunConfig& cfg, const CatalogPtr& catalog,
                                                                int n) {
  std::vector<std::unique_ptr<reasoner::Reasoner>> out;
  auto limit = std::make_shared<reasoner::InFlightLimit>(cfg.max_in_flight);
  for (int i = 0; i < n; ++i) {
    if (cfg.backend == reasoner::Backend::Scripted) {
      out.push_back(std::make_unique<reasoner::ScriptedReasoner>(catalog));
    } else {
      auto fallback = std::make_shared<reasoner::ScriptedReasoner>(catalog);
      out.push_back(std::make_unique<reasoner::ChatCompletionReasoner>(
          reasoner::ChatConfig::from_env(cfg.base_url, cfg.model), fallback, limit));
    }
  }
  return out;
}

std::string utc_stamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, const RunConfig& cfg, CommMode mode, std::uint64_t seed) {
  World world(scenario, seed);
  const CatalogPtr& catalog = world.catalog();
  const auto& names = catalog->agents();
  const int n = static_cast<int>(names.size());
  auto reasoners = make_reasoners(cfg, catalog, n);
  EpisodeLog log;

  std::vector<BeliefRule> rules;
  Json consensus;
  try {
    const auto result = consensus::consensus_loop(*reasoners[0], *reasoners[1], consensus::task_description(*catalog),
                                                  cfg.max_rounds, {names[0], names[1]});
    rules = result.rules;
    consensus["rounds"] = result.rounds;
    consensus["accepted"] = true;
  } catch (const consensus::ConsensusFailure& e) {
    rules = canonical_rules();
    consensus["rounds"] = cfg.max_rounds;
    consensus["accepted"] = false;
    consensus["error"] = e.what();
  }

  AgentConfig acfg;
  acfg.mode = mode;
  acfg.cooldown = cfg.cooldown;
  std::vector<CollabAgent> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> others;
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(names[j]);
    }
    agents.emplace_back(names[i], others, rules, catalog, *reasoners[i], acfg);
  }

  Json header;
  header["scenario"] = scenario.name;
  header["seed"] = seed;
  header["mode"] = std::string(to_string(mode));
  header["backend"] = std::string(reasoner::to_string(cfg.backend));
  header["agents"] = names;
  Json rule_text = Json::array();
  for (const auto& r : rules) rule_text.push_back(sbl::serialize(r));
  header["rules"] = std::move(rule_text);
  Json partitions;
  for (const auto& a : agents) partitions[a.name()] = a.world().collaborators();
  header["partitions"] = std::move(partitions);
  log.add({0, "", "header", std::move(header), std::nullopt});
  log.add({0, "", "consensus", std::move(consensus), std::nullopt});

  auto record = [&](int frame, const std::string& agent, std::vector<Event>& events) {
    for (auto& e : events) log.add({frame, agent, e.kind, std::move(e.payload), e.belief_hash});
  };

  std::vector<int> wake(n, 0);
  while (!world.is_done().done) {
    const int frame = world.state().frame;
    std::vector<Intent> intents(n);
    for (int i = 0; i < n; ++i) {
      const auto& st = world.state().agents[i];
      if (st.busy()) continue;
      if (frame < wake[i] && st.inbox.empty()) continue;
      wake[i] = 0;
      const auto obs = world.observe(i);
      const auto inbox = world.take_inbox(i);
      Decision d;
      try {
        d = agents[i].decide(obs, inbox, frame);
      } catch (const std::exception& e) {
        d = Decision{};
        d.kind = Decision::Kind::Wait;
        d.wait_frames = acfg.idle_recheck;
        d.events.push_back({"warning", Json{{"message", std::string("decision failed: ") + e.what()}}, std::nullopt});
      }
      record(frame, names[i], d.events);
      switch (d.kind) {
        case Decision::Kind::Act: intents[i] = Intent::start(*d.action); break;
        case Decision::Kind::Communicate: intents[i] = Intent::start(AtomicAction::send(d.message)); break;
        case Decision::Kind::Wait: wake[i] = frame + d.wait_frames; break;
      }
    }
    const auto results = world.apply(intents);
    for (int i = 0; i < n; ++i) {
      auto events = agents[i].on_result(results[i]);
      record(world.state().frame, names[i], events);
    }
  }

  const auto done = world.is_done();
  Json end;
  end["frames"] = world.state().frame;
  end["transported"] = world.transported();
  end["total"] = world.total_targets();
  end["reason"] = done.reason == DoneStatus::Reason::Complete ? "complete" : "timeout";
  log.add({world.state().frame, "", "end", std::move(end), std::nullopt});

  EpisodeResult out;
  out.metrics = metrics(log);
  out.log = std::move(log);
  return out;
}

Json to_json(const SummaryRow& r) {
  Json j;
  j["mode"] = std::string(to_string(r.mode));
  j["episodes"] = r.episodes;
  j["transport_rate"] = r.transport_rate;
  j["frames"] = r.frames;
  j["decision_ticks"] = r.decision_ticks;
  j["comm_tokens"] = r.comm_tokens;
  j["messages_sent"] = r.messages_sent;
  return j;
}

std::string format_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream ss;
  ss << std::left << std::setw(10) << "mode" << std::right << std::setw(9) << "episodes" << std::setw(11)
     << "transport" << std::setw(10) << "frames" << std::setw(8) << "ticks" << std::setw(13) << "comm_tokens"
     << std::setw(10) << "messages" << '\n';
  ss << std::fixed;
  for (const auto& r : rows) {
    ss << std::left << std::setw(10) << to_string(r.mode) << std::right << std::setw(9) << r.episodes
       << std::setw(11) << std::setprecision(3) << r.transport_rate << std::setw(10) << std::setprecision(1)
       << r.frames << std::setw(8) << r.decision_ticks << std::setw(13) << r.comm_tokens << std::setw(10)
       << r.messages_sent << '\n';
  }
  return ss.str();
}

std::vector<SummaryRow> summarize(const fs::path& dir) {
  std::vector<SummaryRow> rows;
  for (CommMode mode : {CommMode::Adaptive, CommMode::Always, CommMode::Never}) {
    const fs::path mdir = dir / std::string(to_string(mode));
    if (!fs::is_directory(mdir)) continue;
    std::vector<fs::path> logs;
    for (const auto& e : fs::directory_iterator(mdir)) {
      if (fs::exists(e.path() / "episode.log")) logs.push_back(e.path() / "episode.log");
    }
    if (logs.empty()) continue;
    std::sort(logs.begin(), logs.end());
    SummaryRow row;
    row.mode = mode;
    for (const auto& p : logs) {
      const auto m = metrics(EpisodeLog::read(p));
      ++row.episodes;
      row.transport_rate += m.transport_rate;
      row.frames += m.frames_used;
      row.decision_ticks += m.decision_ticks;
      row.comm_tokens += static_cast<double>(m.comm_tokens);
      row.messages_sent += m.messages_sent;
    }
    const double k = row.episodes;
    row.transport_rate /= k;
    row.frames /= k;
    row.decision_ticks /= k;
    row.comm_tokens /= k;
    row.messages_sent /= k;
    rows.push_back(row);
  }
  return rows;
}

BatchResult run_batch(const RunConfig& cfg) {
  validate(cfg);
  Scenario base;
  try {
    base = with_agent_count(load_scenario(cfg.scenario), cfg.agents);
    const auto problems = validate(base);
    if (!problems.empty()) throw ScenarioError(problems);
  } catch (const ScenarioError& e) {
    std::string msg = "invalid scenario " + cfg.scenario.string() + ":";
    for (const auto& v : e.violations()) msg += "\n  " + v;
    throw ConfigError(msg);
  } catch (const std::exception& e) {
    throw ConfigError("cannot load scenario " + cfg.scenario.string() + ": " + e.what());
  }

  BatchResult out;
  out.dir = cfg.out / (cfg.run_name.empty() ? utc_stamp() : cfg.run_name);

  struct Task {
    CommMode mode;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (auto mode : cfg.modes) {
    for (auto seed : cfg.seeds) tasks.push_back({mode, seed});
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::string first_error;
  auto worker = [&] {
    while (!stop) {
      const std::size_t i = next++;
      if (i >= tasks.size()) return;
      const auto& t = tasks[i];
      try {
        auto res = run_episode(base, cfg, t.mode, t.seed);
        const fs::path dir = out.dir / std::string(to_string(t.mode)) / std::to_string(t.seed);
        fs::create_directories(dir);
        res.log.write(dir / "episode.log");
        write_text(dir / "metrics.json", to_json(res.metrics).dump(2) + "\n");
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (first_error.empty()) {
          first_error = std::string(to_string(t.mode)) + " seed " + std::to_string(t.seed) + ": " + e.what();
        }
        stop = true;
      }
    }
  };
  const int n = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(out.dir);
  out.rows = summarize(out.dir);
  Json summary;
  summary["scenario"] = cfg.scenario.string();
  summary["agents"] = cfg.agents;
  summary["seeds"] = cfg.seeds;
  summary["complete"] = first_error.empty();
  if (!first_error.empty()) summary["error"] = first_error;
  Json rows = Json::array();
  for (const auto& r : out.rows) rows.push_back(to_json(r));
  summary["rows"] = std::move(rows);
  write_text(out.dir / "summary.json", summary.dump(2) + "\n");
  write_text(out.dir / "summary.txt", format_table(out.rows));
  if (!first_error.empty()) throw EpisodeFailure(first_error);
  return out;
}

}  // namespace cobel
