#pragma once

// Episode and batch runner: consensus, the lockstep decision loop, per-episode
// logs and metrics, and the per-mode summary.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cobel/collab_engine.hpp"
#include "cobel/episode_log.hpp"
#include "cobel/reasoner.hpp"
#include "cobel/scenario.hpp"

namespace cobel {

struct RunConfig {
  std::filesystem::path scenario;
  std::vector<std::uint64_t> seeds;
  int agents = 2;
  reasoner::Backend backend = reasoner::Backend::Scripted;
  std::vector<CommMode> modes{CommMode::Adaptive};
  std::filesystem::path out = "runs";
  std::string run_name;  // subdirectory under `out`; a UTC timestamp when empty
  int max_rounds = 3;
  int cooldown = 1;
  int jobs = 1;
  std::string base_url;
  std::string model;
  int max_in_flight = 4;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EpisodeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigError.
void validate(const RunConfig& cfg);

/// `1..20`, `3`, `1,4,9` or a mix such as `1..3,7`.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

struct EpisodeResult {
  EpisodeLog log;
  EpisodeMetrics metrics;
};

/// Runs one episode in memory. `scenario` must already carry cfg.agents agents.
EpisodeResult run_episode(const Scenario& scenario, const RunConfig& cfg, CommMode mode, std::uint64_t seed);

struct SummaryRow {
  CommMode mode = CommMode::Adaptive;
  int episodes = 0;
  double transport_rate = 0.0;
  double frames = 0.0;
  double decision_ticks = 0.0;
  double comm_tokens = 0.0;
  double messages_sent = 0.0;
};

struct BatchResult {
  std::filesystem::path dir;
  std::vector<SummaryRow> rows;
};

/// Runs every (mode, seed) pair, writing `<dir>/<mode>/<seed>/episode.log`,
/// `metrics.json` and `<dir>/summary.{json,txt}`. Episode errors stop the batch
/// after writing a summary of what finished; then EpisodeFailure is thrown.
BatchResult run_batch(const RunConfig& cfg);

/// Recomputes the summary from the logs persisted under `dir`.
std::vector<SummaryRow> summarize(const std::filesystem::path& dir);

Json to_json(const SummaryRow& r);
std::string format_table(const std::vector<SummaryRow>& rows);

}  // namespace cobel
