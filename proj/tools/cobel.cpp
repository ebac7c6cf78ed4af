#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cobel/harness.hpp"
#include "cobel/reasoner.hpp"
#include "cobel/sbl.hpp"
#include "cobel/stub_server.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kEpisodeFailure = 3;

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cobel::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const cobel::RunConfig& cfg) {
  const auto res = cobel::run_batch(cfg);
  std::cout << cobel::format_table(res.rows) << "output: " << res.dir.string() << '\n';
  return 0;
}

int parse_cmd(const std::string& expr, const std::string& tmpl, const std::string& file,
              const std::vector<std::string>& var_args) {
  if (!expr.empty()) {
    std::cout << cobel::sbl::serialize(cobel::sbl::parse(expr)) << '\n';
    return 0;
  }
  const auto id = cobel::reasoner::template_from_name(tmpl);
  if (!id) throw cobel::ConfigError("unknown template '" + tmpl + "'");
  cobel::reasoner::Vars vars;
  for (const auto& v : var_args) {
    const auto eq = v.find('=');
    if (eq == std::string::npos) throw cobel::ConfigError("--var expects NAME=VALUE, got '" + v + "'");
    vars[v.substr(0, eq)] = v.substr(eq + 1);
  }
  const auto resp = cobel::reasoner::parse_sections(cobel::reasoner::get(*id), slurp(file), vars);
  cobel::Json j = cobel::Json::object();
  for (const auto& [label, body] : resp.sections) j[label] = body;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int stub_cmd(const std::string& host, int port, const std::string& dir) {
  cobel::stub::StubServer server(cobel::stub::transcript_handler(dir));
  std::cerr << "serving " << dir << " on http://" << host << ":" << port << "/v1\n";
  server.serve(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-based multi-agent collaboration runner"};
  app.require_subcommand(1);

  cobel::RunConfig cfg;
  std::string seeds = "1..20";
  std::string backend = "scripted";
  std::vector<std::string> modes{"adaptive"};
  auto* run_app = app.add_subcommand("run", "Run episodes and write logs, metrics and a summary");
  run_app->add_option("--scenario", cfg.scenario, "Scenario file")->required();
  run_app->add_option("--seeds", seeds, "Seeds, e.g. 1..20 or 1,4,9")->capture_default_str();
  run_app->add_option("--agents", cfg.agents, "Number of agents")->capture_default_str();
  run_app->add_option("--backend", backend, "scripted or llm")->capture_default_str();
  run_app->add_option("--mode", modes, "adaptive, always or never; repeatable")->capture_default_str();
  run_app->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  run_app->add_option("--run-name", cfg.run_name, "Run subdirectory (default: UTC timestamp)");
  run_app->add_option("--base-url", cfg.base_url, "Chat completion base URL, e.g. http://host:port/v1");
  run_app->add_option("--model", cfg.model, "Model name");
  run_app->add_option("--max-rounds", cfg.max_rounds, "Consensus review rounds")->capture_default_str();
  run_app->add_option("--cooldown", cfg.cooldown, "Decision ticks between adaptive messages")->capture_default_str();
  run_app->add_option("--jobs", cfg.jobs, "Concurrent episodes")->capture_default_str();
  run_app->add_option("--max-in-flight", cfg.max_in_flight, "Concurrent chat requests per episode")
      ->capture_default_str();

  std::string expr, tmpl, file = "-";
  std::vector<std::string> var_args;
  auto* parse_app = app.add_subcommand("parse", "Canonicalize an SBL expression or split a model answer");
  auto* expr_opt = parse_app->add_option("--expr", expr, "SBL expression or rule");
  auto* tmpl_opt = parse_app->add_option("--template", tmpl, "Template name whose labels to split by");
  expr_opt->excludes(tmpl_opt);
  parse_app->add_option("--file", file, "Answer text file ('-' for stdin)")->capture_default_str();
  parse_app->add_option("--var", var_args, "Template variable NAME=VALUE");

  std::string host = "127.0.0.1";
  int port = 8089;
  std::string dir;
  auto* stub_app = app.add_subcommand("stub-server", "Serve canned chat completions from a transcript directory");
  stub_app->add_option("--host", host)->capture_default_str();
  stub_app->add_option("--port", port)->capture_default_str();
  stub_app->add_option("--transcripts", dir, "Directory of <template>.txt answers")->required()->check(
      CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*run_app) {
      cfg.seeds = cobel::parse_seeds(seeds);
      if (backend == "scripted") {
        cfg.backend = cobel::reasoner::Backend::Scripted;
      } else if (backend == "llm") {
        cfg.backend = cobel::reasoner::Backend::Llm;
      } else {
        throw cobel::ConfigError("unknown backend '" + backend + "'");
      }
      cfg.modes.clear();
      for (const auto& m : modes) {
        const auto mode = cobel::comm_mode_from_string(m);
        if (!mode) throw cobel::ConfigError("unknown mode '" + m + "'");
        cfg.modes.push_back(*mode);
      }
      return run(cfg);
    }
    if (*parse_app) {
      if (expr.empty() && tmpl.empty()) throw cobel::ConfigError("parse needs --expr or --template");
      return parse_cmd(expr, tmpl, file, var_args);
    }
    return stub_cmd(host, port, dir);
  } catch (const cobel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cobel::EpisodeFailure& e) {
    std::cerr << "episode failure: " << e.what() << '\n';
    return kEpisodeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
