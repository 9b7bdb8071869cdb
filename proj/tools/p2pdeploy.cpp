// Scenario runner and metrics reporter for the p2p component-deployment simulator.
//
//   p2pdeploy run <scenario-file> [--seed S] [--metrics-out PATH]
//   p2pdeploy stats <metrics-file>
//
// Exit codes: 0 success, 1 assertion failed, 2 parse error, 3 runtime error,
// 4 I/O error, 5 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "p2pdeploy/scenario.hpp"

namespace {

using p2pdeploy::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

bool slurp(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

int run_command(const std::string& scenario_path, std::optional<std::uint64_t> seed_flag, const std::string& metrics_out) {
  std::string text;
  if (!slurp(scenario_path, text)) {
    std::cerr << "error: cannot read scenario " << scenario_path << "\n";
    return code(ExitCode::IoError);
  }
  p2pdeploy::Scenario scenario;
  const auto base_dir = std::filesystem::path(scenario_path).parent_path();
  try {
    scenario = p2pdeploy::parse_scenario(text, base_dir);
  } catch (const p2pdeploy::Error& e) {
    std::cerr << "error: " << scenario_path << ": " << e.what() << "\n";
    return code(ExitCode::ParseError);
  }

  // Flag beats environment beats the scenario's own seed line.
  std::uint64_t seed = scenario.seed.value_or(0);
  if (const char* env = std::getenv("P2PDEPLOY_SEED")) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: P2PDEPLOY_SEED is not an unsigned integer\n";
      return code(ExitCode::Usage);
    }
  }
  if (seed_flag) seed = *seed_flag;

  auto outcome = p2pdeploy::run_scenario(scenario, seed, base_dir);
  const std::string doc = outcome.metrics.dump(2) + "\n";
  if (metrics_out.empty()) {
    std::cout << doc;
  } else {
    std::ofstream out(metrics_out, std::ios::binary);
    if (!(out << doc)) {
      std::cerr << "error: cannot write " << metrics_out << "\n";
      return code(ExitCode::IoError);
    }
  }
  if (outcome.exit != ExitCode::Ok) std::cerr << "error: " << outcome.diagnostic << "\n";
  return code(outcome.exit);
}

int stats_command(const std::string& path) {
  std::string text;
  if (!slurp(path, text)) {
    std::cerr << "error: cannot read metrics " << path << "\n";
    return code(ExitCode::IoError);
  }
  try {
    auto doc = p2pdeploy::MetricsDocument::parse(text);
    std::cout << p2pdeploy::summarize(doc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << path << ": " << e.what() << "\n";
    return code(ExitCode::ParseError);
  }
  return code(ExitCode::Ok);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p2p component deployment simulator"};
  app.require_subcommand(1);

  std::string scenario_path, metrics_out, metrics_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "execute a scenario file and emit its metrics document");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--seed", seed, "simulation seed (overrides P2PDEPLOY_SEED and the scenario)");
  run->add_option("--metrics-out", metrics_out, "write the metrics document here instead of stdout");

  auto* stats = app.add_subcommand("stats", "summarize a metrics document");
  stats->add_option("metrics", metrics_path, "metrics document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return code(ExitCode::Usage);
  }

  if (run->parsed()) return run_command(scenario_path, seed, metrics_out);
  return stats_command(metrics_path);
}
