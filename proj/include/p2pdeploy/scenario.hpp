#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "p2pdeploy/repo.hpp"

namespace p2pdeploy {

using MetricsDocument = nlohmann::ordered_json;

struct Command {
  std::size_t line = 0;
  std::string verb;
  std::vector<std::string> args;
  std::map<std::string, std::string> options;  // key=value arguments
};

// Line-oriented scenario: one command per line, '#' starts a comment.
struct Scenario {
  std::optional<std::uint64_t> seed;
  std::vector<Command> commands;
};

// Parses and validates the whole file; nothing is executed. Relative
// descriptor paths are resolved against base_dir. Throws ParseError.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});

enum class ExitCode : int { Ok = 0, AssertionFailed = 1, ParseError = 2, RuntimeError = 3, IoError = 4, Usage = 5 };

struct RunOutcome {
  ExitCode exit = ExitCode::Ok;
  std::string diagnostic;  // one line, empty on success
  MetricsDocument metrics;
};

// Knobs a scenario can set with the `config` command.
struct ScenarioConfig {
  NetConfig net;
  std::size_t payload_size = 4096;
  bool random_ids = false;
};

struct WorkloadStats {
  std::vector<std::string> bundles;
  std::vector<std::uint64_t> requests;  // per bundle, same order
  std::uint64_t failures = 0;
};

// Raised by the `assert` command when its predicate does not hold.
class AssertionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Executes scenario commands against one SimNetwork. Usable directly from
// tests; run_scenario() wraps it for the CLI.
class ScenarioRunner {
 public:
  ScenarioRunner(std::uint64_t seed, std::filesystem::path base_dir = {});

  // Runs one command. Protocol outcomes of lookup, install, publish, remove
  // and lifecycle commands are recorded rather than thrown; structural
  // failures throw Error and a false assertion throws AssertionFailed.
  void execute(const Command& cmd);

  SimNetwork& network();
  const SimNetwork& network() const;
  const ScenarioConfig& config() const { return config_; }
  GatewayState& gateway(std::string_view node_name);
  NodeId node_id(std::string_view node_name) const;
  std::string node_name(NodeId id) const;
  const WorkloadStats& last_workload() const { return workload_; }
  const std::vector<std::string>& published() const { return published_; }

  ComponentPayload make_payload(std::string_view bundle, std::size_t size) const;

  MetricsDocument metrics() const;

  // Evaluates an assert predicate without side effects; returns true when it holds.
  bool evaluate(const std::string& predicate) const;

 private:
  void ensure_network();
  NodeId add_node(const std::string& name, std::optional<NodeId> via);
  std::string next_node_name();
  void do_publish(const Command& cmd);
  void do_workload(const Command& cmd);
  void record_command(const Command& cmd, const std::string& result);
  MetricsDocument dump() const;

  std::uint64_t seed_;
  std::filesystem::path base_dir_;
  ScenarioConfig config_;
  std::unique_ptr<SimNetwork> net_;
  std::map<std::string, NodeId> names_;
  std::map<NodeId, std::string> ids_;
  std::map<std::string, GatewayState> gateways_;
  RepositoryIndex catalog_;
  std::vector<std::string> published_;
  std::size_t created_ = 0;
  WorkloadStats workload_;

  struct LastLookup {
    bool ok = false;
    std::string status;
    int hops = -1;
    std::string served_by;
  };
  std::string last_result_ = "ok";
  std::optional<LastLookup> last_lookup_;
  int last_publish_hops_ = -1;
  MetricsDocument command_log_ = MetricsDocument::array();
  MetricsDocument dumps_ = MetricsDocument::array();
};

RunOutcome run_scenario(const Scenario& scenario, std::uint64_t seed, const std::filesystem::path& base_dir = {});

// Human-readable report of a metrics document. Throws ParseError when the
// document lacks the expected structure.
std::string summarize(const MetricsDocument& doc);

}  // namespace p2pdeploy
