#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace seed {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct RunCommand {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<int> experts;
  std::optional<double> tau;
  std::optional<double> alpha;
  std::optional<std::string> representation;
  std::optional<std::string> out_dir;
  bool trace = false;
  std::vector<std::pair<std::string, std::string>> sets;  ///< --set key=value
};

struct EvalCommand {
  std::string state_path;
  std::optional<std::string> config_path;  ///< defaults to the config stored in the state
  std::string mode = "both";               ///< agnostic | aware | both
  std::optional<double> tau;
};

struct InspectCommand {
  std::string state_path;
  std::string what;  ///< overlap | diversity | params
};

/// Trains the configured stream and writes report.json, accuracy_matrix.csv,
/// task_aware_matrix.csv, relative_accuracy.csv, overlap.csv, task_log.jsonl,
/// state.bin (and trace.jsonl with tracing) into the output directory.
int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err);

/// Prints task-agnostic and task-aware accuracies as JSON.
int cmd_eval(const EvalCommand& cmd, std::ostream& out, std::ostream& err);

/// Prints the requested table as CSV.
int cmd_inspect(const InspectCommand& cmd, std::ostream& out, std::ostream& err);

}  // namespace seed
