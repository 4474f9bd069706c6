#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "seed/inference.hpp"
#include "seed/metrics.hpp"

namespace seed {

struct TaskStream {
  std::vector<TaskData> train;
  std::vector<TaskData> test;
};

struct RunOptions {
  /// Train a joint reference per step for intransigence.
  bool joint_reference = false;
  std::uint64_t joint_seed = 0;
  /// Called for every test sample of the final evaluation step.
  std::function<void(int task, int label, const PredictionTrace& agnostic)> trace;
};

struct RunReport {
  AccuracyMatrix agnostic;
  AccuracyMatrix aware;
  std::vector<double> step_agnostic;  ///< all seen test samples after each task
  std::vector<double> step_aware;
  std::vector<TaskLog> logs;
  std::vector<std::vector<double>> relative_accuracy;
  ParamCounts params;
  std::optional<std::vector<double>> joint;

  double avg_inc_agnostic() const { return avg_inc_accuracy(step_agnostic); }
  double avg_inc_aware() const { return avg_inc_accuracy(step_aware); }
};

/// Accuracy of `state` on test tasks [0, upto]: fills one row of each matrix
/// and the per-step figures.
struct StepEvaluation {
  std::vector<double> agnostic;
  std::vector<double> aware;
  double step_agnostic = 0.0;
  double step_aware = 0.0;
};
StepEvaluation evaluate_step(const EnsembleState& state, std::span<const TaskData> tests, double tau,
                             const RunOptions* opts = nullptr);

/// Trains the remaining tasks of `stream` (from state.tasks_completed on),
/// evaluating after each one.
RunReport run_stream(EnsembleState& state, const TaskStream& stream, const TrainConfig& cfg,
                     const RunOptions& opts = {});

/// Accuracy of a jointly trained single network (trunk + one head + linear
/// classifier) on `test`, trained on the union of `train`.
double joint_reference_accuracy(const NetConfig& net, std::span<const TaskData> train, const TaskData& test,
                                const TrainConfig& cfg, std::uint64_t seed);

}  // namespace seed
