#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seed/scenarios.hpp"
#include "seed/trainer.hpp"

namespace seed {

/// a[k][j]: accuracy on task j's test set after learning task k (j <= k).
struct AccuracyMatrix {
  std::vector<std::vector<double>> rows;

  std::size_t tasks() const { return rows.size(); }
  void add_row(std::vector<double> row);
};

/// Mean of the per-step accuracies (one per completed task).
double avg_inc_accuracy(std::span<const double> step_accuracy);

/// Mean over j < T of max_{j <= l <= T} a[l][j] - a[T][j], so never negative;
/// empty with one task.
std::optional<double> forgetting(const AccuracyMatrix& m);

/// Mean over k of joint[k] - a[k][k]. Throws MissingReference when the
/// reference does not cover every task.
double intransigence(const AccuracyMatrix& m, std::span<const double> joint);

/// experts x tasks: each expert alone (own bank, argmax log-likelihood over
/// every seen class) on each task's test set, minus the column mean.
std::vector<std::vector<double>> expert_relative_accuracy(const EnsembleState& state, std::span<const TaskData> tests);

/// One row per task: chosen experts and the overlap scores that drove them.
struct OverlapRow {
  int task = 0;
  bool selection = false;
  std::vector<int> chosen;
  std::vector<double> scores;
};
std::vector<OverlapRow> overlap_report(std::span<const TaskLog> logs);

/// CSV renderings. Values use fixed 6-decimal formatting; experts and tasks
/// are numbered from 1.
std::string accuracy_csv(const AccuracyMatrix& m);
std::string relative_accuracy_csv(const std::vector<std::vector<double>>& rel);
std::string overlap_csv(std::span<const OverlapRow> rows, int experts);
std::string format_fixed(double v);

}  // namespace seed
