#include "seed/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "seed/error.hpp"
#include "seed/inference.hpp"
#include "seed/parallel.hpp"

namespace seed {

void AccuracyMatrix::add_row(std::vector<double> row) {
  if (row.size() != rows.size() + 1) throw Error(ErrorKind::DimensionMismatch, "accuracy row must extend the triangle");
  for (double a : row)
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorKind::NonFiniteInput, "accuracy outside [0, 1]");
  rows.push_back(std::move(row));
}

double avg_inc_accuracy(std::span<const double> step_accuracy) {
  if (step_accuracy.empty()) throw Error(ErrorKind::EmptyEvalSet, "no completed tasks");
  double sum = 0.0;
  for (double a : step_accuracy) sum += a;
  return sum / static_cast<double>(step_accuracy.size());
}

std::optional<double> forgetting(const AccuracyMatrix& m) {
  const std::size_t t = m.tasks();
  if (t < 2) return std::nullopt;
  const auto& last = m.rows.back();
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < t; ++j) {
    double best = m.rows[j][j];
    for (std::size_t l = j; l < t; ++l) best = std::max(best, m.rows[l][j]);
    sum += best - last[j];
  }
  return sum / static_cast<double>(t - 1);
}

double intransigence(const AccuracyMatrix& m, std::span<const double> joint) {
  if (joint.size() != m.tasks() || joint.empty())
    throw Error(ErrorKind::MissingReference, "joint reference covers " + std::to_string(joint.size()) + " of " +
                                                 std::to_string(m.tasks()) + " tasks");
  double sum = 0.0;
  for (std::size_t k = 0; k < joint.size(); ++k) sum += joint[k] - m.rows[k][k];
  return sum / static_cast<double>(joint.size());
}

std::vector<std::vector<double>> expert_relative_accuracy(const EnsembleState& state, std::span<const TaskData> tests) {
  const auto experts = static_cast<std::size_t>(state.experts());
  const auto seen = state.seen_classes();
  std::vector<std::vector<double>> acc(experts, std::vector<double>(tests.size(), 0.0));
  for (std::size_t j = 0; j < tests.size(); ++j) {
    const TaskData& test = tests[j];
    if (test.x.empty()) throw Error(ErrorKind::EmptyEvalSet, "task " + std::to_string(j + 1));
    parallel_for(experts, [&](std::size_t k) {
      if (!state.heads[k].trained) return;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < test.x.size(); ++i) {
        const Vec e = forward_embed(state.trunk, state.heads[k], test.x[i]);
        hits += predict_single_expert(state, static_cast<int>(k), e, seen) == test.y[i] ? 1 : 0;
      }
      acc[k][j] = static_cast<double>(hits) / static_cast<double>(test.x.size());
    });
  }
  for (std::size_t j = 0; j < tests.size(); ++j) {
    double mean = 0.0;
    for (std::size_t k = 0; k < experts; ++k) mean += acc[k][j];
    mean /= static_cast<double>(experts);
    for (std::size_t k = 0; k < experts; ++k) acc[k][j] -= mean;
  }
  return acc;
}

std::vector<OverlapRow> overlap_report(std::span<const TaskLog> logs) {
  std::vector<OverlapRow> rows;
  for (const auto& log : logs) rows.push_back({log.task, log.selection, log.trained, log.overlap});
  return rows;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string accuracy_csv(const AccuracyMatrix& m) {
  std::string out = "after_task";
  for (std::size_t j = 0; j < m.tasks(); ++j) out += ",task_" + std::to_string(j + 1);
  out += '\n';
  for (std::size_t k = 0; k < m.tasks(); ++k) {
    out += std::to_string(k + 1);
    for (std::size_t j = 0; j < m.tasks(); ++j) out += "," + (j <= k ? format_fixed(m.rows[k][j]) : std::string());
    out += '\n';
  }
  return out;
}

std::string relative_accuracy_csv(const std::vector<std::vector<double>>& rel) {
  const std::size_t tasks = rel.empty() ? 0 : rel.front().size();
  std::string out = "expert";
  for (std::size_t j = 0; j < tasks; ++j) out += ",task_" + std::to_string(j + 1);
  out += '\n';
  for (std::size_t k = 0; k < rel.size(); ++k) {
    out += std::to_string(k + 1);
    for (double v : rel[k]) out += "," + format_fixed(v);
    out += '\n';
  }
  return out;
}

std::string overlap_csv(std::span<const OverlapRow> rows, int experts) {
  std::string out = "task,chosen";
  for (int k = 0; k < experts; ++k) out += ",expert_" + std::to_string(k + 1);
  out += '\n';
  for (const auto& row : rows) {
    out += std::to_string(row.task + 1) + ",";
    if (!row.selection) {
      out += "no selection";
    } else {
      for (std::size_t i = 0; i < row.chosen.size(); ++i) out += (i ? ";" : "") + std::to_string(row.chosen[i] + 1);
    }
    for (int k = 0; k < experts; ++k) {
      out += ",";
      if (row.selection && static_cast<std::size_t>(k) < row.scores.size()) out += format_fixed(row.scores[static_cast<std::size_t>(k)]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace seed
