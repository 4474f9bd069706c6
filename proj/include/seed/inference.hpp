#pragma once

#include <optional>
#include <span>
#include <vector>

#include "seed/trainer.hpp"

namespace seed {

/// softmax(logits / tau) with the maximum subtracted first.
Vec temp_softmax(std::span<const double> logits, double tau);

/// Everything behind one prediction. Rows of `log_likelihood` and `softmax`
/// follow `experts`; columns follow `candidates`. An expert whose bank lacks
/// a candidate gives it log-likelihood -inf and probability 0. `averaged`
/// holds, per class, the mean softmax over the experts that hold the class,
/// renormalised to sum to one.
struct PredictionTrace {
  std::vector<int> candidates;
  std::vector<int> experts;
  std::vector<Vec> log_likelihood;
  std::vector<Vec> softmax;
  Vec averaged;
  int predicted = -1;
};

/// Task-agnostic when `task` is empty (all seen classes), otherwise restricted
/// to that completed task's classes (0-based task index).
PredictionTrace predict(const EnsembleState& state, std::span<const double> x, double tau,
                        std::optional<int> task = std::nullopt);

/// Scores precomputed embeddings (one per expert of `state`, untrained
/// entries ignored) over `candidates`.
PredictionTrace score_embeddings(const EnsembleState& state, std::span<const Vec> embeddings,
                                 std::span<const int> candidates, double tau);

/// Restricts an agnostic trace to `task_classes` and renormalises the average.
PredictionTrace restrict_to(const PredictionTrace& trace, std::span<const int> task_classes);

/// Expert k alone: its own bank over `candidates`, argmax of log-likelihood.
/// Returns -1 when the bank holds none of the candidates.
int predict_single_expert(const EnsembleState& state, int expert, std::span<const double> embedding,
                          std::span<const int> candidates);

/// Fraction of correct predictions. Throws EmptyEvalSet on no samples.
double evaluate(const EnsembleState& state, std::span<const Vec> x, std::span<const int> y, double tau,
                std::optional<int> task = std::nullopt);

}  // namespace seed
