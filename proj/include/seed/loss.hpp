#pragma once

#include <optional>
#include <span>
#include <vector>

#include "seed/net.hpp"

namespace seed {

/// Mean cross-entropy of `logits` rows against local targets.
double cross_entropy(std::span<const Vec> logits, std::span<const int> targets);

/// (1 - alpha) CE + alpha * mean_i ||new_i - old_i||. With `bootstrap` set the
/// distillation term is dropped and plain CE is returned.
double task_loss(std::span<const Vec> logits, std::span<const int> targets, std::span<const Vec> embed_new,
                 std::span<const Vec> embed_old, double alpha, bool bootstrap);

struct LossSpec {
  double alpha = 0.0;
  bool bootstrap = true;  ///< CE only
};

struct LossGrads {
  double loss = 0.0;
  double ce = 0.0;
  double kd = 0.0;
  std::optional<MlpGrads> trunk;  ///< absent while the trunk is frozen
  MlpGrads head;
  DenseLayer linear;
};

/// One minibatch: forward through trunk, head and linear head, then
/// backpropagate task_loss. `old_head` is the frozen pre-task snapshot used
/// for distillation; it may be null in bootstrap mode.
LossGrads loss_and_grads(const Trunk& trunk, const ExpertHead& head, const LinearHead& linear,
                         const ExpertHead* old_head, std::span<const Vec* const> inputs,
                         std::span<const int> targets, const LossSpec& spec);

}  // namespace seed
