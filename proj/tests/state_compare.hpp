#pragma once

#include "seed/trainer.hpp"

namespace seed::testing {

inline bool same_gaussian(const ClassGaussian& a, const ClassGaussian& b) {
  if (a.mode() != b.mode() || a.mean() != b.mean()) return false;
  if (!a.has_covariance()) return true;
  return a.cov().matrix() == b.cov().matrix() && a.logdet() == b.logdet();
}

inline bool same_banks(const std::vector<ClassBank>& a, const std::vector<ClassBank>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].class_ids() != b[k].class_ids()) return false;
    for (const auto& [c, g] : a[k].entries())
      if (!same_gaussian(g, b[k].at(c))) return false;
  }
  return true;
}

/// Everything that determines future behaviour, compared bit for bit.
inline bool same_state(const EnsembleState& a, const EnsembleState& b) {
  return a.trunk == b.trunk && a.heads == b.heads && same_banks(a.banks, b.banks) &&
         a.task_classes == b.task_classes && a.tasks_completed == b.tasks_completed &&
         a.init_rng.snapshot() == b.init_rng.snapshot() && a.shuffle_rng.snapshot() == b.shuffle_rng.snapshot() &&
         a.strategy_rng.snapshot() == b.strategy_rng.snapshot();
}

}  // namespace seed::testing
