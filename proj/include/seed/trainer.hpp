#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "seed/gaussian.hpp"
#include "seed/net.hpp"
#include "seed/rng.hpp"
#include "seed/scenarios.hpp"

namespace seed {

enum class SelectionStrategy { KlMax, KlMin, Random, RoundRobin, TrainAll };

const char* to_string(SelectionStrategy s);
std::optional<SelectionStrategy> parse_strategy(std::string_view text);

struct TrainConfig {
  double alpha = 0.99;
  double tau = 3.0;
  int epochs = 60;
  int batch_size = 64;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<std::pair<int, double>> milestones{{30, 10.0}, {45, 10.0}};
  double eps = 1e-4;
  RepresentationMode mode = RepresentationMode::FullCovariance;
  SelectionStrategy strategy = SelectionStrategy::KlMax;

  /// Throws InvalidConfig.
  void validate() const;
};

/// What happened while learning one task. Expert indices are 0-based here
/// and 1-based in every emitted file.
struct TaskLog {
  int task = 0;
  std::vector<int> classes;
  bool selection = false;              ///< false during bootstrap
  std::vector<int> trained;            ///< experts fine-tuned on this task
  std::vector<double> overlap;         ///< per expert; empty when not computed
  double final_loss = 0.0;
  double final_ce = 0.0;
  double final_kd = 0.0;
  double wall_seconds = 0.0;
};

struct EnsembleState {
  NetConfig net;
  Trunk trunk;
  std::vector<ExpertHead> heads;
  std::vector<ClassBank> banks;
  std::vector<std::vector<int>> task_classes;  ///< one entry per completed task
  int tasks_completed = 0;
  Rng init_rng;
  Rng shuffle_rng;
  Rng strategy_rng;
  std::vector<TaskLog> logs;

  int experts() const { return static_cast<int>(heads.size()); }
  std::vector<int> trained_experts() const;
  std::vector<int> seen_classes() const;
};

/// Fresh ensemble of `experts` heads. Parameters (and later linear heads)
/// draw from Rng(net.rng_seed); shuffling and strategy draws come from the
/// "shuffle" and "strategy" sub-streams of `global_seed`.
EnsembleState make_ensemble(const NetConfig& net, int experts, std::uint64_t global_seed);

/// Embeddings of `x` in one expert's latent space.
std::vector<Vec> embed_all(const EnsembleState& state, int expert, std::span<const Vec> x);

struct Selection {
  int expert = 0;
  std::vector<double> overlap;        ///< per expert (empty if not computable)
  std::vector<ClassBank> fitted;      ///< new-class Gaussians per expert, pre fine-tuning
};

/// Fits the task's classes in every trained expert, scores overlap and picks
/// one expert according to the strategy. Ties go to the lowest index.
/// TrainAll returns expert 0; the caller trains every expert.
Selection select_expert(EnsembleState& state, const TaskData& task, const TrainConfig& cfg);

/// Index chosen from an overlap table: argmax (KlMax) or argmin (KlMin).
int pick_from_overlap(std::span<const double> overlap, SelectionStrategy strategy);

/// Learns one task: bootstrap (expert t, CE only, trunk trained on the first
/// task and frozen after it) or selection + distillation fine-tuning; then
/// extends the class banks.
TaskLog train_task(EnsembleState& state, const TaskData& task, const TrainConfig& cfg);

/// Fine-tunes one expert on `task` with a fresh linear head. Exposed for the
/// joint reference and tests.
struct FitStats {
  double loss = 0.0;
  double ce = 0.0;
  double kd = 0.0;
};
FitStats fine_tune(Trunk& trunk, ExpertHead& head, const TaskData& task, const TrainConfig& cfg, bool bootstrap,
                   Rng& init_rng, Rng& shuffle_rng, LinearHead* keep_linear = nullptr);

}  // namespace seed
