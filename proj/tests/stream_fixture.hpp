#pragma once

#include "seed/runner.hpp"
#include "seed/scenarios.hpp"
#include "seed/trainer.hpp"

namespace seed::testing {

/// Small drifting blob stream with `tasks` tasks of `per_task` classes.
inline TaskStream blob_stream(int tasks, int per_task, std::uint64_t seed, int train_per_class = 40,
                              int test_per_class = 30, std::size_t input_dim = 6) {
  BlobSpec spec;
  spec.classes = tasks * per_task;
  spec.input_dim = input_dim;
  spec.spread = 3.0;
  spec.cov_scale = 1.0;
  spec.train_per_class = train_per_class;
  spec.test_per_class = test_per_class;
  spec.drift = DriftSpec{per_task, 0.5, 1.0};
  spec.seed = seed;
  const BlobData data = synth_blobs(spec);
  TaskSplitSpec split;
  split.tasks = tasks;
  split.shuffle = false;
  return TaskStream{make_split(data.train, split), make_split(data.test, split)};
}

inline NetConfig tiny_net(std::size_t input_dim = 6, std::uint64_t seed = 3) {
  NetConfig net;
  net.input_dim = input_dim;
  net.trunk_layers = {8};
  net.head_layers = {8};
  net.embed_dim = 3;
  net.rng_seed = seed;
  return net;
}

inline TrainConfig quick_training(SelectionStrategy strategy = SelectionStrategy::KlMax) {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 16;
  cfg.lr = 0.02;
  cfg.milestones = {{2, 10.0}};
  cfg.strategy = strategy;
  return cfg;
}

}  // namespace seed::testing
