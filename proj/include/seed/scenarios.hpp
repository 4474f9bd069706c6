#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "seed/linalg.hpp"

namespace seed {

struct Dataset {
  std::size_t input_dim = 0;
  int num_classes = 0;
  std::vector<Vec> x;
  std::vector<int> y;

  std::size_t size() const { return x.size(); }
};

/// Samples of one task's classes (global class ids).
struct TaskData {
  int task = 0;  ///< 0-based position in the stream
  std::vector<int> classes;
  std::vector<Vec> x;
  std::vector<int> y;

  std::size_t size() const { return x.size(); }
};

struct TaskSplitSpec {
  enum class Kind { Equal, LargeFirst };
  Kind kind = Kind::Equal;
  int tasks = 1;
  double first_fraction = 0.5;  ///< LargeFirst only
  bool shuffle = true;
  std::uint64_t order_seed = 0;
};

/// Class ids per task. With `shuffle`, the class order is a Fisher-Yates
/// permutation drawn from Rng(order_seed) (j = below(i + 1), i descending);
/// each task's ids are then sorted.
std::vector<std::vector<int>> partition_classes(int num_classes, const TaskSplitSpec& spec);

std::vector<TaskData> make_split(const Dataset& data, const TaskSplitSpec& spec);

struct DriftSpec {
  int group_size = 0;        ///< classes per drift group; 0 disables drift
  double angle = 0.0;        ///< radians of rotation added per group
  double translation = 0.0;  ///< shift along a seeded unit direction per group
};

struct BlobSpec {
  int classes = 10;
  std::size_t input_dim = 8;
  double spread = 3.0;
  double cov_scale = 1.0;
  int train_per_class = 100;
  int test_per_class = 50;
  DriftSpec drift;
  std::uint64_t seed = 0;
};

struct BlobData {
  Dataset train;
  Dataset test;
  std::vector<Vec> means;    ///< true class means after drift
  std::vector<Matrix> covs;  ///< true class covariances after drift
};

/// Drift for group g: rotate coordinate pairs (2i, 2i+1) by g * angle, then
/// translate by g * translation * u.
Vec apply_drift(std::span<const double> x, int group, const DriftSpec& drift, std::span<const double> direction);

/// Seeded anisotropic Gaussian classes. Generation order from Rng(seed):
/// drift direction u (input_dim normals, normalised); per class its mean
/// (spread * normals) then mixing matrix A (row-major, cov_scale * normal /
/// sqrt(input_dim)); then per class its train samples followed by its test
/// samples, each mean + A z with z standard normal.
BlobData synth_blobs(const BlobSpec& spec);

/// IDX3 images (magic 0x00000803) and IDX1 labels (magic 0x00000801), pixels
/// scaled to [0, 1] and flattened row-major.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace seed
