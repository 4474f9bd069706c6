#include "seed/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "seed/error.hpp"
#include "seed/rng.hpp"

namespace seed {

namespace {

void split_evenly(std::vector<int>& sizes, int total, int parts) {
  for (int p = 0; p < parts; ++p) sizes.push_back(total / parts + (p < total % parts ? 1 : 0));
}

}  // namespace

std::vector<std::vector<int>> partition_classes(int num_classes, const TaskSplitSpec& spec) {
  if (spec.tasks < 1) throw Error(ErrorKind::TooManyTasks, "at least one task required");
  if (spec.tasks > num_classes)
    throw Error(ErrorKind::TooManyTasks, std::to_string(spec.tasks) + " tasks for " + std::to_string(num_classes) + " classes");

  std::vector<int> order(static_cast<std::size_t>(num_classes));
  std::iota(order.begin(), order.end(), 0);
  if (spec.shuffle) {
    Rng rng(spec.order_seed);
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
  }

  std::vector<int> sizes;
  if (spec.kind == TaskSplitSpec::Kind::Equal) {
    split_evenly(sizes, num_classes, spec.tasks);
  } else {
    if (!(spec.first_fraction > 0.0 && spec.first_fraction < 1.0))
      throw Error(ErrorKind::InvalidConfig, "first_fraction must lie in (0, 1)");
    const int first = static_cast<int>(std::lround(spec.first_fraction * num_classes));
    const int rest = num_classes - first;
    if (first < 1 || (spec.tasks > 1 && rest < spec.tasks - 1) || (spec.tasks == 1 && rest != 0))
      throw Error(ErrorKind::TooManyTasks, "large-first split cannot fill every task");
    sizes.push_back(first);
    if (spec.tasks > 1) split_evenly(sizes, rest, spec.tasks - 1);
  }

  std::vector<std::vector<int>> out;
  auto it = order.begin();
  for (int size : sizes) {
    std::vector<int> classes(it, it + size);
    std::sort(classes.begin(), classes.end());
    out.push_back(std::move(classes));
    it += size;
  }
  return out;
}

std::vector<TaskData> make_split(const Dataset& data, const TaskSplitSpec& spec) {
  const auto parts = partition_classes(data.num_classes, spec);
  std::vector<int> task_of(static_cast<std::size_t>(data.num_classes), -1);
  std::vector<TaskData> tasks(parts.size());
  for (std::size_t t = 0; t < parts.size(); ++t) {
    tasks[t].task = static_cast<int>(t);
    tasks[t].classes = parts[t];
    for (int c : parts[t]) task_of[static_cast<std::size_t>(c)] = static_cast<int>(t);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int c = data.y[i];
    if (c < 0 || c >= data.num_classes) throw Error(ErrorKind::MissingClass, "label " + std::to_string(c));
    TaskData& task = tasks[static_cast<std::size_t>(task_of[static_cast<std::size_t>(c)])];
    task.x.push_back(data.x[i]);
    task.y.push_back(c);
  }
  return tasks;
}

Vec apply_drift(std::span<const double> x, int group, const DriftSpec& drift, std::span<const double> direction) {
  Vec out(x.begin(), x.end());
  if (group <= 0) return out;
  const double theta = drift.angle * group;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (std::size_t i = 0; i + 1 < out.size(); i += 2) {
    const double a = out[i];
    const double b = out[i + 1];
    out[i] = c * a - s * b;
    out[i + 1] = s * a + c * b;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += drift.translation * group * direction[i];
  return out;
}

BlobData synth_blobs(const BlobSpec& spec) {
  if (spec.classes < 1 || spec.input_dim == 0 || !(spec.spread > 0.0))
    throw Error(ErrorKind::InvalidConfig, "blob spec needs classes, input_dim and spread > 0");
  if (spec.train_per_class < 2 || spec.test_per_class < 1)
    throw Error(ErrorKind::InvalidConfig, "blob spec needs >= 2 train samples per class");
  const std::size_t d = spec.input_dim;
  Rng rng(spec.seed);

  Vec direction(d);
  for (double& v : direction) v = rng.normal();
  const double norm = std::sqrt(squared_norm(direction));
  for (double& v : direction) v /= norm;

  std::vector<Vec> means(static_cast<std::size_t>(spec.classes), Vec(d));
  std::vector<Matrix> mixing(static_cast<std::size_t>(spec.classes), Matrix(d, d));
  const double mix_scale = spec.cov_scale / std::sqrt(static_cast<double>(d));
  for (int c = 0; c < spec.classes; ++c) {
    for (double& v : means[c]) v = spec.spread * rng.normal();
    for (double& v : mixing[c].data()) v = mix_scale * rng.normal();
  }

  auto group_of = [&](int c) { return spec.drift.group_size > 0 ? c / spec.drift.group_size : 0; };

  BlobData out;
  for (Dataset* ds : {&out.train, &out.test}) {
    ds->input_dim = d;
    ds->num_classes = spec.classes;
  }
  Vec z(d);
  for (int c = 0; c < spec.classes; ++c) {
    for (int split = 0; split < 2; ++split) {
      Dataset& ds = split == 0 ? out.train : out.test;
      const int count = split == 0 ? spec.train_per_class : spec.test_per_class;
      for (int i = 0; i < count; ++i) {
        for (double& v : z) v = rng.normal();
        Vec x = mixing[c] * z;
        for (std::size_t k = 0; k < d; ++k) x[k] += means[c][k];
        ds.x.push_back(apply_drift(x, group_of(c), spec.drift, direction));
        ds.y.push_back(c);
      }
    }
  }

  // True parameters in drifted coordinates: mean maps through the isometry,
  // covariance through its rotation part.
  for (int c = 0; c < spec.classes; ++c) {
    out.means.push_back(apply_drift(means[c], group_of(c), spec.drift, direction));
    Matrix rotated(d, d);
    const DriftSpec rotation_only{spec.drift.group_size, spec.drift.angle, 0.0};
    for (std::size_t col = 0; col < d; ++col) {
      Vec column(d);
      for (std::size_t r = 0; r < d; ++r) column[r] = mixing[c](r, col);
      const Vec moved = apply_drift(column, group_of(c), rotation_only, direction);
      for (std::size_t r = 0; r < d; ++r) rotated(r, col) = moved[r];
    }
    out.covs.push_back(rotated * rotated.transpose());
  }
  return out;
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& what) {
  if (bytes.size() < offset + 4) throw Error(ErrorKind::TruncatedFile, what + " header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);
  if (read_be32(img, 0, "images") != 0x00000803) throw Error(ErrorKind::BadMagic, images.string());
  if (read_be32(lab, 0, "labels") != 0x00000801) throw Error(ErrorKind::BadMagic, labels.string());
  const std::size_t count = read_be32(img, 4, "images");
  const std::size_t rows = read_be32(img, 8, "images");
  const std::size_t cols = read_be32(img, 12, "images");
  const std::size_t label_count = read_be32(lab, 4, "labels");
  if (count != label_count)
    throw Error(ErrorKind::CountMismatch, std::to_string(count) + " images vs " + std::to_string(label_count) + " labels");
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw Error(ErrorKind::TruncatedFile, images.string());
  if (lab.size() < 8 + count) throw Error(ErrorKind::TruncatedFile, labels.string());

  Dataset ds;
  ds.input_dim = pixels;
  ds.x.reserve(count);
  ds.y.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec x(pixels);
    const unsigned char* p = img.data() + 16 + i * pixels;
    for (std::size_t k = 0; k < pixels; ++k) x[k] = static_cast<double>(p[k]) / 255.0;
    ds.x.push_back(std::move(x));
    const int label = lab[8 + i];
    ds.y.push_back(label);
    ds.num_classes = std::max(ds.num_classes, label + 1);
  }
  return ds;
}

}  // namespace seed
