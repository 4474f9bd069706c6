#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "seed/error.hpp"
#include "seed/gaussian.hpp"
#include "seed/rng.hpp"
#include "seed/scenarios.hpp"

using namespace seed;
namespace fs = std::filesystem;

namespace {

Dataset labelled(int classes, int per_class) {
  Dataset d;
  d.input_dim = 1;
  d.num_classes = classes;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      d.x.push_back({static_cast<double>(c)});
      d.y.push_back(c);
    }
  return d;
}

std::vector<std::size_t> sizes(const std::vector<std::vector<int>>& parts) {
  std::vector<std::size_t> out;
  for (const auto& p : parts) out.push_back(p.size());
  return out;
}

void be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

struct IdxFiles {
  fs::path dir = fs::temp_directory_path() / ("seed_idx_" + std::to_string(::getpid()));
  fs::path images = dir / "images.idx3";
  fs::path labels = dir / "labels.idx1";
  IdxFiles() { fs::create_directories(dir); }
  ~IdxFiles() { fs::remove_all(dir); }

  void write(std::uint32_t img_magic, std::uint32_t lab_magic, std::uint32_t img_count, std::uint32_t lab_count,
             std::vector<std::uint8_t> pixels, std::vector<std::uint8_t> labs) {
    std::vector<std::uint8_t> img;
    be32(img, img_magic);
    be32(img, img_count);
    be32(img, 2);
    be32(img, 2);
    img.insert(img.end(), pixels.begin(), pixels.end());
    std::vector<std::uint8_t> lab;
    be32(lab, lab_magic);
    be32(lab, lab_count);
    lab.insert(lab.end(), labs.begin(), labs.end());
    write_bytes(images, img);
    write_bytes(labels, lab);
  }
};

ErrorKind idx_error(const IdxFiles& f) {
  try {
    load_idx(f.images, f.labels);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("equal and large-first splits") {
  TaskSplitSpec equal;
  equal.tasks = 10;
  CHECK(sizes(partition_classes(100, equal)) == std::vector<std::size_t>(10, 10));

  TaskSplitSpec large;
  large.kind = TaskSplitSpec::Kind::LargeFirst;
  large.first_fraction = 0.5;
  large.tasks = 11;
  std::vector<std::size_t> expected{50};
  expected.insert(expected.end(), 10, 5);
  CHECK(sizes(partition_classes(100, large)) == expected);

  TaskSplitSpec four;
  four.tasks = 4;
  CHECK(sizes(partition_classes(4, four)) == std::vector<std::size_t>(4, 1));

  TaskSplitSpec uneven;
  uneven.tasks = 3;
  for (std::size_t n : sizes(partition_classes(10, uneven))) CHECK((n == 3 || n == 4));

  TaskSplitSpec too_many;
  too_many.tasks = 5;
  try {
    partition_classes(4, too_many);
    FAIL("expected TooManyTasks");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooManyTasks);
  }
}

TEST_CASE("property: split class sets are disjoint and cover every class") {
  for (int classes : {7, 20, 33}) {
    for (int tasks = 1; tasks <= classes; tasks += 3) {
      for (bool shuffle : {false, true}) {
        TaskSplitSpec spec;
        spec.tasks = tasks;
        spec.shuffle = shuffle;
        spec.order_seed = static_cast<std::uint64_t>(classes * 31 + tasks);
        const auto parts = partition_classes(classes, spec);
        CHECK(parts.size() == static_cast<std::size_t>(tasks));
        std::set<int> all;
        std::size_t total = 0;
        for (const auto& p : parts) {
          total += p.size();
          all.insert(p.begin(), p.end());
        }
        CHECK(total == static_cast<std::size_t>(classes));
        CHECK(all.size() == static_cast<std::size_t>(classes));
        CHECK(*all.begin() == 0);
        CHECK(*all.rbegin() == classes - 1);
        CHECK(parts == partition_classes(classes, spec));
      }
    }
  }
}

TEST_CASE("make_split routes samples to the task holding their class") {
  const Dataset d = labelled(6, 3);
  TaskSplitSpec spec;
  spec.tasks = 3;
  spec.order_seed = 4;
  const auto tasks = make_split(d, spec);
  REQUIRE(tasks.size() == 3);
  std::size_t total = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(tasks[t].task == static_cast<int>(t));
    total += tasks[t].size();
    const std::set<int> own(tasks[t].classes.begin(), tasks[t].classes.end());
    for (std::size_t i = 0; i < tasks[t].size(); ++i) {
      CHECK(own.contains(tasks[t].y[i]));
      CHECK(tasks[t].x[i][0] == static_cast<double>(tasks[t].y[i]));
    }
  }
  CHECK(total == d.size());
}

TEST_CASE("well separated blobs are classified almost perfectly by the true Bayes rule") {
  BlobSpec spec;
  spec.classes = 6;
  spec.input_dim = 4;
  spec.spread = 10.0;
  spec.cov_scale = 0.5;
  spec.train_per_class = 20;
  spec.test_per_class = 200;
  spec.seed = 3;
  const BlobData data = synth_blobs(spec);
  std::vector<ClassGaussian> truth;
  for (int c = 0; c < spec.classes; ++c)
    truth.push_back(ClassGaussian::from_moments(data.means[c], data.covs[c], RepresentationMode::FullCovariance));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    int best = 0;
    for (int c = 1; c < spec.classes; ++c)
      if (log_likelihood(truth[c], data.test.x[i]) > log_likelihood(truth[best], data.test.x[i])) best = c;
    hits += best == data.test.y[i];
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(data.test.size()) >= 0.99);
  CHECK(data.train.size() == 120);
  CHECK(data.test.size() == 1200);
}

TEST_CASE("classes with nearly equal means are indistinguishable by their means") {
  BlobSpec spec;
  spec.classes = 2;
  spec.input_dim = 3;
  spec.spread = 1e-9;
  spec.test_per_class = 2000;
  spec.seed = 8;
  const BlobData data = synth_blobs(spec);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      d0 += std::pow(data.test.x[i][j] - data.means[0][j], 2);
      d1 += std::pow(data.test.x[i][j] - data.means[1][j], 2);
    }
    hits += (d0 <= d1 ? 0 : 1) == data.test.y[i];
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(data.test.size()) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("blob generation is seeded and zero drift is a no-op") {
  BlobSpec spec;
  spec.classes = 4;
  spec.input_dim = 5;
  spec.seed = 77;
  const BlobData a = synth_blobs(spec);
  const BlobData b = synth_blobs(spec);
  CHECK(a.train.x == b.train.x);
  CHECK(a.test.x == b.test.x);
  spec.drift = DriftSpec{2, 0.0, 0.0};
  const BlobData c = synth_blobs(spec);
  CHECK(c.train.x == a.train.x);
  CHECK(c.test.x == a.test.x);
  spec.seed = 78;
  CHECK(synth_blobs(spec).train.x != a.train.x);
}

TEST_CASE("property: drift is an isometry within each group") {
  Rng rng(40);
  for (std::size_t dim : {1u, 2u, 5u, 8u}) {
    Vec u(dim);
    double norm = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm += v * v;
    }
    for (double& v : u) v /= std::sqrt(norm);
    const DriftSpec drift{2, 0.7, 1.3};
    for (int group = 0; group < 4; ++group) {
      for (int trial = 0; trial < 20; ++trial) {
        Vec p(dim), q(dim);
        for (std::size_t i = 0; i < dim; ++i) {
          p[i] = rng.normal();
          q[i] = rng.normal();
        }
        const Vec dp = apply_drift(p, group, drift, u);
        const Vec dq = apply_drift(q, group, drift, u);
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          before += (p[i] - q[i]) * (p[i] - q[i]);
          after += (dp[i] - dq[i]) * (dp[i] - dq[i]);
        }
        CHECK(std::abs(std::sqrt(before) - std::sqrt(after)) <= 1e-9);
        if (group == 0) CHECK(dp == p);
      }
    }
  }
}

TEST_CASE("IDX decoding") {
  IdxFiles f;
  f.write(0x00000803, 0x00000801, 1, 1, {0, 128, 255, 64}, {7});
  const Dataset d = load_idx(f.images, f.labels);
  REQUIRE(d.size() == 1);
  CHECK(d.input_dim == 4);
  CHECK(d.x[0] == Vec{0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0});
  CHECK(d.y[0] == 7);

  f.write(0x00000801, 0x00000801, 1, 1, {0, 0, 0, 0}, {0});
  CHECK(idx_error(f) == ErrorKind::BadMagic);
  f.write(0x00000803, 0x00000803, 1, 1, {0, 0, 0, 0}, {0});
  CHECK(idx_error(f) == ErrorKind::BadMagic);
  f.write(0x00000803, 0x00000801, 2, 1, {0, 0, 0, 0, 1, 1, 1, 1}, {0});
  CHECK(idx_error(f) == ErrorKind::CountMismatch);
  f.write(0x00000803, 0x00000801, 2, 2, {0, 0, 0, 0, 1}, {0, 1});
  CHECK(idx_error(f) == ErrorKind::TruncatedFile);
  f.write(0x00000803, 0x00000801, 1, 1, {0, 0, 0, 0}, {});
  CHECK(idx_error(f) == ErrorKind::TruncatedFile);
  write_bytes(f.labels, {0, 0});
  CHECK(idx_error(f) == ErrorKind::TruncatedFile);
  fs::remove(f.images);
  CHECK(idx_error(f) == ErrorKind::Io);
}
