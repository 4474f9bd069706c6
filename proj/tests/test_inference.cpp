#include <doctest.h>

#include <cmath>
#include <numeric>

#include "seed/error.hpp"
#include "seed/inference.hpp"
#include "stream_fixture.hpp"

using namespace seed;

namespace {

// Ensemble whose every expert embeds x -> x, so banks can be set by hand.
EnsembleState identity_state(int experts, std::size_t dim) {
  NetConfig net;
  net.input_dim = dim;
  net.embed_dim = dim;
  EnsembleState s = make_ensemble(net, experts, 1);
  for (ExpertHead& h : s.heads) {
    REQUIRE(h.net.layers().size() == 1);
    DenseLayer& l = h.net.layers()[0];
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) l.weight[i * dim + i] = 1.0;
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
    h.trained = true;
  }
  return s;
}

void add_task(EnsembleState& s, std::vector<int> classes) {
  s.task_classes.push_back(std::move(classes));
  ++s.tasks_completed;
}

double row_sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("temp_softmax examples") {
  const Vec even = temp_softmax(Vec{1, 1}, 7.0);
  CHECK(even[0] == 0.5);
  CHECK(even[1] == 0.5);
  const Vec sharp = temp_softmax(Vec{0, std::log(9.0)}, 1.0);
  CHECK(sharp[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(sharp[1] == doctest::Approx(0.9).epsilon(1e-14));
  const double c = std::cbrt(9.0);
  const Vec soft = temp_softmax(Vec{0, std::log(9.0)}, 3.0);
  CHECK(soft[0] == doctest::Approx(1.0 / (1.0 + c)).epsilon(1e-14));
  CHECK(soft[1] == doctest::Approx(c / (1.0 + c)).epsilon(1e-14));
  CHECK(soft[0] == doctest::Approx(0.3247).epsilon(1e-4));
  CHECK_THROWS_AS(temp_softmax(Vec{1.0}, 0.0), Error);
}

TEST_CASE("temp_softmax is stable for large negative log-likelihoods") {
  const Vec p = temp_softmax(Vec{-1e6, -1e6 - 2.0}, 1.0);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(row_sum(p) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two disagreeing experts are averaged") {
  EnsembleState s = identity_state(2, 1);
  // Prototype scores: a gap of ln 9 for expert 0 and ln 4 for expert 1.
  s.banks[0].set(0, ClassGaussian::prototype({0.0}));
  s.banks[0].set(1, ClassGaussian::prototype({std::sqrt(2.0 * std::log(9.0))}));
  s.banks[1].set(0, ClassGaussian::prototype({std::sqrt(2.0 * std::log(4.0))}));
  s.banks[1].set(1, ClassGaussian::prototype({0.0}));
  add_task(s, {0, 1});
  const PredictionTrace t = predict(s, Vec{0.0}, 1.0);
  REQUIRE(t.softmax.size() == 2);
  CHECK(t.softmax[0][0] == doctest::Approx(0.9));
  CHECK(t.softmax[1][0] == doctest::Approx(0.2));
  CHECK(t.averaged[0] == doctest::Approx(0.55));
  CHECK(t.averaged[1] == doctest::Approx(0.45));
  CHECK(t.predicted == 0);
}

TEST_CASE("a sample at one class mean in every expert is predicted as that class") {
  EnsembleState s = identity_state(3, 2);
  const std::vector<Vec> means{{0, 0}, {3, 0}, {0, 3.5}, {-4, -4}};
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 4; ++c)
      s.banks[k].set(c, ClassGaussian::from_moments(means[c], Matrix::identity(2), RepresentationMode::FullCovariance));
  add_task(s, {0, 1});
  add_task(s, {2, 3});
  for (int c = 0; c < 4; ++c) CHECK(predict(s, means[c], 3.0).predicted == c);
  const std::vector<int> labels{0, 1, 2, 3};
  CHECK(evaluate(s, means, labels, 3.0) == 1.0);
}

TEST_CASE("classes are averaged over the experts that hold them") {
  EnsembleState s = identity_state(2, 1);
  s.banks[0].set(0, ClassGaussian::prototype({0.0}));
  s.banks[0].set(1, ClassGaussian::prototype({1.0}));
  s.banks[0].set(2, ClassGaussian::prototype({2.0}));
  s.banks[1].set(2, ClassGaussian::prototype({0.0}));
  add_task(s, {0, 1});
  add_task(s, {2});
  const PredictionTrace t = predict(s, Vec{0.3}, 1.0);
  REQUIRE(t.softmax.size() == 2);
  CHECK(t.softmax[1][0] == 0.0);
  CHECK(t.softmax[1][2] == 1.0);
  // Raw per-class means: expert 0 only for classes 0 and 1, both experts for 2.
  const Vec e0 = t.softmax[0];
  const Vec raw{e0[0], e0[1], 0.5 * (e0[2] + 1.0)};
  const double total = raw[0] + raw[1] + raw[2];
  for (std::size_t c = 0; c < 3; ++c) CHECK(t.averaged[c] == doctest::Approx(raw[c] / total).epsilon(1e-14));
}

TEST_CASE("prediction error paths") {
  EnsembleState untrained = make_ensemble(seed::testing::tiny_net(), 2, 1);
  try {
    predict(untrained, Vec(6, 0.0), 3.0);
    FAIL("expected NoTrainedExperts");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoTrainedExperts);
  }

  EnsembleState s = identity_state(1, 1);
  s.banks[0].set(0, ClassGaussian::prototype({0.0}));
  s.banks[0].set(1, ClassGaussian::prototype({1.0}));
  add_task(s, {0, 1});
  try {
    predict(s, Vec{0.0}, 3.0, 1);
    FAIL("expected UnknownTask");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownTask);
  }
  const std::vector<Vec> none;
  const std::vector<int> no_labels;
  try {
    evaluate(s, none, no_labels, 3.0);
    FAIL("expected EmptyEvalSet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyEvalSet);
  }
  const std::vector<Vec> xs{{0.0}};
  const std::vector<int> unseen{5};
  try {
    evaluate(s, xs, unseen, 3.0);
    FAIL("expected MissingClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingClass);
  }
}

TEST_CASE("a single expert reduces to its own Bayes argmax") {
  Rng rng(31);
  EnsembleState s = identity_state(1, 2);
  std::vector<int> classes;
  for (int c = 0; c < 5; ++c) {
    Matrix cov = Matrix::identity(2);
    cov(0, 0) = 0.5 + rng.uniform();
    cov(0, 1) = cov(1, 0) = 0.2 * rng.normal();
    s.banks[0].set(c, ClassGaussian::from_moments({rng.normal(), rng.normal()}, cov, RepresentationMode::FullCovariance));
    classes.push_back(c);
  }
  add_task(s, classes);
  for (int i = 0; i < 500; ++i) {
    const Vec x{1.5 * rng.normal(), 1.5 * rng.normal()};
    CHECK(predict(s, x, 3.0).predicted == predict_single_expert(s, 0, x, classes));
  }
}

TEST_CASE("identical class Gaussians give chance-level accuracy") {
  Rng rng(32);
  EnsembleState s = identity_state(2, 2);
  for (int k = 0; k < 2; ++k)
    for (int c = 0; c < 4; ++c)
      s.banks[k].set(c, ClassGaussian::from_moments({0, 0}, Matrix::identity(2), RepresentationMode::FullCovariance));
  add_task(s, {0, 1, 2, 3});
  std::vector<Vec> xs;
  std::vector<int> ys;
  for (int i = 0; i < 2000; ++i) {
    xs.push_back({rng.normal(), rng.normal()});
    ys.push_back(i % 4);
  }
  // Exact ties resolve to the lowest class id: a quarter of a balanced set.
  CHECK(evaluate(s, xs, ys, 3.0) == 0.25);

  // Tiny per-class perturbations turn the ties into effectively random guesses.
  for (int k = 0; k < 2; ++k)
    for (int c = 0; c < 4; ++c)
      s.banks[k].set(c, ClassGaussian::from_moments({1e-3 * rng.normal(), 1e-3 * rng.normal()}, Matrix::identity(2),
                                                    RepresentationMode::FullCovariance));
  CHECK(evaluate(s, xs, ys, 3.0) == doctest::Approx(0.25).epsilon(0.2));
}

TEST_CASE("property: shift invariance and temperature limits") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    Vec ll(5);
    for (double& v : ll) v = 10.0 * rng.normal();
    const double shift = 100.0 * rng.normal();
    Vec moved = ll;
    for (double& v : moved) v += shift;
    const Vec a = temp_softmax(ll, 3.0);
    const Vec b = temp_softmax(moved, 3.0);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    CHECK(row_sum(a) == doctest::Approx(1.0).epsilon(1e-12));
    for (double p : temp_softmax(ll, 1e9)) CHECK(p == doctest::Approx(0.2).epsilon(1e-6));
  }
}

TEST_CASE("small temperature approaches a majority vote of expert argmaxes") {
  EnsembleState s = identity_state(3, 1);
  // Experts 0 and 1 prefer class 1 narrowly; expert 2 prefers class 0 strongly.
  s.banks[0].set(0, ClassGaussian::prototype({0.2}));
  s.banks[0].set(1, ClassGaussian::prototype({0.0}));
  s.banks[1].set(0, ClassGaussian::prototype({0.3}));
  s.banks[1].set(1, ClassGaussian::prototype({0.0}));
  s.banks[2].set(0, ClassGaussian::prototype({0.0}));
  s.banks[2].set(1, ClassGaussian::prototype({5.0}));
  add_task(s, {0, 1});
  CHECK(predict(s, Vec{0.0}, 1000.0).predicted == 0);
  CHECK(predict(s, Vec{0.0}, 1e-4).predicted == 1);
}

TEST_CASE("property: traces are normalised and task-aware accuracy is never lower") {
  const TaskStream stream = seed::testing::blob_stream(4, 2, 34);
  EnsembleState s = make_ensemble(seed::testing::tiny_net(), 2, 6);
  const TrainConfig cfg = seed::testing::quick_training();
  for (int t = 0; t < 4; ++t) {
    train_task(s, stream.train[static_cast<std::size_t>(t)], cfg);
    for (int j = 0; j <= t; ++j) {
      const TaskData& test = stream.test[static_cast<std::size_t>(j)];
      std::size_t agnostic_hits = 0, aware_hits = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        const PredictionTrace ag = predict(s, test.x[i], cfg.tau);
        const PredictionTrace aw = predict(s, test.x[i], cfg.tau, j);
        for (const Vec& row : ag.softmax) CHECK(row_sum(row) == doctest::Approx(1.0).epsilon(1e-9));
        for (const Vec& row : aw.softmax) CHECK(row_sum(row) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row_sum(ag.averaged) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row_sum(aw.averaged) == doctest::Approx(1.0).epsilon(1e-9));
        agnostic_hits += ag.predicted == test.y[i];
        aware_hits += aw.predicted == test.y[i];
        // A correct agnostic prediction stays correct under restriction.
        if (ag.predicted == test.y[i]) CHECK(aw.predicted == test.y[i]);
      }
      CHECK(aware_hits >= agnostic_hits);
      CHECK(evaluate(s, test.x, test.y, cfg.tau, j) >= evaluate(s, test.x, test.y, cfg.tau));
    }
  }
}
