#include <doctest.h>

#include <cmath>

#include "seed/error.hpp"
#include "seed/metrics.hpp"
#include "seed/runner.hpp"
#include "stream_fixture.hpp"

using namespace seed;

namespace {

AccuracyMatrix matrix(std::vector<std::vector<double>> rows) {
  AccuracyMatrix m;
  for (auto& r : rows) m.add_row(std::move(r));
  return m;
}

}  // namespace

TEST_CASE("average incremental accuracy") {
  const std::vector<double> one{0.8};
  CHECK(avg_inc_accuracy(one) == 0.8);
  const std::vector<double> two{1.0, 0.5};
  CHECK(avg_inc_accuracy(two) == 0.75);
}

TEST_CASE("accuracy matrix rows must grow by one") {
  AccuracyMatrix m;
  m.add_row({0.5});
  CHECK_THROWS_AS(m.add_row({0.5}), Error);
  CHECK_THROWS_AS(m.add_row({0.5, 1.5}), Error);
}

TEST_CASE("forgetting examples") {
  CHECK_FALSE(forgetting(matrix({{0.9}})).has_value());
  CHECK(*forgetting(matrix({{0.7}, {0.7, 0.7}, {0.7, 0.7, 0.7}})) == 0.0);
  CHECK(*forgetting(matrix({{0.9}, {0.6, 0.8}})) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(*forgetting(matrix({{0.5}, {0.6, 0.4}, {0.7, 0.5, 0.9}})) == 0.0);
  // Task 0 peaks at 0.9 and ends at 0.5; task 1 peaks at 0.8 and ends at 0.6.
  CHECK(*forgetting(matrix({{0.9}, {0.7, 0.8}, {0.5, 0.6, 0.9}})) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("intransigence examples") {
  const AccuracyMatrix m = matrix({{0.7}, {0.5, 0.7}, {0.4, 0.4, 0.7}});
  const std::vector<double> same{0.7, 0.7, 0.7};
  CHECK(intransigence(m, same) == 0.0);
  const std::vector<double> better{0.9, 0.9, 0.9};
  CHECK(intransigence(m, better) == doctest::Approx(0.2).epsilon(1e-14));
  const std::vector<double> worse{0.6, 0.6, 0.6};
  CHECK(intransigence(m, worse) == doctest::Approx(-0.1).epsilon(1e-14));
  const std::vector<double> short_ref{0.6};
  try {
    intransigence(m, short_ref);
    FAIL("expected MissingReference");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingReference);
  }
}

TEST_CASE("overlap report and csv rendering") {
  std::vector<TaskLog> logs(3);
  logs[0].task = 0;
  logs[0].trained = {0};
  logs[1].task = 1;
  logs[1].trained = {1};
  logs[2].task = 2;
  logs[2].selection = true;
  logs[2].trained = {1};
  logs[2].overlap = {0.5, 6.0};
  const auto rows = overlap_report(logs);
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].selection);
  CHECK(rows[2].chosen == std::vector<int>{1});
  const std::string csv = overlap_csv(rows, 2);
  CHECK(csv.find("no selection") != std::string::npos);
  CHECK(csv.find("0.500000") != std::string::npos);
  CHECK(csv.find("6.000000") != std::string::npos);

  const std::string acc = accuracy_csv(matrix({{1.0}, {0.5, 0.25}}));
  CHECK(acc.find("1.000000") != std::string::npos);
  CHECK(acc.find("0.250000") != std::string::npos);
  CHECK(format_fixed(0.1234567) == "0.123457");
}

TEST_CASE("stream metrics: recomputation, relative accuracy and selection markers") {
  const TaskStream stream = seed::testing::blob_stream(5, 2, 51);
  EnsembleState state = make_ensemble(seed::testing::tiny_net(), 2, 3);
  const TrainConfig cfg = seed::testing::quick_training();
  const RunReport report = run_stream(state, stream, cfg);

  REQUIRE(report.agnostic.tasks() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    REQUIRE(report.agnostic.rows[k].size() == k + 1);
    for (double a : report.agnostic.rows[k]) CHECK((a >= 0.0 && a <= 1.0));
  }
  double mean = 0.0;
  for (double a : report.step_agnostic) mean += a;
  CHECK(report.avg_inc_agnostic() == doctest::Approx(mean / 5.0).epsilon(1e-15));
  CHECK(*forgetting(report.agnostic) >= 0.0);

  // Re-evaluating the final state reproduces the last row exactly.
  const StepEvaluation again = evaluate_step(state, stream.test, cfg.tau);
  CHECK(again.agnostic == report.agnostic.rows.back());
  CHECK(again.aware == report.aware.rows.back());

  REQUIRE(report.relative_accuracy.size() == 2);
  for (std::size_t j = 0; j < 5; ++j) {
    double col = 0.0;
    for (const auto& row : report.relative_accuracy) col += row[j];
    CHECK(std::abs(col) <= 1e-12);
  }

  for (const OverlapRow& row : overlap_report(report.logs)) {
    if (!row.selection) continue;
    CHECK(row.chosen[0] == pick_from_overlap(row.scores, SelectionStrategy::KlMax));
  }
}

TEST_CASE("identical experts have zero relative accuracy") {
  const TaskStream stream = seed::testing::blob_stream(2, 2, 52);
  EnsembleState state = make_ensemble(seed::testing::tiny_net(), 2, 3);
  const TrainConfig cfg = seed::testing::quick_training();
  train_task(state, stream.train[0], cfg);
  train_task(state, stream.train[1], cfg);
  state.heads[1].net = state.heads[0].net;
  state.banks[1] = state.banks[0];
  for (const auto& row : expert_relative_accuracy(state, stream.test))
    for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("a one-task stream leaves forgetting undefined") {
  const TaskStream stream = seed::testing::blob_stream(1, 2, 53);
  EnsembleState state = make_ensemble(seed::testing::tiny_net(), 3, 3);
  const RunReport report = run_stream(state, stream, seed::testing::quick_training());
  CHECK(report.agnostic.tasks() == 1);
  CHECK_FALSE(forgetting(report.agnostic).has_value());
}
