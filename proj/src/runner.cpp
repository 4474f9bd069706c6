#include "seed/runner.hpp"

#include <algorithm>
#include <string>

#include "seed/error.hpp"
#include "seed/parallel.hpp"

namespace seed {

StepEvaluation evaluate_step(const EnsembleState& state, std::span<const TaskData> tests, double tau,
                             const RunOptions* opts) {
  const auto seen = state.seen_classes();
  const auto trained = state.trained_experts();
  StepEvaluation out;
  std::size_t total = 0;
  std::size_t hits_agnostic = 0;
  std::size_t hits_aware = 0;
  for (std::size_t j = 0; j < tests.size(); ++j) {
    const TaskData& test = tests[j];
    if (test.x.empty()) throw Error(ErrorKind::EmptyEvalSet, "test set of task " + std::to_string(j + 1));
    const auto& task_classes = state.task_classes.at(j);
    std::vector<char> ok_agnostic(test.x.size(), 0);
    std::vector<char> ok_aware(test.x.size(), 0);
    std::vector<PredictionTrace> traces(opts && opts->trace ? test.x.size() : 0);
    parallel_for(test.x.size(), [&](std::size_t i) {
      std::vector<Vec> embeddings(static_cast<std::size_t>(state.experts()));
      for (int k : trained)
        embeddings[static_cast<std::size_t>(k)] = forward_embed(state.trunk, state.heads[static_cast<std::size_t>(k)], test.x[i]);
      PredictionTrace trace = score_embeddings(state, embeddings, seen, tau);
      ok_agnostic[i] = trace.predicted == test.y[i];
      ok_aware[i] = restrict_to(trace, task_classes).predicted == test.y[i];
      if (!traces.empty()) traces[i] = std::move(trace);
    });
    const auto a = static_cast<std::size_t>(std::count(ok_agnostic.begin(), ok_agnostic.end(), 1));
    const auto b = static_cast<std::size_t>(std::count(ok_aware.begin(), ok_aware.end(), 1));
    const double n = static_cast<double>(test.x.size());
    out.agnostic.push_back(static_cast<double>(a) / n);
    out.aware.push_back(static_cast<double>(b) / n);
    hits_agnostic += a;
    hits_aware += b;
    total += test.x.size();
    for (std::size_t i = 0; i < traces.size(); ++i) opts->trace(static_cast<int>(j), test.y[i], traces[i]);
  }
  if (total == 0) throw Error(ErrorKind::EmptyEvalSet, "no test samples");
  out.step_agnostic = static_cast<double>(hits_agnostic) / static_cast<double>(total);
  out.step_aware = static_cast<double>(hits_aware) / static_cast<double>(total);
  return out;
}

double joint_reference_accuracy(const NetConfig& net, std::span<const TaskData> train, const TaskData& test,
                                const TrainConfig& cfg, std::uint64_t seed) {
  TaskData joint;
  for (const auto& t : train) {
    joint.classes.insert(joint.classes.end(), t.classes.begin(), t.classes.end());
    joint.x.insert(joint.x.end(), t.x.begin(), t.x.end());
    joint.y.insert(joint.y.end(), t.y.begin(), t.y.end());
  }
  std::sort(joint.classes.begin(), joint.classes.end());
  Rng init = Rng::substream(seed, "joint-init");
  Rng shuffle = Rng::substream(seed, "joint-shuffle");
  Trunk trunk = make_trunk(net, init);
  ExpertHead head = make_head(net, trunk.output_dim(), 0, init);
  LinearHead linear;
  fine_tune(trunk, head, joint, cfg, true, init, shuffle, &linear);

  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.x.size(); ++i) {
    const Vec e = forward_embed(trunk, head, test.x[i]);
    const Vec logits = [&] {
      Vec z(linear.layer.out);
      for (std::size_t o = 0; o < z.size(); ++o) {
        z[o] = linear.layer.bias[o];
        for (std::size_t k = 0; k < e.size(); ++k) z[o] += linear.layer.weight[o * e.size() + k] * e[k];
      }
      return z;
    }();
    const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    hits += joint.classes[best] == test.y[i] ? 1 : 0;
  }
  if (test.x.empty()) throw Error(ErrorKind::EmptyEvalSet, "joint reference test set");
  return static_cast<double>(hits) / static_cast<double>(test.x.size());
}

RunReport run_stream(EnsembleState& state, const TaskStream& stream, const TrainConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (stream.train.size() != stream.test.size()) throw Error(ErrorKind::CountMismatch, "train vs test task counts");
  RunReport report;
  if (opts.joint_reference) report.joint.emplace();
  const auto tasks = stream.train.size();
  for (auto t = static_cast<std::size_t>(state.tasks_completed); t < tasks; ++t) {
    report.logs.push_back(train_task(state, stream.train[t], cfg));
    const bool last = t + 1 == tasks;
    const StepEvaluation eval =
        evaluate_step(state, std::span(stream.test).first(t + 1), cfg.tau, last ? &opts : nullptr);
    report.agnostic.rows.push_back(eval.agnostic);
    report.aware.rows.push_back(eval.aware);
    report.step_agnostic.push_back(eval.step_agnostic);
    report.step_aware.push_back(eval.step_aware);
    if (report.joint)
      report.joint->push_back(joint_reference_accuracy(state.net, std::span(stream.train).first(t + 1), stream.test[t],
                                                       cfg, opts.joint_seed + t));
  }
  report.relative_accuracy =
      expert_relative_accuracy(state, std::span(stream.test).first(static_cast<std::size_t>(state.tasks_completed)));
  report.params = param_count(state.trunk, state.heads, state.banks);
  return report;
}

}  // namespace seed
