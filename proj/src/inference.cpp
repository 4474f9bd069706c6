#include "seed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seed/error.hpp"
#include "seed/parallel.hpp"

namespace seed {

Vec temp_softmax(std::span<const double> logits, double tau) {
  if (logits.empty()) throw Error(ErrorKind::DimensionMismatch, "softmax of nothing");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidConfig, "tau must be positive");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::isinf(logits[i]) && logits[i] < 0 ? 0.0 : std::exp((logits[i] - mx) / tau);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

int argmax_lowest(std::span<const double> values, std::span<const int> ids) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best] || (values[i] == values[best] && ids[i] < ids[best])) best = i;
  return ids[best];
}

}  // namespace

PredictionTrace score_embeddings(const EnsembleState& state, std::span<const Vec> embeddings,
                                 std::span<const int> candidates, double tau) {
  if (candidates.empty()) throw Error(ErrorKind::MissingClass, "no candidate classes");
  PredictionTrace trace;
  trace.candidates.assign(candidates.begin(), candidates.end());
  trace.averaged.assign(candidates.size(), 0.0);
  Vec holders(candidates.size(), 0.0);
  constexpr double kMissing = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < state.experts(); ++k) {
    if (!state.heads[static_cast<std::size_t>(k)].trained) continue;
    const ClassBank& bank = state.banks[static_cast<std::size_t>(k)];
    Vec ll(candidates.size(), kMissing);
    bool any = false;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (!bank.contains(candidates[c])) continue;
      ll[c] = log_likelihood(bank.at(candidates[c]), embeddings[static_cast<std::size_t>(k)]);
      any = true;
    }
    if (!any) continue;
    Vec probs = temp_softmax(ll, tau);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      trace.averaged[c] += probs[c];
      if (std::isfinite(ll[c])) holders[c] += 1.0;
    }
    trace.experts.push_back(k);
    trace.log_likelihood.push_back(std::move(ll));
    trace.softmax.push_back(std::move(probs));
  }
  if (trace.experts.empty()) throw Error(ErrorKind::NoTrainedExperts, "no expert covers the candidate classes");
  // Each class is averaged over the experts whose bank holds it, then the
  // vector is renormalised.
  double total = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (holders[c] > 0.0) trace.averaged[c] /= holders[c];
    total += trace.averaged[c];
  }
  for (double& v : trace.averaged) v /= total;
  trace.predicted = argmax_lowest(trace.averaged, trace.candidates);
  return trace;
}

PredictionTrace restrict_to(const PredictionTrace& trace, std::span<const int> task_classes) {
  PredictionTrace out;
  out.experts = trace.experts;
  out.log_likelihood.resize(trace.experts.size());
  out.softmax.resize(trace.experts.size());
  double mass = 0.0;
  for (int c : task_classes) {
    const auto it = std::find(trace.candidates.begin(), trace.candidates.end(), c);
    if (it == trace.candidates.end()) throw Error(ErrorKind::MissingClass, "class " + std::to_string(c));
    const auto idx = static_cast<std::size_t>(it - trace.candidates.begin());
    out.candidates.push_back(c);
    out.averaged.push_back(trace.averaged[idx]);
    mass += trace.averaged[idx];
    for (std::size_t e = 0; e < trace.experts.size(); ++e) {
      out.log_likelihood[e].push_back(trace.log_likelihood[e][idx]);
      out.softmax[e].push_back(trace.softmax[e][idx]);
    }
  }
  if (mass > 0.0)
    for (double& v : out.averaged) v /= mass;
  else
    for (double& v : out.averaged) v = 1.0 / static_cast<double>(out.averaged.size());
  // Each expert's row is renormalised over the task; experts holding no
  // probability there are dropped from the trace.
  std::size_t keep = 0;
  for (std::size_t e = 0; e < out.experts.size(); ++e) {
    double row = 0.0;
    for (double v : out.softmax[e]) row += v;
    if (row <= 0.0) continue;
    for (double& v : out.softmax[e]) v /= row;
    if (keep != e) {
      out.experts[keep] = out.experts[e];
      out.softmax[keep] = std::move(out.softmax[e]);
      out.log_likelihood[keep] = std::move(out.log_likelihood[e]);
    }
    ++keep;
  }
  out.experts.resize(keep);
  out.softmax.resize(keep);
  out.log_likelihood.resize(keep);
  out.predicted = argmax_lowest(out.averaged, out.candidates);
  return out;
}

PredictionTrace predict(const EnsembleState& state, std::span<const double> x, double tau, std::optional<int> task) {
  if (state.trained_experts().empty()) throw Error(ErrorKind::NoTrainedExperts, "ensemble is untrained");
  if (task && (*task < 0 || *task >= state.tasks_completed))
    throw Error(ErrorKind::UnknownTask, "task " + std::to_string(*task + 1));
  std::vector<Vec> embeddings(static_cast<std::size_t>(state.experts()));
  for (int k : state.trained_experts())
    embeddings[static_cast<std::size_t>(k)] = forward_embed(state.trunk, state.heads[static_cast<std::size_t>(k)], x);
  const auto seen = state.seen_classes();
  PredictionTrace trace = score_embeddings(state, embeddings, seen, tau);
  if (!task) return trace;
  return restrict_to(trace, state.task_classes[static_cast<std::size_t>(*task)]);
}

int predict_single_expert(const EnsembleState& state, int expert, std::span<const double> embedding,
                          std::span<const int> candidates) {
  const ClassBank& bank = state.banks.at(static_cast<std::size_t>(expert));
  int best = -1;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int c : candidates) {
    if (!bank.contains(c)) continue;
    const double ll = log_likelihood(bank.at(c), embedding);
    if (best < 0 || ll > best_ll || (ll == best_ll && c < best)) {
      best = c;
      best_ll = ll;
    }
  }
  return best;
}

double evaluate(const EnsembleState& state, std::span<const Vec> x, std::span<const int> y, double tau,
                std::optional<int> task) {
  if (x.empty()) throw Error(ErrorKind::EmptyEvalSet, "nothing to evaluate");
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "inputs vs labels");
  std::vector<int> allowed;
  if (task) {
    if (*task < 0 || *task >= state.tasks_completed) throw Error(ErrorKind::UnknownTask, std::to_string(*task));
    allowed = state.task_classes[static_cast<std::size_t>(*task)];
  } else {
    allowed = state.seen_classes();
  }
  std::sort(allowed.begin(), allowed.end());
  for (int label : y)
    if (!std::binary_search(allowed.begin(), allowed.end(), label))
      throw Error(ErrorKind::MissingClass, "label " + std::to_string(label) + " is not a candidate class");
  std::vector<char> correct(x.size(), 0);
  parallel_for(x.size(), [&](std::size_t i) { correct[i] = predict(state, x[i], tau, task).predicted == y[i]; });
  std::size_t hits = 0;
  for (char c : correct) hits += static_cast<std::size_t>(c);
  return static_cast<double>(hits) / static_cast<double>(x.size());
}

}  // namespace seed
