#include "seed/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "seed/error.hpp"
#include "seed/loss.hpp"
#include "seed/parallel.hpp"

namespace seed {

const char* to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::KlMax: return "kl-max";
    case SelectionStrategy::KlMin: return "kl-min";
    case SelectionStrategy::Random: return "random";
    case SelectionStrategy::RoundRobin: return "round-robin";
    case SelectionStrategy::TrainAll: return "train-all";
  }
  return "kl-max";
}

std::optional<SelectionStrategy> parse_strategy(std::string_view text) {
  if (text == "kl-max") return SelectionStrategy::KlMax;
  if (text == "kl-min") return SelectionStrategy::KlMin;
  if (text == "random") return SelectionStrategy::Random;
  if (text == "round-robin") return SelectionStrategy::RoundRobin;
  if (text == "train-all") return SelectionStrategy::TrainAll;
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau must be positive and finite");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(eps >= 0.0)) fail("eps must be >= 0");
  for (const auto& [epoch, divisor] : milestones)
    if (epoch < 0 || !(divisor > 0.0)) fail("milestones need epoch >= 0 and divisor > 0");
}

std::vector<int> EnsembleState::trained_experts() const {
  std::vector<int> out;
  for (const auto& h : heads)
    if (h.trained) out.push_back(h.index);
  return out;
}

std::vector<int> EnsembleState::seen_classes() const {
  std::vector<int> out;
  for (const auto& cs : task_classes) out.insert(out.end(), cs.begin(), cs.end());
  std::sort(out.begin(), out.end());
  return out;
}

EnsembleState make_ensemble(const NetConfig& net, int experts, std::uint64_t global_seed) {
  if (experts < 1) throw Error(ErrorKind::InvalidConfig, "at least one expert required");
  EnsembleState state;
  state.net = net;
  state.init_rng = Rng(net.rng_seed);
  state.shuffle_rng = Rng::substream(global_seed, "shuffle");
  state.strategy_rng = Rng::substream(global_seed, "strategy");
  state.trunk = make_trunk(net, state.init_rng);
  for (int k = 0; k < experts; ++k) state.heads.push_back(make_head(net, state.trunk.output_dim(), k, state.init_rng));
  state.banks.resize(static_cast<std::size_t>(experts));
  return state;
}

std::vector<Vec> embed_all(const EnsembleState& state, int expert, std::span<const Vec> x) {
  const ExpertHead& head = state.heads.at(static_cast<std::size_t>(expert));
  std::vector<Vec> out;
  out.reserve(x.size());
  for (const Vec& v : x) out.push_back(forward_embed(state.trunk, head, v));
  return out;
}

namespace {

std::map<int, std::vector<Vec>> group_by_class(const TaskData& task, std::vector<Vec> embeddings) {
  std::map<int, std::vector<Vec>> groups;
  for (int c : task.classes) groups[c];
  for (std::size_t i = 0; i < embeddings.size(); ++i) groups[task.y[i]].push_back(std::move(embeddings[i]));
  return groups;
}

ClassBank fit_classes(const std::map<int, std::vector<Vec>>& groups, RepresentationMode mode, double eps) {
  ClassBank bank;
  for (const auto& [c, samples] : groups) bank.set(c, fit_gaussian(samples, mode, eps));
  return bank;
}

// KL needs covariances; prototype banks are scored with full covariances.
RepresentationMode selection_mode(RepresentationMode mode) {
  return mode == RepresentationMode::Prototype ? RepresentationMode::FullCovariance : mode;
}

bool is_kl(SelectionStrategy s) { return s == SelectionStrategy::KlMax || s == SelectionStrategy::KlMin; }

void check_new_classes(const EnsembleState& state, const TaskData& task) {
  const auto seen = state.seen_classes();
  const std::set<int> seen_set(seen.begin(), seen.end());
  std::set<int> task_set;
  for (int c : task.classes) {
    if (seen_set.contains(c)) throw Error(ErrorKind::ClassCollision, "class " + std::to_string(c) + " already seen");
    if (!task_set.insert(c).second) throw Error(ErrorKind::ClassCollision, "duplicate class " + std::to_string(c));
  }
  for (int y : task.y)
    if (!task_set.contains(y)) throw Error(ErrorKind::MissingClass, "sample label " + std::to_string(y) + " not in task");
  if (task.x.size() != task.y.size() || task.x.empty()) throw Error(ErrorKind::TooFewSamples, "task has no samples");
}

}  // namespace

int pick_from_overlap(std::span<const double> overlap, SelectionStrategy strategy) {
  int best = 0;
  for (std::size_t k = 1; k < overlap.size(); ++k) {
    const bool better = strategy == SelectionStrategy::KlMin ? overlap[k] < overlap[best] : overlap[k] > overlap[best];
    if (better) best = static_cast<int>(k);
  }
  return best;
}

Selection select_expert(EnsembleState& state, const TaskData& task, const TrainConfig& cfg) {
  const int experts = state.experts();
  if (cfg.strategy != SelectionStrategy::TrainAll && state.tasks_completed < experts)
    throw Error(ErrorKind::InvalidConfig, "selection runs only after the bootstrap phase");
  const bool scorable = task.classes.size() >= 2;
  if (is_kl(cfg.strategy) && !scorable)
    throw Error(ErrorKind::SingleClassTask, "task " + std::to_string(task.task + 1) + " has one class");

  Selection sel;
  sel.fitted.resize(static_cast<std::size_t>(experts));
  std::vector<double> overlap(static_cast<std::size_t>(experts), 0.0);
  std::vector<char> active(static_cast<std::size_t>(experts), 0);
  for (int k : state.trained_experts()) active[static_cast<std::size_t>(k)] = 1;

  parallel_for(static_cast<std::size_t>(experts), [&](std::size_t k) {
    if (!active[k]) return;
    const auto groups = group_by_class(task, embed_all(state, static_cast<int>(k), task.x));
    sel.fitted[k] = fit_classes(groups, cfg.mode, cfg.eps);
    if (!scorable) return;
    const ClassBank scoring =
        selection_mode(cfg.mode) == cfg.mode ? sel.fitted[k] : fit_classes(groups, selection_mode(cfg.mode), cfg.eps);
    overlap[k] = overlap_score(scoring, task.classes);
  });
  if (scorable) sel.overlap = overlap;

  switch (cfg.strategy) {
    case SelectionStrategy::KlMax:
    case SelectionStrategy::KlMin: sel.expert = pick_from_overlap(sel.overlap, cfg.strategy); break;
    case SelectionStrategy::Random: sel.expert = static_cast<int>(state.strategy_rng.below(static_cast<std::uint64_t>(experts))); break;
    case SelectionStrategy::RoundRobin: sel.expert = state.tasks_completed % experts; break;
    case SelectionStrategy::TrainAll: sel.expert = 0; break;
  }
  return sel;
}

FitStats fine_tune(Trunk& trunk, ExpertHead& head, const TaskData& task, const TrainConfig& cfg, bool bootstrap,
                   Rng& init_rng, Rng& shuffle_rng, LinearHead* keep_linear) {
  std::map<int, int> local;
  for (std::size_t i = 0; i < task.classes.size(); ++i) local[task.classes[i]] = static_cast<int>(i);
  std::vector<int> targets;
  targets.reserve(task.y.size());
  for (int y : task.y) targets.push_back(local.at(y));

  LinearHead linear = make_linear_head(head.net.output_dim(), task.classes.size(), init_rng);
  const bool distill = !bootstrap && cfg.alpha > 0.0;
  std::optional<ExpertHead> old_head;
  if (distill) old_head = head;

  OptState opt;
  opt.lr = cfg.lr;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;
  opt.milestones = cfg.milestones;
  const LossSpec spec{cfg.alpha, bootstrap};

  std::vector<std::size_t> order(task.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<const Vec*> batch_x;
  std::vector<int> batch_y;
  std::vector<ParamView> views;
  FitStats stats;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    FitStats sum;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch_x.push_back(&task.x[order[i]]);
        batch_y.push_back(targets[order[i]]);
      }
      LossGrads g = loss_and_grads(trunk, head, linear, old_head ? &*old_head : nullptr, batch_x, batch_y, spec);
      views.clear();
      append_views(views, head.net, g.head);
      append_views(views, linear.layer, g.linear);
      if (g.trunk) append_views(views, trunk.net, *g.trunk);
      sgd_step(opt, views, epoch);
      const double weight = static_cast<double>(end - start);
      sum.loss += g.loss * weight;
      sum.ce += g.ce * weight;
      sum.kd += g.kd * weight;
    }
    const double n = static_cast<double>(order.size());
    stats = {sum.loss / n, sum.ce / n, sum.kd / n};
  }
  if (keep_linear != nullptr) *keep_linear = std::move(linear);
  return stats;
}

TaskLog train_task(EnsembleState& state, const TaskData& task, const TrainConfig& cfg) {
  cfg.validate();
  check_new_classes(state, task);
  const auto started = std::chrono::steady_clock::now();
  const int experts = state.experts();
  const int t = state.tasks_completed;

  TaskLog log;
  log.task = t;
  log.classes = task.classes;

  std::vector<ClassBank> pre_fitted(static_cast<std::size_t>(experts));
  bool bootstrap = false;
  if (cfg.strategy == SelectionStrategy::TrainAll) {
    bootstrap = t == 0;
    if (t > 0) {
      Selection sel = select_expert(state, task, cfg);
      log.overlap = std::move(sel.overlap);
      log.selection = true;
    }
    for (int k = 0; k < experts; ++k) log.trained.push_back(k);
  } else if (t < experts) {
    bootstrap = true;
    log.trained.push_back(t);
    // Experts trained so far keep their latent spaces; fit the new classes now.
    for (int k : state.trained_experts()) {
      const auto groups = group_by_class(task, embed_all(state, k, task.x));
      pre_fitted[static_cast<std::size_t>(k)] = fit_classes(groups, cfg.mode, cfg.eps);
    }
  } else {
    Selection sel = select_expert(state, task, cfg);
    log.selection = true;
    log.trained.push_back(sel.expert);
    log.overlap = std::move(sel.overlap);
    pre_fitted = std::move(sel.fitted);
  }

  for (int k : log.trained) {
    ExpertHead& head = state.heads[static_cast<std::size_t>(k)];
    const bool head_bootstrap = bootstrap || !head.trained;
    const FitStats stats = fine_tune(state.trunk, head, task, cfg, head_bootstrap, state.init_rng, state.shuffle_rng);
    state.trunk.frozen = true;
    head.trained = true;
    log.final_loss = stats.loss;
    log.final_ce = stats.ce;
    log.final_kd = stats.kd;
  }

  // Refit the fine-tuned experts; everyone else keeps the pre-fine-tune fits.
  for (int k : log.trained) {
    const auto groups = group_by_class(task, embed_all(state, k, task.x));
    pre_fitted[static_cast<std::size_t>(k)] = fit_classes(groups, cfg.mode, cfg.eps);
  }
  for (int k = 0; k < experts; ++k)
    for (const auto& [c, g] : pre_fitted[static_cast<std::size_t>(k)].entries()) state.banks[static_cast<std::size_t>(k)].set(c, g);

  state.task_classes.push_back(task.classes);
  ++state.tasks_completed;
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  state.logs.push_back(log);
  return log;
}

}  // namespace seed
