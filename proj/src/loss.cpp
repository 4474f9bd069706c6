#include "seed/loss.hpp"

#include <algorithm>
#include <cmath>

#include "seed/error.hpp"

namespace seed {

namespace {

// log-sum-exp based log-softmax.
void log_softmax(std::span<const double> z, Vec& out) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  out.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double cross_entropy(std::span<const Vec> logits, std::span<const int> targets) {
  if (logits.size() != targets.size() || logits.empty())
    throw Error(ErrorKind::DimensionMismatch, "logits vs targets");
  Vec lp;
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    log_softmax(logits[i], lp);
    sum -= lp.at(static_cast<std::size_t>(targets[i]));
  }
  return sum / static_cast<double>(logits.size());
}

double task_loss(std::span<const Vec> logits, std::span<const int> targets, std::span<const Vec> embed_new,
                 std::span<const Vec> embed_old, double alpha, bool bootstrap) {
  const double ce = cross_entropy(logits, targets);
  if (bootstrap) return ce;
  if (embed_new.size() != embed_old.size() || embed_new.size() != logits.size())
    throw Error(ErrorKind::DimensionMismatch, "embedding batches");
  double kd = 0.0;
  for (std::size_t i = 0; i < embed_new.size(); ++i) kd += distance(embed_new[i], embed_old[i]);
  kd /= static_cast<double>(embed_new.size());
  return (1.0 - alpha) * ce + alpha * kd;
}

LossGrads loss_and_grads(const Trunk& trunk, const ExpertHead& head, const LinearHead& linear,
                         const ExpertHead* old_head, std::span<const Vec* const> inputs,
                         std::span<const int> targets, const LossSpec& spec) {
  if (inputs.size() != targets.size() || inputs.empty()) throw Error(ErrorKind::DimensionMismatch, "batch");
  const bool use_kd = !spec.bootstrap && spec.alpha != 0.0;
  if (use_kd && old_head == nullptr) throw Error(ErrorKind::DimensionMismatch, "distillation needs a snapshot");
  const double ce_weight = spec.bootstrap ? 1.0 : 1.0 - spec.alpha;
  const double kd_weight = spec.bootstrap ? 0.0 : spec.alpha;
  const double inv_batch = 1.0 / static_cast<double>(inputs.size());

  LossGrads out;
  const bool train_trunk = !trunk.frozen && !trunk.net.layers().empty();
  if (train_trunk) out.trunk = trunk.net.zero_grads();
  out.head = head.net.zero_grads();
  out.linear = DenseLayer(linear.layer.in, linear.layer.out, Activation::Identity);

  MlpTape trunk_tape;
  MlpTape head_tape;
  MlpTape old_tape;
  Vec grad_old;
  Vec logits(linear.layer.out);
  Vec log_probs;
  Vec grad_embed(linear.layer.in);
  double ce_sum = 0.0;
  double kd_sum = 0.0;

  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Vec& features = trunk.net.layers().empty() ? *inputs[s] : trunk.net.forward(*inputs[s], trunk_tape);
    const Vec& embed = head.net.forward(features, head_tape);
    const DenseLayer& lin = linear.layer;
    for (std::size_t o = 0; o < lin.out; ++o) {
      double z = lin.bias[o];
      for (std::size_t i = 0; i < lin.in; ++i) z += lin.weight[o * lin.in + i] * embed[i];
      logits[o] = z;
    }
    log_softmax(logits, log_probs);
    const auto target = static_cast<std::size_t>(targets[s]);
    if (target >= lin.out) throw Error(ErrorKind::DimensionMismatch, "target outside linear head");
    ce_sum -= log_probs[target];

    std::fill(grad_embed.begin(), grad_embed.end(), 0.0);
    for (std::size_t o = 0; o < lin.out; ++o) {
      const double g = ce_weight * inv_batch * (std::exp(log_probs[o]) - (o == target ? 1.0 : 0.0));
      out.linear.bias[o] += g;
      for (std::size_t i = 0; i < lin.in; ++i) {
        out.linear.weight[o * lin.in + i] += g * embed[i];
        grad_embed[i] += g * lin.weight[o * lin.in + i];
      }
    }

    bool kd_active = false;
    if (!spec.bootstrap && old_head != nullptr) {
      const Vec& old = old_head->net.forward(features, old_tape);
      const double dist = distance(embed, old);
      kd_sum += dist;
      // ||.|| is not differentiable at 0; use the zero subgradient there.
      if (use_kd && dist > 0.0) {
        kd_active = true;
        grad_old.resize(grad_embed.size());
        for (std::size_t i = 0; i < grad_embed.size(); ++i) {
          const double g = kd_weight * inv_batch * (embed[i] - old[i]) / dist;
          grad_embed[i] += g;
          grad_old[i] = -g;
        }
      }
    }

    Vec grad_features = head.net.backward(head_tape, grad_embed, &out.head);
    if (train_trunk) {
      // A trainable trunk also moves the distillation target g_old(f(x)).
      if (kd_active) {
        const Vec through_old = old_head->net.backward(old_tape, grad_old, nullptr);
        for (std::size_t i = 0; i < grad_features.size(); ++i) grad_features[i] += through_old[i];
      }
      trunk.net.backward(trunk_tape, grad_features, &*out.trunk);
    }
  }
  out.ce = ce_sum * inv_batch;
  out.kd = kd_sum * inv_batch;
  out.loss = ce_weight * out.ce + kd_weight * out.kd;
  return out;
}

}  // namespace seed
