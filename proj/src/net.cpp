#include "seed/net.hpp"

#include <cmath>
#include <cstring>

#include "seed/error.hpp"
#include "seed/gaussian.hpp"

namespace seed {

const char* to_string(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

std::optional<Activation> parse_activation(std::string_view text) {
  if (text == "identity") return Activation::Identity;
  if (text == "relu") return Activation::Relu;
  if (text == "tanh") return Activation::Tanh;
  return std::nullopt;
}

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: break;
  }
  return z;
}

// Derivative expressed through the pre-activation.
double activate_grad(Activation act, double z) {
  switch (act) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Identity: break;
  }
  return 1.0;
}

void dense_forward(const DenseLayer& layer, std::span<const double> x, Vec& pre, Vec& out) {
  pre.resize(layer.out);
  out.resize(layer.out);
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* w = layer.weight.data() + o * layer.in;
    double z = layer.bias[o];
    for (std::size_t i = 0; i < layer.in; ++i) z += w[i] * x[i];
    pre[o] = z;
    out[o] = activate(layer.act, z);
  }
}

void init_uniform(DenseLayer& layer, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
  for (double& w : layer.weight) w = rng.uniform(-bound, bound);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) return;
  input_dim_ = layers_.front().in;
  for (std::size_t i = 1; i < layers_.size(); ++i)
    if (layers_[i].in != layers_[i - 1].out) throw Error(ErrorKind::DimensionMismatch, "layer chain");
}

Mlp Mlp::build(std::size_t in, std::span<const std::size_t> widths, Activation hidden, Activation last, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    DenseLayer layer(prev, widths[i], i + 1 == widths.size() ? last : hidden);
    init_uniform(layer, rng);
    layers.push_back(std::move(layer));
    prev = widths[i];
  }
  Mlp net(std::move(layers));
  net.input_dim_ = in;
  return net;
}

std::size_t Mlp::output_dim() const { return layers_.empty() ? input_dim_ : layers_.back().out; }

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.param_count();
  return n;
}

Vec Mlp::forward(std::span<const double> x) const {
  MlpTape tape;
  return forward(x, tape);
}

const Vec& Mlp::forward(std::span<const double> x, MlpTape& tape) const {
  if (x.size() != input_dim_) throw Error(ErrorKind::DimensionMismatch, "network input");
  tape.inputs.resize(layers_.size());
  tape.pre.resize(layers_.size());
  if (layers_.empty()) {
    tape.output.assign(x.begin(), x.end());
    return tape.output;
  }
  tape.inputs[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vec& out = l + 1 < layers_.size() ? tape.inputs[l + 1] : tape.output;
    dense_forward(layers_[l], tape.inputs[l], tape.pre[l], out);
  }
  return tape.output;
}

Vec Mlp::backward(const MlpTape& tape, std::span<const double> grad_out, MlpGrads* grads) const {
  Vec delta(grad_out.begin(), grad_out.end());
  Vec next;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    const Vec& pre = tape.pre[l];
    const Vec& input = tape.inputs[l];
    for (std::size_t o = 0; o < layer.out; ++o) delta[o] *= activate_grad(layer.act, pre[o]);
    if (grads != nullptr) {
      DenseLayer& g = (*grads)[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* gw = g.weight.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * input[i];
        g.bias[o] += d;
      }
    }
    next.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = layer.weight.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) next[i] += d * w[i];
    }
    delta.swap(next);
  }
  return delta;
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  g.reserve(layers_.size());
  for (const auto& l : layers_) g.emplace_back(l.in, l.out, l.act);
  return g;
}

std::uint64_t Mlp::checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::span<const double> values) {
    for (double v : values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 0x100000001B3ULL;
      }
    }
  };
  for (const auto& l : layers_) {
    mix(l.weight);
    mix(l.bias);
  }
  return h;
}

Trunk make_trunk(const NetConfig& cfg, Rng& rng) {
  if (cfg.input_dim == 0) throw Error(ErrorKind::DimensionMismatch, "input_dim must be positive");
  Trunk t;
  t.net = Mlp::build(cfg.input_dim, cfg.trunk_layers, cfg.activation, cfg.activation, rng);
  return t;
}

ExpertHead make_head(const NetConfig& cfg, std::size_t trunk_out, int index, Rng& rng) {
  if (cfg.embed_dim == 0) throw Error(ErrorKind::DimensionMismatch, "embed_dim must be positive");
  std::vector<std::size_t> widths = cfg.head_layers;
  widths.push_back(cfg.embed_dim);
  ExpertHead h;
  h.net = Mlp::build(trunk_out, widths, cfg.activation, cfg.final_relu ? Activation::Relu : Activation::Identity, rng);
  h.index = index;
  return h;
}

LinearHead make_linear_head(std::size_t embed_dim, std::size_t num_classes, Rng& rng) {
  LinearHead h{DenseLayer(embed_dim, num_classes, Activation::Identity)};
  init_uniform(h.layer, rng);
  return h;
}

Vec forward_embed(const Trunk& trunk, const ExpertHead& head, std::span<const double> x) {
  const Vec features = trunk.forward(x);
  if (features.size() != head.net.input_dim()) throw Error(ErrorKind::DimensionMismatch, "trunk output vs head input");
  return head.net.forward(features);
}

double OptState::lr_at(int epoch) const {
  double rate = lr;
  for (const auto& [at, divisor] : milestones)
    if (epoch >= at) rate /= divisor;
  return rate;
}

void sgd_step(OptState& opt, std::span<const ParamView> views, int epoch) {
  if (opt.velocity.size() != views.size()) {
    opt.velocity.clear();
    for (const auto& v : views) opt.velocity.emplace_back(v.params.size(), 0.0);
  }
  const double rate = opt.lr_at(epoch);
  for (std::size_t t = 0; t < views.size(); ++t) {
    const ParamView& view = views[t];
    std::vector<double>& vel = opt.velocity[t];
    if (vel.size() != view.params.size() || view.grads.size() != view.params.size())
      throw Error(ErrorKind::DimensionMismatch, "optimizer buffer shape");
    for (std::size_t i = 0; i < vel.size(); ++i) {
      vel[i] = opt.momentum * vel[i] - rate * (view.grads[i] + opt.weight_decay * view.params[i]);
      view.params[i] += vel[i];
    }
  }
}

void append_views(std::vector<ParamView>& out, DenseLayer& layer, const DenseLayer& grad) {
  out.push_back({layer.weight, grad.weight});
  out.push_back({layer.bias, grad.bias});
}

void append_views(std::vector<ParamView>& out, Mlp& net, const MlpGrads& grads) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) append_views(out, net.layers()[l], grads[l]);
}

ParamCounts param_count(const Trunk& trunk, std::span<const ExpertHead> heads, std::span<const ClassBank> banks) {
  ParamCounts counts;
  counts.trunk = trunk.net.param_count();
  for (const auto& h : heads) counts.heads += h.net.param_count();
  for (const auto& bank : banks)
    for (const auto& [_, g] : bank.entries()) {
      const std::size_t s = g.dim();
      switch (g.mode()) {
        case RepresentationMode::FullCovariance: counts.gaussians += s + s * (s + 1) / 2; break;
        case RepresentationMode::DiagonalCovariance: counts.gaussians += 2 * s; break;
        case RepresentationMode::Prototype: counts.gaussians += s; break;
      }
    }
  return counts;
}

std::size_t footprint_formula(std::size_t trunk_params, std::size_t head_params, std::size_t experts,
                              std::span<const std::size_t> classes_per_task, std::size_t embed_dim) {
  const std::size_t per_class = embed_dim + embed_dim * (embed_dim + 1) / 2;
  std::size_t total = trunk_params + experts * head_params;
  for (std::size_t i = 0; i < experts; ++i)
    for (std::size_t j = i; j < classes_per_task.size(); ++j) total += classes_per_task[j] * per_class;
  return total;
}

}  // namespace seed
