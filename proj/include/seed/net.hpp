#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "seed/linalg.hpp"
#include "seed/rng.hpp"

namespace seed {

class ClassBank;

enum class Activation { Identity, Relu, Tanh };

const char* to_string(Activation act);
std::optional<Activation> parse_activation(std::string_view text);

struct NetConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> trunk_layers;  ///< may be empty: no shared layers
  std::vector<std::size_t> head_layers;   ///< hidden widths before the embedding
  std::size_t embed_dim = 8;              ///< S
  Activation activation = Activation::Relu;
  /// Ablation only: put a rectifier after the embedding layer as well.
  bool final_relu = false;
  std::uint64_t rng_seed = 0;
};

/// Fully connected layer, weight stored out x in row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  Activation act = Activation::Identity;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation activation)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0), act(activation) {}

  std::size_t param_count() const { return weight.size() + bias.size(); }
  bool operator==(const DenseLayer&) const = default;
};

/// Per-sample activations recorded by a forward pass; reused across calls.
struct MlpTape {
  std::vector<Vec> inputs;  ///< input of each layer
  std::vector<Vec> pre;     ///< pre-activation of each layer
  Vec output;
};

/// Gradient buffers with the shapes of an Mlp's layers.
using MlpGrads = std::vector<DenseLayer>;

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Widths: in -> widths[0] -> ... ; every layer uses `hidden` except the
  /// last, which uses `last`.
  static Mlp build(std::size_t in, std::span<const std::size_t> widths, Activation hidden, Activation last,
                   Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t param_count() const;

  Vec forward(std::span<const double> x) const;
  const Vec& forward(std::span<const double> x, MlpTape& tape) const;

  /// Accumulates parameter gradients into `grads` and returns dLoss/dInput.
  /// `grads` may be null when only the input gradient is wanted.
  Vec backward(const MlpTape& tape, std::span<const double> grad_out, MlpGrads* grads) const;

  MlpGrads zero_grads() const;
  std::uint64_t checksum() const;
  bool operator==(const Mlp&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

/// f: shared layers. An empty trunk passes its input through unchanged.
struct Trunk {
  Mlp net;
  bool frozen = false;
  Vec forward(std::span<const double> x) const { return net.layers().empty() ? Vec(x.begin(), x.end()) : net.forward(x); }
  std::size_t output_dim() const { return net.layers().empty() ? net.input_dim() : net.output_dim(); }
  bool operator==(const Trunk&) const = default;
};

/// g_k: expert-specific layers ending in the S-dimensional embedding.
struct ExpertHead {
  Mlp net;
  int index = 0;
  bool trained = false;
  bool operator==(const ExpertHead&) const = default;
};

/// Temporary classifier over the current task's classes.
struct LinearHead {
  DenseLayer layer;
};

Trunk make_trunk(const NetConfig& cfg, Rng& rng);
ExpertHead make_head(const NetConfig& cfg, std::size_t trunk_out, int index, Rng& rng);
LinearHead make_linear_head(std::size_t embed_dim, std::size_t num_classes, Rng& rng);

/// r = g(f(x)).
Vec forward_embed(const Trunk& trunk, const ExpertHead& head, std::span<const double> x);

/// SGD with momentum, weight decay and a milestone learning-rate schedule:
///   v <- m v - lr(epoch) (g + wd p);  p <- p + v.
struct OptState {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<std::pair<int, double>> milestones;  ///< (epoch, divisor)
  std::vector<std::vector<double>> velocity;

  double lr_at(int epoch) const;
};

struct ParamView {
  std::span<double> params;
  std::span<const double> grads;
};

void sgd_step(OptState& opt, std::span<const ParamView> views, int epoch);

/// Appends (param, grad) views for every tensor of `net` in layer order.
void append_views(std::vector<ParamView>& out, Mlp& net, const MlpGrads& grads);
void append_views(std::vector<ParamView>& out, DenseLayer& layer, const DenseLayer& grad);

struct ParamCounts {
  std::size_t trunk = 0;
  std::size_t heads = 0;
  std::size_t gaussians = 0;
  std::size_t total() const { return trunk + heads + gaussians; }
};

/// Network weights plus stored distribution parameters. A full-covariance
/// entry costs S + S(S+1)/2, diagonal 2S, prototype S.
ParamCounts param_count(const Trunk& trunk, std::span<const ExpertHead> heads, std::span<const ClassBank> banks);

/// Closed-form footprint |f| + K|g| + sum_i sum_{j>=i} |C_j| (S + S(S+1)/2)
/// for an ensemble whose expert i is bootstrapped on task i.
std::size_t footprint_formula(std::size_t trunk_params, std::size_t head_params, std::size_t experts,
                              std::span<const std::size_t> classes_per_task, std::size_t embed_dim);

}  // namespace seed
