#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "seed/linalg.hpp"

namespace seed {

enum class RepresentationMode { FullCovariance, DiagonalCovariance, Prototype };

const char* to_string(RepresentationMode mode);
std::optional<RepresentationMode> parse_representation(std::string_view text);

/// One class's distribution in one expert's latent space. Prototype mode
/// keeps the mean only; the covariance accessors are then invalid.
class ClassGaussian {
 public:
  ClassGaussian() = default;

  /// Builds from explicit moments. `cov` is ignored for Prototype mode and
  /// must factor for the other two.
  static ClassGaussian from_moments(Vec mean, const Matrix& cov, RepresentationMode mode);
  static ClassGaussian prototype(Vec mean);

  std::size_t dim() const { return mean_.size(); }
  RepresentationMode mode() const { return mode_; }
  const Vec& mean() const { return mean_; }
  const SpdMatrix& cov() const { return cov_; }
  const CholFactor& chol() const { return chol_; }
  double logdet() const { return logdet_; }
  bool has_covariance() const { return mode_ != RepresentationMode::Prototype; }

 private:
  Vec mean_;
  SpdMatrix cov_;
  CholFactor chol_;
  double logdet_ = 0.0;
  RepresentationMode mode_ = RepresentationMode::FullCovariance;
};

/// Sample mean plus unbiased (n-1) covariance, shrunk by `eps`.
/// Diagonal mode drops off-diagonal terms before shrinkage.
ClassGaussian fit_gaussian(std::span<const Vec> samples, RepresentationMode mode, double eps);

/// Gaussian log-density of r; for Prototype mode -0.5 * ||r - mean||^2.
double log_likelihood(const ClassGaussian& g, std::span<const double> r);

/// KL(p||q) + KL(q||p) in closed form. Symmetric in its arguments bit for bit.
double sym_kl(const ClassGaussian& p, const ClassGaussian& q);

/// Q_k: class id -> Gaussian, all of one dimension and mode.
class ClassBank {
 public:
  using Map = std::map<int, ClassGaussian>;

  bool empty() const { return classes_.empty(); }
  std::size_t size() const { return classes_.size(); }
  bool contains(int class_id) const { return classes_.contains(class_id); }
  const ClassGaussian& at(int class_id) const;

  /// Inserts or replaces the Gaussian for `class_id`.
  void set(int class_id, ClassGaussian g);

  const Map& entries() const { return classes_; }
  std::vector<int> class_ids() const;

 private:
  Map classes_;
};

/// Sum of sym_kl over unordered pairs of `classes` (self-pairs excluded).
double overlap_score(const ClassBank& bank, std::span<const int> classes);

}  // namespace seed
