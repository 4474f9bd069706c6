#include "seed/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "seed/error.hpp"

namespace seed {

const char* to_string(RepresentationMode mode) {
  switch (mode) {
    case RepresentationMode::FullCovariance: return "full";
    case RepresentationMode::DiagonalCovariance: return "diag";
    case RepresentationMode::Prototype: return "prototype";
  }
  return "full";
}

std::optional<RepresentationMode> parse_representation(std::string_view text) {
  if (text == "full") return RepresentationMode::FullCovariance;
  if (text == "diag") return RepresentationMode::DiagonalCovariance;
  if (text == "prototype") return RepresentationMode::Prototype;
  return std::nullopt;
}

ClassGaussian ClassGaussian::from_moments(Vec mean, const Matrix& cov, RepresentationMode mode) {
  if (mode == RepresentationMode::Prototype) return prototype(std::move(mean));
  if (mean.empty()) throw Error(ErrorKind::DimensionMismatch, "empty mean");
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw Error(ErrorKind::DimensionMismatch, "covariance shape differs from mean");
  ClassGaussian g;
  g.mean_ = std::move(mean);
  g.cov_ = SpdMatrix(cov);
  g.chol_ = cholesky(g.cov_);
  g.logdet_ = log_det(g.chol_);
  g.mode_ = mode;
  return g;
}

ClassGaussian ClassGaussian::prototype(Vec mean) {
  if (mean.empty()) throw Error(ErrorKind::DimensionMismatch, "empty mean");
  ClassGaussian g;
  g.mean_ = std::move(mean);
  g.mode_ = RepresentationMode::Prototype;
  return g;
}

ClassGaussian fit_gaussian(std::span<const Vec> samples, RepresentationMode mode, double eps) {
  const std::size_t min_count = mode == RepresentationMode::Prototype ? 1 : 2;
  if (samples.size() < min_count)
    throw Error(ErrorKind::TooFewSamples, std::to_string(samples.size()) + " samples");
  const std::size_t dim = samples.front().size();
  if (dim == 0) throw Error(ErrorKind::DimensionMismatch, "zero-dimensional samples");

  const double n = static_cast<double>(samples.size());
  Vec mean(dim, 0.0);
  for (const Vec& s : samples) {
    if (s.size() != dim) throw Error(ErrorKind::DimensionMismatch, "sample dimensions differ");
    for (std::size_t i = 0; i < dim; ++i) {
      if (!std::isfinite(s[i])) throw Error(ErrorKind::NonFiniteInput, "sample element");
      mean[i] += s[i];
    }
  }
  for (double& m : mean) m /= n;
  if (mode == RepresentationMode::Prototype) return ClassGaussian::prototype(std::move(mean));

  Matrix cov(dim, dim);
  Vec centered(dim);
  for (const Vec& s : samples) {
    for (std::size_t i = 0; i < dim; ++i) centered[i] = s[i] - mean[i];
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c <= r; ++c) cov(r, c) += centered[r] * centered[c];
  }
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c <= r; ++c) {
      const double v = (mode == RepresentationMode::DiagonalCovariance && r != c) ? 0.0 : cov(r, c) / (n - 1.0);
      cov(r, c) = v;
      cov(c, r) = v;
    }
  return ClassGaussian::from_moments(std::move(mean), shrink(cov, eps).matrix(), mode);
}

double log_likelihood(const ClassGaussian& g, std::span<const double> r) {
  if (r.size() != g.dim()) throw Error(ErrorKind::DimensionMismatch, "embedding vs class dimension");
  Vec diff(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) diff[i] = r[i] - g.mean()[i];
  if (!g.has_covariance()) return -0.5 * squared_norm(diff);
  const double mahalanobis = squared_norm(forward_solve(g.chol(), diff));
  const double s = static_cast<double>(g.dim());
  return -0.5 * (g.logdet() + s * std::log(2.0 * std::numbers::pi) + mahalanobis);
}

namespace {

// tr(Sigma_q^-1 Sigma_p) = ||L_q^-1 L_p||_F^2, plus the mean term under Sigma_q.
double half_terms(const ClassGaussian& p, const ClassGaussian& q, std::span<const double> mean_diff) {
  const std::size_t n = p.dim();
  const Matrix& lp = p.chol().lower();
  double trace = 0.0;
  Vec column(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) column[r] = lp(r, c);
    trace += squared_norm(forward_solve(q.chol(), column));
  }
  return trace + squared_norm(forward_solve(q.chol(), mean_diff));
}

}  // namespace

double sym_kl(const ClassGaussian& p, const ClassGaussian& q) {
  if (!p.has_covariance() || !q.has_covariance())
    throw Error(ErrorKind::UnsupportedMode, "symmetrized KL needs covariances");
  if (p.dim() != q.dim()) throw Error(ErrorKind::DimensionMismatch, "KL between different dimensions");
  Vec diff(p.dim());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = q.mean()[i] - p.mean()[i];
  // Log-determinant terms cancel in the symmetric sum.
  const double total = half_terms(p, q, diff) + half_terms(q, p, diff);
  const double value = 0.5 * total - static_cast<double>(p.dim());
  return value > 0.0 ? value : 0.0;
}

const ClassGaussian& ClassBank::at(int class_id) const {
  auto it = classes_.find(class_id);
  if (it == classes_.end()) throw Error(ErrorKind::MissingClass, "class " + std::to_string(class_id));
  return it->second;
}

void ClassBank::set(int class_id, ClassGaussian g) {
  if (!classes_.empty()) {
    const ClassGaussian& first = classes_.begin()->second;
    if (first.dim() != g.dim()) throw Error(ErrorKind::DimensionMismatch, "bank dimension");
    if (first.mode() != g.mode()) throw Error(ErrorKind::UnsupportedMode, "bank members must share a mode");
  }
  classes_.insert_or_assign(class_id, std::move(g));
}

std::vector<int> ClassBank::class_ids() const {
  std::vector<int> ids;
  ids.reserve(classes_.size());
  for (const auto& [id, _] : classes_) ids.push_back(id);
  return ids;
}

double overlap_score(const ClassBank& bank, std::span<const int> classes) {
  if (classes.size() < 2) throw Error(ErrorKind::TooFewClasses, "overlap needs at least two classes");
  std::vector<const ClassGaussian*> members;
  members.reserve(classes.size());
  for (int c : classes) members.push_back(&bank.at(c));
  double sum = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j) sum += sym_kl(*members[i], *members[j]);
  return sum;
}

}  // namespace seed
