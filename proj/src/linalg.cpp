#include "seed/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seed/error.hpp"

namespace seed {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::DimensionMismatch, "ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double Matrix::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "matrix product");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Vec operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
  Vec out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch, "SPD matrix must be square and non-empty");
  const double scale = std::max(m_.max_abs(), 1e-300);
  for (std::size_t r = 0; r < m_.rows(); ++r)
    for (std::size_t c = 0; c < r; ++c) {
      if (!std::isfinite(m_(r, c)) || !std::isfinite(m_(c, r)))
        throw Error(ErrorKind::NonFiniteInput, "non-finite matrix entry");
      if (std::abs(m_(r, c) - m_(c, r)) > 1e-10 * scale)
        throw Error(ErrorKind::NotPositiveDefinite, "matrix is not symmetric");
    }
  for (std::size_t i = 0; i < m_.rows(); ++i)
    if (!std::isfinite(m_(i, i))) throw Error(ErrorKind::NonFiniteInput, "non-finite matrix entry");
}

CholFactor cholesky(const SpdMatrix& spd) {
  const Matrix& m = spd.matrix();
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0))
      throw Error(ErrorKind::NotPositiveDefinite, "non-positive pivot at index " + std::to_string(j));
    const double diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / diag;
    }
  }
  return CholFactor(std::move(l));
}

double log_det(const CholFactor& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.dim(); ++i) sum += std::log(f.lower()(i, i));
  return 2.0 * sum;
}

Vec forward_solve(const CholFactor& f, std::span<const double> b) {
  const Matrix& l = f.lower();
  const std::size_t n = f.dim();
  if (b.size() != n) throw Error(ErrorKind::DimensionMismatch, "rhs length differs from factor");
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * y[k];
    y[i] = v / l(i, i);
  }
  return y;
}

Vec spd_solve(const CholFactor& f, std::span<const double> b) {
  const Matrix& l = f.lower();
  const std::size_t n = f.dim();
  Vec x = forward_solve(f, b);
  for (std::size_t ii = n; ii-- > 0;) {
    double v = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= l(k, ii) * x[k];
    x[ii] = v / l(ii, ii);
  }
  return x;
}

SpdMatrix shrink(const Matrix& m, double eps) {
  const std::size_t n = m.rows();
  const double tr = m.trace();
  const double ridge = tr > 0.0 ? eps * tr / static_cast<double>(n) : eps;
  Matrix out = m;
  for (std::size_t i = 0; i < n; ++i) out(i, i) += ridge;
  return SpdMatrix(std::move(out));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace seed
