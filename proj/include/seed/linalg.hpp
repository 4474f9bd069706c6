#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace seed {

using Vec = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double trace() const;
  double max_abs() const;
  Matrix transpose() const;
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vec operator*(const Matrix& a, std::span<const double> x);

/// Symmetric positive definite matrix. Construction only checks shape and
/// symmetry; positive definiteness is established by a successful cholesky().
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(Matrix m);

  std::size_t dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

 private:
  Matrix m_;
};

/// Lower-triangular L with L L^T equal to the factored matrix.
class CholFactor {
 public:
  CholFactor() = default;

  std::size_t dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }

 private:
  friend CholFactor cholesky(const SpdMatrix& m);
  explicit CholFactor(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

/// Throws NotPositiveDefinite on a non-positive pivot.
CholFactor cholesky(const SpdMatrix& m);

/// 2 * sum(ln L_ii).
double log_det(const CholFactor& f);

/// Solves (L L^T) x = b by forward then back substitution.
Vec spd_solve(const CholFactor& f, std::span<const double> b);

/// Solves L y = b only; ||y||^2 is the Mahalanobis form b^T (L L^T)^-1 b.
Vec forward_solve(const CholFactor& f, std::span<const double> b);

/// m + eps * (trace(m)/S) * I when trace(m) > 0, else m + eps * I.
SpdMatrix shrink(const Matrix& m, double eps);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace seed
