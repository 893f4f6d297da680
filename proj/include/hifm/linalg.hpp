#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hifm {

using Vector = std::vector<double>;
using Mask = std::vector<bool>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Square symmetric matrix. Construction validates symmetry (relative
/// Frobenius tolerance 1e-12) and finiteness, then stores the exact
/// symmetrization (A + Aᵀ)/2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m, double tol = 1e-12);

  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix diagonal(std::span<const double> diag) { return SymMatrix(Matrix::diagonal(diag)); }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  Matrix m_;
};

/// Orthonormal eigenbasis (columns of `eigvecs`) with ascending eigenvalues.
struct EigenPair {
  Vector eigvals;
  Matrix eigvecs;

  std::size_t dim() const noexcept { return eigvals.size(); }
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double frobenius_norm(const Matrix& m);

Vector matvec(const Matrix& m, std::span<const double> x);
/// mᵀ·x
Vector matvec_transposed(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);

/// Cyclic Jacobi eigensolver. Converged when the off-diagonal Frobenius norm
/// drops below tol·‖A‖_F. Eigenvectors are sign-normalized so that their
/// largest-magnitude component is positive (first index on ties).
EigenPair eigh_sym(const SymMatrix& a, double tol = 1e-12, int max_sweeps = 100);

/// P·diag(f(αᵢ))·Pᵀ·x
Vector spectral_apply(const EigenPair& p, const std::function<double(double)>& f,
                      std::span<const double> x);

/// Σ_{i: mask[i]} pᵢpᵢᵀ
SymMatrix subspace_projector(const EigenPair& p, const Mask& mask);

}  // namespace hifm
