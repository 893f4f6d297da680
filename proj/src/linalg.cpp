#include "hifm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hifm/error.hpp"

namespace hifm {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ValidationError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

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

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

SymMatrix::SymMatrix(Matrix m, double tol) {
  if (m.rows() != m.cols()) {
    throw ValidationError("symmetric matrix must be square, got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
  const std::size_t n = m.rows();
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(m(i, j))) {
        throw ValidationError("non-finite matrix entry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      const double d = m(i, j) - m(j, i);
      asym += d * d;
    }
  }
  const double scale = frobenius_norm(m);
  if (std::sqrt(asym) > tol * scale) {
    throw ValidationError("matrix is not symmetric: ‖A-Aᵀ‖_F = " + std::to_string(std::sqrt(asym)) +
                          ", ‖A‖_F = " + std::to_string(scale));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = s;
      m(j, i) = s;
    }
  }
  m_ = std::move(m);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix& m) { return norm(m.data()); }

Vector matvec(const Matrix& m, std::span<const double> x) {
  if (m.cols() != x.size()) throw ValidationError("matvec: dimension mismatch");
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> x) {
  if (m.rows() != x.size()) throw ValidationError("matvec_transposed: dimension mismatch");
  Vector y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < r.size(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// One Jacobi rotation zeroing a(p,q); accumulates the rotation into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenPair eigh_sym(const SymMatrix& sym, double tol, int max_sweeps) {
  const std::size_t n = sym.dim();
  if (n == 0) throw ValidationError("eigh_sym: empty matrix");
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);
  const double scale = frobenius_norm(a);

  int sweep = 0;
  while (off_diagonal_norm(a) > tol * scale) {
    if (sweep == max_sweeps) {
      throw NumericalError("eigh_sym: no convergence after " + std::to_string(max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
    ++sweep;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenPair out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigvals[k] = a(src, src);
    std::size_t lead = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v(i, src)) > std::abs(v(lead, src))) lead = i;
    const double sign = v(lead, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.eigvecs(i, k) = sign * v(i, src);
  }
  return out;
}

Vector spectral_apply(const EigenPair& p, const std::function<double(double)>& f, std::span<const double> x) {
  if (x.size() != p.dim()) throw ValidationError("spectral_apply: dimension mismatch");
  Vector coeff = matvec_transposed(p.eigvecs, x);
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    const double fi = f(p.eigvals[i]);
    if (!std::isfinite(fi)) {
      throw NumericalError("spectral_apply: non-finite f(alpha) at eigen index " + std::to_string(i) +
                           " (alpha = " + std::to_string(p.eigvals[i]) + ")");
    }
    coeff[i] *= fi;
  }
  return matvec(p.eigvecs, coeff);
}

SymMatrix subspace_projector(const EigenPair& p, const Mask& mask) {
  const std::size_t n = p.dim();
  if (mask.size() != n) throw ValidationError("subspace_projector: mask length mismatch");
  Matrix pi(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (mask[k]) s += p.eigvecs(i, k) * p.eigvecs(j, k);
      pi(i, j) = s;
      pi(j, i) = s;
    }
  }
  return SymMatrix(std::move(pi));
}

}  // namespace hifm
