#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "hifm/energy.hpp"
#include "hifm/linalg.hpp"
#include "hifm/random.hpp"
#include "hifm/spectrum.hpp"

namespace testing {

using namespace hifm;

inline Matrix random_orthogonal(std::size_t n, Rng& rng) {
  // Gram–Schmidt on a Gaussian matrix.
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector v(n);
    fill_standard_normal(rng, v);
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += q(i, k) * v[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= d * q(i, k);
    }
    const double nv = norm(v);
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / nv;
  }
  return q;
}

inline Matrix rotation_3d(Rng& rng) {
  Matrix q = random_orthogonal(3, rng);
  const double det = q(0, 0) * (q(1, 1) * q(2, 2) - q(1, 2) * q(2, 1)) -
                     q(0, 1) * (q(1, 0) * q(2, 2) - q(1, 2) * q(2, 0)) +
                     q(0, 2) * (q(1, 0) * q(2, 1) - q(1, 1) * q(2, 0));
  if (det < 0)
    for (std::size_t i = 0; i < 3; ++i) q(i, 0) = -q(i, 0);
  return q;
}

inline SymMatrix with_spectrum(const Matrix& q, std::span<const double> d) {
  return SymMatrix(matmul(matmul(q, Matrix::diagonal(d)), q.transposed()), 1e-9);
}

inline SymMatrix random_spd(std::size_t n, Rng& rng, double lo, double hi) {
  Vector d(n);
  for (double& x : d) x = uniform(rng, lo, hi);
  return with_spectrum(random_orthogonal(n, rng), d);
}

inline Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  fill_standard_normal(rng, v);
  return v;
}

/// Particles in a box, pairwise separations above `min_sep`.
inline Vector random_cluster(std::size_t m, std::size_t d, Rng& rng, double min_sep = 0.9) {
  Vector y(m * d);
  const double side = 1.4 * min_sep * std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d));
  for (std::size_t p = 0; p < m; ++p) {
    for (;;) {
      for (std::size_t a = 0; a < d; ++a) y[p * d + a] = uniform(rng, 0.0, side);
      bool ok = true;
      for (std::size_t q = 0; q < p && ok; ++q) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < d; ++a) r2 += std::pow(y[p * d + a] - y[q * d + a], 2);
        ok = r2 > min_sep * min_sep;
      }
      if (ok) break;
    }
  }
  return y;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na), 1e-300);
}

inline Vector values(std::span<const double> s) { return {s.begin(), s.end()}; }

/// P·diag(v)·Pᵀ
inline Matrix full_cov(const Matrix& p, std::span<const double> v) {
  return matmul(matmul(p, Matrix::diagonal(v)), p.transposed());
}

}  // namespace testing
