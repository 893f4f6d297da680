#pragma once

#include <span>

#include "hifm/linalg.hpp"

namespace hifm {

/// Default zero-eigenvalue threshold, relative to max(1, α_max).
inline constexpr double kZeroEigTol = 1e-8;

/// Eigen-analysis of a Hessian at a minimum. `eig.eigvals` holds the current
/// (possibly rescaled / hyperbolized) rates; `null_mask` always refers to the
/// original nullspace.
struct Spectrum {
  EigenPair eig;
  Mask null_mask;
  double alpha_min = 0.0;  // smallest non-null eigenvalue, 0 when degenerate
  double alpha_max = 0.0;

  std::size_t dim() const noexcept { return eig.dim(); }
  std::size_t null_count() const noexcept;
  bool degenerate() const noexcept { return null_count() == dim(); }
  Mask hyperbolic_mask() const;
};

struct FlowFlags {
  bool finite = true;
  bool project = false;
  bool hyperbolize = false;
  bool isotropize = false;
};

/// One conditional probability path toward `y1`. `sigma0` are per-direction
/// prior variances; `beta` per-direction diffusion (B = P diag(β) Pᵀ).
struct FlowSpec {
  Vector y1;
  Spectrum spectrum;
  Vector beta;
  Vector sigma0;
  double kappa = 1.0;
  double gamma = 1e-10;
  FlowFlags flags;

  std::size_t dim() const noexcept { return y1.size(); }
  const Vector& alpha() const noexcept { return spectrum.eig.eigvals; }
  const Matrix& basis() const noexcept { return spectrum.eig.eigvecs; }
};

struct FlowSpecConfig {
  double c = 2.0;
  double gamma = 1e-10;
  double kappa = 1.0;
  double sigma0 = 1.0;
  double zero_tol = kZeroEigTol;
  FlowFlags flags;
};

Spectrum analyze(const SymMatrix& a, double zero_tol = kZeroEigTol);

/// Affine map αᵢ ← aαᵢ + b on non-null eigenvalues so that α_max/α_min = c
/// with α_min unchanged. Identity when fewer than two distinct values exist.
Spectrum rescale_condition(Spectrum s, double c);

/// Null eigenvalues ← α_min. The null mask is kept.
Spectrum hyperbolize(Spectrum s);

Vector diffusion_coeffs(const Spectrum& s, double gamma, bool isotropize);

FlowSpec build_flow_spec(std::span<const double> y1, const SymMatrix& a, const FlowSpecConfig& cfg);

struct ConjugatePrior {
  Vector y0;
  Vector sigma0;
};

/// y0 = Π_null·y1 + Π_hyp·y0_raw; per-direction variance σ1 on null and
/// σ0_raw on hyperbolic directions.
ConjugatePrior conjugate_prior(const Spectrum& s, std::span<const double> y1, std::span<const double> y0_raw,
                               std::span<const double> sigma1, std::span<const double> sigma0_raw);

}  // namespace hifm
