#include "hifm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hifm/error.hpp"

namespace hifm {

std::size_t Spectrum::null_count() const noexcept {
  return static_cast<std::size_t>(std::count(null_mask.begin(), null_mask.end(), true));
}

Mask Spectrum::hyperbolic_mask() const {
  Mask m(null_mask.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = !null_mask[i];
  return m;
}

Spectrum analyze(const SymMatrix& a, double zero_tol) {
  Spectrum s;
  s.eig = eigh_sym(a);
  const std::size_t n = s.eig.dim();
  const double top = s.eig.eigvals.back();
  const double threshold = zero_tol * std::max(1.0, top);
  s.null_mask.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double& alpha = s.eig.eigvals[i];
    if (alpha < -threshold) {
      throw NotMinimumError("Hessian is not at a minimum: eigenvalue " + std::to_string(i) + " = " +
                            std::to_string(alpha) + " < -" + std::to_string(threshold));
    }
    if (std::abs(alpha) <= threshold) {
      alpha = 0.0;
      s.null_mask[i] = true;
    }
  }
  s.alpha_max = std::max(0.0, top);
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.null_mask[i]) {
      s.alpha_min = s.eig.eigvals[i];
      break;
    }
  }
  return s;
}

Spectrum rescale_condition(Spectrum s, double c) {
  if (!(c >= 1.0)) throw ValidationError("rescale_condition: condition number must be >= 1, got " + std::to_string(c));
  if (s.degenerate() || !(s.alpha_max > s.alpha_min)) return s;
  const double lo = s.alpha_min, width = s.alpha_max - s.alpha_min;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (!s.null_mask[i]) s.eig.eigvals[i] = lo + (c - 1.0) * lo * ((s.eig.eigvals[i] - lo) / width);
  s.alpha_max = c * s.alpha_min;
  return s;
}

Spectrum hyperbolize(Spectrum s) {
  if (s.degenerate()) throw ValidationError("hyperbolize: spectrum has no non-zero eigenvalue");
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (s.null_mask[i]) s.eig.eigvals[i] = s.alpha_min;
  return s;
}

Vector diffusion_coeffs(const Spectrum& s, double gamma, bool isotropize) {
  if (!(gamma > 0.0)) throw ValidationError("diffusion_coeffs: gamma must be positive");
  Vector beta(s.dim(), 0.0);
  for (std::size_t i = 0; i < s.dim(); ++i) {
    if (s.null_mask[i]) continue;
    beta[i] = std::sqrt(2.0 * (isotropize ? s.eig.eigvals[i] : s.alpha_min) * gamma);
  }
  return beta;
}

FlowSpec build_flow_spec(std::span<const double> y1, const SymMatrix& a, const FlowSpecConfig& cfg) {
  if (y1.size() != a.dim()) throw ValidationError("build_flow_spec: y1 and Hessian dimensions differ");
  if (!(cfg.kappa > 0.0)) throw ValidationError("build_flow_spec: kappa must be positive");
  if (!(cfg.sigma0 > 0.0)) throw ValidationError("build_flow_spec: sigma0 must be positive");
  FlowSpec fs;
  fs.y1.assign(y1.begin(), y1.end());
  fs.spectrum = rescale_condition(analyze(a, cfg.zero_tol), cfg.c);
  if (cfg.flags.hyperbolize) fs.spectrum = hyperbolize(std::move(fs.spectrum));
  fs.beta = diffusion_coeffs(fs.spectrum, cfg.gamma, cfg.flags.isotropize);
  fs.sigma0.assign(fs.dim(), cfg.sigma0);
  fs.kappa = cfg.kappa;
  fs.gamma = cfg.gamma;
  fs.flags = cfg.flags;
  return fs;
}

ConjugatePrior conjugate_prior(const Spectrum& s, std::span<const double> y1, std::span<const double> y0_raw,
                               std::span<const double> sigma1, std::span<const double> sigma0_raw) {
  const std::size_t n = s.dim();
  if (y1.size() != n || y0_raw.size() != n || sigma1.size() != n || sigma0_raw.size() != n) {
    throw ValidationError("conjugate_prior: dimension mismatch");
  }
  // Mix eigen-coordinates: null ones from y1, hyperbolic ones from y0_raw.
  const Vector c1 = matvec_transposed(s.eig.eigvecs, y1);
  Vector c0 = matvec_transposed(s.eig.eigvecs, y0_raw);
  ConjugatePrior out{Vector(), Vector(n)};
  for (std::size_t i = 0; i < n; ++i) {
    if (s.null_mask[i]) c0[i] = c1[i];
    out.sigma0[i] = s.null_mask[i] ? sigma1[i] : sigma0_raw[i];
  }
  out.y0 = matvec(s.eig.eigvecs, c0);
  return out;
}

}  // namespace hifm
