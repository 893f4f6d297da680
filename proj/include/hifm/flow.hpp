#pragma once

#include <cstddef>
#include <span>

#include "hifm/field.hpp"
#include "hifm/linalg.hpp"
#include "hifm/random.hpp"
#include "hifm/spectrum.hpp"

namespace hifm {

/// Cap on the interpolant state for conditional-target evaluation; the finite
/// conditional field divides by v_z, which vanishes at z = 1.
inline constexpr double kZMax = 1.0 - 1e-4;

/// Gaussian with covariance basis·diag(variances)·basisᵀ. An empty basis
/// means the standard basis.
struct GaussianState {
  Vector mean;
  Vector variances;
  Matrix basis;
};

struct PathPoint {
  Vector y;
  double z = 0.0;
  double t = 0.0;
};

/// Closed-form OU moments at time t starting from N(y0, P diag(σ) Pᵀ).
GaussianState mean_cov_time(const FlowSpec& fs, std::span<const double> y0, double t);

/// µ_z(t) = 1 − exp(−κ α_min t)
double interpolant_mean(const FlowSpec& fs, double t);
/// v_z(z) = −κ α_min (z − 1)
double interpolant_field(const FlowSpec& fs, double z);
/// Inverse of interpolant_mean: t(z) = −ln(1 − z) / (κ α_min).
double interpolant_time(const FlowSpec& fs, double z);

/// exp(−α_min t)·‖y0 − y1‖, an upper bound on ‖µ(t) − µ(∞)‖.
double distance_bound(const FlowSpec& fs, std::span<const double> y0, double t);

/// Path moments parameterized by the interpolant state z.
GaussianState mean_cov_z(const FlowSpec& fs, std::span<const double> y0, double z);

/// −Σ⁻¹(y − µ)
Vector score(const GaussianState& g, std::span<const double> y);

/// Probability-flow field of the linearized SDE, with the interpolant rate.
FieldValue cond_field_time(const FlowSpec& fs, std::span<const double> y, double t, std::span<const double> y0);

/// (v_y / v_z, 1) evaluated at t(z); z must lie in [0, z_max].
FieldValue cond_field_finite(const FlowSpec& fs, std::span<const double> y, double z, std::span<const double> y0,
                             double z_max = kZMax);

GaussianState ot_path(std::span<const double> y1, double z, double sigma_min);
FieldValue ot_field(std::span<const double> y, double z, std::span<const double> y1, double sigma_min);

/// Draws y ~ N(µ_y(z), Σ_y(z)) with prior mean y0 (zero when empty). With
/// spatial_dim > 0 the draw is projected onto the zero center-of-mass space.
PathPoint sample_path_point(const FlowSpec& fs, double z, Rng& rng, std::size_t spatial_dim = 0,
                            std::span<const double> y0 = {}, double z_max = kZMax);

/// α with exp(−α)‖y1‖ = ε.
double isotropic_alpha_data(std::span<const double> y1, double eps);
/// α with exp(−κα) = ε.
double isotropic_alpha_interp(double eps, double kappa);

/// The raw conditional field (v_y(t(z)), v_z(z)) of one FlowSpec as a
/// VectorField; dividing by v_z gives the finite field.
class ConditionalField final : public VectorField {
 public:
  ConditionalField(FlowSpec fs, Vector y0);

  std::size_t dim() const override { return fs_.dim(); }
  FieldValue evaluate(std::span<const double> y, double z) const override;
  FieldValue jvp(std::span<const double> y, double z, std::span<const double> tangent) const override;
  double min_abs_vz() const override { return 0.0; }

  const FlowSpec& spec() const noexcept { return fs_; }

 private:
  FlowSpec fs_;
  Vector y0_;
};

/// Conditional optimal-transport field toward y1, with v_z ≡ 1.
class OtConditionalField final : public VectorField {
 public:
  OtConditionalField(Vector y1, double sigma_min) : y1_(std::move(y1)), sigma_min_(sigma_min) {}

  std::size_t dim() const override { return y1_.size(); }
  FieldValue evaluate(std::span<const double> y, double z) const override;
  FieldValue jvp(std::span<const double> y, double z, std::span<const double> tangent) const override;
  double min_abs_vz() const override { return 0.0; }

 private:
  Vector y1_;
  double sigma_min_;
};

}  // namespace hifm
