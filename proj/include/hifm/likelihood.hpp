#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hifm/error.hpp"
#include "hifm/field.hpp"
#include "hifm/linalg.hpp"
#include "hifm/random.hpp"

namespace hifm {

struct Rk45Config {
  double rtol = 1e-2;
  double atol = 1e-2;
  double initial_step = 0.0;  // 0: chosen from the initial derivative
  std::size_t max_steps = 100000;
  double safety = 0.9;
};

/// Raised when adaptive integration fails; carries the last accepted state.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, double t, Vector state)
      : NumericalError(what), t_(t), state_(std::move(state)) {}
  double last_time() const noexcept { return t_; }
  const Vector& last_state() const noexcept { return state_; }

 private:
  double t_;
  Vector state_;
};

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

struct Rk45Result {
  Vector x;
  std::size_t nfe = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Dormand–Prince 5(4) with FSAL; integrates from a to b (either direction).
/// nfe = 6·(accepted + rejected) + 1.
Rk45Result rk45(const OdeRhs& rhs, Vector x0, double a, double b, const Rk45Config& cfg);

/// Prior over y: standard normal, or standard normal restricted to the zero
/// center-of-mass subspace when spatial_dim > 0.
struct Prior {
  std::size_t spatial_dim = 0;

  double log_density(std::span<const double> y) const;
  /// Dimension of the prior's support.
  std::size_t support_dim(std::size_t dim) const;
  Vector draw(std::size_t dim, Rng& rng) const;
};

struct FiniteFieldEval {
  Vector v_y;
  double divergence = 0.0;
};

/// Finite-transformed field v_y / v_z (clamped |v_z| ≥ kMinModelVz), zero-CoM
/// projected when spatial_dim > 0.
Vector finite_velocity(const VectorField& field, std::span<const double> y, double z, std::size_t spatial_dim = 0);

/// Finite field and the exact trace of its y-Jacobian from dim forward-mode passes.
FiniteFieldEval finite_field_with_divergence(const VectorField& field, std::span<const double> y, double z,
                                             std::size_t spatial_dim = 0);

double divergence_y(const VectorField& field, std::span<const double> y, double z, std::size_t spatial_dim = 0);

enum class NllStatus { ok, failed };

struct NllSample {
  double nll = 0.0;
  double prior_term = 0.0;       // log p_prior(y(0))
  double divergence_term = 0.0;  // ℓ(0); nll = −(prior_term + divergence_term)
  std::size_t nfe = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  NllStatus status = NllStatus::ok;
  std::string message;
};

struct NllReport {
  std::vector<NllSample> samples;

  std::size_t ok_count() const;
  double mean_nll() const;  // over successful samples
  double mean_nfe() const;
};

/// Negative log-likelihood of one data point: integrates (y, ℓ) from z_start
/// back to 0 along the finite field with ℓ' = div.
NllSample nll_one(const VectorField& field, std::span<const double> y_data, const Rk45Config& cfg, const Prior& prior,
                  double z_start = 1.0);

/// Rows of `data` evaluated independently (parallel over samples).
NllReport nll(const VectorField& field, const Matrix& data, const Rk45Config& cfg, const Prior& prior,
              double z_start = 1.0);

struct SampleResult {
  Matrix samples;
  double mean_nfe = 0.0;
};

/// Pushes n prior draws through the finite field from z = 0 to z_end.
SampleResult sample(const VectorField& field, const Prior& prior, const Rk45Config& cfg, Rng& rng, std::size_t n,
                    double z_end = 1.0);

}  // namespace hifm
