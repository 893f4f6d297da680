#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hifm/linalg.hpp"

namespace hifm {

/// V(y) = ½ (y − y*)ᵀ A (y − y*)
struct QuadraticParams {
  Vector center;
  SymMatrix a;
};

/// Sum over all pairs of 4ε((σ/r)¹² − (σ/r)⁶).
struct LennardJonesParams {
  std::size_t m = 0;
  std::size_t spatial_dim = 3;
  double epsilon = 1.0;
  double sigma = 1.0;
};

/// V(y) = ¼ Σ_{(i,j)∈E} (‖yᵢ − yⱼ‖² − d²ᵢⱼ)²
struct FormationParams {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> distances;
  std::size_t m = 0;
  std::size_t spatial_dim = 3;
};

enum class EnergyKind { quadratic, lennard_jones, formation };

std::string_view to_string(EnergyKind kind);

class EnergyModel {
 public:
  using Params = std::variant<QuadraticParams, LennardJonesParams, FormationParams>;

  static EnergyModel quadratic(Vector center, SymMatrix a);
  static EnergyModel lennard_jones(std::size_t m, std::size_t spatial_dim, double epsilon = 1.0,
                                   double sigma = 1.0);
  static EnergyModel formation(std::size_t m, std::size_t spatial_dim,
                               std::vector<std::pair<std::size_t, std::size_t>> edges,
                               std::vector<double> distances);
  /// Complete graph whose target distances are the pairwise distances of `y`,
  /// so `y` is an exact minimum.
  static EnergyModel formation_from(std::span<const double> y, std::size_t m, std::size_t spatial_dim);

  EnergyKind kind() const noexcept { return static_cast<EnergyKind>(params_.index()); }
  std::size_t dim() const noexcept { return dim_; }
  const Params& params() const noexcept { return params_; }

 private:
  EnergyModel(Params p, std::size_t dim) : params_(std::move(p)), dim_(dim) {}

  Params params_;
  std::size_t dim_ = 0;
};

double value(const EnergyModel& e, std::span<const double> y);
Vector gradient(const EnergyModel& e, std::span<const double> y);
SymMatrix hessian(const EnergyModel& e, std::span<const double> y);

/// Central differences with per-coordinate step h·(1 + |y_k|).
Vector fd_gradient(const EnergyModel& e, std::span<const double> y, double h);
/// Central differences of the analytic gradient, symmetrized as (H + Hᵀ)/2.
SymMatrix fd_hessian(const EnergyModel& e, std::span<const double> y, double h);

/// Infinitesimal generator of the gradient-flow SDE applied to V:
/// −‖∇V‖² + ½ tr(∇²V · B²).
double generator_lv(const EnergyModel& e, std::span<const double> y, const SymMatrix& b);

/// Rotates then translates every particle block of `y`.
Vector apply_rigid_motion(std::span<const double> y, const Matrix& rotation, std::span<const double> translation,
                          std::size_t spatial_dim);

/// Subtracts the per-axis particle mean.
Vector zero_com_project(std::span<const double> y, std::size_t spatial_dim);
void zero_com_project_inplace(std::span<double> y, std::size_t spatial_dim);

}  // namespace hifm
