#pragma once

#include <cstddef>
#include <span>

#include "hifm/linalg.hpp"

namespace hifm {

/// Value of a field on X = Y × Z: data component v_y and interpolant v_z.
struct FieldValue {
  Vector v_y;
  double v_z = 0.0;
};

/// Floor applied to |v_zθ| when the finite transform divides model outputs.
inline constexpr double kMinModelVz = 1e-3;

/// A (possibly learned) vector field v(y, z) = (v_y, v_z) with exact
/// forward-mode directional derivatives.
class VectorField {
 public:
  virtual ~VectorField() = default;

  /// Dimension of y.
  virtual std::size_t dim() const = 0;
  virtual FieldValue evaluate(std::span<const double> y, double z) const = 0;
  /// Directional derivative along `tangent` = (δy, δz), |tangent| = dim + 1.
  virtual FieldValue jvp(std::span<const double> y, double z, std::span<const double> tangent) const = 0;
  /// Floor on |v_z| in the finite transform.
  virtual double min_abs_vz() const { return kMinModelVz; }
};

}  // namespace hifm
