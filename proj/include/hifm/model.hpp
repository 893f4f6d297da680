#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hifm/field.hpp"
#include "hifm/linalg.hpp"

namespace hifm {

/// Fully connected network (y, z) ↦ (v_y, v_z) with softplus hidden layers
/// and an identity output head. All parameters live in one flat buffer:
/// per layer, a rows×cols row-major weight block followed by `rows` biases.
class Mlp final : public VectorField {
 public:
  struct LayerShape {
    std::size_t rows = 0;  // fan-out
    std::size_t cols = 0;  // fan-in
    std::size_t offset = 0;

    std::size_t weight_count() const noexcept { return rows * cols; }
    std::size_t bias_offset() const noexcept { return offset + rows * cols; }
  };

  Mlp() = default;
  /// `widths` = [dim+1, h₁, …, h_L, dim+1]; weights ~ N(0, 2/(fan_in+fan_out)), zero biases.
  static Mlp init(const std::vector<std::size_t>& widths, std::uint64_t seed);
  /// Network with the given widths and all parameters zero.
  static Mlp zeros(const std::vector<std::size_t>& widths);

  std::size_t dim() const override { return widths_.front() - 1; }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  const std::vector<LayerShape>& layers() const noexcept { return layers_; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  double weight(std::size_t layer, std::size_t r, std::size_t c) const;
  double& weight(std::size_t layer, std::size_t r, std::size_t c);
  double bias(std::size_t layer, std::size_t r) const;
  double& bias(std::size_t layer, std::size_t r);

  FieldValue forward(std::span<const double> y, double z) const;
  FieldValue evaluate(std::span<const double> y, double z) const override { return forward(y, z); }
  FieldValue jvp(std::span<const double> y, double z, std::span<const double> tangent) const override;

  /// Output of every layer for one input: pre-activations and activations.
  struct Trace {
    std::vector<Vector> pre;   // per layer
    std::vector<Vector> post;  // post[0] = input, post[l+1] = activation of layer l
  };
  Trace trace(std::span<const double> y, double z) const;
  /// Accumulates ∂⟨g_out, output⟩/∂θ into `grad` given a forward trace.
  void backward(const Trace& tr, std::span<const double> g_out, std::span<double> grad) const;

  bool operator==(const Mlp& o) const { return widths_ == o.widths_ && params_ == o.params_; }

 private:
  explicit Mlp(std::vector<std::size_t> widths);

  std::vector<std::size_t> widths_{1, 1};
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

/// How conditional targets and model outputs are compared.
struct ModeTransform {
  bool finite = true;
  bool project = false;
  /// Zero center-of-mass projection of v_y for particle data (0 = off).
  std::size_t spatial_dim = 0;
};

struct TransformedField {
  Vector v_y;
  double v_z = 0.0;
  double denom = 1.0;    // divisor used by the finite transform
  bool clamped = false;  // |v_z| was raised to the floor
};

/// The single transform applied to both targets and model outputs:
/// finite → (v_y / v_z, 1); then hyperbolic projection and/or zero-CoM.
/// Targets pass min_abs_vz = 0, model outputs kMinModelVz.
TransformedField apply_mode_transform(std::span<const double> v_y, double v_z, const ModeTransform& mode,
                                      const SymMatrix* hyp_projector, double min_abs_vz);

struct TrainSample {
  Vector y;
  double z = 0.0;
  Vector target_vy;
  double target_vz = 0.0;
  const SymMatrix* hyp_projector = nullptr;  // used when mode.project
  double weight = 1.0;
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;
  std::size_t clamp_count = 0;
};

/// Weighted mean of ‖T(model) − T(target)‖² with exact reverse-mode gradients.
LossGrad loss_and_grad(const Mlp& model, std::span<const TrainSample> batch, const ModeTransform& mode);

/// Loss only.
double batch_loss(const Mlp& model, std::span<const TrainSample> batch, const ModeTransform& mode);

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct AdamWState {
  AdamWConfig hp;
  std::uint64_t step = 0;
  Vector m;
  Vector v;
};

AdamWState adamw_init(std::size_t parameter_count, AdamWConfig hp = {});
/// Decoupled weight decay: θ ← θ − lr·(m̂/(√v̂ + ε) + λθ).
void adamw_step(AdamWState& state, std::span<double> params, std::span<const double> grads);

void save_model(const Mlp& model, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

}  // namespace hifm
