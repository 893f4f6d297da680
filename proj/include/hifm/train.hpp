#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "hifm/data.hpp"
#include "hifm/energy.hpp"
#include "hifm/flow.hpp"
#include "hifm/likelihood.hpp"
#include "hifm/model.hpp"
#include "hifm/random.hpp"
#include "hifm/spectrum.hpp"

namespace hifm {

enum class Method { hessian_formation, hessian_quadratic, isotropic_data, isotropic_interpolant, optimal_transport };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct TrainConfig {
  Method method = Method::hessian_quadratic;
  FlowFlags flags;
  double c = 2.0;
  double gamma = 1e-10;
  double kappa = 1.0;
  double sigma_min = 1e-5;
  double eps = 1e-5;
  std::size_t batch_size = 256;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  double z_max = kZMax;
  std::vector<std::size_t> hidden{64, 64, 64};
  AdamWConfig optimizer;
  std::size_t eval_every = 0;  // 0: no periodic evaluation
  std::size_t eval_count = 100;
  Rk45Config eval_rk;
  bool sample_y0 = false;  // draw y0 from the prior instead of using its mean
  bool log_wall_time = false;

  void validate() const;
};

/// Marks the optimal-transport path, which has no spectrum.
struct OtMarker {};

using SampleFlow = std::variant<OtMarker, FlowSpec>;

/// Per-method flow for one data point. `energy` supplies the Hessian for
/// hessian_quadratic; hessian_formation builds a complete formation graph from
/// y1 itself using `meta`.
SampleFlow make_flow_spec_for_sample(const TrainConfig& cfg, std::span<const double> y1, const EnergyModel* energy,
                                     const DatasetMeta& meta);

/// Flows and hyperbolic projectors computed once per dataset row.
class FlowTable {
 public:
  FlowTable(const TrainConfig& cfg, const Dataset& ds, const EnergyModel* energy);

  std::size_t size() const noexcept { return flows_.size(); }
  const SampleFlow& flow(std::size_t i) const { return flows_[i]; }
  /// Null when projection is off or the flow is OT.
  const SymMatrix* projector(std::size_t i) const;

 private:
  std::vector<SampleFlow> flows_;
  std::vector<std::optional<SymMatrix>> projectors_;
};

ModeTransform mode_for(const TrainConfig& cfg, const DatasetMeta& meta);

/// Draws path points and conditional targets for the given dataset rows. All
/// random numbers are consumed sequentially from `rng`.
std::vector<TrainSample> make_batch(const TrainConfig& cfg, const Dataset& ds, const FlowTable& table,
                                    std::span<const std::size_t> rows, Rng& rng);

struct StepResult {
  double loss = 0.0;
  std::size_t clamp_count = 0;
};

/// One AdamW step on the batch; throws NumericalError naming the offending
/// sample when the loss is not finite.
StepResult training_step(Mlp& model, AdamWState& opt, const TrainConfig& cfg, const Dataset& ds, const FlowTable& table,
                         std::span<const std::size_t> rows, Rng& rng);

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;
  std::optional<double> eval_nll;
  std::optional<double> eval_nfe;
  double wall_ms = 0.0;
  std::size_t clamp_count = 0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;

  void append(TrainLogRow row);
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  Mlp model;
  TrainLog log;
};

std::vector<std::size_t> model_widths(std::size_t dim, const std::vector<std::size_t>& hidden);

Prior prior_for(const DatasetMeta& meta);

TrainResult train_loop(const TrainConfig& cfg, const Dataset& dataset, const Dataset& eval_set,
                       const EnergyModel* energy = nullptr);

}  // namespace hifm
