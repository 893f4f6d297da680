#include "hifm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "hifm/error.hpp"
#include "hifm/parallel.hpp"

namespace hifm {

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::hessian_formation, "hessian_formation"},
    {Method::hessian_quadratic, "hessian_quadratic"},
    {Method::isotropic_data, "isotropic_data"},
    {Method::isotropic_interpolant, "isotropic_interpolant"},
    {Method::optimal_transport, "optimal_transport"},
};

FlowSpecConfig spec_config(const TrainConfig& cfg) {
  FlowSpecConfig fc;
  fc.c = cfg.c;
  fc.gamma = cfg.gamma;
  fc.kappa = cfg.kappa;
  fc.flags = cfg.flags;
  return fc;
}

FlowSpec isotropic_spec(const TrainConfig& cfg, std::span<const double> y1, double alpha) {
  FlowSpecConfig fc = spec_config(cfg);
  fc.c = 1.0;
  return build_flow_spec(y1, SymMatrix::diagonal(Vector(y1.size(), alpha)), fc);
}

std::string spectrum_summary(const SampleFlow& flow) {
  const auto* fs = std::get_if<FlowSpec>(&flow);
  if (fs == nullptr) return "optimal-transport path";
  std::ostringstream os;
  os << "alpha_min=" << fs->spectrum.alpha_min << " alpha_max=" << fs->spectrum.alpha_max
     << " null_count=" << fs->spectrum.null_count() << " dim=" << fs->dim();
  return os.str();
}

bool has_eval(const TrainConfig& cfg, std::size_t step) {
  return cfg.eval_every > 0 && (step % cfg.eval_every == 0 || step == cfg.steps);
}

}  // namespace

std::string_view to_string(Method m) {
  for (const auto& [k, name] : kMethodNames)
    if (k == m) return name;
  return "unknown";
}

Method method_from_string(std::string_view s) {
  for (const auto& [k, name] : kMethodNames)
    if (name == s) return k;
  throw ValidationError("unknown method \"" + std::string(s) + "\"");
}

void TrainConfig::validate() const {
  if (!(c >= 1.0)) throw ValidationError("train: c must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("train: gamma must be positive");
  if (!(kappa > 0.0)) throw ValidationError("train: kappa must be positive");
  if (batch_size == 0) throw ValidationError("train: batch_size must be >= 1");
  if (!(sigma_min >= 0.0 && sigma_min < 1.0)) throw ValidationError("train: sigma_min must lie in [0, 1)");
  if (!(z_max > 0.0 && z_max < 1.0)) throw ValidationError("train: z_max must lie in (0, 1)");
  if (!(optimizer.lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (!(eval_rk.rtol > 0.0 && eval_rk.atol > 0.0)) throw ValidationError("train: tolerances must be positive");
}

SampleFlow make_flow_spec_for_sample(const TrainConfig& cfg, std::span<const double> y1, const EnergyModel* energy,
                                     const DatasetMeta& meta) {
  switch (cfg.method) {
    case Method::optimal_transport:
      return OtMarker{};
    case Method::isotropic_data:
      return isotropic_spec(cfg, y1, isotropic_alpha_data(y1, cfg.eps));
    case Method::isotropic_interpolant:
      return isotropic_spec(cfg, y1, isotropic_alpha_interp(cfg.eps, cfg.kappa));
    case Method::hessian_quadratic: {
      if (energy == nullptr) throw ValidationError("hessian_quadratic: an energy model is required");
      if (energy->dim() != y1.size()) throw ValidationError("hessian_quadratic: energy dimension mismatch");
      return build_flow_spec(y1, hessian(*energy, y1), spec_config(cfg));
    }
    case Method::hessian_formation: {
      if (meta.kind != DatasetKind::particles) throw ValidationError("hessian_formation: particle dataset required");
      const EnergyModel e = EnergyModel::formation_from(y1, meta.m, meta.spatial_dim);
      return build_flow_spec(y1, hessian(e, y1), spec_config(cfg));
    }
  }
  throw ValidationError("unknown method");
}

FlowTable::FlowTable(const TrainConfig& cfg, const Dataset& ds, const EnergyModel* energy)
    : flows_(ds.size()), projectors_(ds.size()) {
  const bool project = cfg.flags.project && cfg.method != Method::optimal_transport;
  parallel_for(ds.size(), [&](std::size_t i) {
    flows_[i] = make_flow_spec_for_sample(cfg, ds.samples.row(i), energy, ds.meta);
    if (project) {
      const FlowSpec& fs = std::get<FlowSpec>(flows_[i]);
      projectors_[i] = subspace_projector(fs.spectrum.eig, fs.spectrum.hyperbolic_mask());
    }
  });
}

const SymMatrix* FlowTable::projector(std::size_t i) const {
  return projectors_[i] ? &*projectors_[i] : nullptr;
}

ModeTransform mode_for(const TrainConfig& cfg, const DatasetMeta& meta) {
  ModeTransform mode;
  mode.finite = cfg.flags.finite;
  mode.project = cfg.flags.project && cfg.method != Method::optimal_transport;
  mode.spatial_dim = meta.kind == DatasetKind::particles ? meta.spatial_dim : 0;
  return mode;
}

std::vector<TrainSample> make_batch(const TrainConfig& cfg, const Dataset& ds, const FlowTable& table,
                                    std::span<const std::size_t> rows, Rng& rng) {
  const std::size_t n = rows.size();
  const std::size_t dim = ds.dim();
  const std::size_t sd = ds.com_spatial_dim();
  const bool ot = cfg.method == Method::optimal_transport;
  const double z_hi = ot ? 1.0 : cfg.z_max;

  std::vector<double> zs(n);
  Matrix noise(n, dim);
  Matrix y0s(cfg.sample_y0 && !ot ? n : 0, dim);
  for (std::size_t b = 0; b < n; ++b) {
    zs[b] = uniform(rng, 0.0, z_hi);
    fill_standard_normal(rng, noise.row(b));
    if (!y0s.empty()) {
      fill_standard_normal(rng, y0s.row(b));
      if (sd > 0) zero_com_project_inplace(y0s.row(b), sd);
    }
  }

  std::vector<TrainSample> batch(n);
  parallel_for(n, [&](std::size_t b) {
    const std::size_t row = rows[b];
    const std::span<const double> y1 = ds.samples.row(row);
    TrainSample& s = batch[b];
    s.z = zs[b];
    s.hyp_projector = table.projector(row);
    const std::span<const double> eps = noise.row(b);
    if (const auto* fs = std::get_if<FlowSpec>(&table.flow(row))) {
      const Vector y0 = y0s.empty() ? Vector(dim, 0.0) : Vector(y0s.row(b).begin(), y0s.row(b).end());
      const GaussianState g = mean_cov_z(*fs, y0, s.z);
      Vector scaled(dim);
      for (std::size_t i = 0; i < dim; ++i) scaled[i] = std::sqrt(g.variances[i]) * eps[i];
      const Vector offset = matvec(g.basis, scaled);
      s.y = g.mean;
      for (std::size_t i = 0; i < dim; ++i) s.y[i] += offset[i];
      if (sd > 0) zero_com_project_inplace(s.y, sd);
      const FieldValue fv = cond_field_time(*fs, s.y, interpolant_time(*fs, s.z), y0);
      s.target_vy = fv.v_y;
      s.target_vz = fv.v_z;
    } else {
      Vector e(eps.begin(), eps.end());
      if (sd > 0) zero_com_project_inplace(e, sd);
      const double scale = 1.0 - (1.0 - cfg.sigma_min) * s.z;
      s.y.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) s.y[i] = s.z * y1[i] + scale * e[i];
      const FieldValue fv = ot_field(s.y, s.z, y1, cfg.sigma_min);
      s.target_vy = fv.v_y;
      s.target_vz = fv.v_z;
    }
  });
  return batch;
}

StepResult training_step(Mlp& model, AdamWState& opt, const TrainConfig& cfg, const Dataset& ds, const FlowTable& table,
                         std::span<const std::size_t> rows, Rng& rng) {
  if (rows.empty()) throw ValidationError("training_step: empty batch");
  const std::vector<TrainSample> batch = make_batch(cfg, ds, table, rows, rng);
  const ModeTransform mode = mode_for(cfg, ds.meta);
  const LossGrad lg = loss_and_grad(model, batch, mode);
  if (!std::isfinite(lg.loss)) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double l = batch_loss(model, std::span<const TrainSample>(&batch[b], 1), mode);
      if (!std::isfinite(l)) {
        std::ostringstream os;
        os << "training aborted: non-finite loss at batch index " << b << " (dataset row " << rows[b]
           << ", z=" << batch[b].z << ", " << spectrum_summary(table.flow(rows[b])) << ")";
        throw NumericalError(os.str());
      }
    }
    throw NumericalError("training aborted: non-finite batch loss");
  }
  adamw_step(opt, model.parameters(), lg.grad);
  return {lg.loss, lg.clamp_count};
}

void TrainLog::append(TrainLogRow row) {
  if (!rows.empty() && row.step <= rows.back().step) throw ValidationError("TrainLog: step index must increase");
  rows.push_back(std::move(row));
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open log file for writing: " + path.string());
  os << "step,loss,eval_nll,eval_nfe,wall_ms,clamp_count\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const TrainLogRow& r : rows) {
    os << r.step << ',' << num(r.loss) << ',' << (r.eval_nll ? num(*r.eval_nll) : "") << ','
       << (r.eval_nfe ? num(*r.eval_nfe) : "") << ',' << num(r.wall_ms) << ',' << r.clamp_count << '\n';
  }
  if (!os) throw FormatError("failed writing log file: " + path.string());
}

std::vector<std::size_t> model_widths(std::size_t dim, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> w{dim + 1};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(dim + 1);
  return w;
}

Prior prior_for(const DatasetMeta& meta) {
  return Prior{meta.kind == DatasetKind::particles ? meta.spatial_dim : 0};
}

TrainResult train_loop(const TrainConfig& cfg, const Dataset& dataset, const Dataset& eval_set,
                       const EnergyModel* energy) {
  cfg.validate();
  if (dataset.size() == 0) throw ValidationError("train_loop: empty dataset");
  if (eval_set.size() > 0 && eval_set.dim() != dataset.dim()) {
    throw ValidationError("train_loop: evaluation set dimension differs from training set");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainResult out{Mlp::init(model_widths(dataset.dim(), cfg.hidden), cfg.seed), {}};
  if (cfg.steps == 0) return out;

  const FlowTable table(cfg, dataset, energy);
  AdamWState opt = adamw_init(out.model.parameters().size(), cfg.optimizer);
  Rng rng(cfg.seed);
  const Matrix eval_points = head(eval_set, cfg.eval_count).samples;
  const Prior prior = prior_for(dataset.meta);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<std::size_t> rows(cfg.batch_size);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (std::size_t& r : rows) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      r = order[cursor++];
    }
    const StepResult sr = training_step(out.model, opt, cfg, dataset, table, rows, rng);
    TrainLogRow row;
    row.step = step;
    row.loss = sr.loss;
    row.clamp_count = sr.clamp_count;
    if (has_eval(cfg, step) && eval_points.rows() > 0) {
      const NllReport rep = nll(out.model, eval_points, cfg.eval_rk, prior);
      row.eval_nll = rep.mean_nll();
      row.eval_nfe = rep.mean_nfe();
    }
    if (cfg.log_wall_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    out.log.append(std::move(row));
  }
  return out;
}

}  // namespace hifm
