#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hifm/checks.hpp"
#include "hifm/data.hpp"
#include "hifm/energy.hpp"
#include "hifm/error.hpp"
#include "hifm/likelihood.hpp"
#include "hifm/model.hpp"
#include "hifm/parallel.hpp"
#include "hifm/run_config.hpp"
#include "hifm/spectrum.hpp"
#include "hifm/train.hpp"

namespace fs = std::filesystem;
using namespace hifm;

namespace {

struct EnergyOptions {
  std::string kind;
  std::size_t m = 7;
  std::size_t spatial_dim = 3;
  std::string quad_diag = "1,25";
  std::string quad_center;
  double epsilon = 1.0;
  double sigma = 1.0;
};

void add_energy_options(CLI::App* cmd, EnergyOptions& o, bool with_particles) {
  cmd->add_option("--energy", o.kind, "Energy: quadratic, lj or formation")
      ->required()
      ->check(CLI::IsMember({"quadratic", "lj", "formation"}));
  if (with_particles) {
    cmd->add_option("--m", o.m, "Number of particles")->capture_default_str();
    cmd->add_option("--spatial-dim", o.spatial_dim, "Spatial dimension (2 or 3)")->capture_default_str();
  }
  cmd->add_option("--quad-diag", o.quad_diag, "Quadratic energy diagonal, comma separated")->capture_default_str();
  cmd->add_option("--quad-center", o.quad_center, "Quadratic energy center, comma separated (default 0)");
  cmd->add_option("--epsilon", o.epsilon, "Lennard-Jones well depth")->capture_default_str();
  cmd->add_option("--sigma", o.sigma, "Lennard-Jones length scale")->capture_default_str();
}

EnergyModel quadratic_from(const EnergyOptions& o) {
  const Vector diag = parse_list("quad-diag", o.quad_diag);
  if (diag.empty()) throw ValidationError("--quad-diag must not be empty");
  Vector center = parse_list("quad-center", o.quad_center);
  if (center.empty()) center.assign(diag.size(), 0.0);
  return EnergyModel::quadratic(std::move(center), SymMatrix::diagonal(diag));
}

Dataset load_dataset(const std::string& path, std::size_t m, std::size_t spatial_dim) {
  Dataset ds = load(path);
  if (spatial_dim > 0 && !ds.is_particles()) {
    if (m * spatial_dim != ds.dim()) throw ValidationError("--m × --spatial-dim does not match the data dimension");
    ds.meta.kind = DatasetKind::particles;
    ds.meta.m = m;
    ds.meta.spatial_dim = spatial_dim;
  }
  return ds.is_particles() ? preprocess_particles(std::move(ds)) : ds;
}

int cmd_gen_data(const EnergyOptions& eo, const LangevinConfig& lc, const std::string& out) {
  Rng ref_rng(lc.seed ^ 0x5eedf00dULL);
  const EnergyModel e = [&] {
    if (eo.kind == "quadratic") return quadratic_from(eo);
    if (eo.kind == "lj") return EnergyModel::lennard_jones(eo.m, eo.spatial_dim, eo.epsilon, eo.sigma);
    const Vector ref = random_particle_placement(eo.m, eo.spatial_dim, 1.0, ref_rng);
    return EnergyModel::formation_from(ref, eo.m, eo.spatial_dim);
  }();
  const Dataset ds = langevin_generate(e, lc);
  store(ds, out);
  double grad = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) grad += norm(gradient(e, ds.samples.row(i)));
  std::printf("n=%zu, dim=%zu, mean_grad_norm=%.6g\n", ds.size(), ds.dim(),
              ds.size() ? grad / static_cast<double>(ds.size()) : 0.0);
  return 0;
}

struct HessianOptions {
  std::string data;
  std::size_t index = 0;
  double c = 2.0;
  bool hyperbolize = false;
  double zero_tol = kZeroEigTol;
  std::string out;
};

int cmd_hessian(const EnergyOptions& eo, const HessianOptions& ho) {
  const Dataset ds = load(ho.data);
  if (ho.index >= ds.size()) throw ValidationError("--index out of range (dataset has " + std::to_string(ds.size()) + " rows)");
  const auto y = ds.samples.row(ho.index);
  const std::size_t m = ds.is_particles() ? ds.meta.m : eo.m;
  const std::size_t sd = ds.is_particles() ? ds.meta.spatial_dim : eo.spatial_dim;
  const EnergyModel e = [&] {
    if (eo.kind == "quadratic") return quadratic_from(eo);
    if (eo.kind == "lj") return EnergyModel::lennard_jones(m, sd, eo.epsilon, eo.sigma);
    return EnergyModel::formation_from(y, m, sd);
  }();
  if (e.dim() != ds.dim()) throw ValidationError("energy dimension does not match the data dimension");
  const Spectrum raw = analyze(hessian(e, y), ho.zero_tol);
  Spectrum processed = rescale_condition(raw, ho.c);
  if (ho.hyperbolize) processed = hyperbolize(processed);

  std::ofstream os(ho.out, std::ios::trunc);
  if (!os) throw FormatError("cannot write " + ho.out);
  os << "index,alpha_raw,alpha_processed,is_null\n";
  for (std::size_t i = 0; i < raw.dim(); ++i) {
    os << i << ',' << format_double(raw.eig.eigvals[i]) << ',' << format_double(processed.eig.eigvals[i]) << ','
       << (raw.null_mask[i] ? 1 : 0) << '\n';
  }
  if (!os) throw FormatError("failed writing " + ho.out);

  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = 0; i < processed.dim(); ++i) {
    if (processed.null_mask[i] && !ho.hyperbolize) continue;
    lo = std::min(lo, processed.eig.eigvals[i]);
    hi = std::max(hi, processed.eig.eigvals[i]);
  }
  std::printf("null_count=%zu\n", raw.null_count());
  if (hi > 0.0)
    std::printf("condition=%.17g\n", hi / lo);
  else
    std::printf("condition=undefined\n");
  return 0;
}

int cmd_train(const std::string& config, const std::vector<std::string>& overrides, std::optional<std::size_t> threads) {
  RunConfig rc = config.empty() ? RunConfig() : RunConfig::from_file(config);
  for (const std::string& s : overrides) rc.set(s);
  const TrainConfig tc = rc.train_config();
  set_max_threads(threads ? *threads : rc.threads());
  if (rc.data_path().empty()) throw ValidationError("config key \"data\" is required");

  Dataset ds = load(rc.data_path());
  if (ds.is_particles()) ds = preprocess_particles(std::move(ds));
  Dataset train_set, eval_set;
  if (!rc.eval_data_path().empty()) {
    train_set = std::move(ds);
    eval_set = load(rc.eval_data_path());
    if (eval_set.is_particles()) eval_set = preprocess_particles(std::move(eval_set));
  } else {
    std::tie(train_set, eval_set) = split(ds, rc.train_frac(), rc.split_seed());
  }
  const std::optional<EnergyModel> energy = rc.quadratic_energy();

  const fs::path out = rc.out_dir();
  fs::create_directories(out);
  rc.write_resolved(out / "config.resolved.txt");
  const TrainResult res = train_loop(tc, train_set, eval_set, energy ? &*energy : nullptr);
  save_model(res.model, out / "model.bin");
  res.log.write_csv(out / "train_log.csv");
  if (!res.log.rows.empty()) {
    const TrainLogRow& last = res.log.rows.back();
    std::printf("steps=%zu, final_loss=%.6g", last.step, last.loss);
    if (last.eval_nll) std::printf(", eval_nll=%.6g, eval_nfe=%.4g", *last.eval_nll, *last.eval_nfe);
    std::printf("\n");
  } else {
    std::printf("steps=0\n");
  }
  return 0;
}

struct NllOptions {
  std::string model, data, out;
  double rtol = 1e-2, atol = 1e-2, z_start = 1.0;
  std::size_t m = 0, spatial_dim = 0;
};

int cmd_nll(const NllOptions& o) {
  const Mlp model = load_model(o.model);
  const Dataset ds = load_dataset(o.data, o.m, o.spatial_dim);
  if (ds.dim() != model.dim()) throw ValidationError("model and data dimensions differ");
  Rk45Config cfg;
  cfg.rtol = o.rtol;
  cfg.atol = o.atol;
  const NllReport rep = nll(model, ds.samples, cfg, prior_for(ds.meta), o.z_start);
  if (!o.out.empty()) {
    std::ofstream os(o.out, std::ios::trunc);
    if (!os) throw FormatError("cannot write " + o.out);
    os << "sample_index,nll,nfe,accepted,rejected,status\n";
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const NllSample& s = rep.samples[i];
      os << i << ',' << format_double(s.nll) << ',' << s.nfe << ',' << s.accepted << ',' << s.rejected << ','
         << (s.status == NllStatus::ok ? "ok" : "failed") << '\n';
    }
    if (!os) throw FormatError("failed writing " + o.out);
  }
  const std::size_t failed = rep.samples.size() - rep.ok_count();
  if (failed > 0) std::fprintf(stderr, "warning: %zu of %zu samples failed to integrate\n", failed, rep.samples.size());
  std::printf("mean_nll=%.10g, mean_nfe=%.6g\n", rep.mean_nll(), rep.mean_nfe());
  return rep.ok_count() == 0 && !rep.samples.empty() ? 1 : 0;
}

struct SampleOptions {
  std::string model, out;
  std::size_t n = 100, m = 0, spatial_dim = 0;
  std::uint64_t seed = 0;
  double rtol = 1e-2, atol = 1e-2;
};

int cmd_sample(const SampleOptions& o) {
  const Mlp model = load_model(o.model);
  Dataset ds;
  if (o.spatial_dim > 0) {
    if (o.m * o.spatial_dim != model.dim()) throw ValidationError("--m × --spatial-dim does not match the model");
    ds.meta = {DatasetKind::particles, o.m, o.spatial_dim, "samples"};
  }
  Rk45Config cfg;
  cfg.rtol = o.rtol;
  cfg.atol = o.atol;
  Rng rng(o.seed);
  const SampleResult res = sample(model, prior_for(ds.meta), cfg, rng, o.n);
  ds.samples = res.samples;
  store(ds, o.out);
  std::printf("n=%zu, dim=%zu, mean_nfe=%.6g\n", ds.size(), ds.dim(), res.mean_nfe);
  return 0;
}

int cmd_check(bool perturb) {
  bool ok = true;
  for (const CheckResult& r : run_checks(perturb)) {
    std::printf("%s %s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hessian-informed flow matching: data generation, spectra, training and likelihoods"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  auto* threads_opt = app.add_option("--threads", threads, "Maximum worker threads")->check(CLI::PositiveNumber);

  EnergyOptions gen_energy;
  LangevinConfig lc;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a dataset by overdamped Langevin dynamics");
  add_energy_options(gen, gen_energy, true);
  gen->add_option("--n", lc.n, "Number of samples")->capture_default_str();
  gen->add_option("--eta", lc.eta, "Step size")->capture_default_str();
  gen->add_option("--tau", lc.tau, "Temperature")->capture_default_str();
  gen->add_option("--seed", lc.seed, "Random seed")->capture_default_str();
  gen->add_option("--burn-in", lc.burn_in, "Burn-in steps per chain")->capture_default_str();
  gen->add_option("--thin", lc.thin, "Steps between emitted samples")->capture_default_str();
  gen->add_option("--chains", lc.chains, "Independent chains")->capture_default_str();
  gen->add_option("--refine-steps", lc.refine_steps, "Gradient-descent steps applied to each sample")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output dataset (.csv or binary)")->required();

  EnergyOptions hess_energy;
  HessianOptions ho;
  auto* hess = app.add_subcommand("hessian", "Write the Hessian spectrum of one data point");
  add_energy_options(hess, hess_energy, true);
  hess->add_option("--data", ho.data, "Dataset")->required();
  hess->add_option("--index", ho.index, "Row index")->capture_default_str();
  hess->add_option("--c", ho.c, "Target condition number")->capture_default_str();
  hess->add_flag("--hyperbolize", ho.hyperbolize, "Replace null eigenvalues by the smallest non-null one");
  hess->add_option("--zero-tol", ho.zero_tol, "Relative zero-eigenvalue threshold")->capture_default_str();
  hess->add_option("--out", ho.out, "Output CSV")->required();

  std::string config;
  std::vector<std::string> overrides;
  auto* train = app.add_subcommand("train", "Train a flow model from a key=value config");
  train->add_option("--config", config, "Config file")->check(CLI::ExistingFile);
  train->add_option("--set", overrides, "Override a config entry (key=value); repeatable");

  NllOptions no;
  auto* nll_cmd = app.add_subcommand("nll", "Negative log-likelihood of data under a trained model");
  nll_cmd->add_option("--model", no.model, "Model file")->required();
  nll_cmd->add_option("--data", no.data, "Dataset")->required();
  nll_cmd->add_option("--rtol", no.rtol, "Relative tolerance")->capture_default_str();
  nll_cmd->add_option("--atol", no.atol, "Absolute tolerance")->capture_default_str();
  nll_cmd->add_option("--z-start", no.z_start, "Interpolant state at which data enters")->capture_default_str();
  nll_cmd->add_option("--m", no.m, "Particles (for CSV particle data)");
  nll_cmd->add_option("--spatial-dim", no.spatial_dim, "Spatial dimension (for CSV particle data)");
  nll_cmd->add_option("--out", no.out, "Per-sample CSV");

  SampleOptions so;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples by integrating a trained model");
  sample_cmd->add_option("--model", so.model, "Model file")->required();
  sample_cmd->add_option("--n", so.n, "Number of samples")->capture_default_str();
  sample_cmd->add_option("--seed", so.seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("--m", so.m, "Particles (zero center-of-mass prior)");
  sample_cmd->add_option("--spatial-dim", so.spatial_dim, "Spatial dimension (zero center-of-mass prior)");
  sample_cmd->add_option("--rtol", so.rtol, "Relative tolerance")->capture_default_str();
  sample_cmd->add_option("--atol", so.atol, "Absolute tolerance")->capture_default_str();
  sample_cmd->add_option("--out", so.out, "Output dataset")->required();

  bool perturb = false;
  auto* check = app.add_subcommand("check", "Run the built-in verification suite");
  check->add_flag("--perturb", perturb, "Offset every measured discrepancy past its tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    set_max_threads(threads);
    if (gen->parsed()) return cmd_gen_data(gen_energy, lc, gen_out);
    if (hess->parsed()) return cmd_hessian(hess_energy, ho);
    if (train->parsed()) {
      return cmd_train(config, overrides, threads_opt->count() ? std::optional<std::size_t>(threads) : std::nullopt);
    }
    if (nll_cmd->parsed()) return cmd_nll(no);
    if (sample_cmd->parsed()) return cmd_sample(so);
    if (check->parsed()) return cmd_check(perturb);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
