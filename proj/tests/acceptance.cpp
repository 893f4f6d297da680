// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--hifm PATH] [--work DIR] [--expect-fail IDS] [criterion ...]
//
// With --hifm, criterion 11 runs the command-line `train` twice; otherwise it
// drives the library directly. Criteria in the comma-separated IDS still print
// FAIL but do not affect the exit status.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "hifm/data.hpp"
#include "hifm/energy.hpp"
#include "hifm/flow.hpp"
#include "hifm/likelihood.hpp"
#include "hifm/model.hpp"
#include "hifm/spectrum.hpp"
#include "hifm/train.hpp"

using namespace hifm;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FlowSpec random_flow_spec(std::size_t n, Rng& rng, double alpha_lo, double alpha_hi, double c_hi, double gamma_lo,
                          double gamma_hi, bool allow_null, double sigma0 = -1.0) {
  Vector d(n);
  for (double& x : d) x = uniform(rng, alpha_lo, alpha_hi);
  if (allow_null && n > 1 && uniform(rng, 0.0, 1.0) < 0.5) d[0] = 0.0;
  FlowSpecConfig cfg;
  cfg.c = uniform(rng, 1.0, c_hi);
  cfg.gamma = uniform(rng, gamma_lo, gamma_hi);
  cfg.kappa = uniform(rng, 0.5, 2.0);
  cfg.sigma0 = sigma0 > 0.0 ? sigma0 : uniform(rng, 0.5, 2.0);
  cfg.flags.isotropize = uniform(rng, 0.0, 1.0) < 0.5;
  return build_flow_spec(random_vector(n, rng), with_spectrum(random_orthogonal(n, rng), d), cfg);
}

Matrix dense(const FlowSpec& fs, const Vector& per_direction) {
  return full_cov(fs.basis(), per_direction);
}

// Euler–Maruyama in the original coordinates against the closed-form moments.
Outcome criterion_1() {
  Rng rng(101);
  const std::size_t paths = 10000;
  const double dt = 1e-3, horizon = 2.0;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  double worst = 0.0;
  std::size_t checks = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const FlowSpec fs = random_flow_spec(n, rng, 0.2, 2.0, 4.0, 0.05, 0.5, true);
    const Matrix a = dense(fs, fs.alpha());
    const Matrix b = dense(fs, fs.beta);
    const Matrix s0 = dense(fs, [&] {
      Vector r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = std::sqrt(fs.sigma0[i]);
      return r;
    }());
    const Vector y0 = random_vector(n, rng);
    Vector sum(n, 0.0);
    Matrix sq(n, n);
    Vector y(n), e(n), drift(n), kick(n);
    const double sdt = std::sqrt(dt);
    for (std::size_t p = 0; p < paths; ++p) {
      fill_standard_normal(rng, e);
      const Vector init = matvec(s0, e);
      for (std::size_t i = 0; i < n; ++i) y[i] = y0[i] + init[i];
      for (std::size_t k = 0; k < steps; ++k) {
        fill_standard_normal(rng, e);
        for (std::size_t i = 0; i < n; ++i) {
          double ad = 0.0, bw = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            ad += a(i, j) * (y[j] - fs.y1[j]);
            bw += b(i, j) * e[j];
          }
          drift[i] = ad;
          kick[i] = bw;
        }
        for (std::size_t i = 0; i < n; ++i) y[i] += -drift[i] * dt + kick[i] * sdt;
      }
      for (std::size_t i = 0; i < n; ++i) {
        sum[i] += y[i];
        for (std::size_t j = 0; j < n; ++j) sq(i, j) += y[i] * y[j];
      }
    }
    const GaussianState g = mean_cov_time(fs, y0, horizon);
    const Matrix cov = dense(fs, g.variances);
    const double np = static_cast<double>(paths);
    Vector mean(n);
    for (std::size_t i = 0; i < n; ++i) mean[i] = sum[i] / np;
    for (std::size_t i = 0; i < n; ++i) {
      const double se = std::sqrt(cov(i, i) / np);
      worst = std::max(worst, std::abs(mean[i] - g.mean[i]) / se);
      ++checks;
      for (std::size_t j = 0; j <= i; ++j) {
        const double emp = (sq(i, j) - np * mean[i] * mean[j]) / (np - 1.0);
        const double se_c = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / np);
        worst = std::max(worst, std::abs(emp - cov(i, j)) / se_c);
        ++checks;
      }
    }
  }
  return {worst <= 5.0, fmt("max |empirical - closed form| = %.2f standard errors over %zu components", worst, checks)};
}

Outcome criterion_2() {
  Rng rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const FlowSpec fs = random_flow_spec(n, rng, 0.1, 5.0, 10.0, 1e-3, 1.0, true);
    const Vector y0 = random_vector(n, rng);
    // t ranges over the window the z path is used on, z ≤ z_max.
    const double t = uniform(rng, 0.0, std::min(5.0, interpolant_time(fs, kZMax)));
    const GaussianState a = mean_cov_time(fs, y0, t);
    const GaussianState b = mean_cov_z(fs, y0, interpolant_mean(fs, t));
    worst = std::max(worst, max_abs_diff(a.mean, b.mean));
    worst = std::max(worst, max_abs_diff(dense(fs, a.variances).data(), dense(fs, b.variances).data()));
  }
  return {worst <= 1e-12, fmt("max deviation %.3g over 100 (FlowSpec, t with z(t) <= z_max)", worst)};
}

Outcome criterion_3() {
  Rng rng(103);
  Rk45Config cfg;
  cfg.rtol = cfg.atol = 1e-8;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const FlowSpec fs = random_flow_spec(n, rng, 0.1, 5.0, 10.0, 1e-10, 1.0, true);
    const Vector y0 = random_vector(n, rng);
    const OdeRhs rhs = [&](double z, std::span<const double> y, std::span<double> dy) {
      const FieldValue fv = cond_field_finite(fs, y, std::min(z, kZMax), y0);
      std::copy(fv.v_y.begin(), fv.v_y.end(), dy.begin());
    };
    const Vector start = mean_cov_z(fs, y0, 0.0).mean;
    const Rk45Result r = rk45(rhs, start, 0.0, kZMax, cfg);
    worst = std::max(worst, rel_err(r.x, mean_cov_z(fs, y0, kZMax).mean));
  }
  return {worst <= 1e-5, fmt("max relative error %.3g over 20 FlowSpecs", worst)};
}

Outcome criterion_4() {
  Rng rng(104);
  Rk45Config cfg;
  cfg.rtol = cfg.atol = 1e-6;
  double worst = 0.0;
  std::size_t failed = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const FlowSpec fs = random_flow_spec(n, rng, 0.2, 3.0, 5.0, 0.05, 0.5, true, 1.0);
    const Vector y0(n, 0.0);
    const GaussianState g = mean_cov_z(fs, y0, kZMax);
    Vector e(n);
    fill_standard_normal(rng, e);
    for (std::size_t i = 0; i < n; ++i) e[i] *= std::sqrt(g.variances[i]);
    Vector y = matvec(g.basis, e);
    for (std::size_t i = 0; i < n; ++i) y[i] += g.mean[i];

    const Vector c = matvec_transposed(g.basis, [&] {
      Vector r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - g.mean[i];
      return r;
    }());
    double logp = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      logp += -0.5 * c[i] * c[i] / g.variances[i] - 0.5 * std::log(2.0 * std::numbers::pi * g.variances[i]);

    const ConditionalField field(fs, y0);
    const NllSample s = nll_one(field, y, cfg, Prior{}, kZMax);
    if (s.status != NllStatus::ok) {
      ++failed;
      continue;
    }
    worst = std::max(worst, std::abs(s.nll + logp));
  }
  return {failed == 0 && worst <= 1e-2,
          fmt("max |nll - closed form| = %.3g nats on 50 draws, %zu integration failures", worst, failed)};
}

std::size_t small_eigenvalue_count(const SymMatrix& h) {
  const EigenPair p = eigh_sym(h);
  double amax = 0.0;
  for (double a : p.eigvals) amax = std::max(amax, std::abs(a));
  std::size_t k = 0;
  for (double a : p.eigvals)
    if (a < 1e-8 * amax) ++k;
  return k;
}

Outcome criterion_5() {
  Rng rng(105);
  std::ostringstream os;
  bool ok = true;
  for (std::size_t d : {3, 2}) {
    for (std::size_t m : {4, 7, 13}) {
      const Vector y = random_cluster(m, d, rng);
      const auto e = EnergyModel::formation_from(y, m, d);
      const std::size_t k = small_eigenvalue_count(hessian(e, y));
      const std::size_t want = d == 3 ? 6 : 3;
      ok = ok && k == want;
      os << m << " agents " << d << "D: " << k << "; ";
    }
  }
  const Vector y2{0.1, -0.2, 0.3, 0.7, 0.4, -0.5};
  const std::size_t k2 = small_eigenvalue_count(hessian(EnergyModel::formation_from(y2, 2, 3), y2));
  ok = ok && k2 == 5;
  os << "2 agents 3D: " << k2;
  return {ok, os.str()};
}

Outcome criterion_6() {
  Rng rng(106);
  const double eps = std::numeric_limits<double>::epsilon();
  double worst_ratio = 0.0, worst_min = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double c = std::array<double, 3>{1.0, 2.0, 10.0}[static_cast<std::size_t>(trial % 3)];
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    Vector d(n);
    for (double& x : d) x = std::exp(uniform(rng, -4.0, 4.0));
    if (trial % 2 == 0) d[0] = 0.0;
    const Spectrum before = analyze(with_spectrum(random_orthogonal(n, rng), d));
    if (before.alpha_max == before.alpha_min) continue;
    const Spectrum after = rescale_condition(before, c);
    worst_ratio = std::max(worst_ratio, std::abs(after.alpha_max / after.alpha_min - c) / (eps * c));
    worst_min = std::max(worst_min, std::abs(after.alpha_min - before.alpha_min) / (eps * before.alpha_min));
  }
  return {worst_ratio <= 4.0 && worst_min <= 4.0,
          fmt("max condition error %.1f ulp, max alpha_min drift %.1f ulp", worst_ratio, worst_min)};
}

Vector central_gradient(const EnergyModel& e, std::span<const double> y, double h) {
  Vector g(y.size()), yp(y.begin(), y.end());
  for (std::size_t k = 0; k < y.size(); ++k) {
    yp[k] = y[k] + h;
    const double up = value(e, yp);
    yp[k] = y[k] - h;
    const double dn = value(e, yp);
    yp[k] = y[k];
    g[k] = (up - dn) / (2.0 * h);
  }
  return g;
}

double hessian_fd_error(const EnergyModel& e, std::span<const double> y, double h) {
  const SymMatrix hs = hessian(e, y);
  const std::size_t n = y.size();
  Vector yp(y.begin(), y.end());
  double diff = 0.0, ref = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    yp[k] = y[k] + h;
    const Vector up = gradient(e, yp);
    yp[k] = y[k] - h;
    const Vector dn = gradient(e, yp);
    yp[k] = y[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double fd = (up[i] - dn[i]) / (2.0 * h);
      diff += std::pow(fd - hs(i, k), 2);
      ref += hs(i, k) * hs(i, k);
    }
  }
  return std::sqrt(diff / std::max(ref, 1e-300));
}

Outcome criterion_7() {
  Rng rng(107);
  double g_err = 0.0, h_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<EnergyModel, Vector>> cases;
    cases.emplace_back(EnergyModel::quadratic(random_vector(5, rng), random_spd(5, rng, 0.5, 5.0)),
                       random_vector(5, rng));
    const Vector lj_y = random_cluster(5, 3, rng);
    cases.emplace_back(EnergyModel::lennard_jones(5, 3), lj_y);
    const Vector ref = random_cluster(5, 3, rng);
    Vector at = ref;
    for (double& v : at) v += 0.1 * standard_normal(rng);
    cases.emplace_back(EnergyModel::formation_from(ref, 5, 3), at);
    for (const auto& [e, y] : cases) {
      g_err = std::max(g_err, rel_err(central_gradient(e, y, 1e-6), gradient(e, y)));
      h_err = std::max(h_err, hessian_fd_error(e, y, 1e-5));
    }
  }

  Mlp m = Mlp::init({5, 16, 16, 5}, 17);
  for (double& p : m.parameters()) p += 0.05 * standard_normal(rng);
  std::vector<TrainSample> batch(8);
  for (auto& s : batch) {
    s.y = random_vector(4, rng);
    s.z = uniform(rng, 0.0, 0.9);
    s.target_vy = random_vector(4, rng);
    s.target_vz = uniform(rng, 0.5, 2.0);
  }
  const ModeTransform mode{true, false, 0};
  const LossGrad lg = loss_and_grad(m, batch, mode);
  Vector fd(lg.grad.size());
  for (std::size_t k = 0; k < fd.size(); ++k) {
    const double keep = m.parameters()[k], h = 1e-6;
    m.parameters()[k] = keep + h;
    const double up = batch_loss(m, batch, mode);
    m.parameters()[k] = keep - h;
    const double dn = batch_loss(m, batch, mode);
    m.parameters()[k] = keep;
    fd[k] = (up - dn) / (2.0 * h);
  }
  const double mlp_err = rel_err(fd, lg.grad);

  double jvp_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = random_vector(4, rng), tan = random_vector(5, rng);
    const double z = uniform(rng, 0.0, 1.0), h = 1e-6;
    Vector yp = y, ym = y;
    for (std::size_t i = 0; i < 4; ++i) {
      yp[i] += h * tan[i];
      ym[i] -= h * tan[i];
    }
    const FieldValue j = m.jvp(y, z, tan);
    const FieldValue fp = m.forward(yp, z + h * tan[4]), fm = m.forward(ym, z - h * tan[4]);
    for (std::size_t i = 0; i < 4; ++i) jvp_err = std::max(jvp_err, std::abs(j.v_y[i] - (fp.v_y[i] - fm.v_y[i]) / (2 * h)));
    jvp_err = std::max(jvp_err, std::abs(j.v_z - (fp.v_z - fm.v_z) / (2 * h)));
  }
  return {g_err < 1e-6 && h_err < 1e-5 && mlp_err < 1e-4 && jvp_err < 1e-6,
          fmt("energy gradient %.2g, Hessian %.2g, network gradient %.2g, jvp %.2g", g_err, h_err, mlp_err, jvp_err)};
}

double gaussian_nll(std::span<const double> y, std::span<const double> var) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += 0.5 * (y[i] * y[i] / var[i] + std::log(2.0 * std::numbers::pi * var[i]));
  return s;
}

Outcome criterion_8() {
  const Vector diag{1.0, 25.0};
  const auto energy = EnergyModel::quadratic(Vector{0.0, 0.0}, SymMatrix::diagonal(diag));
  LangevinConfig lc;
  lc.eta = 1e-3;
  lc.tau = 1.0;
  lc.burn_in = 5000;
  lc.thin = 1000;
  lc.n = 2500;
  lc.chains = 100;
  lc.seed = 1;
  const auto [train_set, test_set] = split(langevin_generate(energy, lc), 0.8, 2);

  double exact = 0.0;
  const Vector var{1.0 / diag[0], 1.0 / diag[1]};
  for (std::size_t i = 0; i < test_set.size(); ++i) exact += gaussian_nll(test_set.samples.row(i), var);
  exact /= static_cast<double>(test_set.size());

  Rk45Config eval;
  eval.rtol = eval.atol = 1e-6;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  auto mean_nll = [&](Method method, std::string& per_seed) {
    double total = 0.0;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg;
      cfg.method = method;
      cfg.steps = 5000;
      cfg.batch_size = 256;
      cfg.optimizer.lr = 2e-3;
      cfg.seed = seed;
      const TrainResult r = train_loop(cfg, train_set, Dataset{}, &energy);
      const double v = nll(r.model, test_set.samples, eval, Prior{}).mean_nll();
      per_seed += fmt("%s%.4f", per_seed.empty() ? "" : " ", v);
      total += v;
    }
    return total / static_cast<double>(seeds.size());
  };
  std::string hi_seeds, ot_seeds;
  const double hi = mean_nll(Method::hessian_quadratic, hi_seeds);
  const double ot = mean_nll(Method::optimal_transport, ot_seeds);
  const bool a = std::isfinite(hi) && std::abs(hi - exact) <= 0.1;
  const bool b = hi <= ot;
  std::printf("%s 8a desk-scale quadratic well: HI-FM mean NLL %.4f vs analytic %.4f (|diff| %.4f, seeds %s)\n",
              a ? "PASS" : "FAIL", hi, exact, std::abs(hi - exact), hi_seeds.c_str());
  std::printf("%s 8b HI-FM vs OT at equal budget: %.4f vs %.4f (OT seeds %s)\n", b ? "PASS" : "FAIL", hi, ot,
              ot_seeds.c_str());
  return {a && b, fmt("8a %s, 8b %s", a ? "pass" : "fail", b ? "pass" : "fail")};
}

Outcome criterion_9() {
  const auto energy = EnergyModel::lennard_jones(7, 3);
  LangevinConfig lc;
  lc.eta = 1e-4;
  lc.tau = 0.1;
  lc.burn_in = 20000;
  lc.thin = 500;
  lc.n = 1200;
  lc.chains = 40;
  lc.seed = 7;
  const Dataset all = preprocess_particles(langevin_generate(energy, lc));
  const auto [train_set, test_set] = split(all, 5.0 / 6.0, 3);
  const Dataset eval_set = head(test_set, 100);
  const Prior prior = prior_for(all.meta);

  auto run = [&](bool hyperbolize, double& early, double& late, std::size_t& ok) {
    TrainConfig cfg;
    cfg.method = Method::hessian_formation;
    cfg.flags.hyperbolize = hyperbolize;
    cfg.steps = 80000;
    cfg.batch_size = 128;
    cfg.optimizer.lr = 1e-3;
    cfg.seed = 11;
    const TrainResult r = train_loop(cfg, train_set, Dataset{});
    early = late = 0.0;
    for (std::size_t k = 0; k < 100; ++k) {
      early += r.log.rows[k].loss / 100.0;
      late += r.log.rows[r.log.rows.size() - 1 - k].loss / 100.0;
    }
    const NllReport rep = nll(r.model, eval_set.samples, Rk45Config{}, prior);
    ok = rep.ok_count();
    return rep.mean_nll();
  };
  double e_on, l_on, e_off, l_off;
  std::size_t ok_on, ok_off;
  const double on = run(true, e_on, l_on, ok_on);
  const double off = run(false, e_off, l_off, ok_off);
  const bool converged = l_on <= 0.5 * e_on;
  const bool finite = ok_on == eval_set.size() && std::isfinite(on);
  const bool better = on < off;
  return {converged && finite && better,
          fmt("loss %.4g -> %.4g; NLL finite on %zu/%zu; hyperbolize on %.4f vs off %.4f (off: loss %.4g -> %.4g, "
              "%zu ok)",
              e_on, l_on, ok_on, eval_set.size(), on, off, e_off, l_off, ok_off)};
}

Outcome criterion_10() {
  Rng rng(110);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y1 = random_cluster(4, 3, rng);
    const auto e = EnergyModel::formation_from(y1, 4, 3);
    FlowSpecConfig fc;
    fc.gamma = 0.1;
    const FlowSpec fs = build_flow_spec(y1, hessian(e, y1), fc);
    const SymMatrix proj = subspace_projector(fs.spectrum.eig, fs.spectrum.hyperbolic_mask());
    std::vector<TrainSample> batch(16);
    for (auto& s : batch) {
      const PathPoint p = sample_path_point(fs, uniform(rng, 0.0, kZMax), rng);
      s.y = p.y;
      s.z = p.z;
      const FieldValue fv = cond_field_time(fs, p.y, p.t, Vector(12, 0.0));
      s.target_vy = fv.v_y;
      s.target_vz = fv.v_z;
      s.hyp_projector = &proj;
    }
    Mlp m = Mlp::init({13, 16, 13}, static_cast<std::uint64_t>(trial));
    const std::size_t out = m.layers().size() - 1;
    m.bias(out, 12) = 1.0;
    for (const bool finite : {true, false}) {
      const ModeTransform mode{finite, true, 0};
      const double before = batch_loss(m, batch, mode);
      Mlp shifted = m;
      for (std::size_t k = 0; k < 12; ++k) {
        if (!fs.spectrum.null_mask[k]) continue;
        const double w = 10.0 * standard_normal(rng);
        for (std::size_t i = 0; i < 12; ++i) shifted.bias(out, i) += w * fs.basis()(i, k);
      }
      const double after = batch_loss(shifted, batch, mode);
      worst = std::max(worst, std::abs(after - before));
    }
  }
  return {worst <= 1e-12, fmt("max loss change %.3g over 20 trials", worst)};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Outcome criterion_11(const std::string& hifm_path, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const auto energy = EnergyModel::quadratic(Vector{0.0, 0.0}, SymMatrix::diagonal(Vector{1.0, 25.0}));
  LangevinConfig lc;
  lc.n = 300;
  lc.burn_in = 2000;
  lc.thin = 50;
  lc.seed = 4;
  store(langevin_generate(energy, lc), work / "data.csv");

  const std::string cfg_text = "method = hessian_quadratic\nquad_diag = 1,25\ndata = " + (work / "data.csv").string() +
                               "\nsteps = 200\nbatch_size = 64\nhidden = 32,32\neval_every = 50\neval_count = 20\n";
  std::ofstream(work / "run.cfg") << cfg_text;

  for (const char* run : {"a", "b"}) {
    const fs::path out = work / run;
    if (!hifm_path.empty()) {
      const std::string cmd = "\"" + hifm_path + "\" train --config \"" + (work / "run.cfg").string() +
                              "\" --set out_dir=\"" + out.string() + "\" > \"" + (work / run).string() + ".out\"";
      if (std::system(cmd.c_str()) != 0) return {false, "train command failed"};
    } else {
      fs::create_directories(out);
      TrainConfig cfg;
      cfg.steps = 200;
      cfg.batch_size = 64;
      cfg.hidden = {32, 32};
      cfg.eval_every = 50;
      cfg.eval_count = 20;
      const Dataset ds = load(work / "data.csv");
      const auto [tr, te] = split(ds, 0.8, 0);
      const TrainResult r = train_loop(cfg, tr, te, &energy);
      save_model(r.model, out / "model.bin");
      r.log.write_csv(out / "train_log.csv");
    }
  }
  bool same = true;
  for (const char* f : {"model.bin", "train_log.csv"}) {
    const std::string a = file_bytes(work / "a" / f), b = file_bytes(work / "b" / f);
    same = same && !a.empty() && a == b;
  }
  return {same, std::string(hifm_path.empty() ? "library" : "command-line") +
                    " runs: model.bin and train_log.csv " + (same ? "bit-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  std::string hifm_path;
  fs::path work = fs::temp_directory_path() / "hifm_acceptance";
  std::set<int> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--hifm" && i + 1 < argc) {
      hifm_path = argv[++i];
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--expect-fail" && i + 1 < argc) {
      std::istringstream ids(argv[++i]);
      for (std::string id; std::getline(ids, id, ',');) expect_fail.insert(std::atoi(id.c_str()));
    } else {
      only.insert(std::atoi(a.c_str()));
    }
  }

  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "OU moments vs Euler-Maruyama", 60, criterion_1},
      {2, "interpolant substitution identity", 1, criterion_2},
      {3, "transport identity", 30, criterion_3},
      {4, "NLL oracle", 60, criterion_4},
      {5, "nullspace counts", 30, criterion_5},
      {6, "condition-number postcondition", 1, criterion_6},
      {7, "gradient checks", 60, criterion_7},
      {8, "desk-scale quadratic well", 600, criterion_8},
      {9, "desk-scale LJ7", 1800, criterion_9},
      {10, "projection invariance", 0, criterion_10},
      {11, "determinism", 0, [&] { return criterion_11(hifm_path, work); }},
  };

  bool all = true;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.1f s", secs);
    if (c.budget_s > 0.0) {
      timing += fmt(", budget %.0f s", c.budget_s);
      if (secs > c.budget_s) {
        o.passed = false;
        timing += " exceeded";
      }
    }
    const bool expected = expect_fail.count(c.id) > 0;
    std::printf("%s %d %s: %s (%s)%s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str(),
                expected ? (o.passed ? " [listed as expected failure]" : " [expected failure]") : "");
    std::fflush(stdout);
    if (!expected) all = all && o.passed;
  }
  if (!expect_fail.empty()) std::printf("exit status ignores criteria listed with --expect-fail\n");
  return all ? 0 : 1;
}
