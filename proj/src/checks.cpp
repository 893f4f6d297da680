#include "hifm/checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "hifm/energy.hpp"
#include "hifm/flow.hpp"
#include "hifm/likelihood.hpp"
#include "hifm/model.hpp"
#include "hifm/random.hpp"
#include "hifm/spectrum.hpp"

namespace hifm {

namespace {

struct Measure {
  double error = 0.0;
  double tol = 0.0;
};

Matrix random_orthogonal(std::size_t n, Rng& rng) {
  Matrix g(n, n);
  fill_standard_normal(rng, g.data());
  return eigh_sym(SymMatrix(matmul(g, g.transposed()))).eigvecs;
}

SymMatrix random_spd(std::size_t n, Rng& rng, double lo, double hi) {
  const Matrix q = random_orthogonal(n, rng);
  Vector d(n);
  for (double& x : d) x = uniform(rng, lo, hi);
  return SymMatrix(matmul(matmul(q, Matrix::diagonal(d)), q.transposed()), 1e-10);
}

FlowSpec random_flow_spec(std::size_t n, Rng& rng, double gamma) {
  Vector y1(n);
  fill_standard_normal(rng, y1);
  FlowSpecConfig cfg;
  cfg.c = uniform(rng, 1.0, 4.0);
  cfg.gamma = gamma;
  cfg.kappa = uniform(rng, 0.5, 2.0);
  return build_flow_spec(y1, random_spd(n, rng, 0.3, 3.0), cfg);
}

Vector random_cluster(std::size_t m, std::size_t d, Rng& rng) {
  Vector y(m * d);
  const double side = 1.3 * std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d));
  for (std::size_t p = 0; p < m; ++p) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      for (std::size_t a = 0; a < d; ++a) y[p * d + a] = uniform(rng, 0.0, side);
      bool ok = true;
      for (std::size_t q = 0; q < p && ok; ++q) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < d; ++a) r2 += std::pow(y[p * d + a] - y[q * d + a], 2);
        ok = r2 > 0.9 * 0.9;
      }
      if (ok) break;
    }
  }
  return y;
}

double rel_err(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return std::sqrt(diff) / std::max(scale, 1.0);
}

Matrix covariance(const GaussianState& g) {
  const std::size_t n = g.mean.size();
  const Matrix p = g.basis.empty() ? Matrix::identity(n) : g.basis;
  return matmul(matmul(p, Matrix::diagonal(g.variances)), p.transposed());
}

// Largest z-score of Euler–Maruyama moments against the closed form.
Measure ou_monte_carlo() {
  Rng rng(11);
  const std::size_t n = 2, paths = 4000, steps = 1000;
  const double dt = 1e-3;
  const FlowSpec fs = random_flow_spec(n, rng, 0.3);
  Vector y0(n);
  fill_standard_normal(rng, y0);
  const Matrix& p = fs.basis();
  const Matrix a = matmul(matmul(p, Matrix::diagonal(fs.alpha())), p.transposed());
  const Matrix b = matmul(matmul(p, Matrix::diagonal(fs.beta)), p.transposed());
  Vector sd0(n);
  for (std::size_t i = 0; i < n; ++i) sd0[i] = std::sqrt(fs.sigma0[i]);
  Matrix ys(paths, n);
  for (std::size_t k = 0; k < paths; ++k) {
    Vector e(n);
    fill_standard_normal(rng, e);
    for (std::size_t i = 0; i < n; ++i) e[i] *= sd0[i];
    const Vector x = matvec(p, e);
    for (std::size_t i = 0; i < n; ++i) ys(k, i) = y0[i] + x[i];
  }
  Vector dw(n), drift(n);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < paths; ++k) {
      auto y = ys.row(k);
      for (std::size_t i = 0; i < n; ++i) drift[i] = y[i] - fs.y1[i];
      const Vector ad = matvec(a, drift);
      fill_standard_normal(rng, dw);
      const Vector bdw = matvec(b, dw);
      for (std::size_t i = 0; i < n; ++i) y[i] += -ad[i] * dt + bdw[i] * std::sqrt(dt);
    }
  }
  const GaussianState g = mean_cov_time(fs, y0, dt * static_cast<double>(steps));
  const Matrix cov = covariance(g);
  Vector mean(n, 0.0);
  for (std::size_t k = 0; k < paths; ++k)
    for (std::size_t i = 0; i < n; ++i) mean[i] += ys(k, i) / static_cast<double>(paths);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double var = 0.0;
    for (std::size_t k = 0; k < paths; ++k) var += std::pow(ys(k, i) - mean[i], 2);
    var /= static_cast<double>(paths - 1);
    worst = std::max(worst, std::abs(mean[i] - g.mean[i]) / std::sqrt(var / static_cast<double>(paths)));
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0, c2 = 0.0;
      for (std::size_t k = 0; k < paths; ++k) {
        const double prod = (ys(k, i) - g.mean[i]) * (ys(k, j) - g.mean[j]);
        c += prod;
        c2 += prod * prod;
      }
      c /= static_cast<double>(paths);
      const double se = std::sqrt((c2 / static_cast<double>(paths) - c * c) / static_cast<double>(paths));
      worst = std::max(worst, std::abs(c - cov(i, j)) / se);
    }
  }
  return {worst, 5.0};
}

Measure interpolant_substitution() {
  Rng rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const FlowSpec fs = random_flow_spec(n, rng, 1e-2);
    Vector y0(n);
    fill_standard_normal(rng, y0);
    const double t = uniform(rng, 0.0, 3.0);
    const GaussianState a = mean_cov_time(fs, y0, t);
    const GaussianState b = mean_cov_z(fs, y0, interpolant_mean(fs, t));
    worst = std::max(worst, rel_err(a.mean, b.mean));
    worst = std::max(worst, rel_err(covariance(a).data(), covariance(b).data()));
  }
  return {worst, 1e-12};
}

Measure transport_identity() {
  Rng rng(13);
  double worst = 0.0;
  Rk45Config cfg;
  cfg.rtol = cfg.atol = 1e-8;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial);
    const FlowSpec fs = random_flow_spec(n, rng, 1e-10);
    Vector y0(n);
    fill_standard_normal(rng, y0);
    const OdeRhs rhs = [&](double z, std::span<const double> y, std::span<double> dy) {
      const FieldValue fv = cond_field_finite(fs, y, std::min(z, kZMax), y0);
      std::copy(fv.v_y.begin(), fv.v_y.end(), dy.begin());
    };
    const Rk45Result r = rk45(rhs, y0, 0.0, kZMax, cfg);
    worst = std::max(worst, rel_err(r.x, mean_cov_z(fs, y0, kZMax).mean));
  }
  return {worst, 1e-5};
}

Measure energy_gradients() {
  Rng rng(14);
  double worst = 0.0;
  const Vector cluster = random_cluster(5, 3, rng);
  const EnergyModel energies[] = {
      EnergyModel::quadratic(Vector(4, 0.5), random_spd(4, rng, 0.5, 5.0)),
      EnergyModel::lennard_jones(5, 3),
      EnergyModel::formation_from(cluster, 5, 3),
  };
  for (const EnergyModel& e : energies) {
    for (int trial = 0; trial < 5; ++trial) {
      Vector y = e.kind() == EnergyKind::quadratic ? Vector(e.dim()) : random_cluster(5, 3, rng);
      if (e.kind() == EnergyKind::quadratic) fill_standard_normal(rng, y);
      worst = std::max(worst, rel_err(gradient(e, y), fd_gradient(e, y, 1e-6)));
      worst = std::max(worst, 0.1 * rel_err(hessian(e, y).matrix().data(), fd_hessian(e, y, 1e-5).matrix().data()));
    }
  }
  return {worst, 1e-6};
}

Measure mlp_gradients() {
  Mlp model = Mlp::init({4, 16, 16, 4}, 21);
  model.bias(2, 3) = 1.0;
  Rng rng(15);
  std::vector<TrainSample> batch(8);
  for (TrainSample& s : batch) {
    s.y.resize(3);
    fill_standard_normal(rng, s.y);
    s.z = uniform(rng, 0.0, 1.0);
    s.target_vy.resize(3);
    fill_standard_normal(rng, s.target_vy);
    s.target_vz = uniform(rng, 0.5, 1.5);
  }
  const ModeTransform mode;
  const LossGrad lg = loss_and_grad(model, batch, mode);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t k = 0; k < model.parameters().size(); k += 7) {
    const double saved = model.parameters()[k];
    model.parameters()[k] = saved + h;
    const double up = batch_loss(model, batch, mode);
    model.parameters()[k] = saved - h;
    const double down = batch_loss(model, batch, mode);
    model.parameters()[k] = saved;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - lg.grad[k]) / std::max({std::abs(fd), std::abs(lg.grad[k]), 1e-3}));
  }
  Vector tangent(4);
  fill_standard_normal(rng, tangent);
  const Vector y{0.3, -0.2, 0.5};
  const double z = 0.4;
  const FieldValue j = model.jvp(y, z, tangent);
  Vector yp(y), ym(y);
  for (std::size_t i = 0; i < 3; ++i) {
    yp[i] += 1e-6 * tangent[i];
    ym[i] -= 1e-6 * tangent[i];
  }
  const FieldValue fp = model.forward(yp, z + 1e-6 * tangent[3]);
  const FieldValue fm = model.forward(ym, z - 1e-6 * tangent[3]);
  Vector fd(4), an(j.v_y);
  for (std::size_t i = 0; i < 3; ++i) fd[i] = (fp.v_y[i] - fm.v_y[i]) / 2e-6;
  fd[3] = (fp.v_z - fm.v_z) / 2e-6;
  an.push_back(j.v_z);
  worst = std::max(worst, 100.0 * rel_err(an, fd));
  return {worst, 1e-4};
}

Measure condition_number() {
  Rng rng(16);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const double c = std::array<double, 3>{1.0, 2.0, 10.0}[static_cast<std::size_t>(trial % 3)];
    const Spectrum s = rescale_condition(analyze(random_spd(5, rng, 0.1, 50.0)), c);
    double lo = 1e300, hi = 0.0;
    for (double a : s.eig.eigvals) {
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    worst = std::max(worst, std::abs(hi / lo - c) / c);
  }
  return {worst, 1e-12};
}

Measure formation_nullspace() {
  Rng rng(17);
  const Vector y = random_cluster(7, 3, rng);
  const EnergyModel e = EnergyModel::formation_from(y, 7, 3);
  const Spectrum s = analyze(hessian(e, y));
  return {std::abs(static_cast<double>(s.null_count()) - 6.0), 0.5};
}

}  // namespace

std::vector<CheckResult> run_checks(bool perturb) {
  const std::pair<const char*, Measure (*)()> checks[] = {
      {"ou_moments_monte_carlo", ou_monte_carlo},   {"interpolant_substitution", interpolant_substitution},
      {"transport_identity", transport_identity},   {"energy_fd_gradients", energy_gradients},
      {"mlp_fd_gradients", mlp_gradients},          {"condition_number", condition_number},
      {"formation_nullspace", formation_nullspace},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : checks) {
    CheckResult r{name, false, {}};
    try {
      Measure m = fn();
      if (perturb) m.error += 10.0 * m.tol;
      r.passed = m.error <= m.tol;
      std::ostringstream os;
      os << "error=" << m.error << " tol=" << m.tol;
      r.detail = os.str();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hifm
