#include "hifm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hifm/energy.hpp"
#include "hifm/model.hpp"
#include "hifm/parallel.hpp"

namespace hifm {

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights.
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525,
                 E7 = -1.0 / 40;

constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Rk45Result rk45(const OdeRhs& rhs, Vector x0, double a, double b, const Rk45Config& cfg) {
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw ValidationError("rk45: tolerances must be positive");
  if (a == b) throw ValidationError("rk45: empty integration span");
  const std::size_t n = x0.size();
  const double dir = b > a ? 1.0 : -1.0;
  const double span = std::abs(b - a);

  Rk45Result res;
  res.x = std::move(x0);
  std::vector<Vector> k(7, Vector(n));
  Vector stage(n), x_new(n);

  double t = a;
  auto eval = [&](double ts, std::span<const double> x, Vector& out) {
    rhs(ts, x, out);
    ++res.nfe;
    if (!all_finite(out)) throw IntegrationError("rk45: non-finite derivative at t = " + std::to_string(ts), t, res.x);
  };

  eval(t, res.x, k[0]);

  double h = cfg.initial_step;
  if (!(h > 0.0)) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = cfg.atol + cfg.rtol * std::abs(res.x[i]);
      d0 += (res.x[i] / sc) * (res.x[i] / sc);
      d1 += (k[0][i] / sc) * (k[0][i] / sc);
    }
    d0 = n ? std::sqrt(d0 / n) : 0.0;
    d1 = n ? std::sqrt(d1 / n) : 0.0;
    h = d1 <= 1e-15 ? span : std::min(span, 0.01 * std::max(d0, 1.0) / d1);
  }
  h = std::min(h, span);

  std::size_t steps = 0;
  while (dir * (b - t) > 0.0) {
    if (steps++ >= cfg.max_steps) {
      throw IntegrationError("rk45: exceeded " + std::to_string(cfg.max_steps) + " steps", t, res.x);
    }
    const double remaining = std::abs(b - t);
    const bool last = h >= remaining;
    const double hs = dir * (last ? remaining : h);
    if (std::abs(hs) <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw IntegrationError("rk45: step size underflow at t = " + std::to_string(t), t, res.x);
    }

    auto combine = [&](std::initializer_list<std::pair<int, double>> terms) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (auto [j, c] : terms) s += c * k[j][i];
        stage[i] = res.x[i] + hs * s;
      }
    };
    combine({{0, A21}});
    eval(t + C2 * hs, stage, k[1]);
    combine({{0, A31}, {1, A32}});
    eval(t + C3 * hs, stage, k[2]);
    combine({{0, A41}, {1, A42}, {2, A43}});
    eval(t + C4 * hs, stage, k[3]);
    combine({{0, A51}, {1, A52}, {2, A53}, {3, A54}});
    eval(t + C5 * hs, stage, k[4]);
    combine({{0, A61}, {1, A62}, {2, A63}, {3, A64}, {4, A65}});
    eval(t + hs, stage, k[5]);
    for (std::size_t i = 0; i < n; ++i)
      x_new[i] = res.x[i] + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
    const double t_new = last ? b : t + hs;
    eval(t_new, x_new, k[6]);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(res.x[i]), std::abs(x_new[i]));
      err += (e / sc) * (e / sc);
    }
    err = n ? std::sqrt(err / n) : 0.0;

    if (err <= 1.0) {
      ++res.accepted;
      t = t_new;
      std::swap(res.x, x_new);
      std::swap(k[0], k[6]);
      const double factor = err == 0.0 ? kMaxFactor : std::clamp(cfg.safety * std::pow(err, -0.2), kMinFactor, kMaxFactor);
      h = std::abs(hs) * factor;
    } else {
      ++res.rejected;
      h = std::abs(hs) * std::max(kMinFactor, cfg.safety * std::pow(err, -0.2));
    }
  }
  return res;
}

double Prior::log_density(std::span<const double> y) const {
  const double k = static_cast<double>(support_dim(y.size()));
  return -0.5 * dot(y, y) - 0.5 * k * std::log(2.0 * std::numbers::pi);
}

std::size_t Prior::support_dim(std::size_t dim) const {
  if (spatial_dim == 0) return dim;
  if (dim % spatial_dim != 0 || dim < spatial_dim) throw ValidationError("prior: dim not divisible by spatial_dim");
  return dim - spatial_dim;
}

Vector Prior::draw(std::size_t dim, Rng& rng) const {
  Vector y(dim);
  fill_standard_normal(rng, y);
  if (spatial_dim > 0) zero_com_project_inplace(y, spatial_dim);
  return y;
}

Vector finite_velocity(const VectorField& field, std::span<const double> y, double z, std::size_t spatial_dim) {
  Vector yp(y.begin(), y.end());
  if (spatial_dim > 0) zero_com_project_inplace(yp, spatial_dim);
  const FieldValue fv = field.evaluate(yp, z);
  ModeTransform mode;
  mode.spatial_dim = spatial_dim;
  return apply_mode_transform(fv.v_y, fv.v_z, mode, nullptr, field.min_abs_vz()).v_y;
}

FiniteFieldEval finite_field_with_divergence(const VectorField& field, std::span<const double> y, double z,
                                             std::size_t spatial_dim) {
  const std::size_t n = field.dim();
  if (y.size() != n) throw ValidationError("divergence: dimension mismatch");
  Vector yp(y.begin(), y.end());
  if (spatial_dim > 0) zero_com_project_inplace(yp, spatial_dim);
  const FieldValue fv = field.evaluate(yp, z);
  ModeTransform mode;
  mode.spatial_dim = spatial_dim;
  const TransformedField tf = apply_mode_transform(fv.v_y, fv.v_z, mode, nullptr, field.min_abs_vz());

  FiniteFieldEval out{tf.v_y, 0.0};
  Vector tangent(n + 1, 0.0);
  Vector column(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(tangent.begin(), tangent.end(), 0.0);
    tangent[k] = 1.0;
    if (spatial_dim > 0) zero_com_project_inplace(std::span<double>(tangent.data(), n), spatial_dim);
    const FieldValue d = field.jvp(yp, z, tangent);
    const double dvz = tf.clamped ? 0.0 : d.v_z;
    for (std::size_t i = 0; i < n; ++i) column[i] = d.v_y[i] / tf.denom - fv.v_y[i] * dvz / (tf.denom * tf.denom);
    if (spatial_dim > 0) zero_com_project_inplace(column, spatial_dim);
    out.divergence += column[k];
  }
  return out;
}

double divergence_y(const VectorField& field, std::span<const double> y, double z, std::size_t spatial_dim) {
  return finite_field_with_divergence(field, y, z, spatial_dim).divergence;
}

std::size_t NllReport::ok_count() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const NllSample& s) { return s.status == NllStatus::ok; }));
}

double NllReport::mean_nll() const {
  double s = 0.0;
  std::size_t c = 0;
  for (const auto& x : samples)
    if (x.status == NllStatus::ok) {
      s += x.nll;
      ++c;
    }
  return c ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN();
}

double NllReport::mean_nfe() const {
  double s = 0.0;
  std::size_t c = 0;
  for (const auto& x : samples)
    if (x.status == NllStatus::ok) {
      s += static_cast<double>(x.nfe);
      ++c;
    }
  return c ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN();
}

NllSample nll_one(const VectorField& field, std::span<const double> y_data, const Rk45Config& cfg, const Prior& prior,
                  double z_start) {
  const std::size_t n = field.dim();
  NllSample out;
  try {
    if (y_data.size() != n) throw ValidationError("nll: data point dimension mismatch");
    Vector x0(n + 1, 0.0);
    std::copy(y_data.begin(), y_data.end(), x0.begin());
    if (prior.spatial_dim > 0) zero_com_project_inplace(std::span<double>(x0.data(), n), prior.spatial_dim);
    const OdeRhs rhs = [&](double z, std::span<const double> x, std::span<double> dx) {
      const FiniteFieldEval fe = finite_field_with_divergence(field, x.first(n), z, prior.spatial_dim);
      std::copy(fe.v_y.begin(), fe.v_y.end(), dx.begin());
      dx[n] = fe.divergence;
    };
    const Rk45Result r = rk45(rhs, std::move(x0), z_start, 0.0, cfg);
    out.prior_term = prior.log_density(std::span<const double>(r.x.data(), n));
    out.divergence_term = r.x[n];
    out.nll = -(out.prior_term + out.divergence_term);
    out.nfe = r.nfe;
    out.accepted = r.accepted;
    out.rejected = r.rejected;
    if (!std::isfinite(out.nll)) throw NumericalError("nll: non-finite result");
  } catch (const Error& e) {
    out.status = NllStatus::failed;
    out.message = e.what();
  }
  return out;
}

NllReport nll(const VectorField& field, const Matrix& data, const Rk45Config& cfg, const Prior& prior,
              double z_start) {
  NllReport rep;
  rep.samples.resize(data.rows());
  parallel_for(data.rows(), [&](std::size_t i) { rep.samples[i] = nll_one(field, data.row(i), cfg, prior, z_start); });
  return rep;
}

SampleResult sample(const VectorField& field, const Prior& prior, const Rk45Config& cfg, Rng& rng, std::size_t n,
                    double z_end) {
  const std::size_t dim = field.dim();
  SampleResult out{Matrix(n, dim), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const Vector y = prior.draw(dim, rng);
    std::copy(y.begin(), y.end(), out.samples.row(i).begin());
  }
  std::vector<std::size_t> nfe(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const OdeRhs rhs = [&](double z, std::span<const double> x, std::span<double> dx) {
      const Vector v = finite_velocity(field, x, z, prior.spatial_dim);
      std::copy(v.begin(), v.end(), dx.begin());
    };
    const auto row = out.samples.row(i);
    Rk45Result r = rk45(rhs, Vector(row.begin(), row.end()), 0.0, z_end, cfg);
    if (prior.spatial_dim > 0) zero_com_project_inplace(r.x, prior.spatial_dim);
    std::copy(r.x.begin(), r.x.end(), row.begin());
    nfe[i] = r.nfe;
  });
  double total = 0.0;
  for (std::size_t v : nfe) total += static_cast<double>(v);
  out.mean_nfe = n ? total / static_cast<double>(n) : 0.0;
  return out;
}

}  // namespace hifm
