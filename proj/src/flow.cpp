#include "hifm/flow.hpp"

#include <cmath>
#include <string>

#include "hifm/energy.hpp"
#include "hifm/error.hpp"

namespace hifm {

namespace {

double stationary_variance(double alpha, double beta) { return alpha > 0.0 ? beta * beta / (2.0 * alpha) : 0.0; }

void require_hyperbolic(const FlowSpec& fs, const char* what) {
  if (!(fs.spectrum.alpha_min > 0.0)) {
    throw ValidationError(std::string(what) + ": FlowSpec has no non-zero eigenvalue (interpolant undefined)");
  }
}

void require_dim(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(n) + " components, got " +
                          std::to_string(v.size()));
  }
}

// (1 − z)^p with the convention 0^0 = 1.
double one_minus_z_pow(double z, double p) { return p == 0.0 ? 1.0 : std::exp(p * std::log1p(-z)); }

Vector displacement(std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

GaussianState assemble(const FlowSpec& fs, const Vector& decay, const Vector& eta0, Vector variances) {
  Vector coeff(fs.dim());
  for (std::size_t i = 0; i < coeff.size(); ++i) coeff[i] = decay[i] * eta0[i];
  Vector mean = matvec(fs.basis(), coeff);
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += fs.y1[i];
  return {std::move(mean), std::move(variances), fs.basis()};
}

// Eigen-coordinates of the time-domain probability-flow field and its
// ingredients; shared by the field and its directional derivative.
struct FieldTerms {
  Vector xi;        // Pᵀ(y − y1)
  Vector m;         // Pᵀ(µ(t) − y1)
  Vector var;       // Σ(t) eigenvalues
  Vector v_eta;     // Pᵀ v_y
};

FieldTerms field_terms(const FlowSpec& fs, std::span<const double> y, double t, std::span<const double> y0) {
  const std::size_t n = fs.dim();
  require_dim(y, n, "cond_field_time");
  require_dim(y0, n, "cond_field_time");
  FieldTerms ft;
  ft.xi = matvec_transposed(fs.basis(), displacement(y, fs.y1));
  ft.m = matvec_transposed(fs.basis(), displacement(y0, fs.y1));
  ft.var.resize(n);
  ft.v_eta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = fs.alpha()[i];
    const double b = fs.beta[i];
    const double s = stationary_variance(a, b);
    ft.m[i] *= std::exp(-a * t);
    ft.var[i] = s + std::exp(-2.0 * a * t) * (fs.sigma0[i] - s);
    double v = -a * ft.xi[i];
    if (b > 0.0) {
      if (!(ft.var[i] > 0.0)) {
        throw NumericalError("cond_field_time: singular covariance in eigen-direction " + std::to_string(i));
      }
      v += 0.5 * b * b * (ft.xi[i] - ft.m[i]) / ft.var[i];
    }
    ft.v_eta[i] = v;
  }
  return ft;
}

}  // namespace

GaussianState mean_cov_time(const FlowSpec& fs, std::span<const double> y0, double t) {
  if (!(t >= 0.0)) throw ValidationError("mean_cov_time: t must be >= 0");
  require_dim(y0, fs.dim(), "mean_cov_time");
  const std::size_t n = fs.dim();
  Vector decay(n), var(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = fs.alpha()[i];
    const double s = stationary_variance(a, fs.beta[i]);
    decay[i] = std::exp(-a * t);
    var[i] = s + std::exp(-2.0 * a * t) * (fs.sigma0[i] - s);
  }
  return assemble(fs, decay, matvec_transposed(fs.basis(), displacement(y0, fs.y1)), std::move(var));
}

double interpolant_mean(const FlowSpec& fs, double t) {
  require_hyperbolic(fs, "interpolant_mean");
  if (!(t >= 0.0)) throw ValidationError("interpolant_mean: t must be >= 0");
  return -std::expm1(-fs.kappa * fs.spectrum.alpha_min * t);
}

double interpolant_field(const FlowSpec& fs, double z) {
  require_hyperbolic(fs, "interpolant_field");
  return -fs.kappa * fs.spectrum.alpha_min * (z - 1.0);
}

double interpolant_time(const FlowSpec& fs, double z) {
  require_hyperbolic(fs, "interpolant_time");
  if (!(z >= 0.0 && z < 1.0)) throw ValidationError("interpolant_time: z must lie in [0, 1)");
  return -std::log1p(-z) / (fs.kappa * fs.spectrum.alpha_min);
}

double distance_bound(const FlowSpec& fs, std::span<const double> y0, double t) {
  require_dim(y0, fs.dim(), "distance_bound");
  if (!(t >= 0.0)) throw ValidationError("distance_bound: t must be >= 0");
  return std::exp(-fs.spectrum.alpha_min * t) * norm(displacement(y0, fs.y1));
}

GaussianState mean_cov_z(const FlowSpec& fs, std::span<const double> y0, double z) {
  require_hyperbolic(fs, "mean_cov_z");
  require_dim(y0, fs.dim(), "mean_cov_z");
  if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("mean_cov_z: z must lie in [0, 1]");
  const std::size_t n = fs.dim();
  const double rate = fs.kappa * fs.spectrum.alpha_min;
  Vector decay(n), var(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = fs.alpha()[i];
    const double s = stationary_variance(a, fs.beta[i]);
    decay[i] = one_minus_z_pow(z, a / rate);
    var[i] = s + one_minus_z_pow(z, 2.0 * a / rate) * (fs.sigma0[i] - s);
  }
  return assemble(fs, decay, matvec_transposed(fs.basis(), displacement(y0, fs.y1)), std::move(var));
}

Vector score(const GaussianState& g, std::span<const double> y) {
  require_dim(y, g.mean.size(), "score");
  Vector r = displacement(y, g.mean);
  if (!g.basis.empty()) r = matvec_transposed(g.basis, r);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(g.variances[i] > 0.0)) throw NumericalError("score: zero variance in direction " + std::to_string(i));
    r[i] = -r[i] / g.variances[i];
  }
  return g.basis.empty() ? r : matvec(g.basis, r);
}

FieldValue cond_field_time(const FlowSpec& fs, std::span<const double> y, double t, std::span<const double> y0) {
  require_hyperbolic(fs, "cond_field_time");
  if (!std::isfinite(t)) throw ValidationError("cond_field_time: t must be finite");
  const FieldTerms ft = field_terms(fs, y, t, y0);
  const double rate = fs.kappa * fs.spectrum.alpha_min;
  return {matvec(fs.basis(), ft.v_eta), rate * std::exp(-rate * t)};
}

FieldValue cond_field_finite(const FlowSpec& fs, std::span<const double> y, double z, std::span<const double> y0,
                             double z_max) {
  if (!(z >= 0.0 && z <= z_max)) {
    throw ValidationError("cond_field_finite: z = " + std::to_string(z) + " outside [0, " + std::to_string(z_max) + "]");
  }
  FieldValue fv = cond_field_time(fs, y, interpolant_time(fs, z), y0);
  for (double& v : fv.v_y) v /= fv.v_z;
  fv.v_z = 1.0;
  return fv;
}

GaussianState ot_path(std::span<const double> y1, double z, double sigma_min) {
  if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("ot_path: z must lie in [0, 1]");
  const double sd = 1.0 - (1.0 - sigma_min) * z;
  GaussianState g;
  g.mean.resize(y1.size());
  for (std::size_t i = 0; i < y1.size(); ++i) g.mean[i] = z * y1[i];
  g.variances.assign(y1.size(), sd * sd);
  return g;
}

FieldValue ot_field(std::span<const double> y, double z, std::span<const double> y1, double sigma_min) {
  require_dim(y, y1.size(), "ot_field");
  const double denom = 1.0 - (1.0 - sigma_min) * z;
  if (!(denom > 0.0)) throw NumericalError("ot_field: vanishing path standard deviation");
  FieldValue fv{Vector(y.size()), 1.0};
  for (std::size_t i = 0; i < y.size(); ++i) fv.v_y[i] = (y1[i] - (1.0 - sigma_min) * y[i]) / denom;
  return fv;
}

PathPoint sample_path_point(const FlowSpec& fs, double z, Rng& rng, std::size_t spatial_dim,
                            std::span<const double> y0, double z_max) {
  if (!(z >= 0.0 && z <= z_max)) throw ValidationError("sample_path_point: z outside [0, z_max]");
  const Vector zeros(fs.dim(), 0.0);
  const GaussianState g = mean_cov_z(fs, y0.empty() ? std::span<const double>(zeros) : y0, z);
  Vector noise(fs.dim());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = std::sqrt(g.variances[i]) * standard_normal(rng);
  noise = matvec(g.basis, noise);
  PathPoint p{g.mean, z, interpolant_time(fs, z)};
  for (std::size_t i = 0; i < noise.size(); ++i) p.y[i] += noise[i];
  if (spatial_dim > 0) zero_com_project_inplace(p.y, spatial_dim);
  return p;
}

double isotropic_alpha_data(std::span<const double> y1, double eps) {
  const double r = norm(y1);
  if (!(eps > 0.0 && eps < r)) throw ValidationError("isotropic_alpha_data: need 0 < eps < ‖y1‖");
  return -std::log(eps / r);
}

double isotropic_alpha_interp(double eps, double kappa) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("isotropic_alpha_interp: need 0 < eps < 1");
  if (!(kappa > 0.0)) throw ValidationError("isotropic_alpha_interp: kappa must be positive");
  return -std::log(eps) / kappa;
}

ConditionalField::ConditionalField(FlowSpec fs, Vector y0) : fs_(std::move(fs)), y0_(std::move(y0)) {
  require_hyperbolic(fs_, "ConditionalField");
  require_dim(y0_, fs_.dim(), "ConditionalField");
}

FieldValue ConditionalField::evaluate(std::span<const double> y, double z) const {
  if (!(z < 1.0)) throw NumericalError("ConditionalField: z must be < 1");
  return cond_field_time(fs_, y, -std::log1p(-z) / (fs_.kappa * fs_.spectrum.alpha_min), y0_);
}

FieldValue ConditionalField::jvp(std::span<const double> y, double z, std::span<const double> tangent) const {
  const std::size_t n = fs_.dim();
  require_dim(tangent, n + 1, "ConditionalField::jvp");
  if (!(z < 1.0)) throw NumericalError("ConditionalField: z must be < 1");
  const double rate = fs_.kappa * fs_.spectrum.alpha_min;
  const double t = -std::log1p(-z) / rate;
  const double dt_dz = 1.0 / (rate * (1.0 - z));
  const FieldTerms ft = field_terms(fs_, y, t, y0_);
  const Vector dxi = matvec_transposed(fs_.basis(), tangent.first(n));
  const double dz = tangent[n];

  Vector d_eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = fs_.alpha()[i];
    const double b = fs_.beta[i];
    double jac = -a;
    double d_dt = 0.0;
    if (b > 0.0) {
      const double s = stationary_variance(a, b);
      const double dvar = -2.0 * a * std::exp(-2.0 * a * t) * (fs_.sigma0[i] - s);
      const double dm = -a * ft.m[i];
      jac += 0.5 * b * b / ft.var[i];
      d_dt = 0.5 * b * b * (-(ft.xi[i] - ft.m[i]) * dvar / (ft.var[i] * ft.var[i]) - dm / ft.var[i]);
    }
    d_eta[i] = jac * dxi[i] + d_dt * dt_dz * dz;
  }
  return {matvec(fs_.basis(), d_eta), -rate * dz};
}

FieldValue OtConditionalField::evaluate(std::span<const double> y, double z) const {
  return ot_field(y, z, y1_, sigma_min_);
}

FieldValue OtConditionalField::jvp(std::span<const double> y, double z, std::span<const double> tangent) const {
  const std::size_t n = dim();
  require_dim(y, n, "OtConditionalField::jvp");
  require_dim(tangent, n + 1, "OtConditionalField::jvp");
  const double k = 1.0 - sigma_min_;
  const double denom = 1.0 - k * z;
  FieldValue out{Vector(n), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    out.v_y[i] = -k * tangent[i] / denom + tangent[n] * k * (y1_[i] - k * y[i]) / (denom * denom);
  }
  return out;
}

}  // namespace hifm
