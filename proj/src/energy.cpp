#include "hifm/energy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "hifm/error.hpp"

namespace hifm {

namespace {

constexpr double kMinPairDistance = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_input(const EnergyModel& e, std::span<const double> y) {
  if (y.size() != e.dim()) {
    throw ValidationError("energy: configuration has " + std::to_string(y.size()) + " coordinates, expected " +
                          std::to_string(e.dim()));
  }
  for (std::size_t k = 0; k < y.size(); ++k)
    if (!std::isfinite(y[k])) throw ValidationError("energy: non-finite coordinate " + std::to_string(k));
}

// Separation vector yᵢ − yⱼ and its squared length.
double separation(std::span<const double> y, std::size_t i, std::size_t j, std::size_t d, double* r) {
  double r2 = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    r[a] = y[i * d + a] - y[j * d + a];
    r2 += r[a] * r[a];
  }
  return r2;
}

// Adds the pair block K to H at (i,i), (j,j) and −K at (i,j), (j,i).
void add_pair_block(Matrix& h, std::size_t i, std::size_t j, std::size_t d, const double* k) {
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      const double v = k[a * d + b];
      h(i * d + a, i * d + b) += v;
      h(j * d + a, j * d + b) += v;
      h(i * d + a, j * d + b) -= v;
      h(j * d + a, i * d + b) -= v;
    }
}

struct LjPair {
  double u, du, d2u;
};

LjPair lj_pair(double r, double epsilon, double sigma) {
  if (r < kMinPairDistance) throw DomainError("lennard_jones: coincident particles (r = " + std::to_string(r) + ")");
  const double sr6 = std::pow(sigma / r, 6);
  const double sr12 = sr6 * sr6;
  return {4.0 * epsilon * (sr12 - sr6), 4.0 * epsilon * (-12.0 * sr12 + 6.0 * sr6) / r,
          4.0 * epsilon * (156.0 * sr12 - 42.0 * sr6) / (r * r)};
}

}  // namespace

std::string_view to_string(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::quadratic: return "quadratic";
    case EnergyKind::lennard_jones: return "lennard_jones";
    case EnergyKind::formation: return "formation";
  }
  return "unknown";
}

EnergyModel EnergyModel::quadratic(Vector center, SymMatrix a) {
  if (center.size() != a.dim()) throw ValidationError("quadratic: center and matrix dims differ");
  const EigenPair eig = eigh_sym(a);
  const double scale = std::max(1.0, std::abs(eig.eigvals.back()));
  if (eig.eigvals.front() < -1e-10 * scale) throw ValidationError("quadratic: matrix is not positive semidefinite");
  const std::size_t n = center.size();
  return EnergyModel(QuadraticParams{std::move(center), std::move(a)}, n);
}

EnergyModel EnergyModel::lennard_jones(std::size_t m, std::size_t spatial_dim, double epsilon, double sigma) {
  if (m < 2) throw ValidationError("lennard_jones: need at least 2 particles");
  if (spatial_dim != 2 && spatial_dim != 3) throw ValidationError("lennard_jones: spatial_dim must be 2 or 3");
  if (!(epsilon > 0.0) || !(sigma > 0.0)) throw ValidationError("lennard_jones: epsilon and sigma must be positive");
  return EnergyModel(LennardJonesParams{m, spatial_dim, epsilon, sigma}, m * spatial_dim);
}

EnergyModel EnergyModel::formation(std::size_t m, std::size_t spatial_dim,
                                   std::vector<std::pair<std::size_t, std::size_t>> edges,
                                   std::vector<double> distances) {
  if (spatial_dim != 2 && spatial_dim != 3) throw ValidationError("formation: spatial_dim must be 2 or 3");
  if (edges.size() != distances.size()) throw ValidationError("formation: one distance per edge required");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    auto [i, j] = edges[k];
    if (i > j) std::swap(i, j);
    if (i == j || j >= m) {
      throw ValidationError("formation: invalid edge (" + std::to_string(edges[k].first) + "," +
                            std::to_string(edges[k].second) + ")");
    }
    if (!seen.insert({i, j}).second) {
      throw ValidationError("formation: duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    if (!(distances[k] > 0.0)) throw ValidationError("formation: distances must be positive");
    edges[k] = {i, j};
  }
  return EnergyModel(FormationParams{std::move(edges), std::move(distances), m, spatial_dim}, m * spatial_dim);
}

EnergyModel EnergyModel::formation_from(std::span<const double> y, std::size_t m, std::size_t spatial_dim) {
  if (y.size() != m * spatial_dim) throw ValidationError("formation_from: configuration size mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> dist;
  double r[3];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      edges.emplace_back(i, j);
      dist.push_back(std::sqrt(separation(y, i, j, spatial_dim, r)));
    }
  return formation(m, spatial_dim, std::move(edges), std::move(dist));
}

double value(const EnergyModel& e, std::span<const double> y) {
  check_input(e, y);
  return std::visit(
      overloaded{
          [&](const QuadraticParams& q) {
            Vector dy(y.begin(), y.end());
            for (std::size_t k = 0; k < dy.size(); ++k) dy[k] -= q.center[k];
            return 0.5 * dot(dy, matvec(q.a.matrix(), dy));
          },
          [&](const LennardJonesParams& p) {
            double v = 0.0;
            double r[3];
            for (std::size_t i = 0; i < p.m; ++i)
              for (std::size_t j = i + 1; j < p.m; ++j)
                v += lj_pair(std::sqrt(separation(y, i, j, p.spatial_dim, r)), p.epsilon, p.sigma).u;
            return v;
          },
          [&](const FormationParams& f) {
            double v = 0.0;
            double r[3];
            for (std::size_t k = 0; k < f.edges.size(); ++k) {
              const double ek = separation(y, f.edges[k].first, f.edges[k].second, f.spatial_dim, r) -
                                f.distances[k] * f.distances[k];
              v += ek * ek;
            }
            return 0.25 * v;
          },
      },
      e.params());
}

Vector gradient(const EnergyModel& e, std::span<const double> y) {
  check_input(e, y);
  return std::visit(
      overloaded{
          [&](const QuadraticParams& q) {
            Vector dy(y.begin(), y.end());
            for (std::size_t k = 0; k < dy.size(); ++k) dy[k] -= q.center[k];
            return matvec(q.a.matrix(), dy);
          },
          [&](const LennardJonesParams& p) {
            Vector g(y.size(), 0.0);
            const std::size_t d = p.spatial_dim;
            double r[3];
            for (std::size_t i = 0; i < p.m; ++i)
              for (std::size_t j = i + 1; j < p.m; ++j) {
                const double dist = std::sqrt(separation(y, i, j, d, r));
                const double s = lj_pair(dist, p.epsilon, p.sigma).du / dist;
                for (std::size_t a = 0; a < d; ++a) {
                  g[i * d + a] += s * r[a];
                  g[j * d + a] -= s * r[a];
                }
              }
            return g;
          },
          [&](const FormationParams& f) {
            Vector g(y.size(), 0.0);
            const std::size_t d = f.spatial_dim;
            double r[3];
            for (std::size_t k = 0; k < f.edges.size(); ++k) {
              const auto [i, j] = f.edges[k];
              const double ek = separation(y, i, j, d, r) - f.distances[k] * f.distances[k];
              for (std::size_t a = 0; a < d; ++a) {
                g[i * d + a] += ek * r[a];
                g[j * d + a] -= ek * r[a];
              }
            }
            return g;
          },
      },
      e.params());
}

SymMatrix hessian(const EnergyModel& e, std::span<const double> y) {
  check_input(e, y);
  return std::visit(
      overloaded{
          [&](const QuadraticParams& q) { return q.a; },
          [&](const LennardJonesParams& p) {
            const std::size_t d = p.spatial_dim;
            Matrix h(y.size(), y.size());
            double r[3];
            double k[9];
            for (std::size_t i = 0; i < p.m; ++i)
              for (std::size_t j = i + 1; j < p.m; ++j) {
                const double dist = std::sqrt(separation(y, i, j, d, r));
                const LjPair u = lj_pair(dist, p.epsilon, p.sigma);
                for (std::size_t a = 0; a < d; ++a)
                  for (std::size_t b = 0; b < d; ++b) {
                    const double rr = r[a] * r[b] / (dist * dist);
                    k[a * d + b] = u.d2u * rr + (u.du / dist) * ((a == b ? 1.0 : 0.0) - rr);
                  }
                add_pair_block(h, i, j, d, k);
              }
            return SymMatrix(std::move(h));
          },
          [&](const FormationParams& f) {
            const std::size_t d = f.spatial_dim;
            Matrix h(y.size(), y.size());
            double r[3];
            double k[9];
            for (std::size_t n = 0; n < f.edges.size(); ++n) {
              const auto [i, j] = f.edges[n];
              const double en = separation(y, i, j, d, r) - f.distances[n] * f.distances[n];
              for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) k[a * d + b] = 2.0 * r[a] * r[b] + (a == b ? en : 0.0);
              add_pair_block(h, i, j, d, k);
            }
            return SymMatrix(std::move(h));
          },
      },
      e.params());
}

Vector fd_gradient(const EnergyModel& e, std::span<const double> y, double h) {
  if (!(h > 0.0)) throw ValidationError("fd_gradient: step must be positive");
  Vector x(y.begin(), y.end());
  Vector g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double step = h * (1.0 + std::abs(y[k]));
    x[k] = y[k] + step;
    const double vp = value(e, x);
    x[k] = y[k] - step;
    const double vm = value(e, x);
    x[k] = y[k];
    g[k] = (vp - vm) / (2.0 * step);
  }
  return g;
}

SymMatrix fd_hessian(const EnergyModel& e, std::span<const double> y, double h) {
  if (!(h > 0.0)) throw ValidationError("fd_hessian: step must be positive");
  const std::size_t n = y.size();
  Vector x(y.begin(), y.end());
  Matrix hm(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double step = h * (1.0 + std::abs(y[k]));
    x[k] = y[k] + step;
    const Vector gp = gradient(e, x);
    x[k] = y[k] - step;
    const Vector gm = gradient(e, x);
    x[k] = y[k];
    for (std::size_t i = 0; i < n; ++i) hm(i, k) = (gp[i] - gm[i]) / (2.0 * step);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (hm(i, j) + hm(j, i));
      hm(i, j) = s;
      hm(j, i) = s;
    }
  return SymMatrix(std::move(hm));
}

double generator_lv(const EnergyModel& e, std::span<const double> y, const SymMatrix& b) {
  if (b.dim() != e.dim()) throw ValidationError("generator_lv: diffusion matrix dimension mismatch");
  const Vector g = gradient(e, y);
  const SymMatrix h = hessian(e, y);
  const Matrix b2 = matmul(b.matrix(), b.matrix());
  double trace = 0.0;
  for (std::size_t i = 0; i < e.dim(); ++i)
    for (std::size_t k = 0; k < e.dim(); ++k) trace += h(i, k) * b2(k, i);
  return -dot(g, g) + 0.5 * trace;
}

Vector apply_rigid_motion(std::span<const double> y, const Matrix& rotation, std::span<const double> translation,
                          std::size_t spatial_dim) {
  const std::size_t d = spatial_dim;
  if (rotation.rows() != d || rotation.cols() != d || translation.size() != d) {
    throw ValidationError("apply_rigid_motion: rotation/translation must match spatial_dim");
  }
  if (d == 0 || y.size() % d != 0) throw ValidationError("apply_rigid_motion: coordinates not divisible by spatial_dim");
  Matrix rtr = matmul(rotation.transposed(), rotation);
  for (std::size_t i = 0; i < d; ++i) rtr(i, i) -= 1.0;
  if (frobenius_norm(rtr) > 1e-8) throw ValidationError("apply_rigid_motion: rotation is not orthogonal");

  Vector out(y.size());
  for (std::size_t p = 0; p < y.size() / d; ++p)
    for (std::size_t a = 0; a < d; ++a) {
      double s = translation[a];
      for (std::size_t b = 0; b < d; ++b) s += rotation(a, b) * y[p * d + b];
      out[p * d + a] = s;
    }
  return out;
}

void zero_com_project_inplace(std::span<double> y, std::size_t spatial_dim) {
  const std::size_t d = spatial_dim;
  if (d == 0 || y.size() % d != 0) throw ValidationError("zero_com_project: coordinates not divisible by spatial_dim");
  const std::size_t m = y.size() / d;
  if (m == 0) return;
  for (std::size_t a = 0; a < d; ++a) {
    double mean = 0.0;
    for (std::size_t p = 0; p < m; ++p) mean += y[p * d + a];
    mean /= static_cast<double>(m);
    for (std::size_t p = 0; p < m; ++p) y[p * d + a] -= mean;
  }
}

Vector zero_com_project(std::span<const double> y, std::size_t spatial_dim) {
  Vector out(y.begin(), y.end());
  zero_com_project_inplace(out, spatial_dim);
  return out;
}

}  // namespace hifm
