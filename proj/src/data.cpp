#include "hifm/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <variant>

#include "binary_io.hpp"
#include "hifm/error.hpp"
#include "hifm/parallel.hpp"
#include "hifm/random.hpp"

namespace hifm {

namespace {

constexpr char kDataMagic[] = "HIFMDATA";
constexpr std::uint32_t kDataVersion = 1;
constexpr double kDivergenceNorm = 1e6;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open dataset file for writing: " + path.string());
  for (std::size_t j = 0; j < ds.dim(); ++j) os << (j ? "," : "") << 'x' << j;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.samples(i, j));
      os << (j ? "," : "") << buf;
    }
    os << '\n';
  }
  if (!os) throw FormatError("failed writing dataset file: " + path.string());
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open dataset file: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": missing CSV header");
  const auto header = split_csv_line(trim(line));
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (trim(header[j]) != "x" + std::to_string(j)) {
      throw FormatError(path.string() + ": line 1: expected header column \"x" + std::to_string(j) + "\"");
    }
  }
  const std::size_t dim = header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != dim) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                        " columns, found " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const std::string cell = trim(cells[j]);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
        throw FormatError(path.string() + ": row " + std::to_string(rows + 1) + " (line " + std::to_string(line_no) +
                          "), column " + std::to_string(j) + ": not a number: \"" + cell + "\"");
      }
      values.push_back(v);
    }
    ++rows;
  }
  Dataset ds{Matrix(rows, dim, std::move(values)), {}};
  ds.meta.name = path.stem().string();
  return ds;
}

void write_binary(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open dataset file for writing: " + path.string());
  os.write(kDataMagic, 8);
  io::write_le<std::uint32_t>(os, kDataVersion);
  io::write_le<std::uint64_t>(os, ds.size());
  io::write_le<std::uint64_t>(os, ds.dim());
  io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(ds.meta.kind));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.meta.m));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.meta.spatial_dim));
  for (double v : ds.samples.data()) io::write_f64(os, v);
  if (!os) throw FormatError("failed writing dataset file: " + path.string());
}

Dataset read_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open dataset file: " + path.string());
  io::expect_magic(is, kDataMagic, "dataset");
  const auto version = io::read_le<std::uint32_t>(is, "dataset version");
  if (version != kDataVersion) {
    throw FormatError("unsupported dataset file version " + std::to_string(version) + " (expected " +
                      std::to_string(kDataVersion) + ")");
  }
  const auto n = io::read_le<std::uint64_t>(is, "sample count");
  const auto dim = io::read_le<std::uint64_t>(is, "dimension");
  const auto kind = io::read_le<std::uint8_t>(is, "kind");
  if (kind > 1) throw FormatError("dataset file: unknown kind " + std::to_string(kind));
  Dataset ds;
  ds.meta.kind = static_cast<DatasetKind>(kind);
  ds.meta.m = io::read_le<std::uint32_t>(is, "particle count");
  ds.meta.spatial_dim = io::read_le<std::uint32_t>(is, "spatial dim");
  ds.meta.name = path.stem().string();
  if (ds.is_particles() && (ds.meta.spatial_dim == 0 || ds.meta.m * ds.meta.spatial_dim != dim)) {
    throw FormatError("dataset file: particle metadata inconsistent with dimension");
  }
  std::vector<double> values(n * dim);
  for (double& v : values) v = io::read_f64(is, "samples");
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("dataset file has trailing bytes");
  ds.samples = Matrix(n, dim, std::move(values));
  return ds;
}

}  // namespace

Vector random_particle_placement(std::size_t m, std::size_t d, double spacing, Rng& rng) {
  const double side = spacing * std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d)) * 1.2;
  Vector y(m * d);
  for (std::size_t p = 0; p < m; ++p) {
    for (int attempt = 0;; ++attempt) {
      for (std::size_t a = 0; a < d; ++a) y[p * d + a] = uniform(rng, 0.0, side);
      bool ok = true;
      for (std::size_t q = 0; q < p && ok; ++q) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < d; ++a) r2 += std::pow(y[p * d + a] - y[q * d + a], 2);
        ok = r2 >= 0.81 * spacing * spacing;
      }
      if (ok || attempt > 10000) break;
    }
  }
  zero_com_project_inplace(y, d);
  return y;
}

namespace {

struct ChainSetup {
  Vector start;
  std::size_t spatial_dim = 0;  // zero-CoM after each step when > 0
};

ChainSetup chain_setup(const EnergyModel& e, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> ChainSetup {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, QuadraticParams>) {
          return {p.center, 0};
        } else if constexpr (std::is_same_v<T, LennardJonesParams>) {
          return {random_particle_placement(p.m, p.spatial_dim, p.sigma * std::pow(2.0, 1.0 / 6.0), rng), p.spatial_dim};
        } else {
          return {random_particle_placement(p.m, p.spatial_dim, 1.0, rng), p.spatial_dim};
        }
      },
      e.params());
}

void check_divergence(std::span<const double> y) {
  const double r = norm(y);
  if (!std::isfinite(r) || r > kDivergenceNorm) {
    throw NumericalError("langevin: trajectory diverged (‖y‖ = " + std::to_string(r) + "); use a smaller eta");
  }
}

}  // namespace

DataFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DataFormat::csv : DataFormat::binary;
}

void store(const Dataset& ds, const std::filesystem::path& path, DataFormat format) {
  if (format == DataFormat::csv)
    write_csv(ds, path);
  else
    write_binary(ds, path);
}

Dataset load(const std::filesystem::path& path, DataFormat format) {
  return format == DataFormat::csv ? read_csv(path) : read_binary(path);
}

Dataset langevin_generate(const EnergyModel& energy, const LangevinConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw ValidationError("langevin: eta must be positive");
  if (!(cfg.tau >= 0.0)) throw ValidationError("langevin: tau must be non-negative");
  if (cfg.chains == 0 || cfg.thin == 0) throw ValidationError("langevin: chains and thin must be >= 1");
  const std::size_t dim = energy.dim();
  const std::size_t per_chain = (cfg.n + cfg.chains - 1) / cfg.chains;
  Matrix out(per_chain * cfg.chains, dim);
  const double noise = std::sqrt(2.0 * cfg.eta * cfg.tau);

  parallel_for(cfg.chains, [&](std::size_t c) {
    std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(c)};
    Rng rng(seq);
    ChainSetup setup = chain_setup(energy, rng);
    Vector y = std::move(setup.start);
    auto step = [&](Vector& x, bool stochastic) {
      const Vector g = gradient(energy, x);
      for (std::size_t i = 0; i < dim; ++i) {
        x[i] -= cfg.eta * g[i];
        if (stochastic && noise > 0.0) x[i] += noise * standard_normal(rng);
      }
      if (setup.spatial_dim > 0) zero_com_project_inplace(x, setup.spatial_dim);
      check_divergence(x);
    };
    for (std::size_t s = 0; s < cfg.burn_in; ++s) step(y, true);
    for (std::size_t k = 0; k < per_chain; ++k) {
      for (std::size_t s = 0; s < cfg.thin; ++s) step(y, true);
      Vector emitted = y;
      for (std::size_t s = 0; s < cfg.refine_steps; ++s) step(emitted, false);
      std::copy(emitted.begin(), emitted.end(), out.row(c * per_chain + k).begin());
    }
  });

  Dataset ds;
  std::vector<double> rows(out.data().begin(), out.data().begin() + static_cast<std::ptrdiff_t>(cfg.n * dim));
  ds.samples = Matrix(cfg.n, dim, std::move(rows));
  ds.meta.name = std::string(to_string(energy.kind()));
  if (const auto* lj = std::get_if<LennardJonesParams>(&energy.params())) {
    ds.meta = {DatasetKind::particles, lj->m, lj->spatial_dim, ds.meta.name};
  } else if (const auto* f = std::get_if<FormationParams>(&energy.params())) {
    ds.meta = {DatasetKind::particles, f->m, f->spatial_dim, ds.meta.name};
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ValidationError("split: train_frac must lie in (0, 1)");
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(ds.size())));
  auto take = [&](std::size_t begin, std::size_t end) {
    Dataset part{Matrix(end - begin, ds.dim()), ds.meta};
    for (std::size_t i = begin; i < end; ++i) {
      const auto src = ds.samples.row(perm[i]);
      std::copy(src.begin(), src.end(), part.samples.row(i - begin).begin());
    }
    return part;
  };
  return {take(0, n_train), take(n_train, ds.size())};
}

Dataset preprocess_particles(Dataset ds) {
  if (!ds.is_particles()) throw ValidationError("preprocess_particles: dataset is not a particle dataset");
  for (std::size_t i = 0; i < ds.size(); ++i) zero_com_project_inplace(ds.samples.row(i), ds.meta.spatial_dim);
  return ds;
}

Dataset head(const Dataset& ds, std::size_t count) {
  const std::size_t n = std::min(count, ds.size());
  std::vector<double> rows(ds.samples.data().begin(), ds.samples.data().begin() + static_cast<std::ptrdiff_t>(n * ds.dim()));
  return {Matrix(n, ds.dim(), std::move(rows)), ds.meta};
}

}  // namespace hifm
