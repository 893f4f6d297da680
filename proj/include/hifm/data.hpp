#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "hifm/energy.hpp"
#include "hifm/linalg.hpp"
#include "hifm/random.hpp"

namespace hifm {

enum class DatasetKind : std::uint8_t { generic = 0, particles = 1 };

struct DatasetMeta {
  DatasetKind kind = DatasetKind::generic;
  std::size_t m = 0;
  std::size_t spatial_dim = 0;
  std::string name;
};

/// n × dim samples, one per row.
struct Dataset {
  Matrix samples;
  DatasetMeta meta;

  std::size_t size() const noexcept { return samples.rows(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  bool is_particles() const noexcept { return meta.kind == DatasetKind::particles; }
  /// spatial_dim for particle data, 0 otherwise.
  std::size_t com_spatial_dim() const noexcept { return is_particles() ? meta.spatial_dim : 0; }
};

enum class DataFormat { csv, binary };

/// .csv → csv, anything else → binary.
DataFormat format_from_path(const std::filesystem::path& path);

void store(const Dataset& ds, const std::filesystem::path& path, DataFormat format);
Dataset load(const std::filesystem::path& path, DataFormat format);
inline void store(const Dataset& ds, const std::filesystem::path& path) { store(ds, path, format_from_path(path)); }
inline Dataset load(const std::filesystem::path& path) { return load(path, format_from_path(path)); }

struct LangevinConfig {
  double eta = 1e-3;
  double tau = 1.0;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::size_t refine_steps = 0;  // gradient-descent steps applied to each emitted sample
  std::size_t chains = 1;
};

/// Uniform draws in a box with pair separations ≥ 0.9·spacing, zero-CoM.
Vector random_particle_placement(std::size_t m, std::size_t spatial_dim, double spacing, Rng& rng);

/// Overdamped Langevin y ← y − η∇V + √(2ητ)·ε, chains started from the
/// quadratic center or a random non-overlapping particle placement.
Dataset langevin_generate(const EnergyModel& energy, const LangevinConfig& cfg);

/// Seeded permutation split into (train, test); round(frac·n) rows train.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac, std::uint64_t seed);

Dataset preprocess_particles(Dataset ds);

/// First min(count, n) rows.
Dataset head(const Dataset& ds, std::size_t count);

}  // namespace hifm
