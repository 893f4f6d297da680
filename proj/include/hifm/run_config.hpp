#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hifm/energy.hpp"
#include "hifm/train.hpp"

namespace hifm {

/// Flat key=value run configuration. Every key has a default; unknown keys
/// are rejected. Values are kept as text in a fixed key order so that the
/// resolved configuration can be echoed verbatim.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);

  /// Parses "key = value" lines; '#' starts a comment.
  void parse(const std::string& text, const std::string& origin = "config");
  /// Applies one "key=value" override.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  /// All keys with their current values, one "key = value" per line.
  std::string resolved_text() const;
  void write_resolved(const std::filesystem::path& path) const;

  TrainConfig train_config() const;
  std::size_t threads() const;
  std::string data_path() const { return get("data"); }
  std::string eval_data_path() const { return get("eval_data"); }
  std::filesystem::path out_dir() const { return get("out_dir"); }
  double train_frac() const;
  std::uint64_t split_seed() const;
  /// Quadratic energy from quad_diag / quad_center; nullopt when quad_diag is empty.
  std::optional<EnergyModel> quadratic_energy() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

double parse_double(const std::string& key, const std::string& text);
std::size_t parse_size(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);
Vector parse_list(const std::string& key, const std::string& text);
/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace hifm
