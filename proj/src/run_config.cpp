#include "hifm/run_config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hifm/error.hpp"

namespace hifm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ValidationError("config key \"" + key + "\": expected a number, got \"" + text + "\"");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ValidationError("config key \"" + key + "\": expected a non-negative integer, got \"" + text + "\"");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "on") return true;
  if (t == "false" || t == "0" || t == "off") return false;
  throw ValidationError("config key \"" + key + "\": expected true/false, got \"" + text + "\"");
}

Vector parse_list(const std::string& key, const std::string& text) {
  Vector out;
  const std::string t = trim(text);
  if (t.empty()) return out;
  std::istringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

RunConfig::RunConfig() {
  const TrainConfig d;
  entries_ = {
      {"method", std::string(to_string(d.method))},
      {"finite", d.flags.finite ? "true" : "false"},
      {"project", d.flags.project ? "true" : "false"},
      {"hyperbolize", d.flags.hyperbolize ? "true" : "false"},
      {"isotropize", d.flags.isotropize ? "true" : "false"},
      {"c", format_double(d.c)},
      {"gamma", format_double(d.gamma)},
      {"kappa", format_double(d.kappa)},
      {"sigma_min", format_double(d.sigma_min)},
      {"eps", format_double(d.eps)},
      {"batch_size", std::to_string(d.batch_size)},
      {"steps", std::to_string(d.steps)},
      {"seed", std::to_string(d.seed)},
      {"z_max", format_double(d.z_max)},
      {"hidden", "64,64,64"},
      {"lr", format_double(d.optimizer.lr)},
      {"weight_decay", format_double(d.optimizer.weight_decay)},
      {"eval_every", std::to_string(d.eval_every)},
      {"eval_count", std::to_string(d.eval_count)},
      {"rtol", format_double(d.eval_rk.rtol)},
      {"atol", format_double(d.eval_rk.atol)},
      {"sample_y0", d.sample_y0 ? "true" : "false"},
      {"log_wall_time", d.log_wall_time ? "true" : "false"},
      {"data", ""},
      {"eval_data", ""},
      {"train_frac", "0.8"},
      {"split_seed", "0"},
      {"out_dir", "run"},
      {"quad_diag", ""},
      {"quad_center", ""},
      {"threads", "1"},
  };
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  RunConfig rc;
  rc.parse(ss.str(), path.string());
  return rc;
}

void RunConfig::parse(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override \"" + assignment + "\": expected key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  throw ValidationError("unknown config key \"" + key + "\"");
}

const std::string& RunConfig::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw ValidationError("unknown config key \"" + key + "\"");
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot write " + path.string());
  os << resolved_text();
  if (!os) throw FormatError("failed writing " + path.string());
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.method = method_from_string(get("method"));
  t.flags.finite = parse_bool("finite", get("finite"));
  t.flags.project = parse_bool("project", get("project"));
  t.flags.hyperbolize = parse_bool("hyperbolize", get("hyperbolize"));
  t.flags.isotropize = parse_bool("isotropize", get("isotropize"));
  t.c = parse_double("c", get("c"));
  t.gamma = parse_double("gamma", get("gamma"));
  t.kappa = parse_double("kappa", get("kappa"));
  t.sigma_min = parse_double("sigma_min", get("sigma_min"));
  t.eps = parse_double("eps", get("eps"));
  t.batch_size = parse_size("batch_size", get("batch_size"));
  t.steps = parse_size("steps", get("steps"));
  t.seed = parse_size("seed", get("seed"));
  t.z_max = parse_double("z_max", get("z_max"));
  t.hidden.clear();
  const std::string hidden = get("hidden");
  std::istringstream hs(hidden);
  std::string item;
  while (std::getline(hs, item, ',')) {
    const std::size_t w = parse_size("hidden", item);
    if (w == 0) throw ValidationError("config key \"hidden\": widths must be positive");
    t.hidden.push_back(w);
  }
  t.optimizer.lr = parse_double("lr", get("lr"));
  t.optimizer.weight_decay = parse_double("weight_decay", get("weight_decay"));
  t.eval_every = parse_size("eval_every", get("eval_every"));
  t.eval_count = parse_size("eval_count", get("eval_count"));
  t.eval_rk.rtol = parse_double("rtol", get("rtol"));
  t.eval_rk.atol = parse_double("atol", get("atol"));
  t.sample_y0 = parse_bool("sample_y0", get("sample_y0"));
  t.log_wall_time = parse_bool("log_wall_time", get("log_wall_time"));
  t.validate();
  return t;
}

std::size_t RunConfig::threads() const {
  const std::size_t n = parse_size("threads", get("threads"));
  if (n == 0) throw ValidationError("config key \"threads\": must be >= 1");
  return n;
}

double RunConfig::train_frac() const { return parse_double("train_frac", get("train_frac")); }

std::uint64_t RunConfig::split_seed() const { return parse_size("split_seed", get("split_seed")); }

std::optional<EnergyModel> RunConfig::quadratic_energy() const {
  const Vector diag = parse_list("quad_diag", get("quad_diag"));
  if (diag.empty()) return std::nullopt;
  Vector center = parse_list("quad_center", get("quad_center"));
  if (center.empty()) center.assign(diag.size(), 0.0);
  if (center.size() != diag.size()) {
    throw ValidationError("quad_center must have as many entries as quad_diag");
  }
  return EnergyModel::quadratic(std::move(center), SymMatrix::diagonal(diag));
}

}  // namespace hifm
