#include "pso_cli/config.hpp"

#include "pso/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace pso::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

std::optional<long> to_long(const std::string& v) {
  long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

std::optional<bool> to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  return std::nullopt;
}

using Check = std::function<void(const std::string& key, const std::string& value)>;

Check one_of(std::vector<std::string> allowed) {
  return [allowed](const std::string& key, const std::string& v) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
      throw ConfigError(key, "'" + v + "' is not one of " + list);
    }
  };
}

Check integer(long lo, long hi = std::numeric_limits<long>::max()) {
  return [lo, hi](const std::string& key, const std::string& v) {
    const auto x = to_long(v);
    if (!x) throw ConfigError(key, "'" + v + "' is not an integer");
    if (*x < lo || *x > hi) throw ConfigError(key, "value " + v + " is out of range");
  };
}

Check unsigned64() {
  return [](const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key, "'" + v + "' is not a u64");
  };
}

enum class Bound { any, positive, non_negative };

Check real(Bound bound = Bound::any) {
  return [bound](const std::string& key, const std::string& v) {
    const auto x = to_double(v);
    if (!x || !std::isfinite(*x)) throw ConfigError(key, "'" + v + "' is not a finite number");
    if (bound == Bound::positive && !(*x > 0.0)) throw ConfigError(key, "must be positive, got " + v);
    if (bound == Bound::non_negative && *x < 0.0) throw ConfigError(key, "must be non-negative, got " + v);
  };
}

Check boolean() {
  return [](const std::string& key, const std::string& v) {
    if (!to_bool(v)) throw ConfigError(key, "'" + v + "' is not a boolean");
  };
}

Check reals() {
  return [](const std::string& key, const std::string& v) {
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto x = to_double(trim(item));
      if (!x || !std::isfinite(*x)) throw ConfigError(key, "'" + item + "' is not a finite number");
    }
  };
}

Check text() {
  return [](const std::string& key, const std::string& v) {
    if (v.empty()) throw ConfigError(key, "must not be empty");
  };
}

const std::map<std::string, Check>& schema() {
  static const std::map<std::string, Check> s = {
      {"model.topology", one_of({"fully_connected", "block_diagonal", "linear"})},
      {"model.num_layers", integer(1, 64)},
      {"model.num_blocks", integer(1, 4096)},
      {"model.block_size", integer(1, 4096)},
      {"model.width", integer(1, 1 << 20)},
      {"model.activation", one_of({"relu", "leaky_relu", "tanh", "identity"})},
      {"model.leaky_slope", real(Bound::non_negative)},
      {"model.shortcuts", boolean()},
      {"model.output_transform", one_of({"none", "bounded"})},
      {"model.h_min", real()},
      {"model.h_max", real()},
      {"model.zero_last_layer", boolean()},

      {"instance.name", text()},
      {"instance.alpha", real(Bound::positive)},
      {"instance.d", real(Bound::positive)},
      {"instance.m", real(Bound::positive)},
      {"instance.a", real()},
      {"instance.b", real()},
      {"instance.wrap_bounded", boolean()},
      {"instance.cut_up_at", real()},
      {"instance.cut_down_at", real()},

      {"data.distribution", one_of({"columns", "transformed_columns", "gaussian", "linear_gaussian"})},
      {"data.dim", integer(1, 20)},
      {"data.dataset_size", integer(0)},
      {"data.dataset_path", text()},

      {"down.kind", one_of({"uniform_fit", "gaussian_fit", "explicit"})},
      {"down.family", one_of({"uniform", "gaussian"})},
      {"down.params", reals()},

      {"train.iterations", integer(0)},
      {"train.batch_up", integer(1)},
      {"train.batch_down", integer(1)},
      {"train.lr0", real(Bound::positive)},
      {"train.warm_iters", integer(0)},
      {"train.lr_min", real(Bound::positive)},
      {"train.adam_beta1", real(Bound::non_negative)},
      {"train.adam_beta2", real(Bound::non_negative)},
      {"train.adam_eps", real(Bound::positive)},
      {"train.seed", unsigned64()},
      {"train.augment_sigma", real(Bound::non_negative)},
      {"train.eval_period", integer(1)},
      {"train.checkpoint_period", integer(0)},
      {"train.grad_clip", real(Bound::non_negative)},
      {"train.record_wall_time", boolean()},

      {"eval.test_size", integer(1)},
      {"eval.eval_period", integer(1)},
      {"eval.ti_samples", integer(1)},

      {"output.dir", text()},
      {"output.csv", text()},
      {"output.checkpoints", boolean()},
  };
  return s;
}

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : schema()) out.push_back(k);
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) throw ConfigError(key, "unknown key");
  it->second(key, value);
  values_[key] = value;
}

void ExperimentConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("", "override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", "line " + std::to_string(lineno) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    if (cfg.has(key)) throw ConfigError(key, "assigned twice");
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : *to_double(it->second);
}

long ExperimentConfig::get_long(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : *to_long(it->second);
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t out = 0;
  std::from_chars(it->second.data(), it->second.data() + it->second.size(), out);
  return out;
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : *to_bool(it->second);
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(*to_double(trim(item)));
  return out;
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (k.rfind("output.", 0) == 0) continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

}  // namespace pso::cli
