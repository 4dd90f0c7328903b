#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>

#include "pimcache/core.hpp"
#include "pimcache/fingerprint.hpp"

namespace pimcache {

// Parameters of the linear transfer/kernel time model.
struct CostModelParams {
  double host_dpu_bandwidth_bytes_per_s = 0.5 * static_cast<double>(GiB);
  double per_transfer_latency_s = 10e-6;
  double dpu_clock_hz = 4e8;
  std::uint32_t cpu_threads_baseline = 32;

  void validate() const {
    if (!(host_dpu_bandwidth_bytes_per_s > 0) || !(per_transfer_latency_s > 0) ||
        !(dpu_clock_hz > 0) || cpu_threads_baseline == 0) {
      throw ConfigError("cost model parameters must all be strictly positive");
    }
  }
};

struct Config {
  DpuGeometry geometry;
  std::uint32_t block_size = kDefaultBlockSize;
  std::uint32_t dpus = kDefaultDpuCount;
  std::uint64_t seed = 0;
  FingerprintAlgo fp;
  CostModelParams cost;

  void validate() const {
    geometry.validate(block_size);
    cost.validate();
    if (dpus == 0) throw ConfigError("dpus must be >= 1");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Unsigned integer with an optional K/M/G (binary) suffix: "64M" = 64 MiB.
inline std::uint64_t parse_size(std::string_view text) {
  text = detail::trim(text);
  std::uint64_t mult = 1;
  if (!text.empty()) {
    switch (text.back()) {
      case 'K': case 'k': mult = KiB; break;
      case 'M': case 'm': mult = MiB; break;
      case 'G': case 'g': mult = GiB; break;
      default: break;
    }
    if (mult != 1) text.remove_suffix(1);
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
    throw ConfigError("bad size value '" + std::string(text) + "'");
  }
  return v * mult;
}

inline double parse_double(std::string_view text) {
  text = detail::trim(text);
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + std::string(text) + "'");
  }
}

// Applies one `key = value` setting.
inline void apply_setting(Config& cfg, std::string_view key, std::string_view value) {
  key = detail::trim(key);
  value = detail::trim(value);
  if (key == "mram_bytes") cfg.geometry.mram_bytes = parse_size(value);
  else if (key == "wram_bytes") cfg.geometry.wram_bytes = parse_size(value);
  else if (key == "iram_bytes") cfg.geometry.iram_bytes = parse_size(value);
  else if (key == "tasklets") cfg.geometry.tasklets = static_cast<std::uint32_t>(parse_size(value));
  else if (key == "brb_fraction") cfg.geometry.brb_fraction = parse_double(value);
  else if (key == "dpu_bandwidth_bytes_per_s") cfg.geometry.per_dpu_bandwidth_bytes_per_s = parse_double(value);
  else if (key == "block_size") cfg.block_size = static_cast<std::uint32_t>(parse_size(value));
  else if (key == "dpus") cfg.dpus = static_cast<std::uint32_t>(parse_size(value));
  else if (key == "seed") cfg.seed = parse_size(value);
  else if (key == "fp_algo") cfg.fp.kind = parse_fingerprint_kind(value);
  else if (key == "fp_seed") cfg.fp.seed = parse_size(value);
  else if (key == "host_bandwidth_bytes_per_s") cfg.cost.host_dpu_bandwidth_bytes_per_s = parse_double(value);
  else if (key == "transfer_latency_s") cfg.cost.per_transfer_latency_s = parse_double(value);
  else if (key == "dpu_clock_hz") cfg.cost.dpu_clock_hz = parse_double(value);
  else if (key == "cpu_threads_baseline") cfg.cost.cpu_threads_baseline = static_cast<std::uint32_t>(parse_size(value));
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

// Line-oriented `key = value` format; '#' starts a comment.
inline Config parse_config(std::istream& in, Config cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = detail::trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(cfg, v.substr(0, eq), v.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

inline Config load_config(const std::string& path, Config cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, cfg);
}

}  // namespace pimcache
