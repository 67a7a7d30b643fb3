#pragma once

// Experiment configuration shared by the profile, verification and CLI
// layers, with its JSON form:
//
//   {"model": {"n_sites": 8, "p": 0.3, "q": 0.3, "accelerate": true},
//    "mode": "exact", "times": [..] | "offsets": [..], "replicas": 1000,
//    "seed": 1, "epsilon": 0.25, "output": "-", "format": "csv"}
//
// "offsets" are added to t*(N, canonical density); "times" are absolute.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "../core.hpp"
#include "../errors.hpp"
#include "../exact.hpp"
#include "../spectral.hpp"

namespace ssep::harness {

enum class Mode { Exact, Simulate };
enum class Format { Csv, Json };

inline Mode parse_mode(const std::string& s) {
  if (s == "exact") return Mode::Exact;
  if (s == "simulate") return Mode::Simulate;
  throw ValidationError(fmt::format("unknown mode '{}'", s));
}

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ValidationError(fmt::format("unknown format '{}'", s));
}

inline const char* to_string(Mode m) { return m == Mode::Exact ? "exact" : "simulate"; }
inline const char* to_string(Format f) { return f == Format::Csv ? "csv" : "json"; }

/// Default grid: t* + α for α = -3, ..., 3.
inline std::vector<double> default_offsets() { return {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0}; }

struct ExperimentConfig {
  ModelParams model{};
  Mode mode = Mode::Exact;
  /// Absolute times; when empty the grid is t* + offsets.
  std::vector<double> times;
  std::vector<double> offsets = default_offsets();
  int replicas = 1000;
  std::uint64_t seed = 0;
  double epsilon = 0.25;
  std::string output = "-";
  Format format = Format::Csv;

  void validate() const {
    model.validate();
    if (mode == Mode::Simulate && replicas < 1) throw ValidationError("simulate mode needs replicas >= 1");
    if (mode == Mode::Exact && model.n_sites > exact::kMaxSites)
      throw CapacityError(fmt::format("exact mode supports N <= {}, got {}", exact::kMaxSites, model.n_sites));
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
    for (double t : times)
      if (!(t >= 0.0)) throw ValidationError("times must be nonnegative");
    if (times.empty() && offsets.empty()) throw ValidationError("empty time grid");
  }

  /// t* on the configured clock.
  [[nodiscard]] double t_star() const {
    const double t = spectral::t_star(model.n_sites, spectral::canonical_density(model.p, model.q));
    return model.accelerate ? t : t * model.n_sites * model.n_sites;
  }

  /// Sorted, deduplicated grid; offset points below zero are clamped to 0.
  [[nodiscard]] std::vector<double> resolved_times() const {
    std::vector<double> out = times;
    if (out.empty()) {
      const double centre = t_star();
      const double unit = model.accelerate ? 1.0 : static_cast<double>(model.n_sites) * model.n_sites;
      for (double a : offsets) out.push_back(std::max(0.0, centre + a * unit));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

inline nlohmann::ordered_json to_json(const ModelParams& m) {
  return {{"n_sites", m.n_sites}, {"p", m.p}, {"q", m.q}, {"accelerate", m.accelerate}};
}

/// Output path omitted so that reports do not depend on where they are written.
inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j{{"model", to_json(c.model)}, {"mode", to_string(c.mode)}};
  if (!c.times.empty())
    j["times"] = c.times;
  else
    j["offsets"] = c.offsets;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["epsilon"] = c.epsilon;
  j["format"] = to_string(c.format);
  return j;
}

/// Overlays the keys present in j onto cfg.
inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
    static const std::vector<std::string> known{"model", "mode",    "times",  "offsets",
                                                "replicas", "seed", "epsilon", "output", "format"};
    for (const auto& [key, _] : j.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ValidationError(fmt::format("unknown configuration key '{}'", key));
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.contains("n_sites")) cfg.model.n_sites = m.at("n_sites").get<int>();
      if (m.contains("p")) cfg.model.p = m.at("p").get<double>();
      if (m.contains("q")) cfg.model.q = m.at("q").get<double>();
      if (m.contains("accelerate")) cfg.model.accelerate = m.at("accelerate").get<bool>();
    }
    if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("times")) cfg.times = j.at("times").get<std::vector<double>>();
    if (j.contains("offsets")) cfg.offsets = j.at("offsets").get<std::vector<double>>();
    if (j.contains("replicas")) cfg.replicas = j.at("replicas").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("format")) cfg.format = parse_format(j.at("format").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed configuration: ") + e.what());
  }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
}

}  // namespace ssep::harness
