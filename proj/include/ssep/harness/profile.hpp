#pragma once

// Cutoff profiles: the exact worst-case distance d(t) on a time grid, and
// Wilson's lower bound on the distance from 𝟙 estimated from replicas,
// using the weight S(η) = Σ_i η(i) as distinguishing statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "../core.hpp"
#include "../exact.hpp"
#include "../interchange.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "../stats.hpp"
#include "config.hpp"
#include "report.hpp"

namespace ssep::harness {

struct ProfilePoint {
  double t = 0.0;
  std::optional<double> d_exact;
  std::optional<double> wilson_lower;
  double mean_S = 0.0;
  double var_S = 0.0;
  /// One standard error of wilson_lower (zero in exact mode); checks use 3×.
  double ci_halfwidth = 0.0;
  bool degenerate = false;
  /// Standard error of var_S - mean_S.
  double var_gap_se = 0.0;
};

struct WilsonEstimate {
  double value = 0.0;
  bool degenerate = false;
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
  double var_gap_se = 0.0;
};

/// E[S_∞] = N(p+q)/2, which also bounds Var(S_∞) by negative dependence.
inline double stationary_mean_weight(const ModelParams& params) {
  return params.n_sites * (params.p + params.q) / 2.0;
}

/// Plug-in 1 - 8 max{V̂ar(S_t), E[S_∞]} / (Ê[S_t] - E[S_∞])², clamped to
/// [0, 1], with a delta-method standard error. A gap below three standard
/// errors of the mean is flagged degenerate and returns 0.
inline WilsonEstimate wilson_from_moments(const Moments& m, const ModelParams& params) {
  WilsonEstimate w;
  const double n = static_cast<double>(m.count());
  w.mean = m.mean();
  w.variance = m.variance();
  const double mu2 = m.central2();
  const double mu3 = m.central3();
  const double mu4 = m.central4();
  const double var_mean = mu2 / n;
  const double var_var = std::max(mu4 - mu2 * mu2, 0.0) / n;
  const double cov = mu3 / n;
  w.var_gap_se = std::sqrt(std::max(var_var - 2.0 * cov + var_mean, 0.0));

  const double e_inf = stationary_mean_weight(params);
  const double gap = w.mean - e_inf;
  if (std::abs(gap) < 3.0 * std::sqrt(var_mean) || gap == 0.0) {
    w.degenerate = true;
    return w;
  }
  const bool sample_var_dominates = w.variance > e_inf;
  const double v = sample_var_dominates ? w.variance : e_inf;
  const double raw = 1.0 - 8.0 * v / (gap * gap);
  w.value = std::clamp(raw, 0.0, 1.0);
  const double d_mean = 16.0 * v / (gap * gap * gap);
  const double d_var = sample_var_dominates ? -8.0 / (gap * gap) : 0.0;
  const double var_w = d_mean * d_mean * var_mean + d_var * d_var * var_var + 2.0 * d_mean * d_var * cov;
  w.standard_error = std::sqrt(std::max(var_w, 0.0));
  return w;
}

/// S(η_t) for each replica and time, all started from 𝟙.
inline std::vector<std::vector<double>> sample_weights(const ModelParams& params, const std::vector<double>& times,
                                                       int replicas, std::uint64_t seed) {
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(replicas));
  const auto start = Configuration::ones(params.n_sites);
  parallel_for(weights.size(), [&](std::size_t r) {
    const auto path = sim::simulate_ssep_path(start, params, times, rng::derive_seed(seed, r));
    auto& out = weights[r];
    out.reserve(path.size());
    for (const auto& cfg : path) out.push_back(static_cast<double>(weight(cfg)));
  });
  return weights;
}

inline WilsonEstimate wilson_lower_bound(const ModelParams& params, double t, int replicas, std::uint64_t seed) {
  params.validate();
  if (replicas < 100) throw ValidationError("wilson_lower_bound needs at least 100 replicas");
  if (t < 0.0) throw DomainError("time must be nonnegative");
  const auto w = sample_weights(params, {t}, replicas, seed);
  Moments m;
  for (const auto& row : w) m.add(row.front());
  return wilson_from_moments(m, params);
}

/// Simulate-mode runs also report d_exact up to this size.
inline constexpr int kExactReferenceMaxSites = 8;

/// d(t) along a sorted grid, evolving all 2^N starts incrementally.
inline std::vector<double> exact_distance_curve(const exact::GeneratorMatrix& gen, const exact::DistributionVector& pi,
                                                const std::vector<double>& sorted_times, double tol = 1e-12) {
  std::vector<double> out;
  out.reserve(sorted_times.size());
  auto block = exact::detail::DistributionBlock::identity(gen.dim());
  double now = 0.0;
  for (double t : sorted_times) {
    exact::detail::evolve_block(gen, block, t - now, tol);
    now = t;
    out.push_back(exact::detail::max_row_distance(block, pi).first);
  }
  return out;
}

inline std::vector<ProfilePoint> cutoff_profile(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& params = cfg.model;
  const auto times = cfg.resolved_times();
  std::vector<ProfilePoint> points(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) points[k].t = times[k];

  const bool want_exact = cfg.mode == Mode::Exact || params.n_sites <= kExactReferenceMaxSites;
  if (want_exact) {
    const auto gen = exact::build_generator(params);
    const auto pi = exact::stationary(gen);
    const auto d = exact_distance_curve(gen, pi, times);
    for (std::size_t k = 0; k < times.size(); ++k) points[k].d_exact = d[k];
    if (cfg.mode == Mode::Exact) {
      auto law = exact::DistributionVector::point_mass(Configuration::ones(params.n_sites));
      double now = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        law = exact::evolve(gen, law, times[k] - now, 1e-13);
        now = times[k];
        const auto m = exact::weight_moments(law);
        points[k].mean_S = m.mean;
        points[k].var_S = m.variance;
      }
    }
  }
  if (cfg.mode == Mode::Simulate) {
    const auto w = sample_weights(params, times, cfg.replicas, cfg.seed);
    for (std::size_t k = 0; k < times.size(); ++k) {
      Moments m;
      for (const auto& row : w) m.add(row[k]);
      const auto est = wilson_from_moments(m, params);
      auto& pt = points[k];
      pt.mean_S = est.mean;
      pt.var_S = est.variance;
      pt.wilson_lower = est.value;
      pt.degenerate = est.degenerate;
      pt.ci_halfwidth = est.standard_error;
      pt.var_gap_se = est.var_gap_se;
    }
  }
  return points;
}

inline Table profile_table(const std::vector<ProfilePoint>& points, const ExperimentConfig& cfg) {
  Table table({"t", "d_exact", "wilson_lower", "mean_S", "var_S", "ci_halfwidth", "degenerate"});
  for (const auto& p : points)
    table.add_row({p.t, cell(p.d_exact), cell(p.wilson_lower), p.mean_S, p.var_S, p.ci_halfwidth, p.degenerate});
  auto& meta = table.metadata();
  meta = base_metadata("profile", cfg.seed);
  meta["config"] = to_json(cfg);
  meta["t_star"] = cfg.t_star();
  meta["stationary_mean_weight"] = stationary_mean_weight(cfg.model);
  return table;
}

}  // namespace ssep::harness
