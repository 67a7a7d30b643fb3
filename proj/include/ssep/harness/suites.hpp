#pragma once

// Verification suites. Each check yields a pass/fail verdict with the
// statistic it was decided on; calibrated constants are reported with the
// suite, never hardcoded.
//
// nd:    exact negative dependence of evolved laws from every deterministic
//        start, and empirical negative dependence of the red region given a
//        fixed green skeleton.
// lemma: decay of the red region, growth of the crossing count, the
//        conditional marginal bound on the red region and the crossing
//        inequality between killed walks.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "../core.hpp"
#include "../exact.hpp"
#include "../interchange.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "../skeleton.hpp"
#include "../spectral.hpp"
#include "../stats.hpp"
#include "report.hpp"

namespace ssep::harness {

/// Number of standard errors allowed in every Monte-Carlo verdict.
inline constexpr double kSigmas = 3.0;
/// Exact-violation tolerance.
inline constexpr double kExactNdTolerance = 1e-10;
/// Skeletons tested by the conditional ND check.
inline constexpr int kConditionalNdSkeletons = 8;
/// Exact sub-checks enumerate all starts and subsets up to this size.
inline constexpr int kExactNdMaxSites = 5;

struct CheckResult {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  /// "<=", "<", ">=" or ">": the check passes when `statistic relation threshold`.
  std::string relation = "<=";
  double threshold = 0.0;
  std::string detail;
};

inline CheckResult make_check(std::string name, double statistic, std::string relation, double threshold,
                              std::string detail = {}) {
  bool ok = false;
  if (relation == "<=") ok = statistic <= threshold;
  else if (relation == "<") ok = statistic < threshold;
  else if (relation == ">=") ok = statistic >= threshold;
  else if (relation == ">") ok = statistic > threshold;
  else throw DomainError(fmt::format("unknown relation '{}'", relation));
  return {std::move(name), ok, statistic, std::move(relation), threshold, std::move(detail)};
}

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  nlohmann::ordered_json constants = nlohmann::ordered_json::object();

  [[nodiscard]] bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }

  [[nodiscard]] Table table(std::uint64_t seed) const {
    Table t({"check", "passed", "statistic", "relation", "threshold", "detail"});
    for (const auto& c : checks) t.add_row({c.name, c.passed, c.statistic, c.relation, c.threshold, c.detail});
    t.metadata() = base_metadata("verify " + suite, seed);
    t.metadata()["constants"] = constants;
    t.metadata()["passed"] = passed();
    return t;
  }
};

// Sub-seeds of the master seed, one per check.
enum class CheckStream : std::uint64_t {
  ConditionalNdSkeleton = 1,
  ConditionalNdReplay,
  DecayReplicas,
  CrossingsCalibration,
  CrossingsValidation,
  MarginalSkeleton,
  MarginalReplay,
  CrossingIneqSkeleton,
  CrossingIneqReplay,
};

inline std::uint64_t check_seed(std::uint64_t seed, CheckStream s) {
  return rng::derive_seed(seed, 0x5EED0000ULL + static_cast<std::uint64_t>(s));
}

// ---------------------------------------------------------------- exact ND

struct ExactNdScan {
  double max_violation = -std::numeric_limits<double>::infinity();
  /// max over starts and times of Var(S) - E(S).
  double max_variance_excess = -std::numeric_limits<double>::infinity();
  std::size_t worst_start = 0;
  double worst_time = 0.0;
  std::size_t laws_checked = 0;
};

/// Every deterministic start, every grid time: ND of the law of η_t.
inline ExactNdScan exact_nd_scan(const ModelParams& params, std::vector<double> times, double tol = 1e-13) {
  if (params.n_sites > kExactNdMaxSites)
    throw CapacityError(fmt::format("exact ND scan supports N <= {}, got {}", kExactNdMaxSites, params.n_sites));
  std::sort(times.begin(), times.end());
  const auto gen = exact::build_generator(params);
  const std::size_t dim = gen.dim();
  auto block = exact::detail::DistributionBlock::identity(dim);
  ExactNdScan scan;
  double now = 0.0;
  std::vector<double> row(dim);
  for (double t : times) {
    exact::detail::evolve_block(gen, block, t - now, tol);
    now = t;
    for (std::size_t start = 0; start < dim; ++start) {
      double total = 0.0;
      for (std::size_t s = 0; s < dim; ++s) total += (row[s] = std::max(block.at(s, start), 0.0));
      for (double& x : row) x /= total;
      const exact::DistributionVector law(row);
      const auto nd = exact::check_nd(law);
      const auto m = exact::weight_moments(law);
      if (nd.max_violation > scan.max_violation) {
        scan.max_violation = nd.max_violation;
        scan.worst_start = start;
        scan.worst_time = t;
      }
      scan.max_variance_excess = std::max(scan.max_variance_excess, m.variance - m.mean);
      ++scan.laws_checked;
    }
  }
  return scan;
}

// ------------------------------------------------------- conditional laws

/// Empirical law of a bit vector given as a histogram over masks.
struct MaskHistogram {
  int n = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  explicit MaskHistogram(int n_bits) : n(n_bits), counts(std::size_t{1} << n_bits, 0) {}
  void add(std::size_t mask) {
    ++counts[mask];
    ++total;
  }

  [[nodiscard]] double marginal(int bit) const {
    std::uint64_t c = 0;
    for (std::size_t m = 0; m < counts.size(); ++m)
      if ((m >> bit) & 1u) c += counts[m];
    return static_cast<double>(c) / static_cast<double>(total);
  }
};

struct NdViolation {
  /// P̂(A ⊆ R) - ∏ P̂(i ∈ R), maximised over |A| ≥ 2 by (estimate - 3 SE).
  /// Subsets with zero standard error are only reported when no other
  /// subset has a non-degenerate estimate.
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t subset = 0;
  /// Subsets with a positive standard error, and their largest z-score.
  int informative = 0;
  double max_z = -std::numeric_limits<double>::infinity();
  [[nodiscard]] double excess() const { return estimate - kSigmas * standard_error; }
};

/// Delta-method test of negative dependence on every subset with at least
/// two elements. The influence function of P̂(A) - ∏ m̂_i at x is
/// ∏_{i∈A} x_i - Σ_{i∈A} (∏_{j∈A∖i} m_j) x_i.
inline NdViolation empirical_nd(const MaskHistogram& h) {
  std::vector<double> m(static_cast<std::size_t>(h.n));
  for (int i = 0; i < h.n; ++i) m[i] = h.marginal(i);
  const double total = static_cast<double>(h.total);
  NdViolation worst{-std::numeric_limits<double>::infinity(), 0.0, 0};
  NdViolation degenerate = worst;
  for (std::size_t a = 0; a < h.counts.size(); ++a) {
    if (std::popcount(a) < 2) continue;
    double joint = 0.0;
    double product = 1.0;
    for (int i = 0; i < h.n; ++i)
      if ((a >> i) & 1u) product *= m[i];
    for (std::size_t x = 0; x < h.counts.size(); ++x)
      if ((x & a) == a) joint += static_cast<double>(h.counts[x]);
    joint /= total;
    // Var of the influence function under the empirical law.
    CompensatedSum s1;
    CompensatedSum s2;
    for (std::size_t x = 0; x < h.counts.size(); ++x) {
      if (!h.counts[x]) continue;
      double psi = (x & a) == a ? 1.0 : 0.0;
      for (int i = 0; i < h.n; ++i) {
        if (!((a >> i) & 1u) || !((x >> i) & 1u)) continue;
        double others = 1.0;
        for (int j = 0; j < h.n; ++j)
          if (j != i && ((a >> j) & 1u)) others *= m[j];
        psi -= others;
      }
      const double w = static_cast<double>(h.counts[x]) / total;
      s1.add(w * psi);
      s2.add(w * psi * psi);
    }
    const double var = std::max(s2.value() - s1.value() * s1.value(), 0.0);
    const NdViolation v{joint - product, std::sqrt(var / total), a};
    if (v.standard_error > 0.0) {
      ++worst.informative;
      worst.max_z = std::max(worst.max_z, v.estimate / v.standard_error);
      if (v.excess() > worst.excess()) {
        worst.estimate = v.estimate;
        worst.standard_error = v.standard_error;
        worst.subset = v.subset;
      }
    } else if (v.excess() > degenerate.excess()) {
      degenerate = v;
    }
  }
  if (worst.informative == 0 || degenerate.excess() > worst.excess()) {
    worst.estimate = degenerate.estimate;
    worst.standard_error = degenerate.standard_error;
    worst.subset = degenerate.subset;
  }
  return worst;
}

/// Mask of the red region (bit j - 1 for site j).
inline std::size_t red_mask(const sim::InterchangeState& x) {
  std::size_t mask = 0;
  for (int site = 1; site <= x.n_sites(); ++site)
    if (x.color_at(site) == sim::Color::Red) mask |= std::size_t{1} << (site - 1);
  return mask;
}

/// Law of R(X_t) given a fixed skeleton, from `resamples` replays.
inline MaskHistogram conditional_red_law(const sim::InterchangeState& x0, const sim::GreenSkeleton& skel,
                                         int resamples, std::uint64_t seed) {
  std::vector<std::size_t> masks(static_cast<std::size_t>(resamples));
  parallel_for(masks.size(), [&](std::size_t r) {
    masks[r] = red_mask(sim::resample_given_skeleton(x0, skel, rng::derive_seed(seed, r)).final_state);
  });
  MaskHistogram h(skel.n_sites());
  for (auto m : masks) h.add(m);
  return h;
}

enum class NdMode { Exact, Conditional, Both };

inline NdMode parse_nd_mode(const std::string& s) {
  if (s == "exact") return NdMode::Exact;
  if (s == "conditional") return NdMode::Conditional;
  if (s == "both") return NdMode::Both;
  throw ValidationError(fmt::format("unknown ND mode '{}'", s));
}

/// Default grid: ten points spread over [0, 2 t*].
inline std::vector<double> default_nd_times(const ModelParams& params) {
  const double clock = params.accelerate ? 1.0 : static_cast<double>(params.n_sites) * params.n_sites;
  const double ts = std::max(spectral::t_star(params.n_sites, spectral::canonical_density(params.p, params.q)), 0.05);
  std::vector<double> out;
  for (int k = 1; k <= 10; ++k) out.push_back(clock * ts * k / 5.0);
  return out;
}

/// The conditional check replays skeletons on [0, t*] from the all-red
/// identity, where the red region is small but not yet empty. Without a
/// site-1 event there is no blue and R is the non-green set, so only
/// skeletons with at least one such event are used.
inline SuiteReport verify_nd_suite(const ModelParams& params, std::vector<double> t_grid, NdMode mode, int budget,
                                   std::uint64_t seed) {
  params.validate();
  if (t_grid.empty()) t_grid = default_nd_times(params);
  SuiteReport report{"nd", {}, nlohmann::ordered_json::object()};
  if (mode != NdMode::Conditional) {
    const auto scan = exact_nd_scan(params, t_grid);
    report.checks.push_back(make_check(
        "exact_nd", scan.max_violation, "<=", kExactNdTolerance,
        fmt::format("{} laws; worst start {} at t={}", scan.laws_checked,
                    Configuration::from_index(scan.worst_start, params.n_sites).to_string(), scan.worst_time)));
    report.checks.push_back(make_check("exact_variance_le_mean", scan.max_variance_excess, "<=", kExactNdTolerance,
                                       "max Var(S_t) - E(S_t)"));
  }
  if (mode != NdMode::Exact) {
    if (budget < 1) throw ValidationError("conditional ND needs a positive resampling budget");
    if (params.n_sites > exact::kMaxSites)
      throw CapacityError(fmt::format("conditional ND supports N <= {}", exact::kMaxSites));
    const double clock = params.accelerate ? 1.0 : static_cast<double>(params.n_sites) * params.n_sites;
    const double horizon =
        clock * std::max(spectral::t_star(params.n_sites, spectral::canonical_density(params.p, params.q)), 0.05);
    std::optional<NdViolation> worst;
    int worst_skeleton = 0;
    int informative = 0;
    double max_z = -std::numeric_limits<double>::infinity();
    int used = 0;
    for (int attempt = 0; used < kConditionalNdSkeletons; ++attempt) {
      if (attempt == 1000) throw DomainError("too few skeletons with a site-1 event");
      const auto skel = sim::sample_green_skeleton(
          params, horizon, rng::derive_seed(check_seed(seed, CheckStream::ConditionalNdSkeleton), attempt));
      if (skel.events_site1().empty()) continue;
      const auto law = conditional_red_law(sim::InterchangeState::identity(params.n_sites), skel, budget,
                                           rng::derive_seed(check_seed(seed, CheckStream::ConditionalNdReplay), used));
      const auto v = empirical_nd(law);
      informative += v.informative;
      max_z = std::max(max_z, v.max_z);
      const bool v_live = v.standard_error > 0.0;
      const bool w_live = worst && worst->standard_error > 0.0;
      if (!worst || (v_live && !w_live) || (v_live == w_live && v.excess() > worst->excess())) {
        worst = v;
        worst_skeleton = used;
      }
      ++used;
    }
    report.checks.push_back(make_check(
        "conditional_nd", worst->estimate, "<=", kSigmas * worst->standard_error,
        fmt::format("subset {} on skeleton {} of {} at t={}, {} resamples each, se={}, {} informative subsets, "
                    "max z={}",
                    Configuration::from_index(worst->subset, params.n_sites).to_string(), worst_skeleton + 1, used,
                    horizon, budget, worst->standard_error, informative, max_z)));
    report.constants["conditional_horizon"] = horizon;
    report.constants["conditional_skeletons"] = used;
    report.constants["conditional_informative_subsets"] = informative;
    report.constants["conditional_max_z"] = max_z;
  }
  return report;
}

// ------------------------------------------------------------ lemma suite

struct LemmaBudget {
  int replicas = 10000;
  int resamples = 100000;
  double epsilon = 0.25;
  /// Segment length for the fixed-skeleton checks.
  int small_n = 4;
  /// Window of the decay fit, in accelerated time.
  double fit_from = 0.2;
  double fit_to = 0.6;
  /// Crossing-inequality indices k, l range over 1..max_index.
  int max_index = 16;
  /// Skeletons drawn for the conditional marginal check; the one reaching
  /// 2N crossings first is kept.
  int marginal_candidates = 2000;
};

/// |R| on the uniform sample grid of a replay of length `horizon`.
inline std::vector<int> red_on_grid(const sim::SimResult& res, double horizon) {
  std::vector<int> out(static_cast<std::size_t>(sim::kUniformSamplePoints));
  std::size_t idx = 0;
  int current = res.samples.empty() ? 0 : res.samples.front().red;
  for (int k = 0; k < sim::kUniformSamplePoints; ++k) {
    const double g = horizon * k / (sim::kUniformSamplePoints - 1);
    while (idx < res.samples.size() && res.samples[idx].time <= g) current = res.samples[idx++].red;
    out[k] = current;
  }
  return out;
}

struct DecayFit {
  double c_hat = 0.0;  // decay exponent per two time units
  double slope = 0.0;
  double slope_se = 0.0;
  double reference = 0.0;  // 2 λ₁
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> se;
};

/// Weighted least squares of log Ê|R(X_t)| on t over the fit window.
inline DecayFit fit_red_decay(const ModelParams& params, int replicas, double fit_from, double fit_to,
                              std::uint64_t seed) {
  const int n = params.n_sites;
  const double horizon = fit_to;
  std::vector<std::vector<int>> paths(static_cast<std::size_t>(replicas));
  parallel_for(paths.size(), [&](std::size_t r) {
    const auto res = sim::simulate_interchange(sim::InterchangeState::identity(n), params, horizon,
                                               rng::derive_seed(seed, r));
    paths[r] = red_on_grid(res, horizon);
  });
  DecayFit fit;
  fit.reference = 2.0 * spectral::eigenvalue(n, 1);
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (int k = 0; k < sim::kUniformSamplePoints; ++k) {
    const double g = horizon * k / (sim::kUniformSamplePoints - 1);
    Moments m;
    for (const auto& p : paths) m.add(p[k]);
    fit.grid.push_back(g);
    fit.mean.push_back(m.mean());
    fit.se.push_back(m.standard_error());
    if (g < fit_from - 1e-12 || m.mean() <= 0.0 || m.standard_error() <= 0.0) continue;
    const double y = std::log(m.mean());
    const double w = (m.mean() * m.mean()) / (m.standard_error() * m.standard_error());
    sw += w;
    swx += w * g;
    swy += w * y;
    swxx += w * g * g;
    swxy += w * g * y;
  }
  const double det = sw * swxx - swx * swx;
  if (!(det > 0.0)) throw DomainError("decay fit window holds fewer than two usable points");
  fit.slope = (sw * swxy - swx * swy) / det;
  fit.slope_se = std::sqrt(sw / det);
  fit.c_hat = -2.0 * fit.slope;
  return fit;
}

struct CrossingCalibration {
  double t2 = 0.0;
  double constant = 0.0;  // t₂ / (1 + log(1/ε))
  double min_fraction = 0.0;
  std::string worst_start;
};

/// L is a function of the skeleton, so only skeletons are sampled. t₂ is the
/// (1 - ε/8) quantile of the first time L reaches 2N, worst case over the
/// all-red and all-green starts; a fresh sample then measures P(L_{t₂} ≥ 2N).
inline CrossingCalibration calibrate_crossings(const ModelParams& params, int replicas, double epsilon,
                                               std::uint64_t calibration_seed, std::uint64_t validation_seed) {
  const int n = params.n_sites;
  const int target = 2 * n;
  const std::vector<std::pair<std::string, Configuration>> starts{{"all-red", Configuration::zeros(n)},
                                                                   {"all-green", Configuration::ones(n)}};
  const double clock = params.accelerate ? 1.0 : static_cast<double>(n) * n;
  CrossingCalibration cal;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    double horizon = 4.0 * clock;
    for (;;) {
      std::vector<double> first(static_cast<std::size_t>(replicas));
      parallel_for(first.size(), [&](std::size_t r) {
        const auto skel = sim::sample_green_skeleton(params, horizon,
                                                     rng::derive_seed(rng::derive_seed(calibration_seed, s), r),
                                                     starts[s].second);
        first[r] = skel.first_time_crossings_reach(target);
      });
      std::sort(first.begin(), first.end());
      const auto rank = static_cast<std::size_t>(std::ceil((1.0 - epsilon / 8.0) * replicas)) - 1;
      const double q = first[std::min(rank, first.size() - 1)];
      if (std::isfinite(q)) {
        cal.t2 = std::max(cal.t2, q);
        break;
      }
      horizon *= 2.0;
    }
  }
  cal.min_fraction = 1.0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(replicas));
    parallel_for(hit.size(), [&](std::size_t r) {
      const auto skel = sim::sample_green_skeleton(params, cal.t2,
                                                   rng::derive_seed(rng::derive_seed(validation_seed, s), r),
                                                   starts[s].second);
      hit[r] = skel.crossings() >= target ? 1 : 0;
    });
    double count = 0;
    for (auto h : hit) count += h;
    const double frac = count / replicas;
    if (s == 0 || frac < cal.min_fraction) {
      cal.min_fraction = frac;
      cal.worst_start = starts[s].first;
    }
  }
  cal.constant = cal.t2 / (1.0 + std::log(1.0 / epsilon));
  return cal;
}

/// Samples `candidates` skeletons on [0, horizon] and keeps the one where L
/// reaches `target` earliest, restricted to that hitting time.
inline sim::GreenSkeleton skeleton_with_crossings(const ModelParams& params, int target, double horizon,
                                                  std::uint64_t seed, int candidates = 1) {
  if (candidates < 1) throw ValidationError("need at least one candidate skeleton");
  std::vector<double> hit(static_cast<std::size_t>(candidates));
  parallel_for(hit.size(), [&](std::size_t k) {
    hit[k] = sim::sample_green_skeleton(params, horizon, rng::derive_seed(seed, k)).first_time_crossings_reach(target);
  });
  const auto best = static_cast<std::size_t>(std::min_element(hit.begin(), hit.end()) - hit.begin());
  if (!std::isfinite(hit[best])) throw DomainError("no skeleton reached the requested number of crossings");
  return sim::restrict_skeleton(sim::sample_green_skeleton(params, horizon, rng::derive_seed(seed, best)), hit[best]);
}

struct MarginalCheck {
  double max_excess = 0.0;  // max_j P̂(j ∈ R) - |R(x)|/N
  double se_at_max = 0.0;
  double max_z = -std::numeric_limits<double>::infinity();
  int worst_site = 0;
  double max_marginal = 0.0;
  double horizon = 0.0;
  int crossings = 0;
};

inline MarginalCheck conditional_marginal_check(const ModelParams& params, const sim::InterchangeState& x0,
                                                int resamples, std::uint64_t skeleton_seed,
                                                std::uint64_t replay_seed, int candidates = 1) {
  const int n = params.n_sites;
  const double clock = params.accelerate ? 1.0 : static_cast<double>(n) * n;
  const auto skel = skeleton_with_crossings(params, 2 * n, 8.0 * clock, skeleton_seed, candidates);
  const auto law = conditional_red_law(x0, skel, resamples, replay_seed);
  const double bound = static_cast<double>(x0.count(sim::Color::Red)) / n;
  MarginalCheck out;
  out.horizon = skel.horizon();
  out.crossings = skel.crossings();
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (int j = 1; j <= n; ++j) {
    const double p = law.marginal(j - 1);
    const double se = proportion_se(p, law.total);
    const double excess = p - bound;
    out.max_marginal = std::max(out.max_marginal, p);
    if (excess - kSigmas * se > out.max_excess - kSigmas * out.se_at_max || j == 1) {
      out.max_excess = excess;
      out.se_at_max = se;
      out.worst_site = j;
    }
    if (se > 0.0) out.max_z = std::max(out.max_z, excess / se);
  }
  return out;
}

// Killed walks of the crossing inequality. Outcome > 0: surviving walk at
// that site; outcome < 0: walk killed at the (-outcome)-th kill of the
// skeleton; 0: not defined (walk never born).
class KilledWalkObserver {
 public:
  KilledWalkObserver(int n, int max_births) : walk_of_(static_cast<std::size_t>(n), 0), n_(n) {
    for (int i = 1; i <= n; ++i) walk_of_[i - 1] = i;  // σ̃(i) has id i
    birth_outcome_.assign(static_cast<std::size_t>(max_births), 0);
    initial_outcome_.assign(static_cast<std::size_t>(n), 0);
  }

  void on_recolor(double, int site, int individual, sim::Color from, sim::Color to) {
    if (to == sim::Color::Green && site == n_ && from != sim::Color::Green) {
      ++kills_;
      int& id = walk_of_[individual - 1];
      if (id > 0) initial_outcome_[id - 1] = -kills_;
      if (id < 0 && static_cast<std::size_t>(-id) <= birth_outcome_.size()) birth_outcome_[-id - 1] = -kills_;
      id = 0;
    } else if (from == sim::Color::Green && to == sim::Color::Blue && site == 1) {
      ++births_;
      walk_of_[individual - 1] = -births_;
      if (static_cast<std::size_t>(births_) <= birth_outcome_.size()) birth_outcome_[births_ - 1] = kAlive;
    }
  }

  /// Fills surviving walks with their final sites.
  void finish(const sim::InterchangeState& x) {
    for (int i = 1; i <= n_; ++i) {
      const int id = walk_of_[i - 1];
      if (id > 0) initial_outcome_[id - 1] = x.site_of(i);
      if (id < 0 && static_cast<std::size_t>(-id) <= birth_outcome_.size()) birth_outcome_[-id - 1] = x.site_of(i);
    }
  }

  [[nodiscard]] int initial_outcome(int i) const { return initial_outcome_[i - 1]; }
  [[nodiscard]] int birth_outcome(int k) const { return birth_outcome_[k - 1]; }

 private:
  static constexpr int kAlive = 1 << 20;
  std::vector<int> walk_of_;  // individual → i (σ̃), -k (A_k) or 0 (green)
  std::vector<int> initial_outcome_;
  std::vector<int> birth_outcome_;
  int n_;
  int kills_ = 0;
  int births_ = 0;
};

struct CrossingInequalityCheck {
  /// max over tested (i, j, k, l) of [P̂(E1) - P̂(E2)] - 3 SE.
  double max_excess = -std::numeric_limits<double>::infinity();
  double max_z = -std::numeric_limits<double>::infinity();
  std::string worst;
  int tested = 0;
  int births = 0;
  int kills = 0;
  double horizon = 0.0;
};

/// E1 = {σ̃(i,t) = j, A_k(t) = b̃_l}, E2 = {σ̃(i,t) = b̃_l, A_k(t) = j}; the
/// events are disjoint so Var(1_E1 - 1_E2) = p₁ + p₂ - (p₁ - p₂)².
inline CrossingInequalityCheck crossing_inequality_check(const ModelParams& params, int resamples, int max_index,
                                                         std::uint64_t skeleton_seed, std::uint64_t replay_seed) {
  const int n = params.n_sites;
  const double clock = params.accelerate ? 1.0 : static_cast<double>(n) * n;
  // First skeleton with two births and two kills after the first birth.
  sim::GreenSkeleton skel = sim::sample_green_skeleton(params, 0.0, 0);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) throw DomainError("no skeleton with births followed by kills");
    skel = sim::sample_green_skeleton(params, 0.5 * clock, rng::derive_seed(skeleton_seed, attempt));
    const auto& b = skel.births();
    const auto& k = skel.kills();
    if (b.size() >= 2 && k.end() - std::upper_bound(k.begin(), k.end(), b.front()) >= 2) break;
  }
  const int r = std::min<int>(max_index, static_cast<int>(skel.births().size()));
  const int s = std::min<int>(max_index, static_cast<int>(skel.kills().size()));
  const auto x0 = sim::InterchangeState::identity(n);

  // counts[((i*n + j)*r + k)*s + l] for E1 and E2.
  const std::size_t cells = static_cast<std::size_t>(n * n * r * s);
  std::vector<std::vector<int>> outcomes(static_cast<std::size_t>(resamples));
  parallel_for(outcomes.size(), [&](std::size_t rep) {
    KilledWalkObserver obs(n, r);
    const auto res = sim::resample_given_skeleton(x0, skel, rng::derive_seed(replay_seed, rep), obs);
    obs.finish(res.final_state);
    auto& o = outcomes[rep];
    o.reserve(static_cast<std::size_t>(n + r));
    for (int i = 1; i <= n; ++i) o.push_back(obs.initial_outcome(i));
    for (int k = 1; k <= r; ++k) o.push_back(obs.birth_outcome(k));
  });
  std::vector<std::uint64_t> e1(cells, 0);
  std::vector<std::uint64_t> e2(cells, 0);
  auto index = [&](int i, int j, int k, int l) {
    return static_cast<std::size_t>((((i - 1) * n + (j - 1)) * r + (k - 1)) * s + (l - 1));
  };
  for (const auto& o : outcomes) {
    for (int i = 1; i <= n; ++i) {
      const int si = o[i - 1];
      for (int k = 1; k <= r; ++k) {
        const int ak = o[n + k - 1];
        if (si > 0 && ak < 0 && -ak <= s) ++e1[index(i, si, k, -ak)];
        if (si < 0 && -si <= s && ak > 0 && ak <= n) ++e2[index(i, ak, k, -si)];
      }
    }
  }
  CrossingInequalityCheck out;
  out.births = static_cast<int>(skel.births().size());
  out.kills = static_cast<int>(skel.kills().size());
  out.horizon = skel.horizon();
  const double total = static_cast<double>(resamples);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= r; ++k)
        for (int l = 1; l <= s; ++l) {
          const auto c1 = e1[index(i, j, k, l)];
          const auto c2 = e2[index(i, j, k, l)];
          if (c1 == 0 && c2 == 0) continue;
          ++out.tested;
          const double p1 = c1 / total;
          const double p2 = c2 / total;
          const double se = std::sqrt(std::max(p1 + p2 - (p1 - p2) * (p1 - p2), 0.0) / total);
          const double excess = (p1 - p2) - kSigmas * se;
          if (excess > out.max_excess) {
            out.max_excess = excess;
            out.worst = fmt::format("i={} j={} k={} l={} p1={} p2={}", i, j, k, l, p1, p2);
          }
          if (se > 0.0) out.max_z = std::max(out.max_z, (p1 - p2) / se);
        }
  return out;
}

inline SuiteReport verify_lemma_suite(const ModelParams& params, const LemmaBudget& budget, std::uint64_t seed) {
  params.validate();
  if (!params.accelerate) throw ValidationError("the lemma suite runs on the accelerated clock");
  if (budget.replicas < 2 || budget.resamples < 2) throw ValidationError("lemma suite budgets must be >= 2");
  if (!(budget.epsilon > 0.0 && budget.epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
  SuiteReport report{"lemma", {}, nlohmann::ordered_json::object()};
  const int n = params.n_sites;

  // Decay of the red region.
  const auto fit = fit_red_decay(params, budget.replicas, budget.fit_from, budget.fit_to,
                                 check_seed(seed, CheckStream::DecayReplicas));
  report.checks.push_back(make_check("decay_rate_positive", fit.c_hat, ">", 0.0,
                                     fmt::format("fitted exponent per 2 time units, slope se={}", fit.slope_se)));
  report.checks.push_back(make_check("decay_rate_vs_spectral", std::abs(fit.c_hat / fit.reference - 1.0), "<=", 0.2,
                                     fmt::format("c_hat={} vs 2*lambda_1={}", fit.c_hat, fit.reference)));
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 20; ++k) {
      const double s = 0.1 * k;
      const double ratio = spectral::expected_red_mass(n, s + 2.0) / spectral::expected_red_mass(n, s);
      worst = std::max(worst, std::log(ratio) + fit.reference);
    }
    report.checks.push_back(make_check("decay_ratio_exact", worst, "<=", 1e-9,
                                       "max_s log(m(s+2)/m(s)) + 2*lambda_1 over s in [0,2]"));
  }
  {
    double worst_z = 0.0;
    std::string where;
    for (double probe : {0.1, 0.2, 0.4}) {
      const auto it = std::min_element(fit.grid.begin(), fit.grid.end(),
                                       [&](double a, double b) { return std::abs(a - probe) < std::abs(b - probe); });
      const auto k = static_cast<std::size_t>(it - fit.grid.begin());
      const double z = std::abs(fit.mean[k] - spectral::expected_red_mass(n, fit.grid[k])) / fit.se[k];
      if (z > worst_z) {
        worst_z = z;
        where = fmt::format("t={}", fit.grid[k]);
      }
    }
    report.checks.push_back(make_check("red_mass_vs_heat", worst_z, "<=", kSigmas, where));
  }
  report.constants["c_hat"] = fit.c_hat;
  report.constants["two_lambda_1"] = fit.reference;

  // Crossings.
  const auto cal = calibrate_crossings(params, budget.replicas, budget.epsilon,
                                       check_seed(seed, CheckStream::CrossingsCalibration),
                                       check_seed(seed, CheckStream::CrossingsValidation));
  report.checks.push_back(make_check("crossings_reach_2n", cal.min_fraction, ">=", 1.0 - budget.epsilon / 4.0,
                                     fmt::format("t2={} worst start {}", cal.t2, cal.worst_start)));
  report.constants["t2"] = cal.t2;
  report.constants["crossing_constant"] = cal.constant;
  report.constants["epsilon"] = budget.epsilon;

  // Fixed-skeleton checks on a short segment.
  ModelParams small = params;
  small.n_sites = budget.small_n;
  {
    std::string colors;
    for (int j = 0; j < small.n_sites; ++j) colors += j % 2 == 0 ? 'R' : 'B';
    const auto x0 = sim::InterchangeState::from_colors(colors);
    const auto m = conditional_marginal_check(small, x0, budget.resamples,
                                              check_seed(seed, CheckStream::MarginalSkeleton),
                                              check_seed(seed, CheckStream::MarginalReplay), budget.marginal_candidates);
    report.checks.push_back(make_check(
        "conditional_marginal", m.max_excess, "<=", kSigmas * m.se_at_max,
        fmt::format("x={} site {} t={} L={} max marginal {}", colors, m.worst_site, m.horizon, m.crossings,
                    m.max_marginal)));
    report.constants["marginal_max_excess"] = m.max_excess;
    report.constants["marginal_max_probability"] = m.max_marginal;
  }
  {
    const auto c = crossing_inequality_check(small, budget.resamples, budget.max_index,
                                             check_seed(seed, CheckStream::CrossingIneqSkeleton),
                                             check_seed(seed, CheckStream::CrossingIneqReplay));
    report.checks.push_back(make_check(
        "crossing_inequality", c.max_excess, "<=", 0.0,
        fmt::format("{} tuples, r={} s={} t={}; worst {}; max z={}", c.tested, c.births, c.kills, c.horizon,
                    c.worst, c.max_z)));
    report.constants["crossing_inequality_max_excess"] = c.max_excess;
    report.constants["crossing_inequality_tested"] = c.tested;
  }
  return report;
}

}  // namespace ssep::harness
