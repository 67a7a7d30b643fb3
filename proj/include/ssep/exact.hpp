#pragma once

// Exact finite-state analysis for small segments: generator matrix,
// stationary law, transient laws by uniformization, worst-case total
// variation, mixing times and negative-dependence checks.
//
// State s ∈ [0, 2^N) encodes η with η(i) = bit (i - 1) of s.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "core.hpp"
#include "errors.hpp"
#include "spectral.hpp"
#include "stats.hpp"

namespace ssep::exact {

inline constexpr int kMaxSites = 12;
inline constexpr double kProbabilityTolerance = 1e-12;

class GeneratorMatrix {
 public:
  struct Entry {
    std::uint32_t target;
    double rate;
  };

  explicit GeneratorMatrix(const ModelParams& params) : params_(params) {
    params.validate();
    if (params.n_sites > kMaxSites)
      throw CapacityError(fmt::format("exact engine supports N <= {}, got {}", kMaxSites, params.n_sites));
    dim_ = std::size_t{1} << params.n_sites;
    dense_.assign(dim_ * dim_, 0.0);
    row_start_.reserve(dim_ + 1);
    exit_.assign(dim_, 0.0);
    for (std::size_t s = 0; s < dim_; ++s) {
      row_start_.push_back(entries_.size());
      for_each_transition(s, params, [&](std::uint64_t target, double rate) {
        entries_.push_back({static_cast<std::uint32_t>(target), rate});
        dense_[s * dim_ + target] += rate;
        exit_[s] += rate;
      });
      dense_[s * dim_ + s] = -exit_[s];
      max_exit_ = std::max(max_exit_, exit_[s]);
    }
    row_start_.push_back(entries_.size());
  }

  [[nodiscard]] const ModelParams& params() const { return params_; }
  [[nodiscard]] int n_sites() const { return params_.n_sites; }
  [[nodiscard]] std::size_t dim() const { return dim_; }

  /// Q[from][to].
  [[nodiscard]] double operator()(std::size_t from, std::size_t to) const { return dense_[from * dim_ + to]; }
  [[nodiscard]] std::span<const double> dense() const { return dense_; }

  [[nodiscard]] std::span<const Entry> row(std::size_t s) const {
    return {entries_.data() + row_start_[s], row_start_[s + 1] - row_start_[s]};
  }
  [[nodiscard]] double exit_rate(std::size_t s) const { return exit_[s]; }
  [[nodiscard]] double max_exit_rate() const { return max_exit_; }

 private:
  ModelParams params_;
  std::size_t dim_ = 0;
  std::vector<double> dense_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> row_start_;
  std::vector<double> exit_;
  double max_exit_ = 0.0;
};

inline GeneratorMatrix build_generator(const ModelParams& params) { return GeneratorMatrix(params); }

class DistributionVector {
 public:
  DistributionVector() = default;

  explicit DistributionVector(std::vector<double> probs) : probs_(std::move(probs)) {
    CompensatedSum total;
    for (double x : probs_) {
      if (!(x >= 0.0)) throw ValidationError("probabilities must be nonnegative");
      total.add(x);
    }
    if (std::abs(total.value() - 1.0) > kProbabilityTolerance)
      throw ValidationError(fmt::format("probabilities sum to {}, not 1", total.value()));
  }

  static DistributionVector point_mass(std::size_t dim, std::size_t state) {
    if (state >= dim) throw DomainError("state outside the distribution support");
    std::vector<double> v(dim, 0.0);
    v[state] = 1.0;
    return DistributionVector(std::move(v));
  }

  static DistributionVector point_mass(const Configuration& cfg) {
    if (cfg.n_sites() > kMaxSites) throw CapacityError("configuration too long for the exact engine");
    return point_mass(std::size_t{1} << cfg.n_sites(), cfg.index());
  }

  /// Ber(p)^{⊗N}.
  static DistributionVector product_bernoulli(int n, double p) {
    if (n > kMaxSites) throw CapacityError("too many sites for a dense distribution");
    std::vector<double> v(std::size_t{1} << n);
    for (std::size_t s = 0; s < v.size(); ++s) {
      double w = 1.0;
      for (int k = 0; k < n; ++k) w *= ((s >> k) & 1u) ? p : 1.0 - p;
      v[s] = w;
    }
    return DistributionVector(std::move(v));
  }

  [[nodiscard]] std::size_t dim() const { return probs_.size(); }
  [[nodiscard]] double operator[](std::size_t s) const { return probs_[s]; }
  [[nodiscard]] double probability(const Configuration& cfg) const { return probs_.at(cfg.index()); }
  [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

  /// Law of the complemented (resp. reflected) configuration.
  [[nodiscard]] DistributionVector complemented() const {
    std::vector<double> v(probs_.size());
    const std::size_t mask = probs_.size() - 1;
    for (std::size_t s = 0; s < v.size(); ++s) v[s ^ mask] = probs_[s];
    return DistributionVector(std::move(v));
  }
  [[nodiscard]] DistributionVector reflected() const {
    const int n = n_sites();
    std::vector<double> v(probs_.size());
    for (std::size_t s = 0; s < v.size(); ++s) {
      std::size_t r = 0;
      for (int k = 0; k < n; ++k) r |= ((s >> k) & 1u) << (n - 1 - k);
      v[r] = probs_[s];
    }
    return DistributionVector(std::move(v));
  }

  [[nodiscard]] int n_sites() const {
    int n = 0;
    while ((std::size_t{1} << n) < probs_.size()) ++n;
    return n;
  }

 private:
  std::vector<double> probs_;
};

inline double tv_distance(const DistributionVector& a, const DistributionVector& b) {
  if (a.dim() != b.dim()) throw DomainError("distributions have different dimensions");
  CompensatedSum s;
  for (std::size_t k = 0; k < a.dim(); ++k) s.add(std::abs(a[k] - b[k]));
  return std::clamp(0.5 * s.value(), 0.0, 1.0);
}

inline DistributionVector stationary(const GeneratorMatrix& gen) {
  if (!gen.params().irreducible()) throw ReducibleModelError();
  const auto dim = static_cast<Eigen::Index>(gen.dim());
  // π Q = 0 with Σ π = 1: solve Qᵀ πᵀ = 0 with the last equation replaced.
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = gen(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
  a.row(dim - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  rhs(dim - 1) = 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd pi = lu.solve(rhs);
  // One step of iterative refinement.
  pi += lu.solve(rhs - a * pi);
  std::vector<double> v(gen.dim());
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    v[i] = std::max(pi(i), 0.0);
    total += v[i];
  }
  for (double& x : v) x /= total;
  return DistributionVector(std::move(v));
}

/// ‖π Q‖_∞.
inline double stationary_residual(const GeneratorMatrix& gen, const DistributionVector& pi) {
  std::vector<double> out(gen.dim(), 0.0);
  for (std::size_t s = 0; s < gen.dim(); ++s) {
    out[s] -= pi[s] * gen.exit_rate(s);
    for (const auto& e : gen.row(s)) out[e.target] += pi[s] * e.rate;
  }
  double r = 0.0;
  for (double x : out) r = std::max(r, std::abs(x));
  return r;
}

namespace detail {

/// A batch of distributions evolved together, stored state-major:
/// value(state, row) = values[state * width + row].
struct DistributionBlock {
  std::size_t dim = 0;
  std::size_t width = 0;
  std::vector<double> values;

  static DistributionBlock identity(std::size_t dim) {
    DistributionBlock b{dim, dim, std::vector<double>(dim * dim, 0.0)};
    for (std::size_t s = 0; s < dim; ++s) b.values[s * dim + s] = 1.0;
    return b;
  }
  static DistributionBlock single(const DistributionVector& d) {
    return DistributionBlock{d.dim(), 1, d.probs()};
  }
  [[nodiscard]] double at(std::size_t state, std::size_t row) const { return values[state * width + row]; }
};

/// Truncation point R and retained Poisson(x) weights w_0..w_R whose tail
/// beyond R is below tail_bound.
struct PoissonWeights {
  std::vector<double> weights;
  double retained = 0.0;
};

inline PoissonWeights poisson_weights(double x, double tail_bound) {
  PoissonWeights pw;
  const double log_x = std::log(x);
  for (std::size_t k = 0;; ++k) {
    const double kd = static_cast<double>(k);
    const double w = std::exp(-x + kd * log_x - std::lgamma(kd + 1.0));
    pw.weights.push_back(w);
    pw.retained += w;
    if (kd + 2.0 > x) {
      // For j > k the ratio w_{j+1}/w_j ≤ x/(k+2) < 1, so the tail is
      // bounded by a geometric series.
      const double next = w * x / (kd + 1.0);
      const double tail = next / (1.0 - x / (kd + 2.0));
      if (tail < tail_bound) break;
    }
  }
  return pw;
}

/// block ← block · e^{tQ}, within total variation tol on every row.
inline void evolve_block(const GeneratorMatrix& gen, DistributionBlock& block, double t, double tol) {
  if (t < 0.0) throw DomainError("evolution time must be nonnegative");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const double rate = gen.max_exit_rate();
  if (t == 0.0 || rate == 0.0) return;
  const auto pw = poisson_weights(rate * t, 0.5 * tol);

  const std::size_t dim = block.dim;
  const std::size_t width = block.width;
  std::vector<double> current = std::move(block.values);
  std::vector<double> next(dim * width);
  std::vector<double> result(dim * width, 0.0);
  std::vector<double> stay(dim);
  for (std::size_t s = 0; s < dim; ++s) stay[s] = 1.0 - gen.exit_rate(s) / rate;

  for (std::size_t k = 0; k < pw.weights.size(); ++k) {
    const double w = pw.weights[k];
    if (w > 0.0) {
      for (std::size_t i = 0; i < dim * width; ++i) result[i] += w * current[i];
    }
    if (k + 1 == pw.weights.size()) break;
    // next = current · (I + Q / rate)
    for (std::size_t s = 0; s < dim; ++s) {
      const double* src = &current[s * width];
      double* dst = &next[s * width];
      const double a = stay[s];
      for (std::size_t r = 0; r < width; ++r) dst[r] = a * src[r];
    }
    for (std::size_t s = 0; s < dim; ++s) {
      const double* src = &current[s * width];
      for (const auto& e : gen.row(s)) {
        const double a = e.rate / rate;
        double* dst = &next[static_cast<std::size_t>(e.target) * width];
        for (std::size_t r = 0; r < width; ++r) dst[r] += a * src[r];
      }
    }
    current.swap(next);
  }
  const double norm = 1.0 / pw.retained;
  for (double& x : result) x *= norm;
  block.values = std::move(result);
}

/// Largest TV distance to pi over the rows of block; ties go to the
/// smallest row index.
inline std::pair<double, std::size_t> max_row_distance(const DistributionBlock& block, const DistributionVector& pi) {
  std::vector<double> acc(block.width, 0.0);
  for (std::size_t s = 0; s < block.dim; ++s) {
    const double* row = &block.values[s * block.width];
    const double target = pi[s];
    for (std::size_t r = 0; r < block.width; ++r) acc[r] += std::abs(row[r] - target);
  }
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t r = 0; r < block.width; ++r) {
    const double d = std::clamp(0.5 * acc[r], 0.0, 1.0);
    if (d > best) {
      best = d;
      arg = r;
    }
  }
  return {best, arg};
}

}  // namespace detail

/// Law at time t started from dist0, within total variation tol.
inline DistributionVector evolve(const GeneratorMatrix& gen, const DistributionVector& dist0, double t, double tol) {
  if (dist0.dim() != gen.dim()) throw DomainError("distribution dimension differs from the generator");
  auto block = detail::DistributionBlock::single(dist0);
  detail::evolve_block(gen, block, t, tol);
  // Clean rounding so the result passes the distribution invariants.
  double total = 0.0;
  for (double& x : block.values) {
    x = std::max(x, 0.0);
    total += x;
  }
  for (double& x : block.values) x /= total;
  return DistributionVector(std::move(block.values));
}

struct WorstCase {
  double distance;
  Configuration argmax;
};

/// d(t) = max over deterministic starts of TV(P_η(η_t ∈ ·), π).
inline WorstCase worst_case_distance(const GeneratorMatrix& gen, const DistributionVector& pi, double t, double tol) {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  auto block = detail::DistributionBlock::identity(gen.dim());
  detail::evolve_block(gen, block, t, tol);
  const auto [d, arg] = detail::max_row_distance(block, pi);
  return {d, Configuration::from_index(arg, gen.n_sites())};
}

inline WorstCase worst_case_distance(const GeneratorMatrix& gen, double t, double tol) {
  return worst_case_distance(gen, stationary(gen), t, tol);
}

/// t_mix(eps) = min{t ≥ 0 : d(t) ≤ eps}, located by bisection to within
/// tol time units. The bracket starts at 4 t*_asymptotic and doubles.
inline double mixing_time(const GeneratorMatrix& gen, const DistributionVector& pi, double eps, double tol) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const auto& params = gen.params();
  // TV accuracy of each evolution step; several steps compose along the
  // bisection so keep it well below any eps of interest.
  constexpr double kEngineTol = 1e-12;

  auto lo_block = detail::DistributionBlock::identity(gen.dim());
  if (detail::max_row_distance(lo_block, pi).first <= eps) return 0.0;

  const double clock = params.accelerate ? 1.0 : static_cast<double>(params.n_sites) * params.n_sites;
  const double density = spectral::canonical_density(params.p, params.q);
  double hi = 4.0 * spectral::t_star_asymptotic(params.n_sites, density) * clock;
  if (!(hi > 0.0)) hi = 0.25 * clock;
  double lo = 0.0;
  for (;;) {
    auto block = lo_block;
    detail::evolve_block(gen, block, hi - lo, kEngineTol);
    if (detail::max_row_distance(block, pi).first <= eps) break;
    lo = hi;
    lo_block = std::move(block);
    hi *= 2.0;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    auto block = lo_block;
    detail::evolve_block(gen, block, mid - lo, kEngineTol);
    if (detail::max_row_distance(block, pi).first <= eps) {
      hi = mid;
    } else {
      lo = mid;
      lo_block = std::move(block);
    }
  }
  return 0.5 * (lo + hi);
}

inline double mixing_time(const GeneratorMatrix& gen, double eps, double tol) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  return mixing_time(gen, stationary(gen), eps, tol);
}

struct NdReport {
  /// max_A E[∏_{i∈A} η(i)] - ∏_{i∈A} E[η(i)]; positive values are violations.
  double max_violation;
  /// Indicator of the maximising subset A.
  Configuration worst_subset;
};

/// Negative-dependence check over all 2^N coordinate subsets.
inline NdReport check_nd(const DistributionVector& dist) {
  const int n = dist.n_sites();
  if ((std::size_t{1} << n) != dist.dim()) throw DomainError("distribution dimension is not a power of two");
  if (n > 20) throw CapacityError("subset loop capped at N = 20");
  // joint[A] = P(η ⊇ A) by a superset-sum transform.
  std::vector<double> joint = dist.probs();
  for (int b = 0; b < n; ++b) {
    const std::size_t bit = std::size_t{1} << b;
    for (std::size_t a = 0; a < joint.size(); ++a)
      if (!(a & bit)) joint[a] += joint[a | bit];
  }
  std::vector<double> product(joint.size());
  product[0] = 1.0;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t a = 0; a < joint.size(); ++a) {
    if (a) {
      const int low = std::countr_zero(a);
      product[a] = product[a & (a - 1)] * joint[std::size_t{1} << low];
    }
    const double v = joint[a] - product[a];
    if (v > best) {
      best = v;
      arg = a;
    }
  }
  return {best, Configuration::from_index(arg, n)};
}

struct WeightMoments {
  double mean;
  double variance;
};

/// Mean and variance of S(η) under dist.
inline WeightMoments weight_moments(const DistributionVector& dist) {
  CompensatedSum m1;
  CompensatedSum m2;
  for (std::size_t s = 0; s < dist.dim(); ++s) {
    const double w = static_cast<double>(std::popcount(s));
    m1.add(dist[s] * w);
    m2.add(dist[s] * w * w);
  }
  const double mean = m1.value();
  return {mean, std::max(m2.value() - mean * mean, 0.0)};
}

}  // namespace ssep::exact
