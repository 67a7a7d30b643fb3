#pragma once

#include <cstdint>

#include "errors.hpp"
#include "rng.hpp"

namespace ssep::sim {

/// Monte-Carlo estimate of P_i(walk avoids {0, N+1} up to time 2) for the
/// continuous-time simple random walk on {0, ..., N+1} jumping left and
/// right at rate N² each.
inline double hitting_probability_experiment(int n, int start, std::uint64_t replicas, std::uint64_t seed) {
  if (n < 1) throw DomainError("hitting experiment needs N >= 1");
  if (start < 0 || start > n + 1) throw DomainError("start must lie in {0, ..., N+1}");
  if (replicas == 0) throw DomainError("at least one replica is required");
  if (start == 0 || start == n + 1) return 0.0;
  constexpr double kHorizon = 2.0;
  const double total_rate = 2.0 * n * static_cast<double>(n);
  std::uint64_t survived = 0;
  for (std::uint64_t r = 0; r < replicas; ++r) {
    rng::Stream stream(rng::derive_seed(seed, r), rng::Family::Walk, 0u);
    int pos = start;
    double t = stream.exponential(total_rate);
    bool alive = true;
    while (t < kHorizon) {
      pos += stream.bernoulli(0.5) ? 1 : -1;
      if (pos == 0 || pos == n + 1) {
        alive = false;
        break;
      }
      t += stream.exponential(total_rate);
    }
    if (alive) ++survived;
  }
  return static_cast<double>(survived) / static_cast<double>(replicas);
}

}  // namespace ssep::sim
