#pragma once

// Exhaustive check of the perturbed-product bounds: μ is obtained by
// drawing a random subset S ⊆ [n] from a set law, filling S from a
// conditional law φ_S and the complement from Ber(p). The distance from
// μ to ν = Ber(p)^{⊗n} is compared to E[a^{|S∩S'|}] - 1 and, when the
// random set S is negatively dependent, to exp((a-1) Σ P(i∈S)²) - 1.

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <fmt/core.h>

#include "errors.hpp"
#include "exact.hpp"
#include "stats.hpp"

namespace ssep::exact {

struct PerturbedProductSpec {
  int n = 1;
  double p = 0.5;
  /// μ̃ indexed by subset mask (bit i - 1 set when i ∈ S).
  std::vector<double> set_law;
  /// φ_S indexed by subset mask; φ_S has 2^{|S|} entries, bit k of the
  /// assignment index being the value at the k-th smallest element of S.
  /// Entries for masks with μ̃(S) = 0 may be left empty.
  std::vector<std::vector<double>> conditional_laws;

  void validate() const {
    if (n < 1 || n > kMaxSites) throw ValidationError(fmt::format("n must lie in [1, {}], got {}", kMaxSites, n));
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("p must lie in (0, 1)");
    const std::size_t subsets = std::size_t{1} << n;
    if (set_law.size() != subsets) throw ValidationError("set law must have 2^n entries");
    if (conditional_laws.size() != subsets) throw ValidationError("one conditional law slot per subset is required");
    check_law(set_law, "set law");
    for (std::size_t s = 0; s < subsets; ++s) {
      if (set_law[s] == 0.0 && conditional_laws[s].empty()) continue;
      if (conditional_laws[s].size() != (std::size_t{1} << std::popcount(s)))
        throw ValidationError(fmt::format("conditional law of subset {} has wrong size", s));
      check_law(conditional_laws[s], "conditional law");
    }
  }

 private:
  static void check_law(const std::vector<double>& law, const char* what) {
    CompensatedSum total;
    for (double x : law) {
      if (!(x >= 0.0)) throw ValidationError(fmt::format("{} has a negative entry", what));
      total.add(x);
    }
    if (std::abs(total.value() - 1.0) > 1e-9) throw ValidationError(fmt::format("{} does not sum to 1", what));
  }
};

struct PerturbationBound {
  double lhs;         // 4 TV(μ, ν)²
  double chi_square;  // ‖μ/ν - 1‖²_{L²(ν)}
  double rhs;         // E[a^{|S∩S'|}] - 1
  /// Max ND violation of the law of the indicator of S.
  double set_nd_violation;
  /// exp((a-1) Σ P(i∈S)²) - 1, present when S is ND.
  std::optional<double> nd_bound;
};

/// Tolerance under which the random set counts as negatively dependent.
inline constexpr double kNdTolerance = 1e-12;

/// Assembles μ from the spec.
inline std::vector<double> assemble_perturbed_law(const PerturbedProductSpec& spec) {
  const std::size_t dim = std::size_t{1} << spec.n;
  std::vector<double> mu(dim, 0.0);
  for (std::size_t s = 0; s < dim; ++s) {
    if (spec.set_law[s] == 0.0) continue;
    const auto& phi = spec.conditional_laws[s];
    for (std::size_t eta = 0; eta < dim; ++eta) {
      std::size_t assignment = 0;
      int pos = 0;
      double outside = 1.0;
      for (int i = 0; i < spec.n; ++i) {
        const bool bit = (eta >> i) & 1u;
        if ((s >> i) & 1u) {
          assignment |= static_cast<std::size_t>(bit) << pos++;
        } else {
          outside *= bit ? spec.p : 1.0 - spec.p;
        }
      }
      mu[eta] += spec.set_law[s] * phi[assignment] * outside;
    }
  }
  return mu;
}

inline PerturbationBound verify_product_perturbation(const PerturbedProductSpec& spec) {
  spec.validate();
  const std::size_t dim = std::size_t{1} << spec.n;
  const auto mu = assemble_perturbed_law(spec);
  const auto nu = DistributionVector::product_bernoulli(spec.n, spec.p);

  CompensatedSum l1;
  CompensatedSum chi;
  for (std::size_t eta = 0; eta < dim; ++eta) {
    l1.add(std::abs(mu[eta] - nu[eta]));
    const double ratio = mu[eta] / nu[eta] - 1.0;
    chi.add(nu[eta] * ratio * ratio);
  }
  const double tv = 0.5 * l1.value();

  const double a = std::max(1.0 / spec.p, 1.0 / (1.0 - spec.p));
  CompensatedSum moment;
  for (std::size_t s = 0; s < dim; ++s) {
    if (spec.set_law[s] == 0.0) continue;
    for (std::size_t t = 0; t < dim; ++t) {
      if (spec.set_law[t] == 0.0) continue;
      moment.add(spec.set_law[s] * spec.set_law[t] * std::pow(a, std::popcount(s & t)));
    }
  }

  // The set law, seen as the law of the indicator vector of S.
  std::vector<double> law = spec.set_law;
  double total = 0.0;
  for (double x : law) total += x;
  for (double& x : law) x /= total;
  const auto nd = check_nd(DistributionVector(std::move(law)));

  PerturbationBound out{4.0 * tv * tv, chi.value(), moment.value() - 1.0, nd.max_violation, std::nullopt};
  if (nd.max_violation <= kNdTolerance) {
    CompensatedSum sq;
    for (int i = 0; i < spec.n; ++i) {
      double inclusion = 0.0;
      for (std::size_t s = 0; s < dim; ++s)
        if ((s >> i) & 1u) inclusion += spec.set_law[s];
      sq.add(inclusion * inclusion);
    }
    out.nd_bound = std::exp((a - 1.0) * sq.value()) - 1.0;
  }
  return out;
}

}  // namespace ssep::exact
