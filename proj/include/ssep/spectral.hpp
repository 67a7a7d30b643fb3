#pragma once

// Closed-form solution of the discrete heat equation on [N] with Dirichlet
// ends, u' = Δu with u_0 ≡ 1 and Δf(x) = N²(f(x+1) + f(x-1) - 2f(x)),
// f(0) = f(N+1) = 0. Its total mass Σ_x u_t(x) is the expected number of
// particles at time t of the empty-reservoir chain started full, which is
// also the expected size of the red region of the coloured interchange
// process started from the identity.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/core.h>

#include "errors.hpp"
#include "stats.hpp"

namespace ssep::spectral {

inline double eigenvalue(int n, int l) {
  const double nn = static_cast<double>(n);
  // 1 - cos(θ) = 2 sin²(θ/2) avoids cancellation for small θ.
  const double half = std::sin(std::numbers::pi * l / (2.0 * (n + 1)));
  return 4.0 * nn * nn * half * half;
}

inline double eigenfunction(int n, int l, int x) {
  return std::numbers::sqrt2 * std::sin(std::numbers::pi * l * x / static_cast<double>(n + 1));
}

/// Dirichlet Laplacian eigenpairs. Eigenvalues are stored as λ_l > 0, the
/// eigenvalues of Δ being -λ_l.
class SpectralBasis {
 public:
  explicit SpectralBasis(int n) : n_(n) {
    if (n < 1) throw DomainError(fmt::format("spectral basis needs N >= 1, got {}", n));
    eigenvalues_.resize(static_cast<std::size_t>(n));
    for (int l = 1; l <= n; ++l) eigenvalues_[l - 1] = eigenvalue(n, l);
  }

  [[nodiscard]] int n_sites() const { return n_; }
  [[nodiscard]] double lambda(int l) const { return eigenvalues_.at(static_cast<std::size_t>(l - 1)); }
  [[nodiscard]] const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  [[nodiscard]] double phi(int l, int x) const { return eigenfunction(n_, l, x); }

  /// ⟨f, g⟩ = (1/(N+1)) Σ_x f(x) g(x); vectors indexed by x - 1.
  [[nodiscard]] double inner(const std::vector<double>& f, const std::vector<double>& g) const {
    CompensatedSum s;
    for (std::size_t k = 0; k < f.size() && k < g.size(); ++k) s.add(f[k] * g[k]);
    return s.value() / (n_ + 1);
  }

  [[nodiscard]] std::vector<double> phi_vector(int l) const {
    std::vector<double> v(static_cast<std::size_t>(n_));
    for (int x = 1; x <= n_; ++x) v[x - 1] = phi(l, x);
    return v;
  }

 private:
  int n_;
  std::vector<double> eigenvalues_;
};

inline SpectralBasis spectral_basis(int n) { return SpectralBasis(n); }

/// c_l = ⟨1, φ_l⟩: (√2/(N+1)) cot(πl/(2(N+1))) for odd l, 0 for even l.
inline double coefficient(int n, int l) {
  if (l % 2 == 0) return 0.0;
  const double theta = std::numbers::pi * l / (2.0 * (n + 1));
  return std::numbers::sqrt2 / (n + 1) * std::cos(theta) / std::sin(theta);
}

inline double c1(int n) {
  if (n < 1) throw DomainError("c1 needs N >= 1");
  return coefficient(n, 1);
}

/// u_t for the initial condition u_0 ≡ 1.
class HeatSolution {
 public:
  explicit HeatSolution(int n) : basis_(n) {
    coefficients_.resize(static_cast<std::size_t>(n));
    for (int l = 1; l <= n; ++l) coefficients_[l - 1] = coefficient(n, l);
  }

  [[nodiscard]] const SpectralBasis& basis() const { return basis_; }
  [[nodiscard]] const std::vector<double>& coefficients() const { return coefficients_; }

  [[nodiscard]] double value(double t, int x) const {
    CompensatedSum s;
    for (int l = 1; l <= basis_.n_sites(); l += 2)
      s.add(coefficients_[l - 1] * std::exp(-basis_.lambda(l) * t) * basis_.phi(l, x));
    return s.value();
  }

  /// Σ_x u_t(x) = (N+1) Σ_l c_l² e^{-λ_l t}.
  [[nodiscard]] double total(double t) const {
    if (t < 0.0) throw DomainError("time must be nonnegative");
    CompensatedSum s;
    // Largest eigenvalues first: terms then grow, which keeps the
    // compensated sum tight when the decay spans many decades.
    const int n = basis_.n_sites();
    for (int l = (n % 2 == 1 ? n : n - 1); l >= 1; l -= 2) {
      const double c = coefficients_[l - 1];
      s.add(c * c * std::exp(-basis_.lambda(l) * t));
    }
    return (n + 1) * s.value();
  }

 private:
  SpectralBasis basis_;
  std::vector<double> coefficients_;
};

/// E⁰_𝟙[S(η_t)] on the accelerated clock.
inline double expected_red_mass(int n, double t) {
  if (n < 1) throw DomainError("expected_red_mass needs N >= 1");
  if (t < 0.0) throw DomainError("time must be nonnegative");
  if (t == 0.0) return static_cast<double>(n);
  return HeatSolution(n).total(t);
}

/// √(Np) ∨ 1.
inline double red_mass_threshold(int n, double p) { return std::max(std::sqrt(n * p), 1.0); }

/// (1/π²) log(N / (√(Np) ∨ 1)).
inline double t_star_asymptotic(int n, double p) {
  return std::log(n / red_mass_threshold(n, p)) / (std::numbers::pi * std::numbers::pi);
}

/// First time the expected red mass drops to √(Np) ∨ 1, to 1e-9.
inline double t_star(int n, double p) {
  if (n < 1) throw DomainError("t_star needs N >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0,1]");
  const double threshold = red_mass_threshold(n, p);
  if (n <= threshold) return 0.0;
  const HeatSolution heat(n);
  double lo = 0.0;
  double hi = t_star_asymptotic(n, p) + 1.0;
  while (heat.total(hi) > threshold) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (heat.total(mid) <= threshold)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Density playing the role of p once (p, q) is brought, by the left-right
/// and particle-hole symmetries, to q ≤ min(p, 1 - p).
inline double canonical_density(double p, double q) {
  const double m = std::min({p, q, 1.0 - p, 1.0 - q});
  if (m == q) return p;
  if (m == p) return q;
  if (m == 1.0 - p) return 1.0 - q;
  return 1.0 - p;
}

}  // namespace ssep::spectral
