#pragma once

// Configurations of the exclusion process on the segment [N] = {1, ..., N}
// with a reservoir of density p at site 1 and one of density q at site N,
// and the off-diagonal structure of its generator.
//
// Sites are 1-based everywhere in the public API. Exact-state indices use
// site 1 as the least-significant bit.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>

#include "errors.hpp"

namespace ssep {

/// 1-based site of the segment.
struct Site {
  int index;
};

struct ModelParams {
  int n_sites = 1;
  double p = 0.5;  // left reservoir density
  double q = 0.5;  // right reservoir density
  bool accelerate = true;

  void validate() const {
    if (n_sites < 1) throw ValidationError(fmt::format("n_sites must be >= 1, got {}", n_sites));
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(fmt::format("p must lie in [0,1], got {}", p));
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError(fmt::format("q must lie in [0,1], got {}", q));
  }

  /// Rate of every Poisson clock: N^2 on the diffusive clock, 1 otherwise.
  [[nodiscard]] double clock_rate() const {
    return accelerate ? static_cast<double>(n_sites) * n_sites : 1.0;
  }

  [[nodiscard]] bool irreducible() const {
    return !((p == 0.0 && q == 0.0) || (p == 1.0 && q == 1.0));
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

class Configuration {
 public:
  Configuration() = default;

  /// Occupancies listed from site 1 to site N.
  explicit Configuration(std::vector<std::uint8_t> occupancy) : bits_(std::move(occupancy)) {
    for (auto b : bits_) {
      if (b > 1) throw ValidationError("occupancy entries must be 0 or 1");
    }
  }

  static Configuration filled(int n, bool value) {
    if (n < 0) throw DomainError("negative number of sites");
    return Configuration(std::vector<std::uint8_t>(static_cast<std::size_t>(n), value ? 1 : 0));
  }
  static Configuration zeros(int n) { return filled(n, false); }
  static Configuration ones(int n) { return filled(n, true); }

  /// Text form: '0'/'1' characters, site 1 leftmost.
  static Configuration parse(std::string_view text) {
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
      if (c != '0' && c != '1') throw ValidationError(fmt::format("invalid configuration text '{}'", text));
      bits.push_back(c == '1' ? 1 : 0);
    }
    return Configuration(std::move(bits));
  }

  static Configuration from_index(std::uint64_t index, int n) {
    if (n < 0 || n > 63) throw CapacityError("state index form supports at most 63 sites");
    if (n < 64 && (index >> n) != 0) throw DomainError("state index out of range");
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) bits[k] = static_cast<std::uint8_t>((index >> k) & 1u);
    return Configuration(std::move(bits));
  }

  [[nodiscard]] int n_sites() const { return static_cast<int>(bits_.size()); }

  [[nodiscard]] bool occupied(Site s) const {
    check_site(s);
    return bits_[s.index - 1] != 0;
  }
  bool operator[](Site s) const { return occupied(s); }

  /// Occupancies in site order (element 0 is site 1).
  [[nodiscard]] const std::vector<std::uint8_t>& sequence() const { return bits_; }

  [[nodiscard]] std::uint64_t index() const {
    if (bits_.size() > 63) throw CapacityError("state index form supports at most 63 sites");
    std::uint64_t idx = 0;
    for (std::size_t k = 0; k < bits_.size(); ++k) idx |= static_cast<std::uint64_t>(bits_[k]) << k;
    return idx;
  }

  [[nodiscard]] std::string to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t k = 0; k < bits_.size(); ++k) s[k] = bits_[k] ? '1' : '0';
    return s;
  }

  /// Particle-hole exchange.
  [[nodiscard]] Configuration complemented() const {
    auto bits = bits_;
    for (auto& b : bits) b ^= 1u;
    return Configuration(std::move(bits));
  }

  /// Site i moved to N + 1 - i.
  [[nodiscard]] Configuration reflected() const {
    auto bits = bits_;
    std::reverse(bits.begin(), bits.end());
    return Configuration(std::move(bits));
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration&, const Configuration&) = default;

 private:
  void check_site(Site s) const {
    if (s.index < 1 || s.index > n_sites())
      throw DomainError(fmt::format("site {} outside [1, {}]", s.index, n_sites()));
  }

  std::vector<std::uint8_t> bits_;
};

/// η with the coordinates at sites i and i+1 exchanged.
inline Configuration swap(const Configuration& cfg, Site i) {
  if (i.index < 1 || i.index > cfg.n_sites() - 1)
    throw DomainError(fmt::format("swap index {} outside [1, {}]", i.index, cfg.n_sites() - 1));
  auto bits = cfg.sequence();
  std::swap(bits[i.index - 1], bits[i.index]);
  return Configuration(std::move(bits));
}

/// η with site i reset to v.
inline Configuration set_site(const Configuration& cfg, Site i, bool v) {
  if (i.index < 1 || i.index > cfg.n_sites())
    throw DomainError(fmt::format("site {} outside [1, {}]", i.index, cfg.n_sites()));
  auto bits = cfg.sequence();
  bits[i.index - 1] = v ? 1 : 0;
  return Configuration(std::move(bits));
}

/// Number of particles S(η).
inline int weight(const Configuration& cfg) {
  int s = 0;
  for (auto b : cfg.sequence()) s += b;
  return s;
}

struct Transition {
  double rate;
  Configuration target;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Visits every off-diagonal generator entry of the state with the given
/// index as fn(target_index, rate). Self-loops and zero rates are skipped and
/// entries sharing a target (only possible for N = 1) are merged.
template <class Fn>
void for_each_transition(std::uint64_t state, const ModelParams& params, Fn&& fn) {
  const int n = params.n_sites;
  const double r = params.clock_rate();
  for (int k = 0; k + 1 < n; ++k) {
    const auto a = (state >> k) & 1u;
    const auto b = (state >> (k + 1)) & 1u;
    if (a != b) fn(state ^ ((std::uint64_t{1} << k) | (std::uint64_t{1} << (k + 1))), r);
  }
  const std::uint64_t first = 1u;
  const std::uint64_t last = std::uint64_t{1} << (n - 1);
  // Rate of the reservoir at site 1 (resp. N) flipping its site.
  const double left = (state & first) ? r * (1.0 - params.p) : r * params.p;
  const double right = (state & last) ? r * (1.0 - params.q) : r * params.q;
  if (n == 1) {
    const double total = left + right;
    if (total > 0.0) fn(state ^ first, total);
    return;
  }
  if (left > 0.0) fn(state ^ first, left);
  if (right > 0.0) fn(state ^ last, right);
}

/// Off-diagonal row of the generator at cfg.
inline std::vector<Transition> transitions(const Configuration& cfg, const ModelParams& params) {
  params.validate();
  if (cfg.n_sites() != params.n_sites) throw DomainError("configuration length differs from n_sites");
  if (params.n_sites > 63) {
    // Index form unavailable; enumerate on the value form directly.
    std::vector<Transition> out;
    const double r = params.clock_rate();
    for (int i = 1; i < params.n_sites; ++i)
      if (cfg[Site{i}] != cfg[Site{i + 1}]) out.push_back({r, swap(cfg, Site{i})});
    const int n = params.n_sites;
    const double left = cfg[Site{1}] ? r * (1.0 - params.p) : r * params.p;
    const double right = cfg[Site{n}] ? r * (1.0 - params.q) : r * params.q;
    if (left > 0.0) out.push_back({left, set_site(cfg, Site{1}, !cfg[Site{1}])});
    if (right > 0.0) out.push_back({right, set_site(cfg, Site{n}, !cfg[Site{n}])});
    return out;
  }
  std::vector<Transition> out;
  for_each_transition(cfg.index(), params, [&](std::uint64_t target, double rate) {
    out.push_back({rate, Configuration::from_index(target, params.n_sites)});
  });
  return out;
}

}  // namespace ssep
