#pragma once

// Coloured interchange process and the event-driven SSEP sampler.
//
// An interchange state places N labelled individuals on [N]: individual i
// sits at site σ(i) and carries a colour. Red individuals still hold their
// initial value, blue ones were last refreshed by the left reservoir and
// green ones by the right reservoir.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>

#include "core.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace ssep::sim {

enum class Color : std::uint8_t { Red = 0, Blue = 1, Green = 2 };

inline char color_letter(Color c) {
  switch (c) {
    case Color::Red: return 'R';
    case Color::Blue: return 'B';
    case Color::Green: return 'G';
  }
  return '?';
}

inline Color parse_color(char c) {
  switch (c) {
    case 'R': case 'r': return Color::Red;
    case 'B': case 'b': return Color::Blue;
    case 'G': case 'g': return Color::Green;
    default: throw ValidationError(fmt::format("invalid colour '{}'", c));
  }
}

class InterchangeState {
 public:
  InterchangeState() = default;

  /// sigma[i - 1] = site of individual i (1-based); colors[i - 1] = colour of individual i.
  InterchangeState(const std::vector<int>& sigma, std::vector<Color> colors) : colors_(std::move(colors)) {
    const std::size_t n = sigma.size();
    if (colors_.size() != n) throw ValidationError("sigma and colours differ in length");
    site_of_.resize(n);
    occupant_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const int site = sigma[i];
      if (site < 1 || site > static_cast<int>(n) || occupant_[site - 1] != -1)
        throw ValidationError("sigma is not a permutation of [N]");
      site_of_[i] = site - 1;
      occupant_[site - 1] = static_cast<int>(i);
    }
  }

  /// x₀: identity placement, every individual red.
  static InterchangeState identity(int n, Color c = Color::Red) {
    std::vector<int> sigma(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sigma[i] = i + 1;
    return InterchangeState(sigma, std::vector<Color>(static_cast<std::size_t>(n), c));
  }

  /// Identity placement with colours given as a string of R/B/G.
  static InterchangeState from_colors(std::string_view colors) {
    std::vector<Color> c;
    for (char ch : colors) c.push_back(parse_color(ch));
    std::vector<int> sigma(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) sigma[i] = static_cast<int>(i) + 1;
    return InterchangeState(sigma, std::move(c));
  }

  [[nodiscard]] int n_sites() const { return static_cast<int>(site_of_.size()); }
  [[nodiscard]] int site_of(int individual) const { return site_of_.at(individual - 1) + 1; }
  [[nodiscard]] int occupant(int site) const { return occupant_.at(site - 1) + 1; }
  [[nodiscard]] Color color_of(int individual) const { return colors_.at(individual - 1); }
  [[nodiscard]] Color color_at(int site) const { return colors_[occupant_.at(site - 1)]; }

  [[nodiscard]] int count(Color c) const {
    return static_cast<int>(std::count(colors_.begin(), colors_.end(), c));
  }

  /// Indicator of the sites holding individuals of colour c.
  [[nodiscard]] Configuration region(Color c) const {
    std::vector<std::uint8_t> bits(site_of_.size());
    for (std::size_t s = 0; s < bits.size(); ++s) bits[s] = colors_[occupant_[s]] == c ? 1 : 0;
    return Configuration(std::move(bits));
  }

  /// Colours read site by site, e.g. "RRBG".
  [[nodiscard]] std::string colors_by_site() const {
    std::string s(site_of_.size(), '?');
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = color_letter(colors_[occupant_[k]]);
    return s;
  }

  [[nodiscard]] std::vector<int> sigma() const {
    std::vector<int> out(site_of_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = site_of_[i] + 1;
    return out;
  }
  [[nodiscard]] const std::vector<Color>& colors() const { return colors_; }

  /// Individuals at sites `site` and `site + 1` trade places.
  void exchange(int site) {
    const int a = occupant_[site - 1];
    const int b = occupant_[site];
    occupant_[site - 1] = b;
    occupant_[site] = a;
    site_of_[a] = site;
    site_of_[b] = site - 1;
    assert(valid());
  }

  /// Recolours the occupant of `site`; returns its previous colour.
  Color recolor_at(int site, Color c) {
    Color& slot = colors_[occupant_[site - 1]];
    const Color old = slot;
    slot = c;
    return old;
  }

  [[nodiscard]] bool valid() const {
    for (std::size_t i = 0; i < site_of_.size(); ++i)
      if (site_of_[i] < 0 || occupant_[site_of_[i]] != static_cast<int>(i)) return false;
    return true;
  }

  friend bool operator==(const InterchangeState&, const InterchangeState&) = default;

 private:
  std::vector<int> site_of_;   // individual → site, 0-based
  std::vector<int> occupant_;  // site → individual, 0-based
  std::vector<Color> colors_;
};

/// f_*(η, x, vᴮ, vᴳ): site i reads η at the label of its red occupant,
/// vᴮ(i) for a blue occupant and vᴳ(i) for a green one.
inline Configuration pushforward(const Configuration& eta, const InterchangeState& x, const Configuration& v_blue,
                                 const Configuration& v_green) {
  const int n = x.n_sites();
  if (eta.n_sites() != n || v_blue.n_sites() != n || v_green.n_sites() != n)
    throw DomainError("pushforward arguments differ in length");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
  for (int site = 1; site <= n; ++site) {
    const int who = x.occupant(site);
    switch (x.color_of(who)) {
      case Color::Red: out[site - 1] = eta[Site{who}]; break;
      case Color::Blue: out[site - 1] = v_blue[Site{site}]; break;
      case Color::Green: out[site - 1] = v_green[Site{site}]; break;
    }
  }
  return Configuration(std::move(out));
}

/// Configuration of independent Ber(density) bits from the given stream.
inline Configuration bernoulli_field(int n, double density, rng::Stream& stream) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (auto& b : bits) b = stream.bernoulli(density) ? 1 : 0;
  return Configuration(std::move(bits));
}

namespace detail {

/// Pending ring of one Poisson clock.
struct Ring {
  double time;
  int clock;
  friend bool operator>(const Ring& a, const Ring& b) {
    return a.time > b.time || (a.time == b.time && a.clock > b.clock);
  }
};

using RingQueue = std::priority_queue<Ring, std::vector<Ring>, std::greater<>>;

/// Keeps event times strictly increasing across streams: a ring at or before
/// the last processed time is pushed one ulp past it.
inline double separate_tie(double time, double last) {
  if (time > last) return time;
  static bool reported = false;
  if (!reported) {
    std::clog << "ssep: simultaneous Poisson rings separated by one ulp\n";
    reported = true;
  }
  return std::nextafter(last, std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// Samples of η at each of the nondecreasing `times`, all taken along one
/// trajectory of the graphical construction started at cfg.
inline std::vector<Configuration> simulate_ssep_path(const Configuration& cfg, const ModelParams& params,
                                                     const std::vector<double>& times, std::uint64_t seed) {
  params.validate();
  const int n = params.n_sites;
  if (cfg.n_sites() != n) throw DomainError("configuration length differs from n_sites");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0.0) throw DomainError("times must be nonnegative");
    if (k && times[k] < times[k - 1]) throw DomainError("times must be sorted");
  }
  const double rate = params.clock_rate();
  // Clocks 0..N-2 are the edges (i, i+1); N-1 is site 1 and N is site N.
  const int n_clocks = n + 1;
  std::vector<rng::Stream> clocks;
  clocks.reserve(static_cast<std::size_t>(n_clocks));
  for (int e = 0; e + 1 < n; ++e) clocks.emplace_back(seed, rng::Family::BulkRB, static_cast<std::uint32_t>(e));
  clocks.emplace_back(seed, rng::Family::Site1, 0u);
  clocks.emplace_back(seed, rng::Family::SiteN, 0u);
  rng::Stream left_values(seed, rng::Family::ResampleLeft, 0u);
  rng::Stream right_values(seed, rng::Family::ResampleRight, 0u);

  std::vector<std::uint8_t> eta = cfg.sequence();
  std::vector<Configuration> out;
  out.reserve(times.size());
  const double horizon = times.empty() ? 0.0 : times.back();

  detail::RingQueue queue;
  for (int c = 0; c < n_clocks; ++c) queue.push({clocks[c].exponential(rate), c});
  std::size_t next_out = 0;
  double last = 0.0;
  while (next_out < times.size()) {
    const detail::Ring ring = queue.top();
    while (next_out < times.size() && times[next_out] < ring.time) out.emplace_back(eta), ++next_out;
    if (ring.time > horizon) break;
    queue.pop();
    last = detail::separate_tie(ring.time, last);
    if (ring.clock < n - 1) {
      std::swap(eta[ring.clock], eta[ring.clock + 1]);
    } else if (ring.clock == n - 1) {
      eta[0] = left_values.bernoulli(params.p) ? 1 : 0;
    } else {
      eta[n - 1] = right_values.bernoulli(params.q) ? 1 : 0;
    }
    queue.push({last + clocks[ring.clock].exponential(rate), ring.clock});
  }
  while (next_out < times.size()) out.emplace_back(eta), ++next_out;
  return out;
}

/// Exact sample of η_t started from cfg.
inline Configuration simulate_ssep(const Configuration& cfg, const ModelParams& params, double t,
                                   std::uint64_t seed) {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  return simulate_ssep_path(cfg, params, {t}, seed).front();
}

}  // namespace ssep::sim
