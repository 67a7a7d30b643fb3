#pragma once

// Two-layer graphical construction of the coloured interchange process.
//
// The skeleton holds the clocks that decide the green region: Ξ¹ (recolour
// the occupant of site 1 blue), Ξᴺ (recolour the occupant of site N green)
// and Ξᴳ_i (exchange across edge i when at least one side is green). The
// green region and the crossing count L are functions of the skeleton alone.
// The bulk clocks Ξᴮᴿ_i (exchange when neither side is green) are drawn at
// replay time, so replaying one skeleton under many seeds samples the
// dynamics conditionally on the skeleton.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "core.hpp"
#include "errors.hpp"
#include "interchange.hpp"
#include "rng.hpp"

namespace ssep::sim {

enum class SkeletonEventKind : std::uint8_t { Site1 = 0, SiteN = 1, Green = 2 };

struct SkeletonEvent {
  double time;
  SkeletonEventKind kind;
  int edge;  // 1-based edge (i, i+1) for Green events, 0 otherwise

  friend bool operator<(const SkeletonEvent& a, const SkeletonEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.edge < b.edge;
  }
};

/// Green region and crossing count from `time` until the next frame.
struct GreenFrame {
  double time;
  Configuration green;
  int crossings;
};

class GreenSkeleton {
 public:
  GreenSkeleton(int n_sites, bool accelerate, double horizon, Configuration initial_green,
                std::vector<double> events_site1, std::vector<double> events_site_n,
                std::vector<std::vector<double>> events_green)
      : n_(n_sites),
        accelerate_(accelerate),
        horizon_(horizon),
        initial_green_(std::move(initial_green)),
        site1_(std::move(events_site1)),
        site_n_(std::move(events_site_n)),
        green_(std::move(events_green)) {
    if (n_ < 1) throw ValidationError("skeleton needs n_sites >= 1");
    if (!(horizon_ >= 0.0)) throw ValidationError("skeleton horizon must be nonnegative");
    if (initial_green_.n_sites() != n_) throw ValidationError("initial green region has the wrong length");
    if (green_.size() != static_cast<std::size_t>(n_ - 1)) throw ValidationError("one green stream per edge is required");
    check_stream(site1_, "site-1");
    check_stream(site_n_, "site-N");
    for (const auto& s : green_) check_stream(s, "green");
    derive();
  }

  [[nodiscard]] int n_sites() const { return n_; }
  [[nodiscard]] bool accelerate() const { return accelerate_; }
  [[nodiscard]] double clock_rate() const { return accelerate_ ? static_cast<double>(n_) * n_ : 1.0; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] const Configuration& initial_green() const { return initial_green_; }
  [[nodiscard]] const std::vector<double>& events_site1() const { return site1_; }
  [[nodiscard]] const std::vector<double>& events_site_n() const { return site_n_; }
  /// events_green()[i - 1] lists the rings of Ξᴳ_i.
  [[nodiscard]] const std::vector<std::vector<double>>& events_green() const { return green_; }

  [[nodiscard]] const std::vector<SkeletonEvent>& merged_events() const { return merged_; }
  [[nodiscard]] const std::vector<GreenFrame>& frames() const { return frames_; }

  [[nodiscard]] const GreenFrame& frame_at(double t) const {
    auto it = std::upper_bound(frames_.begin(), frames_.end(), t,
                               [](double v, const GreenFrame& f) { return v < f.time; });
    return *std::prev(it);
  }
  [[nodiscard]] const Configuration& green_region_at(double t) const { return frame_at(t).green; }
  [[nodiscard]] int crossings_at(double t) const { return frame_at(t).crossings; }
  [[nodiscard]] int crossings() const { return frames_.back().crossings; }

  /// First time L reaches k, or +∞ if it does not by the horizon.
  [[nodiscard]] double first_time_crossings_reach(int k) const {
    for (const auto& f : frames_)
      if (f.crossings >= k) return f.time;
    return std::numeric_limits<double>::infinity();
  }

  /// Times at which a green individual is recoloured blue (T_{a_1}, ...).
  [[nodiscard]] const std::vector<double>& births() const { return births_; }
  /// Times at which a non-green individual is recoloured green (T_{b_1}, ...).
  [[nodiscard]] const std::vector<double>& kills() const { return kills_; }

 private:
  static void check_stream(const std::vector<double>& s, const char* name) {
    (void)name;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (!(s[k] >= 0.0)) throw ValidationError(fmt::format("{} stream has a negative time", name));
      if (k && !(s[k] > s[k - 1])) throw ValidationError(fmt::format("{} stream is not strictly increasing", name));
    }
  }

  void derive() {
    merged_.clear();
    for (double t : site1_) merged_.push_back({t, SkeletonEventKind::Site1, 0});
    for (double t : site_n_) merged_.push_back({t, SkeletonEventKind::SiteN, 0});
    for (int e = 0; e < n_ - 1; ++e)
      for (double t : green_[e]) merged_.push_back({t, SkeletonEventKind::Green, e + 1});
    for (const auto& ev : merged_)
      if (ev.time > horizon_) throw ValidationError("skeleton event beyond the horizon");
    std::sort(merged_.begin(), merged_.end());

    std::vector<std::uint8_t> green = initial_green_.sequence();
    int crossings = 0;
    frames_.assign(1, GreenFrame{0.0, initial_green_, 0});
    births_.clear();
    kills_.clear();
    for (const auto& ev : merged_) {
      bool changed = false;
      switch (ev.kind) {
        case SkeletonEventKind::Site1:
          if (green[0]) {
            green[0] = 0;
            births_.push_back(ev.time);
            changed = true;
          }
          break;
        case SkeletonEventKind::SiteN:
          if (!green[n_ - 1]) {
            green[n_ - 1] = 1;
            ++crossings;
            kills_.push_back(ev.time);
            changed = true;
          }
          break;
        case SkeletonEventKind::Green:
          if (green[ev.edge - 1] != green[ev.edge]) {
            std::swap(green[ev.edge - 1], green[ev.edge]);
            changed = true;
          }
          break;
      }
      if (changed) {
        if (frames_.back().time == ev.time)
          frames_.back() = GreenFrame{ev.time, Configuration(green), crossings};
        else
          frames_.push_back(GreenFrame{ev.time, Configuration(green), crossings});
      }
    }
  }

  int n_;
  bool accelerate_;
  double horizon_;
  Configuration initial_green_;
  std::vector<double> site1_;
  std::vector<double> site_n_;
  std::vector<std::vector<double>> green_;
  std::vector<SkeletonEvent> merged_;
  std::vector<GreenFrame> frames_;
  std::vector<double> births_;
  std::vector<double> kills_;
};

/// Samples Ξ¹, Ξᴺ and Ξᴳ on [0, t]. The green trajectory starts from
/// `initial_green` (empty by default, as for x₀).
inline GreenSkeleton sample_green_skeleton(const ModelParams& params, double t, std::uint64_t seed,
                                           std::optional<Configuration> initial_green = std::nullopt) {
  params.validate();
  if (t < 0.0) throw DomainError("skeleton horizon must be nonnegative");
  const int n = params.n_sites;
  const double rate = params.clock_rate();
  auto draw = [&](rng::Family family, std::uint32_t index) {
    rng::Stream stream(seed, family, index);
    std::vector<double> times;
    double now = stream.exponential(rate);
    while (now <= t) {
      times.push_back(now);
      now += stream.exponential(rate);
    }
    return times;
  };
  std::vector<SkeletonEvent> all;
  for (double x : draw(rng::Family::Site1, 0)) all.push_back({x, SkeletonEventKind::Site1, 0});
  for (double x : draw(rng::Family::SiteN, 0)) all.push_back({x, SkeletonEventKind::SiteN, 0});
  for (int e = 1; e < n; ++e)
    for (double x : draw(rng::Family::Green, static_cast<std::uint32_t>(e - 1)))
      all.push_back({x, SkeletonEventKind::Green, e});
  std::sort(all.begin(), all.end());

  std::vector<double> site1;
  std::vector<double> site_n;
  std::vector<std::vector<double>> green(static_cast<std::size_t>(std::max(n - 1, 0)));
  double last = 0.0;
  for (auto ev : all) {
    ev.time = detail::separate_tie(ev.time, last);
    if (ev.time > t) break;
    last = ev.time;
    switch (ev.kind) {
      case SkeletonEventKind::Site1: site1.push_back(ev.time); break;
      case SkeletonEventKind::SiteN: site_n.push_back(ev.time); break;
      case SkeletonEventKind::Green: green[ev.edge - 1].push_back(ev.time); break;
    }
  }
  return GreenSkeleton(n, params.accelerate, t, initial_green.value_or(Configuration::zeros(n)), std::move(site1),
                       std::move(site_n), std::move(green));
}

/// The skeleton restricted to [0, t]. Replaying it under a seed gives the
/// prefix of the replay of the full skeleton under the same seed.
inline GreenSkeleton restrict_skeleton(const GreenSkeleton& skel, double t) {
  if (!(t >= 0.0) || t > skel.horizon()) throw DomainError("restriction time outside the skeleton horizon");
  auto cut = [t](const std::vector<double>& v) {
    return std::vector<double>(v.begin(), std::upper_bound(v.begin(), v.end(), t));
  };
  std::vector<std::vector<double>> green;
  green.reserve(skel.events_green().size());
  for (const auto& g : skel.events_green()) green.push_back(cut(g));
  return GreenSkeleton(skel.n_sites(), skel.accelerate(), t, skel.initial_green(), cut(skel.events_site1()),
                       cut(skel.events_site_n()), std::move(green));
}

struct TrajectorySample {
  double time;
  int red;
  int blue;
  int green;
  int crossings;
};

struct SimResult {
  InterchangeState final_state;
  std::vector<TrajectorySample> samples;
  int crossings_final = 0;
  std::uint64_t rng_seed = 0;

  /// (time, |R|) series.
  [[nodiscard]] std::vector<std::pair<double, int>> red_mass_samples() const {
    std::vector<std::pair<double, int>> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.emplace_back(s.time, s.red);
    return out;
  }
};

/// Observer hooks for replay; the default ignores everything.
struct NullObserver {
  void on_recolor(double /*time*/, int /*site*/, int /*individual*/, Color /*from*/, Color /*to*/) {}
};

inline constexpr int kUniformSamplePoints = 128;

/// Replays the skeleton from x0 with fresh bulk clocks Ξᴮᴿ drawn from seed.
template <class Observer = NullObserver>
SimResult resample_given_skeleton(const InterchangeState& x0, const GreenSkeleton& skel, std::uint64_t seed,
                                  Observer&& observer = Observer{}) {
  const int n = skel.n_sites();
  if (x0.n_sites() != n) throw DomainError("interchange state and skeleton differ in N");
  if (x0.region(Color::Green) != skel.initial_green())
    throw DomainError("interchange state green region differs from the skeleton's initial green region");

  const double rate = skel.clock_rate();
  const double horizon = skel.horizon();
  std::vector<rng::Stream> bulk;
  bulk.reserve(static_cast<std::size_t>(std::max(n - 1, 0)));
  for (int e = 0; e < n - 1; ++e) bulk.emplace_back(seed, rng::Family::BulkRB, static_cast<std::uint32_t>(e));
  detail::RingQueue queue;
  for (int e = 0; e < n - 1; ++e) queue.push({bulk[e].exponential(rate), e});

  InterchangeState x = x0;
  int red = x.count(Color::Red);
  int blue = x.count(Color::Blue);
  int greens = x.count(Color::Green);
  int crossings = 0;

  SimResult result;
  result.rng_seed = seed;
  const auto& events = skel.merged_events();
  result.samples.reserve(events.size() + kUniformSamplePoints);
  std::size_t next_grid = 0;
  auto grid_time = [&](std::size_t k) {
    return horizon * static_cast<double>(k) / static_cast<double>(kUniformSamplePoints - 1);
  };
  auto record_grid_until = [&](double t) {
    while (next_grid < static_cast<std::size_t>(kUniformSamplePoints) && grid_time(next_grid) < t) {
      result.samples.push_back({grid_time(next_grid), red, blue, greens, crossings});
      ++next_grid;
    }
  };

  auto recolor = [&](double time, int site, Color to) {
    const int who = x.occupant(site);
    const Color from = x.recolor_at(site, to);
    if (from == to) return;
    auto bump = [&](Color c, int d) {
      (c == Color::Red ? red : c == Color::Blue ? blue : greens) += d;
    };
    bump(from, -1);
    bump(to, +1);
    observer.on_recolor(time, site, who, from, to);
  };

  double last = 0.0;
  std::size_t next_event = 0;
  for (;;) {
    const double skel_time = next_event < events.size() ? events[next_event].time
                                                        : std::numeric_limits<double>::infinity();
    const double bulk_time = queue.empty() ? std::numeric_limits<double>::infinity() : queue.top().time;
    if (std::min(skel_time, bulk_time) > horizon) break;
    if (bulk_time < skel_time) {
      const auto ring = queue.top();
      queue.pop();
      const double t = detail::separate_tie(ring.time, last);
      last = t;
      record_grid_until(t);
      const int site = ring.clock + 1;
      if (x.color_at(site) != Color::Green && x.color_at(site + 1) != Color::Green) x.exchange(site);
      queue.push({t + bulk[ring.clock].exponential(rate), ring.clock});
      continue;
    }
    const auto& ev = events[next_event++];
    last = std::max(last, ev.time);
    record_grid_until(ev.time);
    switch (ev.kind) {
      case SkeletonEventKind::Site1:
        recolor(ev.time, 1, Color::Blue);
        break;
      case SkeletonEventKind::SiteN:
        if (x.color_at(n) != Color::Green) ++crossings;
        recolor(ev.time, n, Color::Green);
        break;
      case SkeletonEventKind::Green:
        if (x.color_at(ev.edge) == Color::Green || x.color_at(ev.edge + 1) == Color::Green) x.exchange(ev.edge);
        break;
    }
    assert((next_event < events.size() && events[next_event].time == ev.time) ||
           x.region(Color::Green) == skel.green_region_at(ev.time));
    result.samples.push_back({ev.time, red, blue, greens, crossings});
  }
  record_grid_until(std::numeric_limits<double>::infinity());
  assert(crossings == skel.crossings());
  result.final_state = std::move(x);
  result.crossings_final = crossings;
  return result;
}

/// Unconditional sample of X on [0, t]: skeleton and bulk clocks both drawn
/// from seed.
inline SimResult simulate_interchange(const InterchangeState& x0, const ModelParams& params, double t,
                                      std::uint64_t seed) {
  if (x0.n_sites() != params.n_sites) throw DomainError("interchange state length differs from n_sites");
  const auto skel = sample_green_skeleton(params, t, seed, x0.region(Color::Green));
  return resample_given_skeleton(x0, skel, seed);
}

/// Coupled sample f_*(η, X_t, ξᴮ, ξᴳ) with X started from x₀.
inline Configuration coupled_sample(const Configuration& eta, const ModelParams& params, double t,
                                    std::uint64_t seed) {
  const auto x = simulate_interchange(InterchangeState::identity(params.n_sites), params, t, seed).final_state;
  rng::Stream blue(seed, rng::Family::XiBlue, 0u);
  rng::Stream green(seed, rng::Family::XiGreen, 0u);
  const auto vb = bernoulli_field(params.n_sites, params.p, blue);
  const auto vg = bernoulli_field(params.n_sites, params.q, green);
  return pushforward(eta, x, vb, vg);
}

}  // namespace ssep::sim
