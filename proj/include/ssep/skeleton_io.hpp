#pragma once

// Versioned JSON form of a green skeleton, for replay across runs.
//
//   {"format": "ssep-green-skeleton", "version": 1, "n_sites": N,
//    "accelerate": true, "horizon": t, "initial_green": "0000",
//    "events_site1": [...], "events_siteN": [...],
//    "events_green": [[...], ...]}      // one list per edge 1..N-1
//
// Derived data (green trajectory, crossings) is recomputed on load.

#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "skeleton.hpp"

namespace ssep::sim {

inline constexpr const char* kSkeletonFormat = "ssep-green-skeleton";
inline constexpr int kSkeletonVersion = 1;

inline nlohmann::json skeleton_to_json(const GreenSkeleton& skel) {
  return nlohmann::json{
      {"format", kSkeletonFormat},
      {"version", kSkeletonVersion},
      {"n_sites", skel.n_sites()},
      {"accelerate", skel.accelerate()},
      {"horizon", skel.horizon()},
      {"initial_green", skel.initial_green().to_string()},
      {"events_site1", skel.events_site1()},
      {"events_siteN", skel.events_site_n()},
      {"events_green", skel.events_green()},
  };
}

inline GreenSkeleton skeleton_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kSkeletonFormat) throw ValidationError("not a green skeleton document");
    const int version = j.at("version").get<int>();
    if (version != kSkeletonVersion) throw ValidationError("unsupported skeleton version " + std::to_string(version));
    return GreenSkeleton(j.at("n_sites").get<int>(), j.at("accelerate").get<bool>(), j.at("horizon").get<double>(),
                         Configuration::parse(j.at("initial_green").get<std::string>()),
                         j.at("events_site1").get<std::vector<double>>(),
                         j.at("events_siteN").get<std::vector<double>>(),
                         j.at("events_green").get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed skeleton: ") + e.what());
  }
}

}  // namespace ssep::sim
