#pragma once

#include <cstdint>
#include <string>

#include "fsur/common.hpp"

namespace fsur {

enum class EstimatorFamily { Plugin, KSG, Auto };

inline const char* to_string(EstimatorFamily f) {
  switch (f) {
    case EstimatorFamily::Plugin: return "plugin";
    case EstimatorFamily::KSG: return "ksg";
    case EstimatorFamily::Auto: return "auto";
  }
  return "?";
}

inline EstimatorFamily parse_estimator_family(std::string_view s) {
  if (s == "plugin") return EstimatorFamily::Plugin;
  if (s == "ksg") return EstimatorFamily::KSG;
  if (s == "auto") return EstimatorFamily::Auto;
  throw Error("unknown estimator family '" + std::string(s) + "'");
}

// All knobs of MI estimation. `threads` only affects scheduling and is not
// part of the hash.
struct EstimatorConfig {
  EstimatorFamily family = EstimatorFamily::Auto;
  std::size_t ksg_k = 3;
  bool standardize = true;
  double jitter_scale = 1e-10;
  std::uint64_t jitter_seed = 0;
  unsigned threads = 1;

  void validate() const {
    if (ksg_k < 1) throw Error("ksg_k must be at least 1");
    if (!(jitter_scale >= 0.0) || !std::isfinite(jitter_scale))
      throw Error("jitter_scale must be finite and non-negative");
  }

  std::uint64_t hash() const {
    return Hasher()
        .u64(static_cast<std::uint64_t>(family))
        .u64(ksg_k)
        .u64(standardize ? 1 : 0)
        .f64(jitter_scale)
        .u64(jitter_seed)
        .digest();
  }
};

struct MIValue {
  double value = 0.0;  // nats
  EstimatorFamily estimator = EstimatorFamily::Plugin;
  std::size_t n_samples = 0;

  friend bool operator==(const MIValue&, const MIValue&) = default;
};

}  // namespace fsur
