#pragma once

#include <map>
#include <vector>

#include "csi/profile.hpp"
#include "csi/trace.hpp"

namespace csi {

struct StabilityPoint {
  int d = 1;        // history length, days
  int T = 0;        // time gap, days
  double value = 0.0;
  std::size_t sample_count = 0;
  std::size_t skipped = 0;  // users/pairs with an empty window
};

/// Mean self-similarity of each user's trailing-d-day profile to its profile
/// T days later, averaged over all users and day-aligned anchors. Profiles
/// are untruncated so T=0 scores exactly 1.
StabilityPoint self_stability(const Trace& trace, int d, int T);

/// Per-user breakdown of the same quantity (users with no eligible anchor
/// are absent).
std::map<NodeId, double> self_stability_per_user(const Trace& trace, int d, int T);

/// Pearson correlation (population standard deviation, N denominator)
/// between pairwise similarities at anchors T days apart, over all eligible
/// (pair, anchor) samples. Zero variance raises InsufficientData.
StabilityPoint pair_stability_correlation(const Trace& trace, int d, int T);

}  // namespace csi
