#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "csi/profile.hpp"
#include "csi/trace.hpp"

namespace csi {

/// Positive-duration co-presence of two nodes at one location.
/// node_a < node_b in token order.
struct EncounterEvent {
  NodeId node_a;
  NodeId node_b;
  LocationId location;
  Timestamp start = 0;
  Timestamp end = 0;

  bool operator==(const EncounterEvent&) const = default;
};

struct EncounterStream {
  std::vector<EncounterEvent> events;  // sorted by (start, node_a, node_b, location)

  std::set<NodeId> node_universe() const;
  /// Total merged encounter seconds per unordered node pair.
  std::map<std::pair<NodeId, NodeId>, Timestamp> pair_durations() const;
  /// E(x): set of nodes each node encountered (excluding itself).
  std::map<NodeId, std::set<NodeId>> encountered_sets() const;
};

/// Emits one event per positive-measure intersection of two different nodes'
/// records at the same location; per (pair, location) overlapping intervals
/// are merged. Zero-length touches do not count.
EncounterStream derive_encounters(const Trace& trace);

void write_encounters(std::ostream& out, const EncounterStream& stream,
                      char delimiter = ',');

/// Per similarity-bin encounter statistics (bin k covers
/// [k*bin_width, (k+1)*bin_width), last bin closed at 1).
struct SimilarityBinStats {
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  double total_duration_s = 0.0;        // mean aggregate encounter seconds per pair
  double encounter_probability = 0.0;   // fraction of pairs with >= 1 encounter
  double encountered_set_similarity = 0.0;  // mean Jaccard of encountered sets
  std::size_t jaccard_pair_count = 0;   // pairs contributing to the Jaccard mean
  std::size_t pair_count = 0;
};

struct EncounterStatsResult {
  std::vector<SimilarityBinStats> bins;     // only non-empty bins
  std::size_t pairs_without_profile = 0;    // excluded pairs
};

/// Bins every profiled node pair by pairwise similarity and aggregates
/// encounter duration, encounter probability, and encountered-set Jaccard.
EncounterStatsResult encounter_stats(const EncounterStream& stream,
                                     const std::map<NodeId, BehavioralProfile>& profiles,
                                     double bin_width = 0.1);

}  // namespace csi
