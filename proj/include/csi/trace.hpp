#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csi/common.hpp"

namespace csi {

/// One node-location association interval from a WLAN-style session trace.
struct TraceRecord {
  NodeId node;
  LocationId location;
  Timestamp start = 0;
  Timestamp end = 0;

  bool operator==(const TraceRecord&) const = default;
};

/// A time-sorted collection of association records plus the node/location
/// universe. Day indices are derived from `epoch` (day k covers
/// [epoch + k*86400, epoch + (k+1)*86400)).
struct Trace {
  std::vector<TraceRecord> records;  // sorted by (start, node, location, end)
  Timestamp epoch = 0;
  std::set<NodeId> nodes;
  std::set<LocationId> locations;

  bool empty() const { return records.empty(); }
  /// Largest record end, or epoch for an empty trace.
  Timestamp span_end() const;
  int day_of(Timestamp t) const {
    return static_cast<int>((t - epoch) / kSecondsPerDay);
  }
  int num_days() const;
};

struct SyntheticConfig {
  int num_nodes = 0;
  int num_locations = 0;
  int num_communities = 1;
  int days = 0;
  double mean_sessions_per_day = 3.0;
  double session_duration_mean_s = 3600.0;
  double session_duration_sigma_s = 1800.0;
  double intra_community_location_bias = 0.9;  // in [0,1]
  std::uint64_t rng_seed = 0;
};

struct ParseOptions {
  char delimiter = ',';
  // Column positions of node, location, start, end in each line.
  std::array<int, 4> columns{0, 1, 2, 3};
  // Optional AP -> building remap applied to the location column.
  std::map<std::string, std::string> remap;
};

struct ParseResult {
  Trace trace;
  std::size_t total_lines = 0;  // non-comment, non-blank
  std::size_t malformed = 0;
};

/// Parses delimiter-separated records. Malformed lines (bad field count,
/// non-numeric times, start >= end, empty tokens) are counted and skipped;
/// more than 50% malformed raises InputError (schema mismatch).
ParseResult parse_trace(std::istream& in, const ParseOptions& opts = {});

/// Two-column whitespace-separated AP -> building map.
std::map<std::string, std::string> parse_remap(std::istream& in);

void write_trace(std::ostream& out, const Trace& trace, char delimiter = ',');

/// Deterministic community-structured trace: nodes are partitioned into
/// communities, each community owns a block of home locations, and every
/// session lands on a home location with probability
/// `intra_community_location_bias`, otherwise uniformly anywhere.
Trace generate_synthetic_trace(const SyntheticConfig& cfg);

/// Node index -> community index for the generator's partition (node i
/// belongs to community i % num_communities).
int synthetic_community_of(const SyntheticConfig& cfg, int node_index);
NodeId synthetic_node_name(int node_index);

/// Cuts at epoch + fraction * span. Records straddling the cut are truncated
/// at the cut, with the remainder placed in the second half.
std::pair<Trace, Trace> split_trace(const Trace& trace, double fraction);

/// Sparse per-day location-time-fraction vector.
using LocationVector = std::map<LocationId, double>;

struct DailyVectors {
  std::vector<int> day_indices;            // days with at least one association
  std::vector<LocationVector> vectors;     // aligned with day_indices; rows sum to 1
  std::vector<int> empty_days;             // in-window days with no associations
};

/// Fraction of online time per location for each day in [day_first, day_last].
/// Sessions straddling midnight are apportioned to each day by overlap.
/// A node absent from the trace yields an empty result.
DailyVectors daily_location_vectors(const Trace& trace, const NodeId& node,
                                    int day_first, int day_last);

}  // namespace csi
