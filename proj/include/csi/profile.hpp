#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "csi/trace.hpp"

namespace csi {

/// Day x location matrix of visit-time fractions. Rows are unit-sum; columns
/// are aligned with `location_keys` (sorted lexicographically).
struct AssociationMatrix {
  std::vector<LocationId> location_keys;
  std::vector<std::vector<double>> rows;
  std::vector<int> day_indices;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_cols() const { return location_keys.size(); }
};

/// Eigen-behavior summary of an association matrix: unit-norm right-singular
/// vectors with L2-normalized singular-value weights, truncated at the
/// requested cumulative squared-weight power.
struct BehavioralProfile {
  std::vector<LocationId> location_keys;
  std::vector<std::vector<double>> vectors;  // unit norm, mutually orthogonal
  std::vector<double> weights;               // positive, non-increasing

  // Cache key used by simulation code to memoize pairwise similarities;
  // -1 means "not attached to a profile table".
  int tag = -1;

  bool empty() const { return vectors.empty(); }
  std::size_t rank() const { return vectors.size(); }
};

/// Sender-specified sparse location-fraction vector plus the group-membership
/// threshold.
struct TargetProfile {
  std::map<LocationId, double> entries;
  double th_sim = 0.8;
};

AssociationMatrix build_association_matrix(const std::vector<LocationVector>& daily_vectors,
                                           const std::vector<int>& day_indices = {});

/// SVD of the association matrix. Weights are sigma_i / sqrt(sum sigma_j^2);
/// the smallest prefix with cumulative squared weight >= power_threshold is
/// kept. Sign convention: each vector's largest-magnitude entry is
/// non-negative; equal singular values are ordered lexicographically.
BehavioralProfile compute_profile(const AssociationMatrix& m, double power_threshold = 0.9);

/// Convenience: matrix + profile from a node's trace window.
BehavioralProfile profile_from_trace(const Trace& trace, const NodeId& node,
                                     int day_first, int day_last,
                                     double power_threshold = 0.9);

/// Both profiles re-indexed over the union of their location keys (sorted),
/// absent coordinates zero-filled.
std::pair<BehavioralProfile, BehavioralProfile> align_location_spaces(
    const BehavioralProfile& a, const BehavioralProfile& b);

/// Weighted cosine similarity: sum_ij w_ai * w_bj * |a_i . b_j| over the
/// aligned location spaces, clamped to [0,1]. Exactly symmetric. Degenerate
/// (empty) profiles score 0.
double similarity(const BehavioralProfile& a, const BehavioralProfile& b);

/// Similarity of a profile to a target treated as a rank-1 profile with
/// weight 1: sum_i w_ai * |a_i . t_hat|.
double similarity_to_target(const BehavioralProfile& a, const TargetProfile& tp);

/// Text form: one line per eigen-vector, "weight loc:value loc:value ...".
std::string profile_to_text(const BehavioralProfile& p);
BehavioralProfile profile_from_text(const std::string& text);

}  // namespace csi
