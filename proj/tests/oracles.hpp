// Independent reference implementations used only by tests. These are kept
// deliberately naive (textbook algorithms, no shared code with src/) so they
// can serve as oracles for the production implementations.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csi/encounter.hpp"
#include "csi/profile.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
// eigenvalues (descending) and matching eigenvectors as columns of V.
inline void jacobi_eigen(Mat a, std::vector<double>& eigenvalues, Mat& eigenvectors) {
  const std::size_t n = a.size();
  Mat v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  eigenvalues.assign(n, 0.0);
  eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    eigenvalues[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) eigenvectors[i][j] = v[i][order[j]];
  }
}

struct Svd {
  std::vector<double> sigma;           // descending
  Mat v;                               // right-singular vectors as columns
};

// Textbook SVD of M via eigen-decomposition of M^T M.
inline Svd svd_via_mtm(const Mat& m) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  Mat mtm(cols, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t k = 0; k < rows; ++k) mtm[i][j] += m[k][i] * m[k][j];
  Svd out;
  std::vector<double> lambda;
  jacobi_eigen(mtm, lambda, out.v);
  out.sigma.resize(cols);
  for (std::size_t i = 0; i < cols; ++i)
    out.sigma[i] = std::sqrt(std::max(0.0, lambda[i]));
  return out;
}

// Brute-force weighted cosine similarity over the union of location spaces:
// plain double sum, sparse maps, no shared code with the library version.
inline double brute_similarity(const csi::BehavioralProfile& a,
                               const csi::BehavioralProfile& b) {
  if (a.empty() || b.empty()) return 0.0;
  auto entry = [](const csi::BehavioralProfile& p, std::size_t vec,
                  const csi::LocationId& loc) {
    for (std::size_t c = 0; c < p.location_keys.size(); ++c)
      if (p.location_keys[c] == loc) return p.vectors[vec][c];
    return 0.0;
  };
  std::set<csi::LocationId> keys(a.location_keys.begin(), a.location_keys.end());
  keys.insert(b.location_keys.begin(), b.location_keys.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.vectors.size(); ++i) {
    for (std::size_t j = 0; j < b.vectors.size(); ++j) {
      double dot = 0.0;
      for (const auto& loc : keys) dot += entry(a, i, loc) * entry(b, j, loc);
      total += a.weights[i] * b.weights[j] * std::abs(dot);
    }
  }
  return std::min(total, 1.0);
}

inline double brute_similarity_to_target(const csi::BehavioralProfile& a,
                                         const csi::TargetProfile& tp) {
  csi::BehavioralProfile t;
  double norm = 0.0;
  for (const auto& [loc, val] : tp.entries) norm += val * val;
  norm = std::sqrt(norm);
  t.vectors.emplace_back();
  for (const auto& [loc, val] : tp.entries) {
    t.location_keys.push_back(loc);
    t.vectors[0].push_back(val / norm);
  }
  t.weights.push_back(1.0);
  return brute_similarity(a, t);
}

constexpr csi::Timestamp kNever = std::numeric_limits<csi::Timestamp>::max();

// Exhaustive enumeration of time-respecting relay schedules: at every
// encounter where exactly one side holds the message, both branches
// (transfer / don't) are explored. Returns the earliest achievable arrival
// per node. Memoized on (event index, holder bitmask); nodes <= 16.
class ExhaustiveArrival {
 public:
  ExhaustiveArrival(const csi::EncounterStream& stream, const csi::NodeId& sender,
                    csi::Timestamp created_at)
      : stream_(stream), created_at_(created_at) {
    for (const auto& n : stream.node_universe()) {
      if (index_.count(n) == 0) {
        index_[n] = nodes_.size();
        nodes_.push_back(n);
      }
    }
    if (index_.count(sender) == 0) {
      index_[sender] = nodes_.size();
      nodes_.push_back(sender);
    }
    sender_bit_ = 1u << index_[sender];
  }

  std::map<csi::NodeId, csi::Timestamp> earliest() {
    auto best = run(0, sender_bit_);
    std::map<csi::NodeId, csi::Timestamp> out;
    out[nodes_[bit_index(sender_bit_)]] = created_at_;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (best[i] != kNever) out[nodes_[i]] = best[i];
    out[nodes_[bit_index(sender_bit_)]] = created_at_;
    return out;
  }

 private:
  static std::size_t bit_index(std::uint32_t bit) {
    std::size_t i = 0;
    while (!(bit & 1u)) {
      bit >>= 1;
      ++i;
    }
    return i;
  }

  // Earliest arrival per node achievable from event `idx` on, given holders.
  std::vector<csi::Timestamp> run(std::size_t idx, std::uint32_t holders) {
    auto key = std::make_pair(idx, holders);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<csi::Timestamp> best(nodes_.size(), kNever);
    if (idx < stream_.events.size()) {
      const auto& ev = stream_.events[idx];
      std::uint32_t ba = 1u << index_.at(ev.node_a);
      std::uint32_t bb = 1u << index_.at(ev.node_b);
      bool has_a = holders & ba, has_b = holders & bb;
      bool transferable = ev.start >= created_at_ && has_a != has_b;
      best = run(idx + 1, holders);  // skip branch
      if (transferable) {
        std::uint32_t nh = holders | ba | bb;
        auto taken = run(idx + 1, nh);
        std::size_t gained = bit_index(has_a ? bb : ba);
        taken[gained] = std::min(taken[gained], ev.start);
        for (std::size_t i = 0; i < best.size(); ++i)
          best[i] = std::min(best[i], taken[i]);
      }
    }
    memo_.emplace(key, best);
    return best;
  }

  const csi::EncounterStream& stream_;
  csi::Timestamp created_at_;
  std::vector<csi::NodeId> nodes_;
  std::map<csi::NodeId, std::size_t> index_;
  std::uint32_t sender_bit_ = 0;
  std::map<std::pair<std::size_t, std::uint32_t>, std::vector<csi::Timestamp>> memo_;
};

// Greedy always-transfer temporal sweep (the classic earliest-arrival
// computation), written independently of the library version.
inline std::map<csi::NodeId, csi::Timestamp> greedy_arrival(
    const csi::EncounterStream& stream, const csi::NodeId& sender,
    csi::Timestamp created_at) {
  std::map<csi::NodeId, csi::Timestamp> arrival;
  arrival[sender] = created_at;
  for (const auto& ev : stream.events) {
    if (ev.start < created_at) continue;
    bool has_a = arrival.count(ev.node_a) && arrival[ev.node_a] <= ev.start;
    bool has_b = arrival.count(ev.node_b) && arrival[ev.node_b] <= ev.start;
    if (has_a && !arrival.count(ev.node_b)) arrival[ev.node_b] = ev.start;
    if (has_b && !arrival.count(ev.node_a)) arrival[ev.node_a] = ev.start;
  }
  return arrival;
}

}  // namespace oracle
