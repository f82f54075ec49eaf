#include "csi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>

namespace csi {

namespace {

// Profiles per (node, anchor day), untruncated; nullopt when the trailing
// window has no non-empty day.
class WindowProfileCache {
 public:
  WindowProfileCache(const Trace& trace, int d) : trace_(trace), d_(d) {}

  const std::optional<BehavioralProfile>& get(const NodeId& node, int anchor) {
    auto key = std::make_pair(node, anchor);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::optional<BehavioralProfile> p;
    auto dv = daily_location_vectors(trace_, node, anchor - d_ + 1, anchor);
    if (!dv.vectors.empty())
      p = compute_profile(build_association_matrix(dv.vectors, dv.day_indices), 1.0);
    return cache_.emplace(std::move(key), std::move(p)).first->second;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<NodeId, int>& k) const {
      return std::hash<NodeId>{}(k.first) * 1000003u ^ std::hash<int>{}(k.second);
    }
  };
  const Trace& trace_;
  int d_;
  std::unordered_map<std::pair<NodeId, int>, std::optional<BehavioralProfile>, KeyHash>
      cache_;
};

void check_span(const Trace& trace, int d, int T) {
  if (d < 1) throw InvalidArgument("history length d must be >= 1");
  if (T < 0) throw InvalidArgument("time gap T must be >= 0");
  if (trace.num_days() < d + T)
    throw InsufficientData("trace span shorter than d + T days");
}

}  // namespace

std::map<NodeId, double> self_stability_per_user(const Trace& trace, int d, int T) {
  check_span(trace, d, T);
  WindowProfileCache cache(trace, d);
  int last_day = trace.num_days() - 1;
  std::map<NodeId, double> out;
  for (const auto& node : trace.nodes) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int t = d - 1; t + T <= last_day; ++t) {
      const auto& p1 = cache.get(node, t);
      const auto& p2 = cache.get(node, t + T);
      if (!p1 || !p2) continue;
      sum += similarity(*p1, *p2);
      ++n;
    }
    if (n > 0) out[node] = sum / static_cast<double>(n);
  }
  return out;
}

StabilityPoint self_stability(const Trace& trace, int d, int T) {
  check_span(trace, d, T);
  WindowProfileCache cache(trace, d);
  int last_day = trace.num_days() - 1;
  StabilityPoint pt{d, T, 0.0, 0, 0};
  double sum = 0.0;
  for (const auto& node : trace.nodes) {
    for (int t = d - 1; t + T <= last_day; ++t) {
      const auto& p1 = cache.get(node, t);
      const auto& p2 = cache.get(node, t + T);
      if (!p1 || !p2) {
        ++pt.skipped;
        continue;
      }
      sum += similarity(*p1, *p2);
      ++pt.sample_count;
    }
  }
  if (pt.sample_count == 0)
    throw InsufficientData("no eligible (user, anchor) sample for self stability");
  pt.value = sum / static_cast<double>(pt.sample_count);
  return pt;
}

StabilityPoint pair_stability_correlation(const Trace& trace, int d, int T) {
  check_span(trace, d, T);
  WindowProfileCache cache(trace, d);
  int last_day = trace.num_days() - 1;
  std::vector<NodeId> nodes(trace.nodes.begin(), trace.nodes.end());

  std::vector<double> xs, ys;
  StabilityPoint pt{d, T, 0.0, 0, 0};
  for (int t = d - 1; t + T <= last_day; ++t) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& a1 = cache.get(nodes[i], t);
      const auto& a2 = cache.get(nodes[i], t + T);
      if (!a1 || !a2) continue;
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        const auto& b1 = cache.get(nodes[j], t);
        const auto& b2 = cache.get(nodes[j], t + T);
        if (!b1 || !b2) {
          ++pt.skipped;
          continue;
        }
        xs.push_back(similarity(*a1, *b1));
        ys.push_back(similarity(*a2, *b2));
      }
    }
  }
  if (xs.size() < 2)
    throw InsufficientData("fewer than 2 eligible pair samples for correlation");

  double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw InsufficientData("undefined correlation: zero variance in similarity samples");
  pt.sample_count = xs.size();
  pt.value = std::clamp(sxy / (n * std::sqrt(sxx / n) * std::sqrt(syy / n)), -1.0, 1.0);
  return pt;
}

}  // namespace csi
