#include <doctest.h>

#include <cmath>
#include <sstream>

#include "csi/analysis.hpp"

using namespace csi;

namespace {

Trace trace_of(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in).trace;
}

// Deterministic multi-day trace where each node follows a fixed daily
// schedule, optionally drifting one session to another location after a
// given day.
Trace schedule_trace(int days,
                     const std::map<NodeId, std::vector<std::pair<LocationId, int>>>&
                         daily_hours,
                     int drift_after_day = -1) {
  std::ostringstream text;
  for (int day = 0; day < days; ++day) {
    for (const auto& [node, sessions] : daily_hours) {
      Timestamp t = day * kSecondsPerDay + 3600;
      for (std::size_t i = 0; i < sessions.size(); ++i) {
        LocationId loc = sessions[i].first;
        if (drift_after_day >= 0 && day > drift_after_day && i == 0) loc = "drift";
        Timestamp len = sessions[i].second * 3600;
        text << node << ',' << loc << ',' << t << ',' << (t + len) << '\n';
        t += len + 600;
      }
    }
  }
  return trace_of(text.str());
}

}  // namespace

TEST_CASE("self_stability at T=0 is exactly 1") {
  Trace t = schedule_trace(6, {{"u1", {{"a", 2}, {"b", 1}}},
                               {"u2", {{"c", 3}}}});
  StabilityPoint p = self_stability(t, 3, 0);
  CHECK(p.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.sample_count > 0);
}

TEST_CASE("stationary behavior is fully stable for any d and T") {
  Trace t = schedule_trace(10, {{"u1", {{"a", 2}, {"b", 2}}}});
  for (int d : {1, 3}) {
    for (int T : {1, 4}) {
      StabilityPoint p = self_stability(t, d, T);
      CHECK(p.value == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("drifting behavior scores below 1") {
  Trace t = schedule_trace(10, {{"u1", {{"a", 2}, {"b", 2}}}}, 4);
  StabilityPoint p = self_stability(t, 3, 5);
  CHECK(p.value < 1.0 - 1e-6);
  CHECK(p.value > 0.0);
}

TEST_CASE("self_stability equals a direct per-user recomputation") {
  Trace t = schedule_trace(14, {{"u1", {{"a", 2}, {"b", 1}}},
                                {"u2", {{"b", 3}, {"c", 1}}},
                                {"u3", {{"c", 2}}}},
                           6);
  int d = 3, T = 7;
  StabilityPoint got = self_stability(t, d, T);

  // Independent recomputation straight from the definition.
  double sum = 0.0;
  std::size_t n = 0;
  int last_day = t.num_days() - 1;
  for (const auto& node : t.nodes) {
    for (int anchor = d - 1; anchor + T <= last_day; ++anchor) {
      auto dv1 = daily_location_vectors(t, node, anchor - d + 1, anchor);
      auto dv2 = daily_location_vectors(t, node, anchor + T - d + 1, anchor + T);
      if (dv1.vectors.empty() || dv2.vectors.empty()) continue;
      auto p1 = compute_profile(build_association_matrix(dv1.vectors), 1.0);
      auto p2 = compute_profile(build_association_matrix(dv2.vectors), 1.0);
      sum += similarity(p1, p2);
      ++n;
    }
  }
  REQUIRE(n == got.sample_count);
  CHECK(got.value == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));

  auto per_user = self_stability_per_user(t, d, T);
  CHECK(per_user.size() == t.nodes.size());
}

TEST_CASE("pair_stability_correlation at T=0 is 1") {
  Trace t = schedule_trace(8, {{"u1", {{"a", 2}, {"b", 1}}},
                               {"u2", {{"a", 1}, {"c", 2}}},
                               {"u3", {{"b", 2}}}},
                           3);
  StabilityPoint p = pair_stability_correlation(t, 3, 0);
  CHECK(p.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("zero-variance similarities raise an undefined-correlation error") {
  // All users identical and constant: every pairwise similarity is 1 always.
  Trace t = schedule_trace(8, {{"u1", {{"a", 2}}},
                               {"u2", {{"a", 2}}},
                               {"u3", {{"a", 2}}}});
  CHECK_THROWS_AS(pair_stability_correlation(t, 3, 2), InsufficientData);
}

TEST_CASE("pair_stability_correlation matches a direct Eq-style evaluation") {
  Trace t = schedule_trace(12, {{"u1", {{"a", 2}, {"b", 1}}},
                                {"u2", {{"b", 2}, {"c", 1}}},
                                {"u3", {{"c", 2}, {"a", 1}}},
                                {"u4", {{"a", 1}, {"c", 2}}}},
                           5);
  int d = 3, T = 4;
  StabilityPoint got = pair_stability_correlation(t, d, T);

  std::vector<double> xs, ys;
  std::vector<NodeId> nodes(t.nodes.begin(), t.nodes.end());
  int last_day = t.num_days() - 1;
  auto profile_at = [&](const NodeId& node, int anchor) {
    auto dv = daily_location_vectors(t, node, anchor - d + 1, anchor);
    return compute_profile(build_association_matrix(dv.vectors), 1.0);
  };
  for (int anchor = d - 1; anchor + T <= last_day; ++anchor) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        xs.push_back(similarity(profile_at(nodes[i], anchor), profile_at(nodes[j], anchor)));
        ys.push_back(similarity(profile_at(nodes[i], anchor + T),
                                profile_at(nodes[j], anchor + T)));
      }
    }
  }
  REQUIRE(xs.size() == got.sample_count);
  double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double num = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    sx += (xs[i] - mx) * (xs[i] - mx);
    sy += (ys[i] - my) * (ys[i] - my);
  }
  double want = num / (n * std::sqrt(sx / n) * std::sqrt(sy / n));
  CHECK(got.value == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("stability rejects windows longer than the trace span") {
  Trace t = schedule_trace(4, {{"u1", {{"a", 2}}}});
  CHECK_THROWS_AS(self_stability(t, 3, 7), InsufficientData);
  CHECK_THROWS_AS(self_stability(t, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(self_stability(t, 3, -1), InvalidArgument);
}

TEST_CASE("stability results are deterministic") {
  Trace t = schedule_trace(10, {{"u1", {{"a", 2}, {"b", 1}}},
                                {"u2", {{"b", 2}}}},
                           4);
  StabilityPoint a = self_stability(t, 3, 2);
  StabilityPoint b = self_stability(t, 3, 2);
  CHECK(a.value == b.value);
  CHECK(a.sample_count == b.sample_count);
}
