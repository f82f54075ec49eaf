#include "csi/encounter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace csi {

namespace {

bool event_less(const EncounterEvent& a, const EncounterEvent& b) {
  return std::tie(a.start, a.node_a, a.node_b, a.location, a.end) <
         std::tie(b.start, b.node_a, b.node_b, b.location, b.end);
}

}  // namespace

std::set<NodeId> EncounterStream::node_universe() const {
  std::set<NodeId> out;
  for (const auto& e : events) {
    out.insert(e.node_a);
    out.insert(e.node_b);
  }
  return out;
}

std::map<std::pair<NodeId, NodeId>, Timestamp> EncounterStream::pair_durations() const {
  std::map<std::pair<NodeId, NodeId>, Timestamp> out;
  for (const auto& e : events) out[{e.node_a, e.node_b}] += e.end - e.start;
  return out;
}

std::map<NodeId, std::set<NodeId>> EncounterStream::encountered_sets() const {
  std::map<NodeId, std::set<NodeId>> out;
  for (const auto& e : events) {
    out[e.node_a].insert(e.node_b);
    out[e.node_b].insert(e.node_a);
  }
  return out;
}

EncounterStream derive_encounters(const Trace& trace) {
  // Sweep per location: records sorted by start, intersect each record with
  // the still-active ones.
  std::map<LocationId, std::vector<const TraceRecord*>> by_location;
  for (const auto& r : trace.records) by_location[r.location].push_back(&r);

  std::map<std::tuple<NodeId, NodeId, LocationId>,
           std::vector<std::pair<Timestamp, Timestamp>>>
      intervals;
  for (auto& [loc, recs] : by_location) {
    std::sort(recs.begin(), recs.end(), [](const TraceRecord* a, const TraceRecord* b) {
      return std::tie(a->start, a->end, a->node) < std::tie(b->start, b->end, b->node);
    });
    std::vector<const TraceRecord*> active;
    for (const TraceRecord* r : recs) {
      std::erase_if(active, [&](const TraceRecord* a) { return a->end <= r->start; });
      for (const TraceRecord* a : active) {
        if (a->node == r->node) continue;
        Timestamp s = std::max(a->start, r->start);
        Timestamp e = std::min(a->end, r->end);
        if (e <= s) continue;  // zero-length touch
        auto key = a->node < r->node
                       ? std::make_tuple(a->node, r->node, loc)
                       : std::make_tuple(r->node, a->node, loc);
        intervals[key].emplace_back(s, e);
      }
      active.push_back(r);
    }
  }

  EncounterStream stream;
  for (auto& [key, ivals] : intervals) {
    std::sort(ivals.begin(), ivals.end());
    // Merge overlapping (and touching) intervals per (pair, location).
    Timestamp cur_s = ivals.front().first, cur_e = ivals.front().second;
    auto flush = [&] {
      stream.events.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                               cur_s, cur_e});
    };
    for (std::size_t i = 1; i < ivals.size(); ++i) {
      if (ivals[i].first <= cur_e) {
        cur_e = std::max(cur_e, ivals[i].second);
      } else {
        flush();
        cur_s = ivals[i].first;
        cur_e = ivals[i].second;
      }
    }
    flush();
  }
  std::sort(stream.events.begin(), stream.events.end(), event_less);
  return stream;
}

void write_encounters(std::ostream& out, const EncounterStream& stream, char delimiter) {
  for (const auto& e : stream.events)
    out << e.node_a << delimiter << e.node_b << delimiter << e.location << delimiter
        << e.start << delimiter << e.end << "\n";
}

EncounterStatsResult encounter_stats(const EncounterStream& stream,
                                     const std::map<NodeId, BehavioralProfile>& profiles,
                                     double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0))
    throw InvalidArgument("bin_width must lie in (0,1]");

  std::set<NodeId> universe = stream.node_universe();
  for (const auto& [node, p] : profiles) universe.insert(node);

  auto durations = stream.pair_durations();
  auto enc_sets = stream.encountered_sets();

  int num_bins = static_cast<int>(std::ceil(1.0 / bin_width - 1e-9));
  struct Accum {
    double duration = 0.0;
    double jaccard = 0.0;
    std::size_t jaccard_n = 0;
    std::size_t encountered = 0;
    std::size_t pairs = 0;
  };
  std::vector<Accum> acc(num_bins);
  EncounterStatsResult result;

  std::vector<NodeId> nodes(universe.begin(), universe.end());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto pa = profiles.find(nodes[i]);
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      auto pb = profiles.find(nodes[j]);
      if (pa == profiles.end() || pb == profiles.end()) {
        ++result.pairs_without_profile;
        continue;
      }
      double sim = similarity(pa->second, pb->second);
      int bin = std::min(num_bins - 1, static_cast<int>(sim / bin_width));
      Accum& a = acc[bin];
      ++a.pairs;
      auto dur = durations.find({nodes[i], nodes[j]});
      if (dur != durations.end()) {
        a.duration += static_cast<double>(dur->second);
        ++a.encountered;
      }
      const std::set<NodeId> empty;
      auto ea_it = enc_sets.find(nodes[i]);
      auto eb_it = enc_sets.find(nodes[j]);
      const std::set<NodeId>& ea = ea_it != enc_sets.end() ? ea_it->second : empty;
      const std::set<NodeId>& eb = eb_it != enc_sets.end() ? eb_it->second : empty;
      if (!ea.empty() || !eb.empty()) {
        std::vector<NodeId> inter;
        std::set_intersection(ea.begin(), ea.end(), eb.begin(), eb.end(),
                              std::back_inserter(inter));
        std::size_t uni = ea.size() + eb.size() - inter.size();
        a.jaccard += static_cast<double>(inter.size()) / static_cast<double>(uni);
        ++a.jaccard_n;
      }
    }
  }

  for (int b = 0; b < num_bins; ++b) {
    if (acc[b].pairs == 0) continue;
    SimilarityBinStats s;
    s.bin_lo = b * bin_width;
    s.bin_hi = std::min(1.0, (b + 1) * bin_width);
    s.pair_count = acc[b].pairs;
    s.total_duration_s = acc[b].duration / static_cast<double>(acc[b].pairs);
    s.encounter_probability =
        static_cast<double>(acc[b].encountered) / static_cast<double>(acc[b].pairs);
    s.jaccard_pair_count = acc[b].jaccard_n;
    s.encountered_set_similarity =
        acc[b].jaccard_n > 0 ? acc[b].jaccard / static_cast<double>(acc[b].jaccard_n) : 0.0;
    result.bins.push_back(s);
  }
  return result;
}

}  // namespace csi
