#include "csi/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace csi {

namespace {

bool record_less(const TraceRecord& a, const TraceRecord& b) {
  return std::tie(a.start, a.node, a.location, a.end) <
         std::tie(b.start, b.node, b.location, b.end);
}

void finalize(Trace& t) {
  std::sort(t.records.begin(), t.records.end(), record_less);
  t.nodes.clear();
  t.locations.clear();
  for (const auto& r : t.records) {
    t.nodes.insert(r.node);
    t.locations.insert(r.location);
  }
}

bool parse_int64(const std::string& s, Timestamp& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.pop_back();
  }
  return fields;
}

}  // namespace

Timestamp Trace::span_end() const {
  Timestamp m = epoch;
  for (const auto& r : records) m = std::max(m, r.end);
  return m;
}

int Trace::num_days() const {
  if (records.empty()) return 0;
  return day_of(span_end() - 1) + 1;
}

ParseResult parse_trace(std::istream& in, const ParseOptions& opts) {
  if (!in.good()) throw InputError("trace stream unreadable");
  ParseResult res;
  int max_col = *std::max_element(opts.columns.begin(), opts.columns.end());
  std::string line;
  while (std::getline(in, line)) {
    std::string stripped = line;
    auto pos = stripped.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (stripped[pos] == '#') continue;
    ++res.total_lines;
    auto fields = split_fields(line, opts.delimiter);
    if (static_cast<int>(fields.size()) <= max_col) {
      ++res.malformed;
      continue;
    }
    TraceRecord r;
    r.node = fields[opts.columns[0]];
    r.location = fields[opts.columns[1]];
    if (r.node.empty() || r.location.empty() ||
        !parse_int64(fields[opts.columns[2]], r.start) ||
        !parse_int64(fields[opts.columns[3]], r.end) || r.start >= r.end) {
      ++res.malformed;
      continue;
    }
    if (auto it = opts.remap.find(r.location); it != opts.remap.end())
      r.location = it->second;
    res.trace.records.push_back(std::move(r));
  }
  if (in.bad()) throw InputError("trace stream unreadable");
  if (res.total_lines > 0 && res.malformed * 2 > res.total_lines)
    throw InputError("schema mismatch: more than half of the lines are malformed");
  finalize(res.trace);
  return res;
}

std::map<std::string, std::string> parse_remap(std::istream& in) {
  if (!in.good()) throw InputError("remap stream unreadable");
  std::map<std::string, std::string> remap;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string ap, building;
    if (!(ls >> ap)) continue;
    if (ap[0] == '#') continue;
    if (!(ls >> building)) throw InputError("remap line missing building column: " + line);
    remap[ap] = building;
  }
  return remap;
}

void write_trace(std::ostream& out, const Trace& trace, char delimiter) {
  out << "# node" << delimiter << "location" << delimiter << "start" << delimiter
      << "end\n";
  for (const auto& r : trace.records)
    out << r.node << delimiter << r.location << delimiter << r.start << delimiter
        << r.end << "\n";
}

NodeId synthetic_node_name(int node_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "n%04d", node_index);
  return buf;
}

int synthetic_community_of(const SyntheticConfig& cfg, int node_index) {
  return node_index % cfg.num_communities;
}

Trace generate_synthetic_trace(const SyntheticConfig& cfg) {
  if (cfg.num_nodes <= 0 || cfg.num_locations <= 0 || cfg.days <= 0)
    throw InvalidArgument("synthetic config requires positive nodes/locations/days");
  if (cfg.num_communities <= 0 || cfg.num_communities > cfg.num_nodes ||
      cfg.num_communities > cfg.num_locations)
    throw InvalidArgument("num_communities must be in [1, min(nodes, locations)]");
  if (cfg.intra_community_location_bias < 0.0 || cfg.intra_community_location_bias > 1.0)
    throw InvalidArgument("intra_community_location_bias must be in [0,1]");

  std::vector<LocationId> locations(cfg.num_locations);
  for (int l = 0; l < cfg.num_locations; ++l) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "l%03d", l);
    locations[l] = buf;
  }
  // Location l is a home location of community l % C.
  std::vector<std::vector<int>> homes(cfg.num_communities);
  for (int l = 0; l < cfg.num_locations; ++l)
    homes[l % cfg.num_communities].push_back(l);

  Trace trace;
  std::mt19937_64 rng(derive_seed(cfg.rng_seed, "synthetic-trace"));
  std::poisson_distribution<int> sessions_dist(cfg.mean_sessions_per_day);
  std::normal_distribution<double> duration_dist(cfg.session_duration_mean_s,
                                                 cfg.session_duration_sigma_s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int n = 0; n < cfg.num_nodes; ++n) {
    NodeId node = synthetic_node_name(n);
    const auto& home = homes[synthetic_community_of(cfg, n)];
    for (int day = 0; day < cfg.days; ++day) {
      int k = sessions_dist(rng);
      std::vector<TraceRecord> day_sessions;
      for (int s = 0; s < k; ++s) {
        double dur = std::max(60.0, duration_dist(rng));
        dur = std::min(dur, static_cast<double>(kSecondsPerDay - 1));
        Timestamp duration = static_cast<Timestamp>(dur);
        Timestamp latest = kSecondsPerDay - duration;
        Timestamp start =
            static_cast<Timestamp>(unit(rng) * static_cast<double>(latest));
        int loc;
        if (unit(rng) < cfg.intra_community_location_bias) {
          loc = home[static_cast<std::size_t>(unit(rng) * home.size()) % home.size()];
        } else {
          loc = static_cast<int>(unit(rng) * cfg.num_locations) % cfg.num_locations;
        }
        Timestamp day_base = static_cast<Timestamp>(day) * kSecondsPerDay;
        day_sessions.push_back(
            {node, locations[loc], day_base + start, day_base + start + duration});
      }
      // Keep the node's sessions non-overlapping: earlier-starting wins.
      std::sort(day_sessions.begin(), day_sessions.end(), record_less);
      Timestamp busy_until = std::numeric_limits<Timestamp>::min();
      for (auto& sess : day_sessions) {
        if (sess.start < busy_until) continue;
        busy_until = sess.end;
        trace.records.push_back(std::move(sess));
      }
    }
  }
  finalize(trace);
  return trace;
}

std::pair<Trace, Trace> split_trace(const Trace& trace, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidArgument("split fraction must lie in (0,1)");
  if (trace.empty()) throw InvalidArgument("cannot split an empty trace");
  Timestamp span = trace.span_end() - trace.epoch;
  Timestamp cut = trace.epoch + static_cast<Timestamp>(fraction * static_cast<double>(span));
  Trace first, second;
  first.epoch = trace.epoch;
  second.epoch = trace.epoch;
  for (const auto& r : trace.records) {
    if (r.end <= cut) {
      first.records.push_back(r);
    } else if (r.start >= cut) {
      second.records.push_back(r);
    } else {
      first.records.push_back({r.node, r.location, r.start, cut});
      second.records.push_back({r.node, r.location, cut, r.end});
    }
  }
  finalize(first);
  finalize(second);
  return {std::move(first), std::move(second)};
}

DailyVectors daily_location_vectors(const Trace& trace, const NodeId& node,
                                    int day_first, int day_last) {
  if (day_first > day_last) throw InvalidArgument("empty day window");
  std::map<int, LocationVector> seconds_by_day;
  for (const auto& r : trace.records) {
    if (r.node != node) continue;
    int d_lo = std::max(trace.day_of(r.start), day_first);
    int d_hi = std::min(trace.day_of(r.end - 1), day_last);
    for (int d = d_lo; d <= d_hi; ++d) {
      Timestamp day_start = trace.epoch + static_cast<Timestamp>(d) * kSecondsPerDay;
      Timestamp day_end = day_start + kSecondsPerDay;
      Timestamp overlap = std::min(r.end, day_end) - std::max(r.start, day_start);
      if (overlap > 0) seconds_by_day[d][r.location] += static_cast<double>(overlap);
    }
  }
  DailyVectors out;
  for (int d = day_first; d <= day_last; ++d) {
    auto it = seconds_by_day.find(d);
    if (it == seconds_by_day.end()) {
      out.empty_days.push_back(d);
      continue;
    }
    double total = 0.0;
    for (const auto& [loc, sec] : it->second) total += sec;
    LocationVector v;
    for (const auto& [loc, sec] : it->second) v[loc] = sec / total;
    out.day_indices.push_back(d);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace csi
