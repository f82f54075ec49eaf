#include <doctest.h>

#include <sstream>

#include "csi/profile.hpp"
#include "csi/trace.hpp"

using namespace csi;

namespace {

Trace parse(const std::string& text, ParseOptions opts = {}) {
  std::istringstream in(text);
  return parse_trace(in, opts).trace;
}

}  // namespace

TEST_CASE("parse_trace maps fields directly") {
  Trace t = parse("n1,ap3,100,200\n");
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0] == TraceRecord{"n1", "ap3", 100, 200});
  CHECK(t.nodes == std::set<NodeId>{"n1"});
  CHECK(t.locations == std::set<LocationId>{"ap3"});
}

TEST_CASE("parse_trace rejects start >= end as malformed") {
  std::istringstream in("n1,ap3,200,100\nn1,ap3,100,200\n");
  ParseResult r = parse_trace(in);
  CHECK(r.malformed == 1);
  CHECK(r.total_lines == 2);
  CHECK(r.trace.records.size() == 1);
}

TEST_CASE("parse_trace sorts records by start") {
  Trace t = parse("a,l1,300,400\nb,l1,100,150\nc,l2,200,250\n");
  REQUIRE(t.records.size() == 3);
  CHECK(t.records[0].start == 100);
  CHECK(t.records[1].start == 200);
  CHECK(t.records[2].start == 300);
}

TEST_CASE("parse_trace skips comments and supports custom delimiter") {
  ParseOptions opts;
  opts.delimiter = ';';
  Trace t = parse("# header\nn1;l1;5;10\n\nn2;l1;7;12\n", opts);
  CHECK(t.records.size() == 2);
}

TEST_CASE("parse_trace applies the location remap") {
  ParseOptions opts;
  opts.remap = {{"ap3", "bldgA"}};
  Trace t = parse("n1,ap3,100,200\n", opts);
  CHECK(t.records[0].location == "bldgA");
}

TEST_CASE("parse_remap reads two-column text") {
  std::istringstream in("ap1 bldgA\nap2 bldgB\n");
  auto m = parse_remap(in);
  CHECK(m == std::map<std::string, std::string>{{"ap1", "bldgA"}, {"ap2", "bldgB"}});
}

TEST_CASE("parse_trace raises on majority-malformed input") {
  std::istringstream in("garbage\nmore garbage\nn1,l1,1,2\n");
  CHECK_THROWS_AS(parse_trace(in), InputError);
}

TEST_CASE("write_trace round-trips through parse_trace") {
  Trace t = parse("n1,l1,100,200\nn2,l2,150,300\n");
  std::ostringstream out;
  write_trace(out, t);
  Trace back = parse(out.str());
  CHECK(back.records == t.records);
}

TEST_CASE("synthetic generator: degenerate single node/location/day") {
  SyntheticConfig cfg;
  cfg.num_nodes = 1;
  cfg.num_locations = 1;
  cfg.days = 1;
  cfg.rng_seed = 7;
  Trace t = generate_synthetic_trace(cfg);
  CHECK(!t.records.empty());
  for (const auto& r : t.records) {
    CHECK(r.location == t.records[0].location);
    CHECK(r.start >= 0);
    CHECK(r.end <= kSecondsPerDay);
  }
}

TEST_CASE("synthetic generator is a pure function of the config") {
  SyntheticConfig cfg;
  cfg.num_nodes = 12;
  cfg.num_locations = 6;
  cfg.num_communities = 3;
  cfg.days = 5;
  cfg.rng_seed = 99;
  Trace a = generate_synthetic_trace(cfg);
  Trace b = generate_synthetic_trace(cfg);
  CHECK(a.records == b.records);
}

TEST_CASE("synthetic generator rejects empty configs") {
  SyntheticConfig cfg;
  CHECK_THROWS_AS(generate_synthetic_trace(cfg), InvalidArgument);
  cfg.num_nodes = 2;
  cfg.num_locations = 0;
  cfg.days = 1;
  CHECK_THROWS_AS(generate_synthetic_trace(cfg), InvalidArgument);
  cfg.num_locations = 4;
  cfg.num_communities = 8;  // more communities than nodes
  CHECK_THROWS_AS(generate_synthetic_trace(cfg), InvalidArgument);
}

TEST_CASE("community bias separates intra/inter-community similarity") {
  SyntheticConfig cfg;
  cfg.num_nodes = 40;
  cfg.num_locations = 20;
  cfg.num_communities = 4;
  cfg.days = 21;
  cfg.intra_community_location_bias = 0.9;
  cfg.rng_seed = 5;
  Trace t = generate_synthetic_trace(cfg);

  std::vector<BehavioralProfile> profs(cfg.num_nodes);
  for (int i = 0; i < cfg.num_nodes; ++i)
    profs[i] = profile_from_trace(t, synthetic_node_name(i), 0, cfg.days - 1);

  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (int i = 0; i < cfg.num_nodes; ++i) {
    for (int j = i + 1; j < cfg.num_nodes; ++j) {
      double s = similarity(profs[i], profs[j]);
      if (synthetic_community_of(cfg, i) == synthetic_community_of(cfg, j)) {
        intra += s;
        ++n_intra;
      } else {
        inter += s;
        ++n_inter;
      }
    }
  }
  CHECK(intra / n_intra > inter / n_inter);
}

TEST_CASE("split_trace cuts at the fraction of the span") {
  Trace t = parse("a,l1,10,12\nb,l1,18,20\nc,l1,30,32\nd,l1,38,40\n");
  auto [first, second] = split_trace(t, 0.5);  // span [0,40], cut at 20
  for (const auto& r : first.records) CHECK(r.end <= 20);
  for (const auto& r : second.records) CHECK(r.start >= 20);
  CHECK(first.records.size() == 2);
  CHECK(second.records.size() == 2);
}

TEST_CASE("split_trace truncates straddling records on both sides") {
  Trace t = parse("a,l1,0,5\nb,l1,15,25\nc,l1,35,40\n");
  auto [first, second] = split_trace(t, 0.5);  // cut at 20
  bool found_first = false, found_second = false;
  for (const auto& r : first.records)
    if (r.node == "b") {
      found_first = true;
      CHECK(r.start == 15);
      CHECK(r.end == 20);
    }
  for (const auto& r : second.records)
    if (r.node == "b") {
      found_second = true;
      CHECK(r.start == 20);
      CHECK(r.end == 25);
    }
  CHECK(found_first);
  CHECK(found_second);

  // Total covered time is preserved by the truncation.
  auto total = [](const Trace& tr) {
    Timestamp s = 0;
    for (const auto& r : tr.records) s += r.end - r.start;
    return s;
  };
  CHECK(total(first) + total(second) == total(t));
}

TEST_CASE("split_trace is deterministic and validates the fraction") {
  Trace t = parse("a,l1,10,12\nb,l1,30,40\n");
  auto p1 = split_trace(t, 0.5);
  auto p2 = split_trace(t, 0.5);
  CHECK(p1.first.records == p2.first.records);
  CHECK(p1.second.records == p2.second.records);
  CHECK_THROWS_AS(split_trace(t, 0.0), InvalidArgument);
  CHECK_THROWS_AS(split_trace(t, 1.0), InvalidArgument);
}

TEST_CASE("daily_location_vectors splits time proportionally") {
  Trace t = parse("n1,L1,0,3600\nn1,L2,4000,5800\n");
  DailyVectors dv = daily_location_vectors(t, "n1", 0, 0);
  REQUIRE(dv.vectors.size() == 1);
  CHECK(dv.vectors[0].at("L1") == doctest::Approx(2.0 / 3.0));
  CHECK(dv.vectors[0].at("L2") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("daily_location_vectors omits and reports empty days") {
  // Sessions on day 0 and day 2 only.
  Trace t = parse("n1,L1,100,200\nn1,L1,172900,173000\n");
  DailyVectors dv = daily_location_vectors(t, "n1", 0, 2);
  CHECK(dv.day_indices == std::vector<int>{0, 2});
  CHECK(dv.empty_days == std::vector<int>{1});
}

TEST_CASE("daily_location_vectors apportions midnight-straddling sessions") {
  // 2h session ending 1h into day 1, plus 1h at L2 on each day.
  Trace t = parse("n1,L1,82800,90000\nn1,L2,1000,4600\nn1,L2,100000,103600\n");
  DailyVectors dv = daily_location_vectors(t, "n1", 0, 1);
  REQUIRE(dv.vectors.size() == 2);
  // Day 0: 3600 s of L1 (until midnight) + 3600 s of L2.
  CHECK(dv.vectors[0].at("L1") == doctest::Approx(0.5));
  CHECK(dv.vectors[0].at("L2") == doctest::Approx(0.5));
  // Day 1: 3600 s of L1 (after midnight) + 3600 s of L2.
  CHECK(dv.vectors[1].at("L1") == doctest::Approx(0.5));
  CHECK(dv.vectors[1].at("L2") == doctest::Approx(0.5));
}

TEST_CASE("daily vectors are unit-sum with entries in [0,1]") {
  SyntheticConfig cfg;
  cfg.num_nodes = 6;
  cfg.num_locations = 5;
  cfg.num_communities = 2;
  cfg.days = 4;
  cfg.rng_seed = 3;
  Trace t = generate_synthetic_trace(cfg);
  for (const auto& node : t.nodes) {
    DailyVectors dv = daily_location_vectors(t, node, 0, cfg.days - 1);
    for (const auto& vec : dv.vectors) {
      double sum = 0.0;
      for (const auto& [loc, f] : vec) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        sum += f;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("daily_location_vectors for an absent node is empty") {
  Trace t = parse("n1,L1,0,100\n");
  DailyVectors dv = daily_location_vectors(t, "ghost", 0, 0);
  CHECK(dv.vectors.empty());
  CHECK(dv.day_indices.empty());
}
