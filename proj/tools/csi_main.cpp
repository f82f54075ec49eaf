// csi: trace generation, behavior analysis, and dissemination simulation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "csi/analysis.hpp"
#include "csi/sim.hpp"

namespace fs = std::filesystem;
using namespace csi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  return out;
}

void echo_config(CLI::App& app, const fs::path& outdir) {
  auto out = open_out(outdir / "effective_config.txt");
  out << app.config_to_str(true, false);
}

// Shared synthetic-trace options.
void add_synth_options(CLI::App* cmd, SyntheticConfig& synth) {
  cmd->add_option("--nodes", synth.num_nodes, "Synthetic: number of nodes");
  cmd->add_option("--locations", synth.num_locations, "Synthetic: number of locations");
  cmd->add_option("--communities", synth.num_communities, "Synthetic: number of communities");
  cmd->add_option("--days", synth.days, "Synthetic: trace length in days");
  cmd->add_option("--mean-sessions", synth.mean_sessions_per_day,
                  "Synthetic: mean sessions per node per day");
  cmd->add_option("--session-mean", synth.session_duration_mean_s,
                  "Synthetic: mean session duration, seconds");
  cmd->add_option("--session-sigma", synth.session_duration_sigma_s,
                  "Synthetic: session duration std dev, seconds");
  cmd->add_option("--bias", synth.intra_community_location_bias,
                  "Synthetic: probability a session stays at community locations")
      ->check(CLI::Range(0.0, 1.0));
}

struct TraceInput {
  std::string trace_path;
  char delimiter = ',';
  bool synthetic = false;
  SyntheticConfig synth;
};

void add_trace_input(CLI::App* cmd, TraceInput& in) {
  cmd->add_option("--trace", in.trace_path, "Input trace file");
  cmd->add_option("--delimiter", in.delimiter, "Trace field delimiter");
  cmd->add_flag("--synthetic", in.synthetic, "Generate the input trace instead of reading one");
  add_synth_options(cmd, in.synth);
}

Trace load_trace(const TraceInput& in, std::uint64_t seed) {
  if (in.synthetic) {
    SyntheticConfig cfg = in.synth;
    cfg.rng_seed = seed;
    return generate_synthetic_trace(cfg);
  }
  if (in.trace_path.empty())
    throw InvalidArgument("either --trace or --synthetic is required");
  std::ifstream f(in.trace_path);
  if (!f) throw InputError("cannot read trace: " + in.trace_path);
  ParseOptions opt;
  opt.delimiter = in.delimiter;
  ParseResult res = parse_trace(f, opt);
  if (res.malformed > 0)
    std::cerr << "warning: skipped " << res.malformed << " malformed trace lines\n";
  return std::move(res.trace);
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  SyntheticConfig synth;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  SyntheticConfig cfg = a.synth;
  cfg.rng_seed = a.seed;
  Trace trace = generate_synthetic_trace(cfg);
  auto out = open_out(a.out);
  write_trace(out, trace);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  TraceInput in;
  std::vector<int> d_list{3};
  std::vector<int> t_list{0, 1, 7};
  double power_threshold = 0.9;
  double split = 0.5;
  std::uint64_t seed = 1;
  std::string outdir = "out";
};

int cmd_analyze(const AnalyzeArgs& a) {
  Trace trace = load_trace(a.in, a.seed);

  auto stab = open_out(fs::path(a.outdir) / "stability.csv");
  stab << "d,T,metric,value,sample_count\n";
  for (int d : a.d_list) {
    for (int T : a.t_list) {
      try {
        StabilityPoint p = self_stability(trace, d, T);
        stab << d << ',' << T << ",self_stability," << fmt(p.value) << ','
             << p.sample_count << '\n';
      } catch (const InsufficientData& e) {
        std::cerr << "warning: self_stability d=" << d << " T=" << T << ": "
                  << e.what() << '\n';
        stab << d << ',' << T << ",self_stability,skipped,0\n";
      }
      try {
        StabilityPoint p = pair_stability_correlation(trace, d, T);
        stab << d << ',' << T << ",pair_correlation," << fmt(p.value) << ','
             << p.sample_count << '\n';
      } catch (const InsufficientData& e) {
        std::cerr << "warning: pair_correlation d=" << d << " T=" << T << ": "
                  << e.what() << '\n';
        stab << d << ',' << T << ",pair_correlation,skipped,0\n";
      }
    }
  }

  // Encounter statistics: profiles from the first half, encounters from the
  // second, bucketed by pairwise profile similarity.
  auto [first, second] = split_trace(trace, a.split);
  auto enc = open_out(fs::path(a.outdir) / "encounter_stats.csv");
  enc << "bin_lo,bin_hi,pair_count,jaccard_pairs,encounter_probability,"
         "mean_total_duration_s,mean_encountered_set_jaccard\n";
  try {
    auto profiles = ProfileTable::from_trace(first, a.power_threshold);
    std::map<NodeId, BehavioralProfile> by_node;
    for (const auto& n : profiles->nodes()) by_node[n] = profiles->profile(n);
    EncounterStream stream = derive_encounters(second);
    auto stats = encounter_stats(stream, by_node, 0.1);
    for (const auto& b : stats.bins) {
      enc << fmt(b.bin_lo) << ',' << fmt(b.bin_hi) << ',' << b.pair_count << ','
          << b.jaccard_pair_count << ',' << fmt(b.encounter_probability) << ','
          << fmt(b.total_duration_s) << ',' << fmt(b.encountered_set_similarity) << '\n';
    }
  } catch (const InsufficientData& e) {
    std::cerr << "warning: encounter stats skipped: " << e.what() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  TraceInput in;
  std::string kind = "csit";
  std::vector<std::string> protocols;
  double split = 0.5;
  double power_threshold = 0.9;
  double th_sim = 0.8;
  CsiDConfig csid;
  RandomWalkConfig rw;
  bool privacy = false;
  int k = 10;
  int senders_per_tp = 100;
  int num_senders = 1000;
  int receivers_per_msg = 500;
  std::uint64_t seed = 1;
  std::string outdir = "out";
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.csid.th_fwd > a.csid.th_nbr)
    throw InvalidArgument("th_fwd must not exceed th_nbr");

  Trace trace = load_trace(a.in, a.seed);
  auto [first, second] = split_trace(trace, a.split);
  auto profiles = ProfileTable::from_trace(first, a.power_threshold);
  auto stream = std::make_shared<const EncounterStream>(derive_encounters(second));

  ScenarioKind kind;
  if (a.kind == "csit") kind = ScenarioKind::CsiT;
  else if (a.kind == "csid") kind = ScenarioKind::CsiD;
  else throw InvalidArgument("--kind must be csit or csid");

  std::vector<std::string> names = a.protocols;
  if (names.empty())
    names = kind == ScenarioKind::CsiT
                ? std::vector<std::string>{"epidemic", "random_walk", "group_spread_only",
                                           "csit", "oracle_optimal", "oracle_single_path"}
                : std::vector<std::string>{"epidemic", "random_walk", "csid",
                                           "oracle_optimal"};
  std::vector<ProtocolKind> kinds;
  for (const auto& n : names) kinds.push_back(protocol_from_name(n));

  std::vector<Scenario> scenarios;
  if (kind == ScenarioKind::CsiT) {
    auto set = build_csit_scenarios(profiles, stream, a.k, a.senders_per_tp, a.th_sim,
                                    a.seed);
    if (static_cast<int>(set.clusters_found) < a.k)
      std::cerr << "warning: only " << set.clusters_found << " of " << a.k
                << " dominant profiles found\n";
    scenarios = std::move(set.scenarios);
  } else {
    scenarios = build_csid_scenarios(profiles, stream, a.num_senders,
                                     a.receivers_per_msg, a.seed);
  }

  auto out = open_out(fs::path(a.outdir) / "results.csv");
  out << "protocol,scenario_id,seed,sender_sim,delivery_ratio,avg_delay_s,"
         "avg_delay_common_s,tx_overhead,storage_overhead,peak_storage,"
         "profile_exchanges,norm_delivery_ratio,norm_avg_delay,norm_tx_overhead,"
         "norm_storage_overhead\n";

  ProtocolConfig base;
  base.th_sim = a.th_sim;
  base.csid = a.csid;
  base.rw = a.rw;
  base.privacy = a.privacy;

  for (const auto& sc : scenarios) {
    ProtocolConfig epi = base;
    epi.kind = ProtocolKind::Epidemic;
    RunResult baseline = run_simulation(sc, epi, a.seed);
    double sender_sim =
        kind == ScenarioKind::CsiT ? sender_similarity(sc, sc.messages.front()) : 0.0;
    for (ProtocolKind pk : kinds) {
      ProtocolConfig cfg = base;
      cfg.kind = pk;
      RunResult r =
          pk == ProtocolKind::Epidemic ? baseline : run_simulation(sc, cfg, a.seed);
      NormalizedMetrics norm = normalize_metrics(r.metrics, baseline.metrics);
      double common = avg_delay_common(r, baseline, sc.messages);
      out << protocol_name(pk) << ',' << sc.id << ',' << a.seed << ','
          << fmt(sender_sim) << ',' << fmt(r.metrics.delivery_ratio) << ','
          << fmt(r.metrics.avg_delay_s) << ',' << fmt(common) << ','
          << r.metrics.transmission_overhead << ',' << r.metrics.storage_overhead << ','
          << r.metrics.peak_storage << ',' << r.metrics.profile_exchange_count << ','
          << fmt(norm.delivery_ratio) << ',' << fmt(norm.avg_delay) << ','
          << fmt(norm.transmission_overhead) << ',' << fmt(norm.storage_overhead)
          << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string results;
  std::string outdir = "out";
  double bin_width = 0.2;
};

struct ResultRow {
  std::string protocol;
  double sender_sim = 0.0;
  double delivery_ratio = 0.0;
  double avg_delay_s = std::numeric_limits<double>::quiet_NaN();
  double norm_delivery = std::numeric_limits<double>::quiet_NaN();
  double norm_delay = std::numeric_limits<double>::quiet_NaN();
  double norm_tx = std::numeric_limits<double>::quiet_NaN();
  double norm_storage = std::numeric_limits<double>::quiet_NaN();
};

double parse_field(const std::string& s) {
  if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

int cmd_report(const ReportArgs& a) {
  std::ifstream f(a.results);
  if (!f) throw InputError("cannot read results: " + a.results);
  std::string line;
  if (!std::getline(f, line)) throw InputError("empty results file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("missing results column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t c_protocol = col("protocol"), c_sim = col("sender_sim"),
              c_ratio = col("delivery_ratio"), c_delay = col("avg_delay_s"),
              c_nd = col("norm_delivery_ratio"), c_ndelay = col("norm_avg_delay"),
              c_ntx = col("norm_tx_overhead"), c_nst = col("norm_storage_overhead");

  std::vector<ResultRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (fields.size() < header.size()) throw InputError("short results row: " + line);
    ResultRow r;
    r.protocol = fields[c_protocol];
    r.sender_sim = parse_field(fields[c_sim]);
    r.delivery_ratio = parse_field(fields[c_ratio]);
    r.avg_delay_s = parse_field(fields[c_delay]);
    r.norm_delivery = parse_field(fields[c_nd]);
    r.norm_delay = parse_field(fields[c_ndelay]);
    r.norm_tx = parse_field(fields[c_ntx]);
    r.norm_storage = parse_field(fields[c_nst]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw InputError("no result rows to report");

  auto mean_ci = [](const std::vector<double>& xs, double& mean, double& ci) {
    mean = std::numeric_limits<double>::quiet_NaN();
    ci = 0.0;
    if (xs.empty()) return;
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    ci = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
  };

  std::map<std::string, std::vector<ResultRow>> by_protocol;
  for (const auto& r : rows) by_protocol[r.protocol].push_back(r);

  auto out = open_out(fs::path(a.outdir) / "summary.csv");
  out << "protocol,runs,mean_norm_delivery,ci_norm_delivery,mean_norm_delay,"
         "ci_norm_delay,mean_norm_tx,ci_norm_tx,mean_norm_storage,ci_norm_storage\n";
  for (const auto& [protocol, group] : by_protocol) {
    std::vector<double> nd, ndelay, ntx, nst;
    for (const auto& r : group) {
      if (!std::isnan(r.norm_delivery)) nd.push_back(r.norm_delivery);
      if (!std::isnan(r.norm_delay)) ndelay.push_back(r.norm_delay);
      if (!std::isnan(r.norm_tx)) ntx.push_back(r.norm_tx);
      if (!std::isnan(r.norm_storage)) nst.push_back(r.norm_storage);
    }
    double m, ci;
    out << protocol << ',' << group.size();
    mean_ci(nd, m, ci);
    out << ',' << fmt(m) << ',' << fmt(ci);
    mean_ci(ndelay, m, ci);
    out << ',' << fmt(m) << ',' << fmt(ci);
    mean_ci(ntx, m, ci);
    out << ',' << fmt(m) << ',' << fmt(ci);
    mean_ci(nst, m, ci);
    out << ',' << fmt(m) << ',' << fmt(ci) << '\n';
  }

  auto split = open_out(fs::path(a.outdir) / "sender_similarity_split.csv");
  split << "protocol,bin_lo,bin_hi,runs,mean_delivery_ratio,ci_delivery_ratio,"
           "mean_delay_s,ci_delay_s,delay_runs\n";
  for (const auto& [protocol, group] : by_protocol) {
    std::vector<SenderSimilarityRun> runs;
    for (const auto& r : group) {
      SenderSimilarityRun s;
      s.sender_sim = r.sender_sim;
      s.metrics.delivery_ratio = r.delivery_ratio;
      s.metrics.avg_delay_s = r.avg_delay_s;
      runs.push_back(s);
    }
    for (const auto& b : split_stats_by_sender_similarity(runs, a.bin_width)) {
      split << protocol << ',' << fmt(b.bin_lo) << ',' << fmt(b.bin_hi) << ','
            << b.run_count << ',' << fmt(b.mean_delivery_ratio) << ','
            << fmt(b.ci_delivery_ratio) << ',' << fmt(b.mean_delay_s) << ','
            << fmt(b.ci_delay_s) << ',' << b.delay_count << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-oriented dissemination toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value config file");
  app.get_config_formatter_base()->valueSeparator('=');

  GenerateArgs gen;
  CLI::App* c_gen = app.add_subcommand("generate", "Write a synthetic trace");
  add_synth_options(c_gen, gen.synth);
  c_gen->add_option("--seed", gen.seed, "Top-level RNG seed");
  c_gen->add_option("--out", gen.out, "Output trace file")->required();

  AnalyzeArgs an;
  CLI::App* c_an = app.add_subcommand("analyze", "Stability and encounter statistics");
  add_trace_input(c_an, an.in);
  c_an->add_option("--d", an.d_list, "History lengths in days");
  c_an->add_option("--T", an.t_list, "Time gaps in days");
  c_an->add_option("--power-threshold", an.power_threshold,
                   "Profile truncation power threshold")
      ->check(CLI::Range(0.0, 1.0));
  c_an->add_option("--split", an.split, "Profile/eval split fraction")
      ->check(CLI::Range(0.0, 1.0));
  c_an->add_option("--seed", an.seed, "Top-level RNG seed");
  c_an->add_option("--outdir", an.outdir, "Output directory");

  SimulateArgs si;
  CLI::App* c_si = app.add_subcommand("simulate", "Run dissemination protocols");
  add_trace_input(c_si, si.in);
  c_si->add_option("--kind", si.kind, "Scenario kind: csit or csid");
  c_si->add_option("--protocols", si.protocols, "Protocols to run")->delimiter(',');
  c_si->add_option("--split", si.split, "Profile/eval split fraction")
      ->check(CLI::Range(0.0, 1.0));
  c_si->add_option("--power-threshold", si.power_threshold,
                   "Profile truncation power threshold")
      ->check(CLI::Range(0.0, 1.0));
  c_si->add_option("--th-sim", si.th_sim, "Group-spread similarity threshold")
      ->check(CLI::Range(0.0, 1.0));
  c_si->add_option("--th-fwd", si.csid.th_fwd, "Holder election threshold")
      ->check(CLI::Range(0.0, 1.0));
  c_si->add_option("--th-nbr", si.csid.th_nbr, "Holder neighborhood threshold")
      ->check(CLI::Range(0.0, 1.0));
  c_si->add_option("--rw-copies", si.rw.num_copies, "Random walk copies")
      ->check(CLI::PositiveNumber);
  c_si->add_option("--rw-ttl", si.rw.ttl, "Random walk per-copy hop TTL")
      ->check(CLI::PositiveNumber);
  c_si->add_flag("--privacy", si.privacy, "Privacy-preserving handshake");
  c_si->add_option("--k", si.k, "Dominant target profiles (csit)");
  c_si->add_option("--senders-per-tp", si.senders_per_tp, "Senders per TP (csit)");
  c_si->add_option("--num-senders", si.num_senders, "Senders (csid)");
  c_si->add_option("--receivers-per-msg", si.receivers_per_msg, "Receivers (csid)");
  c_si->add_option("--seed", si.seed, "Top-level RNG seed");
  c_si->add_option("--outdir", si.outdir, "Output directory");

  ReportArgs re;
  CLI::App* c_re = app.add_subcommand("report", "Summarize a results CSV");
  c_re->add_option("--results", re.results, "results.csv path")->required();
  c_re->add_option("--bin-width", re.bin_width, "Sender-similarity bin width")
      ->check(CLI::Range(0.0, 1.0));
  c_re->add_option("--outdir", re.outdir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_gen->parsed()) {
      int rc = cmd_generate(gen);
      echo_config(app, fs::path(gen.out).has_parent_path()
                           ? fs::path(gen.out).parent_path()
                           : fs::path("."));
      return rc;
    }
    if (c_an->parsed()) {
      fs::create_directories(an.outdir);
      echo_config(app, an.outdir);
      return cmd_analyze(an);
    }
    if (c_si->parsed()) {
      fs::create_directories(si.outdir);
      echo_config(app, si.outdir);
      return cmd_simulate(si);
    }
    if (c_re->parsed()) {
      fs::create_directories(re.outdir);
      echo_config(app, re.outdir);
      return cmd_report(re);
    }
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
