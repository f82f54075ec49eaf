#include "csi/sim.hpp"

#include <algorithm>
#include <cassert>

namespace csi {

// ---------------------------------------------------------------------------
// ProfileTable
// ---------------------------------------------------------------------------

ProfileTable::ProfileTable(std::map<NodeId, BehavioralProfile> profiles) {
  for (auto& [node, p] : profiles) {
    index_[node] = static_cast<int>(nodes_.size());
    p.tag = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    profiles_.push_back(std::move(p));
  }
  std::size_t n = nodes_.size();
  pair_sim_.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    pair_sim_[i][i] = similarity(profiles_[i], profiles_[i]);
    for (std::size_t j = i + 1; j < n; ++j)
      pair_sim_[i][j] = pair_sim_[j][i] = similarity(profiles_[i], profiles_[j]);
  }
}

const BehavioralProfile* ProfileTable::find(const NodeId& node) const {
  auto it = index_.find(node);
  return it == index_.end() ? nullptr : &profiles_[it->second];
}

const BehavioralProfile& ProfileTable::profile(const NodeId& node) const {
  const BehavioralProfile* p = find(node);
  if (!p) throw InvalidArgument("no profile for node " + node);
  return *p;
}

double ProfileTable::pairwise(const NodeId& a, const NodeId& b) const {
  return pair_sim_[index_.at(a)][index_.at(b)];
}

SimilarityFn ProfileTable::similarity_fn() const {
  return [this](const BehavioralProfile& a, const BehavioralProfile& b) {
    if (a.tag >= 0 && b.tag >= 0) return pair_sim_[a.tag][b.tag];
    return similarity(a, b);
  };
}

std::map<NodeId, double> ProfileTable::sims_to_target(const TargetProfile& tp) const {
  std::map<NodeId, double> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    out[nodes_[i]] = similarity_to_target(profiles_[i], tp);
  return out;
}

std::shared_ptr<const ProfileTable> ProfileTable::from_trace(const Trace& trace,
                                                             double power_threshold) {
  std::map<NodeId, BehavioralProfile> profiles;
  int last_day = trace.num_days() - 1;
  for (const auto& node : trace.nodes) {
    auto dv = daily_location_vectors(trace, node, 0, last_day);
    if (dv.vectors.empty()) continue;
    profiles[node] = compute_profile(build_association_matrix(dv.vectors, dv.day_indices),
                                     power_threshold);
  }
  return std::make_shared<ProfileTable>(std::move(profiles));
}

// ---------------------------------------------------------------------------
// Protocol naming
// ---------------------------------------------------------------------------

const char* protocol_name(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Epidemic: return "epidemic";
    case ProtocolKind::RandomWalk: return "random_walk";
    case ProtocolKind::GroupSpreadOnly: return "group_spread_only";
    case ProtocolKind::CsiT: return "csit";
    case ProtocolKind::CsiD: return "csid";
    case ProtocolKind::OracleOptimal: return "oracle_optimal";
    case ProtocolKind::OracleSinglePath: return "oracle_single_path";
  }
  return "?";
}

ProtocolKind protocol_from_name(const std::string& name) {
  for (ProtocolKind k :
       {ProtocolKind::Epidemic, ProtocolKind::RandomWalk, ProtocolKind::GroupSpreadOnly,
        ProtocolKind::CsiT, ProtocolKind::CsiD, ProtocolKind::OracleOptimal,
        ProtocolKind::OracleSinglePath})
    if (name == protocol_name(k)) return k;
  throw InvalidArgument("unknown protocol: " + name);
}

// ---------------------------------------------------------------------------
// Receivers
// ---------------------------------------------------------------------------

std::set<NodeId> intended_receivers(const Scenario& scenario, const Message& msg) {
  if (scenario.kind == ScenarioKind::CsiD) return msg.receiver_set;
  std::set<NodeId> out;
  if (scenario.sim_to_tp) {
    for (const auto& [node, s] : *scenario.sim_to_tp)
      if (s > msg.target.th_sim) out.insert(node);
  } else {
    for (const auto& [node, s] : scenario.profiles->sims_to_target(msg.target))
      if (s > msg.target.th_sim) out.insert(node);
  }
  return out;
}

double sender_similarity(const Scenario& scenario, const Message& msg) {
  if (scenario.sim_to_tp) {
    auto it = scenario.sim_to_tp->find(msg.sender);
    if (it != scenario.sim_to_tp->end()) return it->second;
  }
  const BehavioralProfile* p = scenario.profiles->find(msg.sender);
  return p ? similarity_to_target(*p, msg.target) : 0.0;
}

// ---------------------------------------------------------------------------
// CsiTRun
// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<const std::map<NodeId, double>> tp_sims(const Scenario& scenario,
                                                        const Message& msg) {
  if (scenario.sim_to_tp) return scenario.sim_to_tp;
  return std::make_shared<const std::map<NodeId, double>>(
      scenario.profiles->sims_to_target(msg.target));
}

}  // namespace

CsiTRun::CsiTRun(const Scenario& scenario, const Message& msg, double th_sim,
                 bool privacy, CsiTVariant variant)
    : th_sim_(th_sim), privacy_(privacy), variant_(variant) {
  sims_ = tp_sims(scenario, msg);
  sim_to_tp_ = sims_.get();
  CsiTState& sender = mutable_state(msg.sender);
  sender.phase = csit_initial_phase(sender.my_sim_to_tp, th_sim_);
}

CsiTState& CsiTRun::mutable_state(const NodeId& node) {
  auto it = states_.find(node);
  if (it != states_.end()) return it->second;
  CsiTState s;
  auto sit = sim_to_tp_->find(node);
  s.my_sim_to_tp = sit != sim_to_tp_->end() ? sit->second : 0.0;
  return states_.emplace(node, s).first->second;
}

const CsiTState& CsiTRun::state(const NodeId& node) const {
  return const_cast<CsiTRun*>(this)->mutable_state(node);
}

void CsiTRun::process(const EncounterEvent& ev, std::vector<Action>& out) {
  csit_on_encounter(mutable_state(ev.node_a), mutable_state(ev.node_b), th_sim_,
                    privacy_, variant_, ev, out);
}

long long CsiTRun::payload_holders() const {
  long long n = 0;
  for (const auto& [node, s] : states_)
    if (s.phase == CsiTPhase::GradientAscend || s.phase == CsiTPhase::GroupSpread) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// CsiDRun
// ---------------------------------------------------------------------------

CsiDRun::CsiDRun(const Scenario& scenario, const Message& msg, const CsiDConfig& cfg)
    : scenario_(scenario), msg_(msg), cfg_(cfg), sim_(scenario.profiles->similarity_fn()) {
  CsiDState& sender = states_[msg.sender];
  sender.is_holder = true;
  sender.has_payload = true;
  if (const BehavioralProfile* bp = scenario.profiles->find(msg.sender))
    sender.known_holder_profiles.push_back(*bp);
  if (msg.receiver_set.contains(msg.sender)) sender.delivered = true;
}

const CsiDState& CsiDRun::state(const NodeId& node) const { return states_[node]; }

void CsiDRun::process(const EncounterEvent& ev, std::vector<Action>& out) {
  CsiDState& a = states_[ev.node_a];
  CsiDState& b = states_[ev.node_b];
  const BehavioralProfile* bp_a = scenario_.profiles->find(ev.node_a);
  const BehavioralProfile* bp_b = scenario_.profiles->find(ev.node_b);
  if (!bp_a || !bp_b) {
    // Unprofiled nodes take no part in holder logic; holders still serve them.
    auto deliver_only = [&](CsiDState& h, const NodeId& h_id, CsiDState& p,
                            const NodeId& p_id) {
      if (!h.is_holder || !msg_.receiver_set.contains(p_id) || p.delivered) return;
      if (!p.has_payload) out.push_back({ActionKind::TransmitMessage, h_id, p_id, ev.start});
      p.has_payload = true;
      p.delivered = true;
      out.push_back({ActionKind::Deliver, h_id, p_id, ev.start});
    };
    deliver_only(a, ev.node_a, b, ev.node_b);
    deliver_only(b, ev.node_b, a, ev.node_a);
    return;
  }
  csid_on_encounter(a, b, *bp_a, *bp_b, cfg_, msg_, sim_, ev, out);
}

long long CsiDRun::holder_count() const {
  long long n = 0;
  for (const auto& [node, s] : states_)
    if (s.is_holder) ++n;
  return n;
}

long long CsiDRun::payload_holders() const {
  long long n = 0;
  for (const auto& [node, s] : states_)
    if (s.has_payload) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// run_simulation
// ---------------------------------------------------------------------------

namespace {

struct MessageAccounting {
  std::map<NodeId, Timestamp> delivery;
  long long tx = 0;
  long long profile_exchanges = 0;
  long long holders_now = 0;
  long long peak_holders = 0;
};

void fold_actions(const std::vector<Action>& actions, MessageAccounting& acc) {
  for (const auto& a : actions) {
    switch (a.kind) {
      case ActionKind::TransmitMessage: ++acc.tx; break;
      case ActionKind::TransmitProfile:
      case ActionKind::TransmitHolderList: ++acc.profile_exchanges; break;
      case ActionKind::Deliver:
        acc.delivery.emplace(a.to, a.at);
        break;
      case ActionKind::ElectHolder:
        ++acc.holders_now;
        acc.peak_holders = std::max(acc.peak_holders, acc.holders_now);
        break;
      case ActionKind::CeaseHolder: --acc.holders_now; break;
      default: break;
    }
  }
}

}  // namespace

RunResult run_simulation(const Scenario& scenario, const ProtocolConfig& config,
                         std::uint64_t seed, bool record_actions) {
  bool tp_protocol = config.kind == ProtocolKind::CsiT ||
                     config.kind == ProtocolKind::GroupSpreadOnly ||
                     config.kind == ProtocolKind::OracleSinglePath;
  if (tp_protocol && scenario.kind != ScenarioKind::CsiT)
    throw InvalidArgument("TP-driven protocol requires a csit scenario");
  if (config.kind == ProtocolKind::CsiD && scenario.kind != ScenarioKind::CsiD)
    throw InvalidArgument("csid requires a csid scenario");

  RunResult result;
  Metrics& m = result.metrics;
  double delay_sum = 0.0;

  for (const Message& msg : scenario.messages) {
    std::set<NodeId> receivers = intended_receivers(scenario, msg);
    double th = msg.target.th_sim;
    MessageAccounting acc;
    acc.holders_now = 1;
    acc.peak_holders = 1;
    if (receivers.contains(msg.sender)) acc.delivery[msg.sender] = msg.created_at;

    std::vector<Action> buf;
    auto replay = [&](auto&& process_event) {
      for (const auto& ev : scenario.eval_stream->events) {
        if (ev.start < msg.created_at) continue;
        buf.clear();
        process_event(ev, buf);
        fold_actions(buf, acc);
        if (record_actions)
          result.actions.insert(result.actions.end(), buf.begin(), buf.end());
      }
    };

    long long storage = 0;
    switch (config.kind) {
      case ProtocolKind::Epidemic: {
        std::unordered_map<NodeId, EpidemicState> states;
        states[msg.sender].infected = true;
        replay([&](const EncounterEvent& ev, std::vector<Action>& out) {
          epidemic_on_encounter(states[ev.node_a], states[ev.node_b],
                                receivers.contains(ev.node_a),
                                receivers.contains(ev.node_b), ev, out);
        });
        storage = acc.tx;  // every recipient keeps a copy
        break;
      }
      case ProtocolKind::CsiT:
      case ProtocolKind::GroupSpreadOnly: {
        CsiTRun run(scenario, msg,
                    th, config.privacy,
                    config.kind == ProtocolKind::CsiT ? CsiTVariant::Full
                                                      : CsiTVariant::GroupSpreadOnly);
        replay([&](const EncounterEvent& ev, std::vector<Action>& out) {
          run.process(ev, out);
        });
        storage = run.payload_holders();
        break;
      }
      case ProtocolKind::CsiD: {
        CsiDRun run(scenario, msg, config.csid);
        replay([&](const EncounterEvent& ev, std::vector<Action>& out) {
          run.process(ev, out);
        });
        storage = run.holder_count();
        break;
      }
      case ProtocolKind::RandomWalk: {
        std::unordered_map<NodeId, RandomWalkState> states;
        // CsiD scenarios carry no TP; similarity only matters in CsiT mode.
        auto sims = scenario.kind == ScenarioKind::CsiT
                        ? tp_sims(scenario, msg)
                        : std::make_shared<const std::map<NodeId, double>>();
        auto sim_of = [&](const NodeId& n) {
          auto it = sims->find(n);
          return it != sims->end() ? it->second : 0.0;
        };
        RwMode mode =
            scenario.kind == ScenarioKind::CsiT ? RwMode::CsiT : RwMode::CsiD;
        RandomWalkState& sender = states[msg.sender];
        sender.has_payload = true;
        sender.copy_ttls.assign(config.rw.num_copies, config.rw.ttl);
        if (mode == RwMode::CsiT) {
          if (sim_of(msg.sender) > th) sender.spreading = true;
        } else {
          sender.holder = true;
        }
        if (receivers.contains(msg.sender)) sender.delivered = true;
        std::mt19937_64 rng(derive_seed(seed, "rw:" + scenario.id + ":" + msg.id));
        replay([&](const EncounterEvent& ev, std::vector<Action>& out) {
          random_walk_on_encounter(states[ev.node_a], states[ev.node_b], rng, config.rw,
                                   mode, sim_of(ev.node_a), sim_of(ev.node_b), th,
                                   receivers.contains(ev.node_a),
                                   receivers.contains(ev.node_b), ev, out);
        });
        for (const auto& [node, s] : states)
          if (s.has_payload) ++storage;
        break;
      }
      case ProtocolKind::OracleOptimal: {
        TransmissionPlan plan = oracle_optimal_plan(*scenario.eval_stream, msg, receivers);
        acc.tx = static_cast<long long>(plan.relays.size());
        for (const auto& [node, t] : plan.delivery_time) acc.delivery.emplace(node, t);
        storage = acc.tx;  // like epidemic, every recipient keeps the copy
        break;
      }
      case ProtocolKind::OracleSinglePath: {
        auto sims = tp_sims(scenario, msg);
        TransmissionPlan plan =
            oracle_single_path_plan(*scenario.eval_stream, msg, *sims, th);
        acc.tx = static_cast<long long>(plan.relays.size());
        for (const auto& [node, t] : plan.delivery_time)
          if (receivers.contains(node)) acc.delivery.emplace(node, t);
        if (receivers.contains(msg.sender)) acc.delivery.emplace(msg.sender, msg.created_at);
        storage = static_cast<long long>(plan.delivery_time.size());
        break;
      }
    }

    m.intended += receivers.size();
    m.transmission_overhead += acc.tx;
    m.profile_exchange_count += acc.profile_exchanges;
    m.storage_overhead += storage;
    m.peak_storage += std::max(acc.peak_holders, storage);
    for (const auto& [node, t] : acc.delivery) {
      if (!receivers.contains(node)) continue;
      ++m.delivered;
      delay_sum += static_cast<double>(t - msg.created_at);
    }
    std::map<NodeId, Timestamp> times;
    for (const auto& [node, t] : acc.delivery)
      if (receivers.contains(node)) times[node] = t;
    result.delivery_times[msg.id] = std::move(times);
  }

  m.delivery_ratio =
      m.intended > 0 ? static_cast<double>(m.delivered) / static_cast<double>(m.intended)
                     : 0.0;
  if (m.delivered > 0) m.avg_delay_s = delay_sum / static_cast<double>(m.delivered);
  return result;
}

// ---------------------------------------------------------------------------
// Scenario construction
// ---------------------------------------------------------------------------

CsiTScenarioSet build_csit_scenarios(std::shared_ptr<const ProfileTable> profiles,
                                     std::shared_ptr<const EncounterStream> eval_stream,
                                     int k, int senders_per_tp, double th_sim,
                                     std::uint64_t seed) {
  if (k <= 0 || senders_per_tp <= 0)
    throw InvalidArgument("k and senders_per_tp must be positive");
  CsiTScenarioSet out;
  const auto& nodes = profiles->nodes();
  Timestamp t0 = eval_stream->events.empty() ? 0 : eval_stream->events.front().start;

  std::set<NodeId> remaining(nodes.begin(), nodes.end());
  std::mt19937_64 rng(derive_seed(seed, "csit-senders"));
  std::uniform_int_distribution<std::size_t> pick(0, nodes.empty() ? 0 : nodes.size() - 1);

  for (int c = 0; c < k && !remaining.empty(); ++c) {
    // Greedy dominant profile: the user with the most >th_sim neighbors left.
    NodeId best;
    std::size_t best_count = 0;
    bool first = true;
    for (const auto& u : remaining) {
      std::size_t count = 0;
      for (const auto& v : remaining)
        if (u != v && profiles->pairwise(u, v) > th_sim) ++count;
      if (first || count > best_count) {
        best = u;
        best_count = count;
        first = false;
      }
    }
    std::set<NodeId> cluster{best};
    for (const auto& v : remaining)
      if (v != best && profiles->pairwise(best, v) > th_sim) cluster.insert(v);
    for (const auto& v : cluster) remaining.erase(v);

    const BehavioralProfile& bp = profiles->profile(best);
    TargetProfile tp;
    tp.th_sim = th_sim;
    for (std::size_t i = 0; i < bp.location_keys.size(); ++i)
      if (bp.vectors[0][i] != 0.0) tp.entries[bp.location_keys[i]] = bp.vectors[0][i];

    auto sims = std::make_shared<const std::map<NodeId, double>>(
        profiles->sims_to_target(tp));
    bool any_receiver = false;
    for (const auto& [node, s] : *sims)
      if (s > th_sim) { any_receiver = true; break; }
    if (!any_receiver) continue;  // vacuous TP, skip

    ++out.clusters_found;
    out.target_profiles.push_back(tp);
    out.cluster_members.push_back(cluster);
    int tp_index = static_cast<int>(out.target_profiles.size()) - 1;
    for (int s = 0; s < senders_per_tp; ++s) {
      Scenario sc;
      sc.kind = ScenarioKind::CsiT;
      sc.id = "csit-tp" + std::to_string(tp_index) + "-s" + std::to_string(s);
      sc.profiles = profiles;
      sc.eval_stream = eval_stream;
      sc.sim_to_tp = sims;
      Message msg;
      msg.id = sc.id + "-m0";
      msg.sender = nodes[pick(rng)];
      msg.created_at = t0;
      msg.target = tp;
      sc.messages.push_back(std::move(msg));
      out.scenarios.push_back(std::move(sc));
    }
  }
  return out;
}

std::vector<Scenario> build_csid_scenarios(std::shared_ptr<const ProfileTable> profiles,
                                           std::shared_ptr<const EncounterStream> eval_stream,
                                           int num_senders, int receivers_per_msg,
                                           std::uint64_t seed) {
  const auto& nodes = profiles->nodes();
  if (num_senders <= 0 || receivers_per_msg <= 0)
    throw InvalidArgument("num_senders and receivers_per_msg must be positive");
  if (receivers_per_msg > static_cast<int>(nodes.size()))
    throw InvalidArgument("receivers_per_msg exceeds node count");
  Timestamp t0 = eval_stream->events.empty() ? 0 : eval_stream->events.front().start;

  std::mt19937_64 rng(derive_seed(seed, "csid-scenarios"));
  std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
  std::vector<Scenario> out;
  for (int s = 0; s < num_senders; ++s) {
    Scenario sc;
    sc.kind = ScenarioKind::CsiD;
    sc.id = "csid-s" + std::to_string(s);
    sc.profiles = profiles;
    sc.eval_stream = eval_stream;
    Message msg;
    msg.id = sc.id + "-m0";
    msg.sender = nodes[pick(rng)];
    msg.created_at = t0;
    // Receivers are orthogonal to behavior: uniform without replacement.
    std::vector<NodeId> pool(nodes.begin(), nodes.end());
    for (int r = 0; r < receivers_per_msg; ++r) {
      std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
      std::size_t i = d(rng);
      msg.receiver_set.insert(pool[i]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    }
    sc.messages.push_back(std::move(msg));
    out.push_back(std::move(sc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics post-processing
// ---------------------------------------------------------------------------

NormalizedMetrics normalize_metrics(const Metrics& m, const Metrics& baseline) {
  NormalizedMetrics out;
  if (baseline.delivery_ratio > 0.0) out.delivery_ratio = m.delivery_ratio / baseline.delivery_ratio;
  if (baseline.avg_delay_s > 0.0 && !std::isnan(m.avg_delay_s))
    out.avg_delay = m.avg_delay_s / baseline.avg_delay_s;
  if (baseline.transmission_overhead > 0)
    out.transmission_overhead = static_cast<double>(m.transmission_overhead) /
                                static_cast<double>(baseline.transmission_overhead);
  if (baseline.storage_overhead > 0)
    out.storage_overhead = static_cast<double>(m.storage_overhead) /
                           static_cast<double>(baseline.storage_overhead);
  return out;
}

double avg_delay_common(const RunResult& run, const RunResult& baseline,
                        const std::vector<Message>& messages) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& msg : messages) {
    auto rit = run.delivery_times.find(msg.id);
    auto bit = baseline.delivery_times.find(msg.id);
    if (rit == run.delivery_times.end() || bit == baseline.delivery_times.end()) continue;
    for (const auto& [node, t] : rit->second) {
      if (!bit->second.contains(node)) continue;
      sum += static_cast<double>(t - msg.created_at);
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n)
               : std::numeric_limits<double>::quiet_NaN();
}

std::vector<SenderSimilarityBin> split_stats_by_sender_similarity(
    const std::vector<SenderSimilarityRun>& runs, double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0))
    throw InvalidArgument("bin_width must lie in (0,1]");
  int num_bins = static_cast<int>(std::ceil(1.0 / bin_width - 1e-9));
  struct Acc {
    std::vector<double> ratios;
    std::vector<double> delays;
  };
  std::vector<Acc> acc(num_bins);
  for (const auto& r : runs) {
    int b = std::min(num_bins - 1, static_cast<int>(r.sender_sim / bin_width));
    acc[b].ratios.push_back(r.metrics.delivery_ratio);
    if (!std::isnan(r.metrics.avg_delay_s)) acc[b].delays.push_back(r.metrics.avg_delay_s);
  }
  auto mean_ci = [](const std::vector<double>& xs, double& mean, double& ci) {
    mean = 0.0;
    ci = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    ci = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
  };
  std::vector<SenderSimilarityBin> out;
  for (int b = 0; b < num_bins; ++b) {
    if (acc[b].ratios.empty()) continue;  // empty bins omitted
    SenderSimilarityBin bin;
    bin.bin_lo = b * bin_width;
    bin.bin_hi = std::min(1.0, (b + 1) * bin_width);
    bin.run_count = acc[b].ratios.size();
    bin.delay_count = acc[b].delays.size();
    mean_ci(acc[b].ratios, bin.mean_delivery_ratio, bin.ci_delivery_ratio);
    mean_ci(acc[b].delays, bin.mean_delay_s, bin.ci_delay_s);
    out.push_back(bin);
  }
  return out;
}

}  // namespace csi
