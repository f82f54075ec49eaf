#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <unordered_map>

#include "csi/protocols.hpp"

namespace csi {

/// Immutable per-node profile set with a precomputed pairwise similarity
/// matrix. Profiles are tagged with their index so protocol code can memoize
/// similarity lookups.
class ProfileTable {
 public:
  explicit ProfileTable(std::map<NodeId, BehavioralProfile> profiles);

  const std::vector<NodeId>& nodes() const { return nodes_; }
  const BehavioralProfile* find(const NodeId& node) const;
  const BehavioralProfile& profile(const NodeId& node) const;
  double pairwise(const NodeId& a, const NodeId& b) const;
  /// Similarity function that resolves tagged profiles through the cached
  /// matrix and computes everything else directly.
  SimilarityFn similarity_fn() const;
  std::map<NodeId, double> sims_to_target(const TargetProfile& tp) const;

  /// Profiles from the first `fraction` of the trace for every node with
  /// history there.
  static std::shared_ptr<const ProfileTable> from_trace(const Trace& trace,
                                                        double power_threshold = 0.9);

 private:
  std::vector<NodeId> nodes_;
  std::vector<BehavioralProfile> profiles_;
  std::map<NodeId, int> index_;
  std::vector<std::vector<double>> pair_sim_;
};

enum class ScenarioKind { CsiT, CsiD };

/// Profiles come exclusively from the first trace half; the eval stream from
/// the second.
struct Scenario {
  ScenarioKind kind = ScenarioKind::CsiT;
  std::string id;
  std::vector<Message> messages;
  std::shared_ptr<const ProfileTable> profiles;
  std::shared_ptr<const EncounterStream> eval_stream;
  // CsiT only: cached node -> similarity_to_target for the message TP.
  std::shared_ptr<const std::map<NodeId, double>> sim_to_tp;
};

enum class ProtocolKind {
  Epidemic,
  RandomWalk,
  GroupSpreadOnly,
  CsiT,
  CsiD,
  OracleOptimal,
  OracleSinglePath,
};

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::Epidemic;
  double th_sim = 0.8;
  CsiDConfig csid;
  RandomWalkConfig rw;
  bool privacy = false;
};

const char* protocol_name(ProtocolKind kind);
ProtocolKind protocol_from_name(const std::string& name);

struct Metrics {
  double delivery_ratio = 0.0;
  double avg_delay_s = std::numeric_limits<double>::quiet_NaN();
  long long transmission_overhead = 0;
  long long storage_overhead = 0;
  long long peak_storage = 0;
  long long profile_exchange_count = 0;
  std::size_t intended = 0;
  std::size_t delivered = 0;
};

struct RunResult {
  Metrics metrics;
  // Per message id: receiver -> delivery timestamp.
  std::map<std::string, std::map<NodeId, Timestamp>> delivery_times;
  std::vector<Action> actions;  // populated when record_actions was requested
};

/// Replays the scenario's eval stream through the selected protocol.
/// Deterministic for fixed (scenario, config, seed).
RunResult run_simulation(const Scenario& scenario, const ProtocolConfig& config,
                         std::uint64_t seed, bool record_actions = false);

/// Intended receivers of a message within a scenario (CsiT: nodes above
/// th_sim to the TP; CsiD: the explicit receiver set).
std::set<NodeId> intended_receivers(const Scenario& scenario, const Message& msg);

// ---------------------------------------------------------------------------
// Steppable per-message protocol runs (used by run_simulation; exposed so
// tests can check invariants after every event).
// ---------------------------------------------------------------------------

class CsiTRun {
 public:
  CsiTRun(const Scenario& scenario, const Message& msg, double th_sim, bool privacy,
          CsiTVariant variant);
  void process(const EncounterEvent& ev, std::vector<Action>& out);
  const CsiTState& state(const NodeId& node) const;
  long long payload_holders() const;

 private:
  CsiTState& mutable_state(const NodeId& node);

  double th_sim_;
  bool privacy_;
  CsiTVariant variant_;
  mutable std::unordered_map<NodeId, CsiTState> states_;
  std::shared_ptr<const std::map<NodeId, double>> sims_;
  const std::map<NodeId, double>* sim_to_tp_ = nullptr;
};

class CsiDRun {
 public:
  CsiDRun(const Scenario& scenario, const Message& msg, const CsiDConfig& cfg);
  void process(const EncounterEvent& ev, std::vector<Action>& out);
  const CsiDState& state(const NodeId& node) const;
  long long holder_count() const;
  long long payload_holders() const;

 private:
  const Scenario& scenario_;
  const Message& msg_;
  CsiDConfig cfg_;
  SimilarityFn sim_;
  mutable std::unordered_map<NodeId, CsiDState> states_;
};

// ---------------------------------------------------------------------------
// Scenario construction
// ---------------------------------------------------------------------------

struct CsiTScenarioSet {
  std::vector<Scenario> scenarios;
  std::vector<TargetProfile> target_profiles;     // one per dominant cluster used
  std::vector<std::set<NodeId>> cluster_members;  // greedy clusters, aligned
  std::size_t clusters_found = 0;                 // may be < requested k
};

/// Dominant target profiles by greedy clustering: repeatedly take the user
/// with the most >th_sim neighbors, use its leading eigen-behavior vector as
/// a TP, and remove its cluster. For each TP, senders_per_tp senders are
/// drawn uniformly (seeded). TPs whose receiver set is empty are skipped.
CsiTScenarioSet build_csit_scenarios(std::shared_ptr<const ProfileTable> profiles,
                                     std::shared_ptr<const EncounterStream> eval_stream,
                                     int k, int senders_per_tp, double th_sim,
                                     std::uint64_t seed);

std::vector<Scenario> build_csid_scenarios(std::shared_ptr<const ProfileTable> profiles,
                                           std::shared_ptr<const EncounterStream> eval_stream,
                                           int num_senders, int receivers_per_msg,
                                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics post-processing
// ---------------------------------------------------------------------------

/// Field-wise ratios against a baseline run (normally epidemic). Fields with
/// a zero baseline are NaN (reported as not applicable).
struct NormalizedMetrics {
  double delivery_ratio = std::numeric_limits<double>::quiet_NaN();
  double avg_delay = std::numeric_limits<double>::quiet_NaN();
  double transmission_overhead = std::numeric_limits<double>::quiet_NaN();
  double storage_overhead = std::numeric_limits<double>::quiet_NaN();
};

NormalizedMetrics normalize_metrics(const Metrics& m, const Metrics& baseline);

/// Mean delay over receivers delivered by both runs, seconds. NaN when the
/// common set is empty.
double avg_delay_common(const RunResult& run, const RunResult& baseline,
                        const std::vector<Message>& messages);

struct SenderSimilarityBin {
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  std::size_t run_count = 0;
  double mean_delivery_ratio = 0.0;
  double ci_delivery_ratio = 0.0;  // 95% half-width, normal approximation
  double mean_delay_s = 0.0;
  double ci_delay_s = 0.0;
  std::size_t delay_count = 0;  // runs with a defined delay
};

struct SenderSimilarityRun {
  double sender_sim = 0.0;
  Metrics metrics;
};

std::vector<SenderSimilarityBin> split_stats_by_sender_similarity(
    const std::vector<SenderSimilarityRun>& runs, double bin_width = 0.2);

/// Sender's similarity to the scenario's TP (CsiT scenarios).
double sender_similarity(const Scenario& scenario, const Message& msg);

}  // namespace csi
