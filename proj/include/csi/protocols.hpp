#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "csi/encounter.hpp"
#include "csi/profile.hpp"

namespace csi {

/// In-flight message. Exactly one of {target (CSI:T), receiver_set (CSI:D)}
/// defines the intended receivers, depending on the scenario kind.
struct Message {
  std::string id;
  NodeId sender;
  Timestamp created_at = 0;
  TargetProfile target;
  std::set<NodeId> receiver_set;
  std::size_t payload_size = 0;
};

enum class ActionKind {
  TransmitMessage,
  TransmitProfile,
  TransmitTpAndScore,
  TransmitHolderList,
  ElectHolder,
  CeaseHolder,
  SetHolderInGroup,
  Deliver,
};

struct Action {
  ActionKind kind;
  NodeId from;
  NodeId to;
  Timestamp at = 0;
};

// ---------------------------------------------------------------------------
// CSI:T
// ---------------------------------------------------------------------------

enum class CsiTPhase { Idle, GradientAscend, GroupSpread, DoneForwarded };

struct CsiTState {
  CsiTPhase phase = CsiTPhase::Idle;
  double my_sim_to_tp = 0.0;
};

enum class CsiTVariant { Full, GroupSpreadOnly };

/// One encounter transition for CSI:T (or the group-spread-only baseline).
/// An ascend holder hands its single copy to a strictly more TP-similar peer
/// (group-spread-only: only to a peer above th_sim); group-spread members
/// copy to any peer above th_sim. Handshake actions are emitted only when a
/// held message makes a comparison necessary.
void csit_on_encounter(CsiTState& a, CsiTState& b, double th_sim, bool privacy,
                       CsiTVariant variant, const EncounterEvent& ev,
                       std::vector<Action>& actions);

inline void group_spread_only_on_encounter(CsiTState& a, CsiTState& b, double th_sim,
                                           bool privacy, const EncounterEvent& ev,
                                           std::vector<Action>& actions) {
  csit_on_encounter(a, b, th_sim, privacy, CsiTVariant::GroupSpreadOnly, ev, actions);
}

/// Initial phase for a node holding the message.
inline CsiTPhase csit_initial_phase(double sim_to_tp, double th_sim) {
  return sim_to_tp > th_sim ? CsiTPhase::GroupSpread : CsiTPhase::GradientAscend;
}

/// Privacy handshake: the holder reveals only the TP and its own score; the
/// peer computes its similarity locally and decides whether to request the
/// message. Message flow is identical to the profile-exchange handshake.
struct PeerDecision {
  bool request_message = false;
  bool enters_group_spread = false;
  double peer_score = 0.0;
};

PeerDecision privacy_handshake_csit(double holder_score, const TargetProfile& tp,
                                    const BehavioralProfile& peer_bp,
                                    bool holder_in_spread_phase);

// ---------------------------------------------------------------------------
// CSI:D
// ---------------------------------------------------------------------------

struct CsiDConfig {
  double th_fwd = 0.3;
  double th_nbr = 0.7;
};

struct CsiDState {
  bool is_holder = false;
  std::vector<BehavioralProfile> known_holder_profiles;
  bool holder_in_group = false;
  bool has_payload = false;   // holders and delivered receivers
  bool delivered = false;     // intended receiver got the payload
};

using SimilarityFn = std::function<double(const BehavioralProfile&, const BehavioralProfile&)>;

/// One encounter transition for CSI:D. Holder vs non-holder: deliver to an
/// intended receiver, then either elect the peer (dissimilar to every known
/// holder and not flagged) or set its holder_in_group flag (similar to some
/// known holder). Holder vs holder: one ceases when mutually similar
/// (lexicographically larger token), otherwise the lists are synced.
/// Flagged non-holders propagate the flag to similar peers.
void csid_on_encounter(CsiDState& a, CsiDState& b, const BehavioralProfile& bp_a,
                       const BehavioralProfile& bp_b, const CsiDConfig& cfg,
                       const Message& msg, const SimilarityFn& sim,
                       const EncounterEvent& ev, std::vector<Action>& actions);

/// Stable identity of a holder-list entry (profile table tag when available,
/// serialized text otherwise). Used for list union/equality.
std::string holder_profile_key(const BehavioralProfile& p);

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

struct EpidemicState {
  bool infected = false;
  bool delivered = false;
};

void epidemic_on_encounter(EpidemicState& a, EpidemicState& b, bool a_is_receiver,
                           bool b_is_receiver, const EncounterEvent& ev,
                           std::vector<Action>& actions);

struct RandomWalkConfig {
  int num_copies = 3;
  int ttl = 5;
  double transfer_probability = 0.5;
};

enum class RwMode { CsiT, CsiD };

struct RandomWalkState {
  std::vector<int> copy_ttls;  // remaining hop budget per held copy
  bool spreading = false;      // CsiT: group spread triggered here
  bool holder = false;         // CsiD: visited by a copy
  bool has_payload = false;
  bool delivered = false;
};

/// Each held copy is offered to the peer with the configured probability
/// (one rng draw per held copy per encounter); a transfer decrements the
/// TTL. CsiT mode: a copy reaching a node above th_sim converts into group
/// spread. CsiD mode: every visited node becomes a message holder and serves
/// intended receivers it meets.
void random_walk_on_encounter(RandomWalkState& a, RandomWalkState& b,
                              std::mt19937_64& rng, const RandomWalkConfig& cfg,
                              RwMode mode, double sim_a_to_tp, double sim_b_to_tp,
                              double th_sim, bool a_is_receiver, bool b_is_receiver,
                              const EncounterEvent& ev, std::vector<Action>& actions);

// ---------------------------------------------------------------------------
// Future-knowledge oracles
// ---------------------------------------------------------------------------

struct RelayEdge {
  NodeId from;
  NodeId to;
  Timestamp at = 0;

  auto operator<=>(const RelayEdge&) const = default;
};

struct TransmissionPlan {
  std::vector<RelayEdge> relays;               // union of path edges
  std::map<NodeId, Timestamp> delivery_time;   // per reached receiver
  std::set<NodeId> undelivered;
  std::size_t transmission_overhead() const { return relays.size(); }
};

/// Earliest-arrival relay tree over the full stream: one earliest-arrival
/// path per reachable receiver (tie-break: fewer hops, then lexicographically
/// smallest relay sequence); the plan is the union of their edges.
TransmissionPlan oracle_optimal_plan(const EncounterStream& stream, const Message& msg,
                                     const std::set<NodeId>& receivers);

/// Earliest-arrival path from the sender to any node with
/// sim_to_tp > th_sim, followed by a standard group spread simulated forward
/// over the stream. Receivers are the nodes above th_sim.
TransmissionPlan oracle_single_path_plan(const EncounterStream& stream,
                                         const Message& msg,
                                         const std::map<NodeId, double>& sim_to_tp,
                                         double th_sim);

/// Earliest arrival times from (msg.sender, msg.created_at) for every node,
/// processing events pointwise at start time in stream order. This is the
/// delivery-time profile of epidemic routing.
std::map<NodeId, Timestamp> earliest_arrival_times(const EncounterStream& stream,
                                                   const NodeId& sender,
                                                   Timestamp created_at);

/// Parses fixture scripts of lines "t,node_a,node_b" into an encounter
/// stream (unit-duration events at a synthetic location).
EncounterStream parse_encounter_script(const std::string& text);

}  // namespace csi
