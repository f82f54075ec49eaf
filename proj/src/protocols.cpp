#include "csi/protocols.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace csi {

namespace {

void emit(std::vector<Action>& actions, ActionKind kind, const NodeId& from,
          const NodeId& to, Timestamp at) {
  actions.push_back({kind, from, to, at});
}

bool csit_has_copy(const CsiTState& s) {
  return s.phase == CsiTPhase::GradientAscend || s.phase == CsiTPhase::GroupSpread;
}

// Handshake for a holder comparing against a peer. In private mode the
// holder pushes the TP and its own score; otherwise it pulls the peer's
// profile.
void csit_handshake(const NodeId& holder, const NodeId& peer, bool privacy,
                    Timestamp at, std::vector<Action>& actions) {
  if (privacy)
    emit(actions, ActionKind::TransmitTpAndScore, holder, peer, at);
  else
    emit(actions, ActionKind::TransmitProfile, peer, holder, at);
}

void csit_holder_vs_peer(CsiTState& holder, const NodeId& holder_id, CsiTState& peer,
                         const NodeId& peer_id, double th_sim, bool privacy,
                         CsiTVariant variant, Timestamp at,
                         std::vector<Action>& actions) {
  if (csit_has_copy(peer)) return;  // peer already has the message
  csit_handshake(holder_id, peer_id, privacy, at, actions);
  if (holder.phase == CsiTPhase::GradientAscend) {
    bool transfer = variant == CsiTVariant::Full
                        ? peer.my_sim_to_tp > holder.my_sim_to_tp
                        : peer.my_sim_to_tp > th_sim;
    if (!transfer) return;
    emit(actions, ActionKind::TransmitMessage, holder_id, peer_id, at);
    holder.phase = CsiTPhase::DoneForwarded;
    peer.phase = csit_initial_phase(peer.my_sim_to_tp, th_sim);
    if (peer.phase == CsiTPhase::GroupSpread)
      emit(actions, ActionKind::Deliver, holder_id, peer_id, at);
  } else {  // GroupSpread
    if (peer.my_sim_to_tp > th_sim) {
      emit(actions, ActionKind::TransmitMessage, holder_id, peer_id, at);
      emit(actions, ActionKind::Deliver, holder_id, peer_id, at);
      peer.phase = CsiTPhase::GroupSpread;
    }
  }
}

}  // namespace

void csit_on_encounter(CsiTState& a, CsiTState& b, double th_sim, bool privacy,
                       CsiTVariant variant, const EncounterEvent& ev,
                       std::vector<Action>& actions) {
  if (csit_has_copy(a))
    csit_holder_vs_peer(a, ev.node_a, b, ev.node_b, th_sim, privacy, variant,
                        ev.start, actions);
  else if (csit_has_copy(b))
    csit_holder_vs_peer(b, ev.node_b, a, ev.node_a, th_sim, privacy, variant,
                        ev.start, actions);
}

PeerDecision privacy_handshake_csit(double holder_score, const TargetProfile& tp,
                                    const BehavioralProfile& peer_bp,
                                    bool holder_in_spread_phase) {
  PeerDecision d;
  d.peer_score = similarity_to_target(peer_bp, tp);
  d.request_message = holder_in_spread_phase ? d.peer_score > tp.th_sim
                                             : d.peer_score > holder_score;
  d.enters_group_spread = d.request_message && d.peer_score > tp.th_sim;
  return d;
}

// ---------------------------------------------------------------------------
// CSI:D
// ---------------------------------------------------------------------------

std::string holder_profile_key(const BehavioralProfile& p) {
  if (p.tag >= 0) return "#" + std::to_string(p.tag);
  return profile_to_text(p);
}

namespace {

bool holder_list_contains(const CsiDState& s, const BehavioralProfile& p) {
  std::string key = holder_profile_key(p);
  for (const auto& h : s.known_holder_profiles)
    if (holder_profile_key(h) == key) return true;
  return false;
}

void holder_list_add(CsiDState& s, const BehavioralProfile& p) {
  if (!holder_list_contains(s, p)) s.known_holder_profiles.push_back(p);
}

// Union both lists, keeping each side's entries in a deterministic order
// (sorted by key) so synced holders hold equal lists.
bool sync_holder_lists(CsiDState& a, CsiDState& b) {
  std::map<std::string, const BehavioralProfile*> merged;
  for (const auto& h : a.known_holder_profiles) merged.emplace(holder_profile_key(h), &h);
  for (const auto& h : b.known_holder_profiles) merged.emplace(holder_profile_key(h), &h);
  bool changed = merged.size() != a.known_holder_profiles.size() ||
                 merged.size() != b.known_holder_profiles.size();
  std::vector<BehavioralProfile> list;
  list.reserve(merged.size());
  for (const auto& [key, p] : merged) list.push_back(*p);
  a.known_holder_profiles = list;
  b.known_holder_profiles = std::move(list);
  return changed;
}

void csid_deliver_if_receiver(CsiDState& /*holder*/, const NodeId& holder_id,
                              CsiDState& peer, const NodeId& peer_id,
                              const Message& msg, Timestamp at,
                              std::vector<Action>& actions) {
  if (!msg.receiver_set.contains(peer_id) || peer.delivered) return;
  if (!peer.has_payload)
    emit(actions, ActionKind::TransmitMessage, holder_id, peer_id, at);
  peer.has_payload = true;
  peer.delivered = true;
  emit(actions, ActionKind::Deliver, holder_id, peer_id, at);
}

void csid_holder_vs_nonholder(CsiDState& holder, const NodeId& holder_id,
                              CsiDState& peer, const NodeId& peer_id,
                              const BehavioralProfile& peer_bp, const CsiDConfig& cfg,
                              const Message& msg, const SimilarityFn& sim,
                              Timestamp at, std::vector<Action>& actions) {
  // Delivery and election are independent decisions, delivery first.
  csid_deliver_if_receiver(holder, holder_id, peer, peer_id, msg, at, actions);

  emit(actions, ActionKind::TransmitProfile, peer_id, holder_id, at);
  bool dissimilar_to_all = true;
  bool near_some = false;
  for (const auto& h : holder.known_holder_profiles) {
    double s = sim(peer_bp, h);
    if (s >= cfg.th_fwd) dissimilar_to_all = false;
    if (s > cfg.th_nbr) near_some = true;
  }
  if (dissimilar_to_all && !peer.holder_in_group) {
    emit(actions, ActionKind::ElectHolder, holder_id, peer_id, at);
    if (!peer.has_payload) {
      emit(actions, ActionKind::TransmitMessage, holder_id, peer_id, at);
      peer.has_payload = true;
    }
    holder_list_add(holder, peer_bp);
    peer.known_holder_profiles = holder.known_holder_profiles;
    peer.is_holder = true;
    emit(actions, ActionKind::TransmitHolderList, holder_id, peer_id, at);
  } else if (near_some && !peer.holder_in_group) {
    peer.holder_in_group = true;
    emit(actions, ActionKind::SetHolderInGroup, holder_id, peer_id, at);
  }
}

}  // namespace

void csid_on_encounter(CsiDState& a, CsiDState& b, const BehavioralProfile& bp_a,
                       const BehavioralProfile& bp_b, const CsiDConfig& cfg,
                       const Message& msg, const SimilarityFn& sim,
                       const EncounterEvent& ev, std::vector<Action>& actions) {
  Timestamp at = ev.start;
  if (a.is_holder && b.is_holder) {
    csid_deliver_if_receiver(a, ev.node_a, b, ev.node_b, msg, at, actions);
    csid_deliver_if_receiver(b, ev.node_b, a, ev.node_a, msg, at, actions);
    if (sim(bp_a, bp_b) > cfg.th_nbr) {
      // One of them ceases; the lexicographically larger token drops out.
      CsiDState& ceaser = ev.node_a < ev.node_b ? b : a;
      const NodeId& ceaser_id = ev.node_a < ev.node_b ? ev.node_b : ev.node_a;
      const NodeId& other_id = ev.node_a < ev.node_b ? ev.node_a : ev.node_b;
      ceaser.is_holder = false;
      ceaser.has_payload = ceaser.delivered;  // ceasing holders drop the payload
      ceaser.holder_in_group = true;          // it just met a holder in its neighborhood
      emit(actions, ActionKind::CeaseHolder, ceaser_id, other_id, at);
    } else {
      if (sync_holder_lists(a, b)) {
        emit(actions, ActionKind::TransmitHolderList, ev.node_a, ev.node_b, at);
        emit(actions, ActionKind::TransmitHolderList, ev.node_b, ev.node_a, at);
      }
    }
  } else if (a.is_holder) {
    csid_holder_vs_nonholder(a, ev.node_a, b, ev.node_b, bp_b, cfg, msg, sim, at,
                             actions);
  } else if (b.is_holder) {
    csid_holder_vs_nonholder(b, ev.node_b, a, ev.node_a, bp_a, cfg, msg, sim, at,
                             actions);
  } else {
    // Flag propagation between similar non-holders.
    if ((a.holder_in_group || b.holder_in_group) &&
        !(a.holder_in_group && b.holder_in_group)) {
      if (sim(bp_a, bp_b) > cfg.th_nbr) {
        if (a.holder_in_group) {
          b.holder_in_group = true;
          emit(actions, ActionKind::SetHolderInGroup, ev.node_a, ev.node_b, at);
        } else {
          a.holder_in_group = true;
          emit(actions, ActionKind::SetHolderInGroup, ev.node_b, ev.node_a, at);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

void epidemic_on_encounter(EpidemicState& a, EpidemicState& b, bool a_is_receiver,
                           bool b_is_receiver, const EncounterEvent& ev,
                           std::vector<Action>& actions) {
  if (a.infected == b.infected) return;
  EpidemicState& dst = a.infected ? b : a;
  const NodeId& src_id = a.infected ? ev.node_a : ev.node_b;
  const NodeId& dst_id = a.infected ? ev.node_b : ev.node_a;
  bool dst_is_receiver = a.infected ? b_is_receiver : a_is_receiver;
  emit(actions, ActionKind::TransmitMessage, src_id, dst_id, ev.start);
  dst.infected = true;
  if (dst_is_receiver && !dst.delivered) {
    dst.delivered = true;
    emit(actions, ActionKind::Deliver, src_id, dst_id, ev.start);
  }
}

namespace {

void rw_copy_arrives(RandomWalkState& s, const NodeId& id, const NodeId& from_id,
                     int ttl, RwMode mode, double sim_to_tp, double th_sim,
                     bool is_receiver, Timestamp at, std::vector<Action>& actions) {
  s.has_payload = true;
  if (mode == RwMode::CsiT) {
    if (sim_to_tp > th_sim && !s.spreading) {
      s.spreading = true;  // the copy converts into group spread
      if (!s.delivered) {
        s.delivered = true;
        emit(actions, ActionKind::Deliver, from_id, id, at);
      }
      return;
    }
    s.copy_ttls.push_back(ttl);
  } else {
    s.holder = true;
    if (is_receiver && !s.delivered) {
      s.delivered = true;
      emit(actions, ActionKind::Deliver, from_id, id, at);
    }
    s.copy_ttls.push_back(ttl);
  }
}

void rw_offer_copies(RandomWalkState& from, const NodeId& from_id, const NodeId& to_id,
                     std::size_t held_snapshot, std::mt19937_64& rng,
                     const RandomWalkConfig& cfg, Timestamp at,
                     std::vector<Action>& actions, std::vector<int>& arriving) {
  std::bernoulli_distribution transfer(cfg.transfer_probability);
  std::size_t kept = 0;
  bool moved = false;  // a peer needs only one copy; at most one moves per encounter
  for (std::size_t i = 0; i < held_snapshot; ++i) {
    int ttl = from.copy_ttls[i];
    bool wants = ttl > 0 && transfer(rng);
    if (wants && !moved) {
      moved = true;
      emit(actions, ActionKind::TransmitMessage, from_id, to_id, at);
      arriving.push_back(ttl - 1);
    } else {
      from.copy_ttls[kept++] = ttl;
    }
  }
  // Copies beyond the snapshot (arrived during this encounter) stay.
  for (std::size_t i = held_snapshot; i < from.copy_ttls.size(); ++i)
    from.copy_ttls[kept++] = from.copy_ttls[i];
  from.copy_ttls.resize(kept);
}

}  // namespace

void random_walk_on_encounter(RandomWalkState& a, RandomWalkState& b,
                              std::mt19937_64& rng, const RandomWalkConfig& cfg,
                              RwMode mode, double sim_a_to_tp, double sim_b_to_tp,
                              double th_sim, bool a_is_receiver, bool b_is_receiver,
                              const EncounterEvent& ev, std::vector<Action>& actions) {
  Timestamp at = ev.start;
  // CsiT: spreading nodes copy to any peer above th_sim.
  if (mode == RwMode::CsiT) {
    auto spread = [&](RandomWalkState& m, const NodeId& m_id, RandomWalkState& p,
                      const NodeId& p_id, double p_sim) {
      if (!m.spreading || p.spreading || !(p_sim > th_sim)) return;
      emit(actions, ActionKind::TransmitMessage, m_id, p_id, at);
      p.has_payload = true;
      p.spreading = true;
      if (!p.delivered) {
        p.delivered = true;
        emit(actions, ActionKind::Deliver, m_id, p_id, at);
      }
    };
    spread(a, ev.node_a, b, ev.node_b, sim_b_to_tp);
    spread(b, ev.node_b, a, ev.node_a, sim_a_to_tp);
  } else {
    // CsiD: holders serve intended receivers they meet.
    auto serve = [&](RandomWalkState& h, const NodeId& h_id, RandomWalkState& p,
                     const NodeId& p_id, bool p_is_receiver) {
      if (!h.holder || !p_is_receiver || p.delivered) return;
      if (!p.has_payload) emit(actions, ActionKind::TransmitMessage, h_id, p_id, at);
      p.has_payload = true;
      p.delivered = true;
      emit(actions, ActionKind::Deliver, h_id, p_id, at);
    };
    serve(a, ev.node_a, b, ev.node_b, b_is_receiver);
    serve(b, ev.node_b, a, ev.node_a, a_is_receiver);
  }

  // One transfer decision per held copy against the met peer; copies that
  // arrive during this encounter do not move again.
  std::size_t held_a = a.copy_ttls.size();
  std::size_t held_b = b.copy_ttls.size();
  std::vector<int> to_b, to_a;
  rw_offer_copies(a, ev.node_a, ev.node_b, held_a, rng, cfg, at, actions, to_b);
  rw_offer_copies(b, ev.node_b, ev.node_a, held_b, rng, cfg, at, actions, to_a);
  for (int ttl : to_b)
    rw_copy_arrives(b, ev.node_b, ev.node_a, ttl, mode, sim_b_to_tp, th_sim,
                    b_is_receiver, at, actions);
  for (int ttl : to_a)
    rw_copy_arrives(a, ev.node_a, ev.node_b, ttl, mode, sim_a_to_tp, th_sim,
                    a_is_receiver, at, actions);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

namespace {

struct Arrival {
  Timestamp time = 0;
  int hops = 0;
  NodeId pred;           // empty for the sender
  std::size_t pred_event = 0;
};

using ArrivalMap = std::map<NodeId, Arrival>;

std::vector<NodeId> relay_sequence(const ArrivalMap& arr, const NodeId& node) {
  std::vector<NodeId> seq;
  NodeId cur = node;
  while (true) {
    seq.push_back(cur);
    const auto& a = arr.at(cur);
    if (a.pred.empty()) break;
    cur = a.pred;
  }
  std::reverse(seq.begin(), seq.end());
  return seq;
}

/// Earliest-arrival sweep with predecessor tracking. Tie-break for equal
/// arrival times: fewer hops, then lexicographically smallest relay sequence.
ArrivalMap arrival_sweep(const EncounterStream& stream, const NodeId& sender,
                         Timestamp created_at) {
  ArrivalMap arr;
  arr[sender] = {created_at, 0, {}, 0};
  for (std::size_t idx = 0; idx < stream.events.size(); ++idx) {
    const auto& ev = stream.events[idx];
    if (ev.start < created_at) continue;
    auto ita = arr.find(ev.node_a);
    auto itb = arr.find(ev.node_b);
    bool a_has = ita != arr.end() && ita->second.time <= ev.start;
    bool b_has = itb != arr.end() && itb->second.time <= ev.start;
    if (a_has == b_has) continue;
    const NodeId& src = a_has ? ev.node_a : ev.node_b;
    const NodeId& dst = a_has ? ev.node_b : ev.node_a;
    const Arrival& from = arr.at(src);
    Arrival cand{ev.start, from.hops + 1, src, idx};
    auto it = arr.find(dst);
    bool take;
    if (it == arr.end()) {
      take = true;
    } else if (cand.time != it->second.time) {
      take = cand.time < it->second.time;
    } else if (cand.hops != it->second.hops) {
      take = cand.hops < it->second.hops;
    } else {
      auto cand_seq = relay_sequence(arr, src);
      cand_seq.push_back(dst);
      take = cand_seq < relay_sequence(arr, dst);
    }
    if (take) arr[dst] = cand;
  }
  return arr;
}

}  // namespace

std::map<NodeId, Timestamp> earliest_arrival_times(const EncounterStream& stream,
                                                   const NodeId& sender,
                                                   Timestamp created_at) {
  std::map<NodeId, Timestamp> out;
  for (const auto& [node, a] : arrival_sweep(stream, sender, created_at))
    out[node] = a.time;
  return out;
}

TransmissionPlan oracle_optimal_plan(const EncounterStream& stream, const Message& msg,
                                     const std::set<NodeId>& receivers) {
  ArrivalMap arr = arrival_sweep(stream, msg.sender, msg.created_at);
  TransmissionPlan plan;
  std::set<RelayEdge> edges;
  for (const auto& r : receivers) {
    auto it = arr.find(r);
    if (it == arr.end()) {
      plan.undelivered.insert(r);
      continue;
    }
    plan.delivery_time[r] = it->second.time;
    NodeId cur = r;
    while (true) {
      const Arrival& a = arr.at(cur);
      if (a.pred.empty()) break;
      edges.insert({a.pred, cur, a.time});
      cur = a.pred;
    }
  }
  plan.relays.assign(edges.begin(), edges.end());
  return plan;
}

TransmissionPlan oracle_single_path_plan(const EncounterStream& stream,
                                         const Message& msg,
                                         const std::map<NodeId, double>& sim_to_tp,
                                         double th_sim) {
  auto qualifies = [&](const NodeId& n) {
    auto it = sim_to_tp.find(n);
    return it != sim_to_tp.end() && it->second > th_sim;
  };
  std::set<NodeId> receivers;
  for (const auto& [node, s] : sim_to_tp)
    if (s > th_sim) receivers.insert(node);

  TransmissionPlan plan;
  ArrivalMap arr = arrival_sweep(stream, msg.sender, msg.created_at);

  // Entry point: earliest-reached qualifying node.
  std::optional<NodeId> entry;
  for (const auto& [node, a] : arr) {
    if (!qualifies(node)) continue;
    if (!entry) {
      entry = node;
      continue;
    }
    const Arrival& best = arr.at(*entry);
    if (std::tie(a.time, a.hops) < std::tie(best.time, best.hops) ||
        (a.time == best.time && a.hops == best.hops &&
         relay_sequence(arr, node) < relay_sequence(arr, *entry)))
      entry = node;
  }
  if (!entry) {
    plan.undelivered = receivers;
    return plan;
  }

  const Arrival& entry_arr = arr.at(*entry);
  std::set<RelayEdge> edges;
  NodeId cur = *entry;
  while (true) {
    const Arrival& a = arr.at(cur);
    if (a.pred.empty()) break;
    edges.insert({a.pred, cur, a.time});
    cur = a.pred;
  }
  plan.delivery_time[*entry] = entry_arr.time;

  // Standard group spread forward from the entry point.
  std::set<NodeId> members{*entry};
  for (std::size_t idx = 0; idx < stream.events.size(); ++idx) {
    const auto& ev = stream.events[idx];
    if (ev.start < entry_arr.time) continue;
    if (ev.start == entry_arr.time && entry_arr.hops > 0 && idx <= entry_arr.pred_event)
      continue;
    bool a_in = members.contains(ev.node_a);
    bool b_in = members.contains(ev.node_b);
    if (a_in == b_in) continue;
    const NodeId& src = a_in ? ev.node_a : ev.node_b;
    const NodeId& dst = a_in ? ev.node_b : ev.node_a;
    if (!qualifies(dst)) continue;
    members.insert(dst);
    edges.insert({src, dst, ev.start});
    plan.delivery_time[dst] = ev.start;
  }
  for (const auto& r : receivers)
    if (!plan.delivery_time.contains(r)) plan.undelivered.insert(r);
  plan.relays.assign(edges.begin(), edges.end());
  return plan;
}

EncounterStream parse_encounter_script(const std::string& text) {
  EncounterStream stream;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::string t_str, a, b;
    if (!std::getline(ls, t_str, ',') || !std::getline(ls, a, ',') ||
        !std::getline(ls, b, ','))
      throw InputError("bad script line: " + line);
    while (!b.empty() && (b.back() == '\r' || b.back() == ' ')) b.pop_back();
    Timestamp t = std::stoll(t_str);
    if (a == b) throw InputError("script encounter with identical endpoints: " + line);
    if (b < a) std::swap(a, b);
    stream.events.push_back({a, b, "script", t, t + 1});
  }
  std::sort(stream.events.begin(), stream.events.end(),
            [](const EncounterEvent& x, const EncounterEvent& y) {
              return std::tie(x.start, x.node_a, x.node_b) <
                     std::tie(y.start, y.node_a, y.node_b);
            });
  return stream;
}

}  // namespace csi
