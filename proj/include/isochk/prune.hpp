#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isochk/hyperpolygraph.hpp"
#include "isochk/reach.hpp"
#include "isochk/telemetry.hpp"

namespace isochk {

enum class IsolationMode { Ser, Si };

struct PruneViolation {
    enum class Kind { NoChoice, KnownCycle };
    Kind kind;
    std::string detail;
    std::vector<int> cycle;  // vertex sequence v0..v0 when available
};

struct ReachInfo {
    BitMatrix reach;
    std::vector<int> topo;
};

struct PruneResult {
    HyperPolygraph hp;
    ReachInfo info;  // over the plain (SER) or induced (SI) known graph
};

// Neighborhood view of the known graph. For SI mode also carries the induced
// graph (SO u WR u WW);RW? and the composition indexes.
struct KnownView {
    std::vector<std::vector<int>> plain;
    std::vector<std::vector<int>> induced;
    std::vector<std::vector<int>> rw_out;    // RW successors, any key
    std::vector<std::vector<int>> nonrw_in;  // non-RW predecessors, any key
};

inline KnownView build_known_view(const HyperPolygraph& hp, IsolationMode mode) {
    KnownView v;
    v.plain.resize(hp.n);
    for (auto& e : hp.known) v.plain[e.from].push_back(e.to);
    if (mode == IsolationMode::Si) {
        v.rw_out.resize(hp.n);
        v.nonrw_in.resize(hp.n);
        for (auto& e : hp.known) {
            if (e.type == EdgeType::RW)
                v.rw_out[e.from].push_back(e.to);
            else
                v.nonrw_in[e.to].push_back(e.from);
        }
        v.induced.resize(hp.n);
        for (auto& e : hp.known) {
            if (e.type == EdgeType::RW) continue;
            v.induced[e.from].push_back(e.to);
            for (int w : v.rw_out[e.to]) v.induced[e.from].push_back(w);
        }
    }
    return v;
}

inline const std::vector<std::vector<int>>& active_adj(const KnownView& v, IsolationMode mode) {
    return mode == IsolationMode::Si ? v.induced : v.plain;
}

// Reachability over the mode's graph; KnownCycle violation when cyclic.
inline std::variant<ReachInfo, PruneViolation> analyze_known(const HyperPolygraph& hp,
                                                             IsolationMode mode) {
    KnownView v = build_known_view(hp, mode);
    auto& adj = active_adj(v, mode);
    auto order = topo_order(hp.n, adj);
    if (!order) {
        PruneViolation viol;
        viol.kind = PruneViolation::Kind::KnownCycle;
        viol.cycle = find_cycle(hp.n, adj);
        viol.detail = mode == IsolationMode::Si ? "induced SI graph of the known graph is cyclic"
                                                : "known graph is cyclic";
        return viol;
    }
    BitMatrix r(hp.n);
    for (auto it = order->rbegin(); it != order->rend(); ++it) {
        int u = *it;
        r.set(u, u);
        for (int w : adj[u]) r.or_row(u, w);
    }
    return ReachInfo{std::move(r), std::move(*order)};
}

namespace detail {

// A WW choice T -> T' forces, besides the edge itself, the anti-dependency
// S -> RW(x) T' for every known reader T -> WR(x) S (S != T'). The choice is
// infeasible iff any forced edge closes a cycle with the known graph.
inline bool ww_choice_blocked(const HyperPolygraph& hp, const BitMatrix& r, TxnId t, TxnId tp,
                              KeyId x) {
    if (r.test(tp, t)) return true;
    if (auto* readers = hp.wr_readers(x, t))
        for (TxnId s : *readers)
            if (s != tp && r.test(tp, s)) return true;
    return false;
}

inline bool wr_choice_blocked(const HyperPolygraph& hp, const BitMatrix& r, TxnId t, TxnId s,
                              KeyId x) {
    if (r.test(s, t)) return true;
    if (auto* succs = hp.ww_successors(x, t))
        for (TxnId tp : *succs)
            if (tp != s && r.test(tp, s)) return true;
    return false;
}

// SI variants: a forced base edge contributes to the induced graph directly
// (non-RW), composed with known RW suffixes, or — for forced RW edges — as a
// composition suffix of known non-RW in-edges of its source. Each contributed
// induced edge (u, w) closes a cycle iff w reaches u in the induced graph.
inline bool ww_choice_blocked_si(const HyperPolygraph& hp, const KnownView& v, const BitMatrix& ri,
                                 TxnId t, TxnId tp, KeyId x) {
    if (ri.test(tp, t)) return true;  // direct induced (t, tp)
    for (int w : v.rw_out[tp])
        if (ri.test(w, t)) return true;  // (t, w) = (t,tp);(tp,w)
    if (auto* readers = hp.wr_readers(x, t)) {
        for (TxnId s : *readers) {
            if (s == tp) continue;  // no RW self edges
            for (int a : v.nonrw_in[s])
                if (ri.test(tp, a)) return true;  // (a, tp) = (a,s);(s,tp)
        }
    }
    return false;
}

inline bool wr_choice_blocked_si(const HyperPolygraph& hp, const KnownView& v, const BitMatrix& ri,
                                 TxnId t, TxnId s, KeyId x) {
    if (ri.test(s, t)) return true;  // direct induced (t, s)
    for (int w : v.rw_out[s])
        if (ri.test(w, t)) return true;  // (t, w) = (t,s);(s,w)
    if (auto* succs = hp.ww_successors(x, t)) {
        for (TxnId tp : *succs) {
            if (tp == s) continue;
            if (ri.test(tp, t)) return true;  // (t, tp) = (t,s);(s,tp), both forced
            for (int a : v.nonrw_in[s])
                if (ri.test(tp, a)) return true;  // (a, tp) = (a,s);(s,tp)
        }
    }
    return false;
}

inline void intro_ww(HyperPolygraph& hp, TxnId t, TxnId tp, KeyId x) {
    hp.add_known_edge({t, tp, EdgeType::WW, x});
    std::vector<TxnId> readers;
    if (auto* rs = hp.wr_readers(x, t)) readers = *rs;
    for (TxnId s : readers)
        if (s != tp) hp.add_known_edge({s, tp, EdgeType::RW, x});
}

inline void intro_wr(HyperPolygraph& hp, TxnId t, TxnId s, KeyId x) {
    hp.add_known_edge({t, s, EdgeType::WR, x});
    std::vector<TxnId> succs;
    if (auto* ss = hp.ww_successors(x, t)) succs = *ss;
    for (TxnId tp : succs)
        if (tp != s) hp.add_known_edge({s, tp, EdgeType::RW, x});
}

}  // namespace detail

// Fixpoint elimination of all 1-width cycles. WW constraints are scanned in id
// order, then WR constraints; reachability is recomputed at the start of a
// pass whenever the known graph changed in the previous one (mid-pass tests
// run against a stale under-approximation, which is sound; the final silent
// pass runs against fresh reachability).
inline std::variant<PruneResult, PruneViolation> prune(HyperPolygraph hp, IsolationMode mode,
                                                       Telemetry& tel) {
    struct WwState {
        bool a_to_b = true;
        bool b_to_a = true;
        bool active = true;
    };
    std::vector<WwState> ww_state(hp.cww.size());
    std::vector<std::vector<char>> wr_alive;
    std::vector<char> wr_active(hp.cwr.size(), 1);
    wr_alive.reserve(hp.cwr.size());
    for (auto& c : hp.cwr) wr_alive.emplace_back(c.candidates.size(), 1);

    KnownView view;
    ReachInfo info;
    bool graph_dirty = true;
    bool changed = true;
    tel.prune_passes = 0;

    auto blocked_ww = [&](TxnId t, TxnId tp, KeyId x) {
        return mode == IsolationMode::Si
                   ? detail::ww_choice_blocked_si(hp, view, info.reach, t, tp, x)
                   : detail::ww_choice_blocked(hp, info.reach, t, tp, x);
    };
    auto blocked_wr = [&](TxnId t, TxnId s, KeyId x) {
        return mode == IsolationMode::Si
                   ? detail::wr_choice_blocked_si(hp, view, info.reach, t, s, x)
                   : detail::wr_choice_blocked(hp, info.reach, t, s, x);
    };

    while (changed) {
        changed = false;
        ++tel.prune_passes;
        if (graph_dirty) {
            view = build_known_view(hp, mode);
            auto res = analyze_known(hp, mode);
            if (std::holds_alternative<PruneViolation>(res))
                return std::get<PruneViolation>(res);
            info = std::move(std::get<ReachInfo>(res));
            graph_dirty = false;
        }

        for (std::size_t i = 0; i < hp.cww.size(); ++i) {
            auto& st = ww_state[i];
            if (!st.active) continue;
            auto& c = hp.cww[i];
            if (st.a_to_b && blocked_ww(c.a, c.b, c.key)) {
                st.a_to_b = false;
                ++tel.ww_choices_eliminated;
                changed = true;
            }
            if (st.b_to_a && blocked_ww(c.b, c.a, c.key)) {
                st.b_to_a = false;
                ++tel.ww_choices_eliminated;
                changed = true;
            }
            if (!st.a_to_b && !st.b_to_a) {
                PruneViolation viol;
                viol.kind = PruneViolation::Kind::NoChoice;
                viol.detail = "both version orders between " + hp.labels[c.a] + " and " +
                              hp.labels[c.b] + " on key " + hp.keys[c.key] + " close cycles";
                return viol;
            }
            if (st.a_to_b != st.b_to_a) {
                if (st.a_to_b)
                    detail::intro_ww(hp, c.a, c.b, c.key);
                else
                    detail::intro_ww(hp, c.b, c.a, c.key);
                st.active = false;
                ++tel.constraints_resolved;
                graph_dirty = true;
                changed = true;
            }
        }

        for (std::size_t i = 0; i < hp.cwr.size(); ++i) {
            if (!wr_active[i]) continue;
            auto& c = hp.cwr[i];
            int alive = 0;
            int last = -1;
            for (std::size_t j = 0; j < c.candidates.size(); ++j) {
                if (!wr_alive[i][j]) continue;
                if (blocked_wr(c.candidates[j], c.reader, c.key)) {
                    wr_alive[i][j] = 0;
                    ++tel.wr_choices_eliminated;
                    changed = true;
                    continue;
                }
                ++alive;
                last = static_cast<int>(j);
            }
            if (alive == 0) {
                PruneViolation viol;
                viol.kind = PruneViolation::Kind::NoChoice;
                viol.detail = "every read-from candidate for " + hp.labels[c.reader] +
                              " reading key " + hp.keys[c.key] + " = " + std::to_string(c.value) +
                              " closes a cycle";
                return viol;
            }
            if (alive == 1) {
                detail::intro_wr(hp, c.candidates[last], c.reader, c.key);
                wr_active[i] = 0;
                ++tel.constraints_resolved;
                graph_dirty = true;
                changed = true;
            }
        }
    }

    // Drop resolved constraints and eliminated candidates.
    std::vector<WwConstraint> cww;
    for (std::size_t i = 0; i < hp.cww.size(); ++i)
        if (ww_state[i].active) cww.push_back(hp.cww[i]);
    std::vector<WrConstraint> cwr;
    for (std::size_t i = 0; i < hp.cwr.size(); ++i) {
        if (!wr_active[i]) continue;
        WrConstraint c = hp.cwr[i];
        std::vector<TxnId> cands;
        for (std::size_t j = 0; j < c.candidates.size(); ++j)
            if (wr_alive[i][j]) cands.push_back(c.candidates[j]);
        c.candidates = std::move(cands);
        cwr.push_back(std::move(c));
    }
    hp.cww = std::move(cww);
    hp.cwr = std::move(cwr);
    return PruneResult{std::move(hp), std::move(info)};
}

}  // namespace isochk
