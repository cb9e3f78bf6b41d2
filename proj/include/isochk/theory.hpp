#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "isochk/cnf.hpp"
#include "isochk/hyperpolygraph.hpp"
#include "isochk/pk.hpp"
#include "isochk/telemetry.hpp"

namespace isochk {

// Conjunction of at most two variables justifying an edge in the theory
// graph. Empty reason = edge of the pruned known graph, always true.
struct Reason {
    VarId a = -1;
    VarId b = -1;
    int size() const { return (a >= 0) + (b >= 0); }
};

struct CycleEdgeDesc {
    TxnId from;
    TxnId to;
    EdgeType type;
    KeyId key;
    Reason reason;
};

struct CycleDesc {
    std::vector<CycleEdgeDesc> edges;
    int width = 0;
};

struct TheoryConflict {
    std::vector<VarId> vars;  // conflict clause = disjunction of their negations
    CycleDesc cycle;
};

namespace detail {

inline void collect_reason(const Reason& r, std::vector<VarId>& out) {
    if (r.a >= 0) out.push_back(r.a);
    if (r.b >= 0) out.push_back(r.b);
}

inline int finish_conflict(TheoryConflict& c) {
    std::sort(c.vars.begin(), c.vars.end());
    c.vars.erase(std::unique(c.vars.begin(), c.vars.end()), c.vars.end());
    c.cycle.width = static_cast<int>(c.vars.size());
    return c.cycle.width;
}

}  // namespace detail

// Graph-acyclicity theory for SER. Maintains the dependency graph with
// reason-labeled edges; positive WW/WR assignments insert the corresponding
// edge plus the anti-dependency edges it derives against known and previously
// chosen edges. In baseline mode every variable is its own edge and nothing
// is derived.
class PlainTheory {
  public:
    void setup(const HyperPolygraph* hp, const CnfProblem* cnf, const std::vector<int>& topo,
               bool derive, bool min_width_debug, Telemetry* tel) {
        hp_ = hp;
        cnf_ = cnf;
        derive_ = derive;
        min_width_debug_ = min_width_debug;
        tel_ = tel;
        pk_.reset(hp->n, topo.empty() ? nullptr : &topo);
        metas_.clear();
        ops_.clear();
        chosen_ww_.clear();
        chosen_wr_.clear();
    }

    // Level-0 insertion of the pruned known graph. The pipeline checks
    // acyclicity beforehand; a cycle here still yields a (variable-free)
    // conflict for robustness.
    bool init_known(TheoryConflict* out) {
        if (!derive_) return true;  // baseline: known edges arrive as unit variables
        for (auto& e : hp_->known) {
            if (auto c = insert_edge(e.from, e.to, e.type, e.key, Reason{})) {
                *out = std::move(*c);
                return false;
            }
        }
        return true;
    }

    // Returns the conflict if asserting v closes a cycle; the partial work is
    // registered on the theory trail either way and is undone by undo_to_trail
    // once the SAT solver backtracks past this literal.
    const TheoryConflict* assert_true(VarId v, std::size_t sat_trail_pos) {
        const VarPayload& p = cnf_->vars[std::size_t(v)];
        ops_.push_back({sat_trail_pos, v, 0, false});
        Op& op = ops_.back();

        pending_.clear();
        if (!derive_) {
            pending_.push_back({p.from, p.to, p.type, p.key, Reason{v, -1}});
        } else if (p.type == EdgeType::WW) {
            TxnId t = p.from, tp = p.to;
            pending_.push_back({t, tp, EdgeType::WW, p.key, Reason{v, -1}});
            if (auto* readers = hp_->wr_readers(p.key, t))
                for (TxnId s : *readers)
                    if (s != tp) pending_.push_back({s, tp, EdgeType::RW, p.key, Reason{v, -1}});
            auto it = chosen_wr_.find(detail::pack_key_txn(p.key, t));
            if (it != chosen_wr_.end())
                for (auto& [s, wr_var] : it->second)
                    if (s != tp) pending_.push_back({s, tp, EdgeType::RW, p.key, Reason{v, wr_var}});
            chosen_ww_[detail::pack_key_txn(p.key, t)].push_back({tp, v});
            op.indexed = true;
        } else {  // WR
            TxnId t = p.from, s = p.to;
            pending_.push_back({t, s, EdgeType::WR, p.key, Reason{v, -1}});
            if (auto* succs = hp_->ww_successors(p.key, t))
                for (TxnId tp : *succs)
                    if (tp != s) pending_.push_back({s, tp, EdgeType::RW, p.key, Reason{v, -1}});
            auto it = chosen_ww_.find(detail::pack_key_txn(p.key, t));
            if (it != chosen_ww_.end())
                for (auto& [tp, ww_var] : it->second)
                    if (tp != s) pending_.push_back({s, tp, EdgeType::RW, p.key, Reason{ww_var, v}});
            chosen_wr_[detail::pack_key_txn(p.key, t)].push_back({s, v});
            op.indexed = true;
        }

        for (auto& e : pending_) {
            if (auto c = insert_edge(e.from, e.to, e.type, e.key, e.reason)) {
                last_conflict_ = std::move(*c);
                return &last_conflict_;
            }
            ++ops_.back().edges;
        }
        return nullptr;
    }

    void undo_to_trail(std::size_t sat_trail_size) {
        while (!ops_.empty() && ops_.back().sat_pos >= sat_trail_size) {
            Op op = ops_.back();
            ops_.pop_back();
            pk_.pop_edges(op.edges);
            metas_.resize(metas_.size() - op.edges);
            if (op.indexed) {
                const VarPayload& p = cnf_->vars[std::size_t(op.var)];
                auto key = detail::pack_key_txn(p.key, p.from);
                auto& vec = (p.type == EdgeType::WW ? chosen_ww_ : chosen_wr_)[key];
                vec.pop_back();
            }
        }
    }

    bool prefer_positive(VarId v) const {
        const VarPayload& p = cnf_->vars[std::size_t(v)];
        return pk_.ord(p.from) < pk_.ord(p.to);
    }

    void flush_counters() {
        if (!tel_) return;
        tel_->pk_calls += pk_.pk_calls;
        tel_->pk_traversals += pk_.traversals;
        tel_->cycles_detected += pk_.cycles;
        tel_->reorders += pk_.reorders;
        pk_.pk_calls = pk_.traversals = pk_.cycles = pk_.reorders = 0;
    }

    const PkGraph& graph() const { return pk_; }

  private:
    struct Meta {
        EdgeType type;
        KeyId key;
        Reason reason;
    };
    struct Op {
        std::size_t sat_pos;
        VarId var;
        std::uint32_t edges;
        bool indexed;
    };
    struct Pending {
        TxnId from, to;
        EdgeType type;
        KeyId key;
        Reason reason;
    };

    std::optional<TheoryConflict> insert_edge(TxnId from, TxnId to, EdgeType type, KeyId key,
                                              const Reason& reason) {
        auto res = pk_.insert(from, to, static_cast<std::uint32_t>(metas_.size()));
        if (!res.cycle) {
            metas_.push_back({type, key, reason});
            return std::nullopt;
        }
        TheoryConflict c;
        detail::collect_reason(reason, c.vars);
        c.cycle.edges.push_back({from, to, type, key, reason});
        for (int eid : res.path) {
            const auto& er = pk_.edge(eid);
            const Meta& m = metas_[er.tag];
            detail::collect_reason(m.reason, c.vars);
            c.cycle.edges.push_back({er.from, er.to, m.type, m.key, m.reason});
        }
        int width = detail::finish_conflict(c);
        if (tel_) {
            ++tel_->width_histogram[width];
            if (min_width_debug_) ++tel_->min_width_histogram[min_width(from, to, reason, width)];
        }
        return c;
    }

    // Best-effort search for a cheaper cycle through the conflicting edge:
    // Dijkstra to ~> from with edge cost = reason size. Upper bound on the
    // true minimal width since reason unions may overlap.
    int min_width(TxnId from, TxnId to, const Reason& reason, int found_width) const {
        std::vector<int> dist(static_cast<std::size_t>(hp_->n), INT32_MAX);
        std::vector<int> via(static_cast<std::size_t>(hp_->n), -1);
        dist[std::size_t(to)] = 0;
        std::vector<std::pair<int, int>> heap{{0, to}};  // (dist, vertex)
        auto cmp = [](auto& a, auto& b) { return a.first > b.first; };
        while (!heap.empty()) {
            std::pop_heap(heap.begin(), heap.end(), cmp);
            auto [d, u] = heap.back();
            heap.pop_back();
            if (d > dist[std::size_t(u)]) continue;
            if (u == from) break;
            for (int eid : pk_.out_edges(u)) {
                const auto& er = pk_.edge(eid);
                int nd = d + metas_[er.tag].reason.size();
                if (nd < dist[std::size_t(er.to)]) {
                    dist[std::size_t(er.to)] = nd;
                    via[std::size_t(er.to)] = eid;
                    heap.push_back({nd, er.to});
                    std::push_heap(heap.begin(), heap.end(), cmp);
                }
            }
        }
        if (dist[std::size_t(from)] == INT32_MAX) return found_width;
        std::vector<VarId> vars;
        detail::collect_reason(reason, vars);
        for (int v = from; v != to && via[std::size_t(v)] != -1;) {
            const auto& er = pk_.edge(via[std::size_t(v)]);
            detail::collect_reason(metas_[er.tag].reason, vars);
            v = er.from;
        }
        std::sort(vars.begin(), vars.end());
        vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
        return std::min<int>(found_width, static_cast<int>(vars.size()));
    }

    const HyperPolygraph* hp_ = nullptr;
    const CnfProblem* cnf_ = nullptr;
    bool derive_ = true;
    bool min_width_debug_ = false;
    Telemetry* tel_ = nullptr;
    PkGraph pk_;
    std::vector<Meta> metas_;
    std::vector<Op> ops_;
    std::vector<Pending> pending_;
    std::unordered_map<std::uint64_t, std::vector<std::pair<TxnId, VarId>>> chosen_ww_, chosen_wr_;
    TheoryConflict last_conflict_;
};

}  // namespace isochk
