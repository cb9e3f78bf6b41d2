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
#include "isochk/theory.hpp"

namespace isochk {

// Acyclicity theory over the induced SI graph (SO u WR u WW);RW?. Base edges
// are maintained exactly as in the SER theory; every non-RW base edge appears
// directly in the induced graph and additionally composed with each RW edge
// leaving its target, while RW base edges appear only as composition
// suffixes. Cycle detection (including self-loops) runs on the induced graph;
// a conflict negates the union of the reasons of the base edges underlying
// the induced cycle.
class InducedSiTheory {
  public:
    void setup(const HyperPolygraph* hp, const CnfProblem* cnf, const std::vector<int>& topo,
               bool /*derive: SI has no baseline mode*/, bool min_width_debug, Telemetry* tel) {
        hp_ = hp;
        cnf_ = cnf;
        min_width_debug_ = min_width_debug;
        tel_ = tel;
        pk_.reset(hp->n, topo.empty() ? nullptr : &topo);
        base_.clear();
        rw_out_.assign(hp->n, {});
        nonrw_in_.assign(hp->n, {});
        metas_.clear();
        ops_.clear();
        chosen_ww_.clear();
        chosen_wr_.clear();
    }

    bool init_known(TheoryConflict* out) {
        for (auto& e : hp_->known) {
            if (auto c = add_base_edge(e.from, e.to, e.type, e.key, Reason{})) {
                *out = std::move(*c);
                return false;
            }
        }
        return true;
    }

    const TheoryConflict* assert_true(VarId v, std::size_t sat_trail_pos) {
        const VarPayload& p = cnf_->vars[std::size_t(v)];
        ops_.push_back({sat_trail_pos, v, 0, 0, false});

        pending_.clear();
        if (p.type == EdgeType::WW) {
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
            ops_.back().indexed = true;
        } else {
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
            ops_.back().indexed = true;
        }

        for (auto& e : pending_) {
            if (auto c = add_base_edge(e.from, e.to, e.type, e.key, e.reason)) {
                last_conflict_ = std::move(*c);
                return &last_conflict_;
            }
        }
        return nullptr;
    }

    void undo_to_trail(std::size_t sat_trail_size) {
        while (!ops_.empty() && ops_.back().sat_pos >= sat_trail_size) {
            Op op = ops_.back();
            ops_.pop_back();
            pk_.pop_edges(op.induced);
            metas_.resize(metas_.size() - op.induced);
            for (std::uint32_t i = 0; i < op.base; ++i) {
                const BaseEdge& b = base_.back();
                if (b.type == EdgeType::RW)
                    rw_out_[b.from].pop_back();
                else
                    nonrw_in_[b.to].pop_back();
                base_.pop_back();
            }
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

    // Current base edges (the maintained plain dependency graph).
    std::vector<Edge> base_edges() const {
        std::vector<Edge> out;
        out.reserve(base_.size());
        for (auto& b : base_) out.push_back({b.from, b.to, b.type, b.key});
        return out;
    }

  private:
    struct BaseEdge {
        TxnId from, to;
        EdgeType type;
        KeyId key;
        Reason reason;
    };
    struct InducedMeta {
        std::int32_t base1;  // non-RW constituent
        std::int32_t base2;  // RW suffix or -1 for a direct edge
    };
    struct Op {
        std::size_t sat_pos;
        VarId var;
        std::uint32_t base;
        std::uint32_t induced;
        bool indexed;
    };
    struct Pending {
        TxnId from, to;
        EdgeType type;
        KeyId key;
        Reason reason;
    };

    std::optional<TheoryConflict> add_base_edge(TxnId from, TxnId to, EdgeType type, KeyId key,
                                                const Reason& reason) {
        auto bid = static_cast<std::int32_t>(base_.size());
        base_.push_back({from, to, type, key, reason});
        if (type == EdgeType::RW)
            rw_out_[from].push_back(bid);
        else
            nonrw_in_[to].push_back(bid);
        if (!ops_.empty()) ++ops_.back().base;

        induced_pending_.clear();
        if (type != EdgeType::RW) {
            induced_pending_.push_back({from, to, {bid, -1}});
            for (std::int32_t r : rw_out_[to])
                induced_pending_.push_back({from, base_[std::size_t(r)].to, {bid, r}});
        } else {
            for (std::int32_t nb : nonrw_in_[from])
                induced_pending_.push_back({base_[std::size_t(nb)].from, to, {nb, bid}});
        }
        for (auto& ip : induced_pending_) {
            auto res = pk_.insert(ip.from, ip.to, static_cast<std::uint32_t>(metas_.size()));
            if (!res.cycle) {
                metas_.push_back(ip.meta);
                if (!ops_.empty()) ++ops_.back().induced;
                continue;
            }
            return make_conflict(ip.from, ip.to, ip.meta, res.path);
        }
        return std::nullopt;
    }

    TheoryConflict make_conflict(TxnId from, TxnId to, const InducedMeta& m,
                                 const std::vector<int>& path) {
        TheoryConflict c;
        auto add_meta = [&](TxnId f, TxnId t, const InducedMeta& im) {
            const BaseEdge& b1 = base_[std::size_t(im.base1)];
            detail::collect_reason(b1.reason, c.vars);
            c.cycle.edges.push_back({b1.from, b1.to, b1.type, b1.key, b1.reason});
            if (im.base2 >= 0) {
                const BaseEdge& b2 = base_[std::size_t(im.base2)];
                detail::collect_reason(b2.reason, c.vars);
                c.cycle.edges.push_back({b2.from, b2.to, b2.type, b2.key, b2.reason});
            }
            (void)f;
            (void)t;
        };
        add_meta(from, to, m);
        for (int eid : path) {
            const auto& er = pk_.edge(eid);
            add_meta(er.from, er.to, metas_[er.tag]);
        }
        int width = detail::finish_conflict(c);
        if (tel_) {
            ++tel_->width_histogram[width];
            if (min_width_debug_) ++tel_->min_width_histogram[width];
        }
        return c;
    }

    const HyperPolygraph* hp_ = nullptr;
    const CnfProblem* cnf_ = nullptr;
    bool min_width_debug_ = false;
    Telemetry* tel_ = nullptr;
    PkGraph pk_;  // induced graph
    std::vector<BaseEdge> base_;
    std::vector<std::vector<std::int32_t>> rw_out_, nonrw_in_;
    std::vector<InducedMeta> metas_;
    std::vector<Op> ops_;
    std::vector<Pending> pending_;
    struct InducedPending {
        TxnId from, to;
        InducedMeta meta;
    };
    std::vector<InducedPending> induced_pending_;
    std::unordered_map<std::uint64_t, std::vector<std::pair<TxnId, VarId>>> chosen_ww_, chosen_wr_;
    TheoryConflict last_conflict_;
};

}  // namespace isochk
