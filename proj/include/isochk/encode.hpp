#pragma once

#include <algorithm>
#include <set>
#include <unordered_set>
#include <vector>

#include "isochk/cnf.hpp"
#include "isochk/hyperpolygraph.hpp"
#include "isochk/log.hpp"
#include "isochk/prune.hpp"
#include "isochk/telemetry.hpp"

namespace isochk {

struct EncodeOptions {
    bool two_width = true;
    int width = 2;  // experimental: 1 = none, 3/4 enumerate longer canonical chains
    std::size_t pair_budget_vars = 20000;
    std::size_t kwidth_budget_vars = 800;
    IsolationMode mode = IsolationMode::Ser;
};

namespace detail {

class ClauseSink {
  public:
    explicit ClauseSink(CnfProblem& cnf) : cnf_(cnf) {}

    // Base clauses are emitted once by construction; record the fingerprint so
    // later 2-width additions dedup against them, but never drop the clause
    // itself (a fingerprint collision may only lose a redundant clause).
    void add_base(std::vector<Lit> lits) {
        normalize(lits);
        seen_.insert(fingerprint(lits));
        cnf_.clauses.push_back(std::move(lits));
    }

    bool add_unique(std::vector<Lit> lits) {
        normalize(lits);
        for (std::size_t i = 0; i + 1 < lits.size(); ++i)
            if (lit_var(lits[i]) == lit_var(lits[i + 1])) return false;  // tautology
        if (!seen_.insert(fingerprint(lits)).second) return false;
        cnf_.clauses.push_back(std::move(lits));
        return true;
    }

  private:
    static void normalize(std::vector<Lit>& lits) {
        std::sort(lits.begin(), lits.end());
        lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    }
    static std::uint64_t fingerprint(const std::vector<Lit>& lits) {
        std::uint64_t h = 1469598103934665603ULL;
        for (Lit l : lits) {
            h ^= l;
            h *= 1099511628211ULL;
        }
        h ^= lits.size();
        return h;
    }
    CnfProblem& cnf_;
    std::unordered_set<std::uint64_t> seen_;
};

// Canonical 2-width cycle: with v1 = (S,T) and v2 = (T',S'), both edges plus
// the known paths T ~> T' and S' ~> S close a cycle. Reachability is reflexive
// so this also covers pairs sharing endpoints.
inline bool canonical_cycle(const VarPayload& v1, const VarPayload& v2, const BitMatrix& r) {
    return r.test(v1.to, v2.from) && r.test(v2.to, v1.from);
}

}  // namespace detail

// Algorithm: base clauses (a v b), (~a v ~b) per WW pair and an at-least-one
// clause per WR constraint, then pairwise 2-width cycle clauses. The dedicated
// encoding deliberately omits pairwise at-most-one clauses for WR candidates.
inline CnfProblem encode(const HyperPolygraph& hp, const ReachInfo& info, const KnownView& view,
                         const EncodeOptions& opts, Telemetry& tel) {
    CnfProblem cnf;
    detail::ClauseSink sink(cnf);

    for (auto& c : hp.cww) {
        VarId a = cnf.add_var({EdgeType::WW, c.key, c.a, c.b});
        VarId b = cnf.add_var({EdgeType::WW, c.key, c.b, c.a});
        sink.add_base({mk_lit(a, false), mk_lit(b, false)});
        sink.add_base({mk_lit(a, true), mk_lit(b, true)});
    }
    for (auto& c : hp.cwr) {
        std::vector<Lit> alo;
        for (TxnId w : c.candidates)
            alo.push_back(mk_lit(cnf.add_var({EdgeType::WR, c.key, w, c.reader}), false));
        sink.add_base(std::move(alo));
    }
    cnf.base_clause_count = cnf.clauses.size();

    const BitMatrix& r = info.reach;
    bool want_pairs = opts.two_width && opts.width >= 2;
    if (want_pairs && cnf.vars.size() > opts.pair_budget_vars) {
        logf(LogLevel::Warn, "2-width encoding skipped: %zu variables exceed budget %zu",
             cnf.vars.size(), opts.pair_budget_vars);
        cnf.two_width_skipped = true;
        want_pairs = false;
    }

    if (want_pairs) {
        std::size_t before = cnf.clauses.size();
        const auto n_vars = static_cast<VarId>(cnf.vars.size());
        for (VarId i = 0; i < n_vars; ++i) {
            const VarPayload& vi = cnf.vars[i];
            for (VarId j = i + 1; j < n_vars; ++j) {
                if (detail::canonical_cycle(vi, cnf.vars[j], r))
                    sink.add_unique({mk_lit(i, true), mk_lit(j, true)});
            }
        }

        // RW cycles: WW(T,T',x) together with WR(T,S,x) derive S -> RW(x) T'
        // (S != T'), closing a cycle with a known path back from T'. For SER
        // the path is T' ~> S; for SI the derived RW only matters through
        // compositions, so the closing paths run to the non-RW predecessors
        // of S (including the chosen WR edge itself, giving T' ~> T).
        std::unordered_map<std::uint64_t, std::vector<VarId>> ww_by_src, wr_by_src;
        for (VarId v = 0; v < n_vars; ++v) {
            auto& p = cnf.vars[v];
            auto key = detail::pack_key_txn(p.key, p.from);
            (p.type == EdgeType::WW ? ww_by_src : wr_by_src)[key].push_back(v);
        }
        for (auto& [src, wws] : ww_by_src) {
            auto it = wr_by_src.find(src);
            if (it == wr_by_src.end()) continue;
            for (VarId wv : wws) {
                TxnId tp = cnf.vars[wv].to;
                for (VarId rv : it->second) {
                    TxnId s = cnf.vars[rv].to;
                    if (s == tp) continue;  // no RW self edge derivable
                    bool cyc;
                    if (opts.mode == IsolationMode::Ser) {
                        cyc = r.test(tp, s);
                    } else {
                        cyc = r.test(tp, cnf.vars[wv].from);
                        if (!cyc)
                            for (int a : view.nonrw_in[s])
                                if (r.test(tp, a)) {
                                    cyc = true;
                                    break;
                                }
                    }
                    if (cyc) sink.add_unique({mk_lit(wv, true), mk_lit(rv, true)});
                }
            }
        }
        cnf.two_width_clause_count = cnf.clauses.size() - before;
    }

    // Experimental larger widths: canonical chains only, tightly budgeted.
    if (opts.two_width && opts.width >= 3 && cnf.vars.size() <= opts.kwidth_budget_vars) {
        const auto n_vars = static_cast<VarId>(cnf.vars.size());
        auto chain = [&](VarId a, VarId b) { return r.test(cnf.vars[a].to, cnf.vars[b].from); };
        for (VarId i = 0; i < n_vars; ++i)
            for (VarId j = i + 1; j < n_vars; ++j)
                for (VarId k = j + 1; k < n_vars; ++k) {
                    bool cyc = (chain(i, j) && chain(j, k) && chain(k, i)) ||
                               (chain(i, k) && chain(k, j) && chain(j, i));
                    if (cyc)
                        sink.add_unique({mk_lit(i, true), mk_lit(j, true), mk_lit(k, true)});
                    if (opts.width < 4) continue;
                    for (VarId m = k + 1; m < n_vars; ++m) {
                        static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
                        VarId rest[3] = {j, k, m};
                        for (auto& pm : perms) {
                            if (chain(i, rest[pm[0]]) && chain(rest[pm[0]], rest[pm[1]]) &&
                                chain(rest[pm[1]], rest[pm[2]]) && chain(rest[pm[2]], i)) {
                                sink.add_unique({mk_lit(i, true), mk_lit(j, true),
                                                 mk_lit(k, true), mk_lit(m, true)});
                                break;
                            }
                        }
                    }
                }
    }

    tel.variables = static_cast<std::int64_t>(cnf.vars.size());
    tel.base_clauses = static_cast<std::int64_t>(cnf.base_clause_count);
    tel.two_width_clauses = static_cast<std::int64_t>(cnf.two_width_clause_count);
    return cnf;
}

// The off-the-shelf style encoding: explicit variables for known SO/WR edges
// (unit clauses), both orientations of every WW pair with exactly-one clauses,
// at-least-one plus pairwise at-most-one for WR candidates, and ternary
// implications materializing RW edges.
inline CnfProblem encode_baseline(const HyperPolygraph& hp, Telemetry& tel) {
    CnfProblem cnf;
    detail::ClauseSink sink(cnf);

    for (auto& e : hp.known) {
        VarId v = cnf.add_var({e.type, e.key, e.from, e.to});
        sink.add_base({mk_lit(v, false)});
    }
    for (auto& c : hp.cww) {
        VarId a = cnf.add_var({EdgeType::WW, c.key, c.a, c.b});
        VarId b = cnf.add_var({EdgeType::WW, c.key, c.b, c.a});
        sink.add_base({mk_lit(a, false), mk_lit(b, false)});
        sink.add_base({mk_lit(a, true), mk_lit(b, true)});
    }
    for (auto& c : hp.cwr) {
        std::vector<VarId> vs;
        for (TxnId w : c.candidates) vs.push_back(cnf.add_var({EdgeType::WR, c.key, w, c.reader}));
        std::vector<Lit> alo;
        for (VarId v : vs) alo.push_back(mk_lit(v, false));
        sink.add_base(std::move(alo));
        for (std::size_t i = 0; i < vs.size(); ++i)
            for (std::size_t j = i + 1; j < vs.size(); ++j)
                sink.add_base({mk_lit(vs[i], true), mk_lit(vs[j], true)});
    }

    // Phi_RW: WW(T,T',x) and WR(T,S,x) imply RW(S,T',x), S != T'.
    // Gather per-key writers and read-from pairs from the hyper-polygraph.
    std::map<KeyId, std::set<TxnId>> writers;
    for (auto& c : hp.cww) {
        writers[c.key].insert(c.a);
        writers[c.key].insert(c.b);
    }
    std::map<KeyId, std::vector<std::pair<TxnId, TxnId>>> reads;  // (writer, reader)
    for (auto& e : hp.known)
        if (e.type == EdgeType::WR) reads[e.key].push_back({e.from, e.to});
    for (auto& c : hp.cwr)
        for (TxnId w : c.candidates) reads[c.key].push_back({w, c.reader});

    for (auto& [x, prs] : reads) {
        auto wit = writers.find(x);
        if (wit == writers.end()) continue;
        for (auto& [t, s] : prs) {
            VarId wr = cnf.var_of(EdgeType::WR, x, t, s);
            for (TxnId tp : wit->second) {
                if (tp == t || tp == s) continue;
                VarId ww = cnf.var_of(EdgeType::WW, x, t, tp);
                if (ww < 0) continue;
                VarId rw = cnf.var_of(EdgeType::RW, x, s, tp);
                if (rw < 0) rw = cnf.add_var({EdgeType::RW, x, s, tp});
                sink.add_base({mk_lit(ww, true), mk_lit(wr, true), mk_lit(rw, false)});
            }
        }
    }
    cnf.base_clause_count = cnf.clauses.size();
    tel.variables = static_cast<std::int64_t>(cnf.vars.size());
    tel.base_clauses = static_cast<std::int64_t>(cnf.base_clause_count);
    return cnf;
}

}  // namespace isochk
