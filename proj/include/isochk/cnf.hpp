#pragma once

#include <cstdint>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "isochk/hyperpolygraph.hpp"

namespace isochk {

using VarId = std::int32_t;
using Lit = std::uint32_t;  // var << 1 | sign, sign 1 = negated

inline Lit mk_lit(VarId v, bool neg) { return (static_cast<Lit>(v) << 1) | (neg ? 1u : 0u); }
inline VarId lit_var(Lit l) { return static_cast<VarId>(l >> 1); }
inline bool lit_neg(Lit l) { return l & 1u; }
inline Lit lit_negate(Lit l) { return l ^ 1u; }

// Candidate edge behind a boolean variable. WW/WR only in the dedicated
// encoding; SO/RW additionally appear in the baseline encoding.
struct VarPayload {
    EdgeType type = EdgeType::WW;
    KeyId key = kNoKey;
    TxnId from = 0;
    TxnId to = 0;
};

struct CnfProblem {
    std::vector<VarPayload> vars;
    std::vector<std::vector<Lit>> clauses;
    std::size_t base_clause_count = 0;
    std::size_t two_width_clause_count = 0;
    bool two_width_skipped = false;
    std::unordered_map<std::uint64_t, VarId> var_index;

    VarId add_var(const VarPayload& p) {
        auto id = static_cast<VarId>(vars.size());
        vars.push_back(p);
        var_index.emplace(detail::pack_edge({p.from, p.to, p.type, p.key}), id);
        return id;
    }
    VarId var_of(EdgeType t, KeyId k, TxnId from, TxnId to) const {
        auto it = var_index.find(detail::pack_edge({from, to, t, k}));
        return it == var_index.end() ? -1 : it->second;
    }
};

inline void export_dimacs(const CnfProblem& cnf, const HyperPolygraph& hp, std::ostream& os) {
    os << "c base+2-width formula, acyclicity theory not included\n";
    for (std::size_t v = 0; v < cnf.vars.size(); ++v) {
        auto& p = cnf.vars[v];
        os << "c var " << (v + 1) << " " << edge_type_name(p.type);
        if (p.key != kNoKey) os << "(" << hp.keys[p.key] << ")";
        os << " " << hp.labels[p.from] << " -> " << hp.labels[p.to] << "\n";
    }
    os << "p cnf " << cnf.vars.size() << " " << cnf.clauses.size() << "\n";
    for (auto& c : cnf.clauses) {
        for (Lit l : c) os << (lit_neg(l) ? -(lit_var(l) + 1) : (lit_var(l) + 1)) << " ";
        os << "0\n";
    }
}

}  // namespace isochk
