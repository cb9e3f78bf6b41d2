#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "isochk/history.hpp"

namespace isochk {

using KeyId = std::int32_t;
constexpr KeyId kNoKey = -1;

enum class EdgeType : std::uint8_t { SO, WR, WW, RW };

inline const char* edge_type_name(EdgeType t) {
    switch (t) {
        case EdgeType::SO: return "SO";
        case EdgeType::WR: return "WR";
        case EdgeType::WW: return "WW";
        case EdgeType::RW: return "RW";
    }
    return "?";
}

struct Edge {
    TxnId from = 0;
    TxnId to = 0;
    EdgeType type = EdgeType::SO;
    KeyId key = kNoKey;  // kNoKey iff type == SO

    bool operator==(const Edge& o) const {
        return from == o.from && to == o.to && type == o.type && key == o.key;
    }
    bool operator<(const Edge& o) const {
        return std::tie(from, to, type, key) < std::tie(o.from, o.to, o.type, o.key);
    }
};

// Unordered pair of candidate version-order edges {a->WW(key)b, b->WW(key)a}.
struct WwConstraint {
    TxnId a = 0, b = 0;  // canonical: a < b
    KeyId key = 0;
};

// Uncertain read-from mapping: reader's external read of (key, value) with
// two or more candidate source writers.
struct WrConstraint {
    TxnId reader = 0;
    KeyId key = 0;
    Value value = 0;
    std::vector<TxnId> candidates;  // sorted, excludes the reader
};

struct NoWriter {
    TxnId reader;
    Key key;
    Value value;
};

namespace detail {
inline std::uint64_t pack_key_txn(KeyId k, TxnId t) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)) << 32) |
           static_cast<std::uint32_t>(t);
}
inline std::uint64_t pack_edge(const Edge& e) {
    // 20 bits per txn id and 16 per key are plenty at target scales
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.from)) << 40) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.to)) << 18) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.key + 1)) << 2) |
           static_cast<std::uint64_t>(e.type);
}
}  // namespace detail

// The known labeled graph (V, E) plus the constraint sets (C_WW, C_WR).
// Known edges carry per-(key, txn) WR/WW indexes used by RW derivation; the
// indexes are kept in sync by add_known_edge.
struct HyperPolygraph {
    int n = 0;                   // vertex count == txn count
    std::vector<Key> keys;       // KeyId -> key name
    std::vector<std::string> labels;  // TxnId -> label
    std::vector<Edge> known;
    std::vector<std::vector<std::int32_t>> out;  // adjacency: edge indexes by source
    std::vector<std::vector<std::int32_t>> in;   // edge indexes by target
    std::vector<WwConstraint> cww;
    std::vector<WrConstraint> cwr;

    // per (key, txn) readers/overwriters in the known graph
    std::unordered_map<std::uint64_t, std::vector<TxnId>> wr_out;  // (x,T) -> readers S
    std::unordered_map<std::uint64_t, std::vector<TxnId>> ww_out;  // (x,T) -> successors T'
    std::unordered_set<std::uint64_t> edge_set;

    KeyId key_id(const Key& k) const {
        auto it = std::lower_bound(keys.begin(), keys.end(), k);
        return (it != keys.end() && *it == k) ? static_cast<KeyId>(it - keys.begin()) : kNoKey;
    }

    bool has_edge(const Edge& e) const { return edge_set.count(detail::pack_edge(e)) != 0; }

    // Returns false if the edge was already present.
    bool add_known_edge(const Edge& e) {
        if (!edge_set.insert(detail::pack_edge(e)).second) return false;
        auto idx = static_cast<std::int32_t>(known.size());
        known.push_back(e);
        out[e.from].push_back(idx);
        in[e.to].push_back(idx);
        if (e.type == EdgeType::WR) wr_out[detail::pack_key_txn(e.key, e.from)].push_back(e.to);
        if (e.type == EdgeType::WW) ww_out[detail::pack_key_txn(e.key, e.from)].push_back(e.to);
        return true;
    }

    const std::vector<TxnId>* wr_readers(KeyId x, TxnId t) const {
        auto it = wr_out.find(detail::pack_key_txn(x, t));
        return it == wr_out.end() ? nullptr : &it->second;
    }
    const std::vector<TxnId>* ww_successors(KeyId x, TxnId t) const {
        auto it = ww_out.find(detail::pack_key_txn(x, t));
        return it == ww_out.end() ? nullptr : &it->second;
    }

    std::size_t total_constraint_edges() const {
        std::size_t n_edges = 2 * cww.size();
        for (auto& c : cwr) n_edges += c.candidates.size();
        return n_edges;
    }
};

// Algorithm: session chains (transitive reduction of SO) and the init edge to
// each session head become known edges; reads with a unique explaining writer
// become known WR edges; everything else becomes a constraint.
inline std::variant<HyperPolygraph, NoWriter> construct(const History& h, const Summaries& s) {
    HyperPolygraph g;
    g.n = static_cast<int>(h.txns.size());
    g.keys = h.key_universe;
    g.labels.reserve(h.txns.size());
    for (auto& t : h.txns) g.labels.push_back(t.label);
    g.out.resize(g.n);
    g.in.resize(g.n);

    for (auto& chain : h.sessions) {
        if (chain.empty()) continue;
        g.add_known_edge({kInitTxn, chain.front(), EdgeType::SO, kNoKey});
        for (std::size_t i = 0; i + 1 < chain.size(); ++i)
            g.add_known_edge({chain[i], chain[i + 1], EdgeType::SO, kNoKey});
    }

    // Read-from mappings: unique writer -> known edge; several -> constraint.
    for (auto& t : h.txns) {
        for (auto& [key, value] : s.txn[t.id].external_reads) {
            KeyId x = g.key_id(key);
            std::vector<TxnId> cands;
            auto wt = s.write_tx.find(key);
            if (wt != s.write_tx.end()) {
                for (TxnId w : wt->second) {
                    if (w == t.id) continue;
                    auto& writes = s.txn[w].writes;
                    auto it = writes.find(key);
                    if (it != writes.end() && it->second == value) cands.push_back(w);
                }
            }
            if (cands.empty()) return NoWriter{t.id, key, value};
            if (cands.size() == 1) {
                g.add_known_edge({cands[0], t.id, EdgeType::WR, x});
            } else {
                WrConstraint c;
                c.reader = t.id;
                c.key = x;
                c.value = value;
                c.candidates = std::move(cands);
                g.cwr.push_back(std::move(c));
            }
        }
    }

    // Uncertain version orders: every unordered pair of writers per key.
    for (auto& [key, writers] : s.write_tx) {
        KeyId x = g.key_id(key);
        for (std::size_t i = 0; i < writers.size(); ++i)
            for (std::size_t j = i + 1; j < writers.size(); ++j)
                g.cww.push_back({writers[i], writers[j], x});
    }
    return g;
}

inline std::variant<HyperPolygraph, NoWriter> construct(const History& h) {
    return construct(h, summarize(h));
}

// -- Compatibility test (Def 3.2) --------------------------------------------

// True iff g contains all known edges, picks exactly one edge per constraint,
// and is RW-closed: (T',T,WR,x) and (T',S,WW,x) with T != S imply (T,S,RW,x).
// The T != S guard comes from the dependency-graph RW definition.
inline bool compatible_ok(const std::vector<Edge>& graph, const HyperPolygraph& hp) {
    std::set<Edge> es(graph.begin(), graph.end());
    for (auto& e : hp.known)
        if (!es.count(e)) return false;
    for (auto& c : hp.cww) {
        int picked = 0;
        if (es.count({c.a, c.b, EdgeType::WW, c.key})) ++picked;
        if (es.count({c.b, c.a, EdgeType::WW, c.key})) ++picked;
        if (picked != 1) return false;
    }
    for (auto& c : hp.cwr) {
        int picked = 0;
        for (TxnId w : c.candidates)
            if (es.count({w, c.reader, EdgeType::WR, c.key})) ++picked;
        if (picked != 1) return false;
    }
    // RW closure
    std::map<std::pair<KeyId, TxnId>, std::vector<TxnId>> wr, ww;
    for (auto& e : es) {
        if (e.type == EdgeType::WR) wr[{e.key, e.from}].push_back(e.to);
        if (e.type == EdgeType::WW) ww[{e.key, e.from}].push_back(e.to);
    }
    for (auto& [kt, readers] : wr) {
        auto it = ww.find(kt);
        if (it == ww.end()) continue;
        for (TxnId t : readers)
            for (TxnId s2 : it->second)
                if (t != s2 && !es.count({t, s2, EdgeType::RW, kt.first})) return false;
    }
    return true;
}

// -- Debug dump ----------------------------------------------------------------

inline void dump_dot(const HyperPolygraph& g, std::ostream& os) {
    os << "digraph hyperpolygraph {\n";
    for (int v = 0; v < g.n; ++v)
        os << "  t" << v << " [label=\"" << g.labels[v] << "\"];\n";
    auto label = [&](EdgeType t, KeyId k) {
        std::string s = edge_type_name(t);
        if (k != kNoKey) s += "(" + g.keys[k] + ")";
        return s;
    };
    for (auto& e : g.known)
        os << "  t" << e.from << " -> t" << e.to << " [label=\"" << label(e.type, e.key)
           << "\"];\n";
    for (auto& c : g.cww) {
        os << "  t" << c.a << " -> t" << c.b << " [label=\"" << label(EdgeType::WW, c.key)
           << "\", style=dashed];\n";
        os << "  t" << c.b << " -> t" << c.a << " [label=\"" << label(EdgeType::WW, c.key)
           << "\", style=dashed];\n";
    }
    for (auto& c : g.cwr)
        for (TxnId w : c.candidates)
            os << "  t" << w << " -> t" << c.reader << " [label=\"" << label(EdgeType::WR, c.key)
               << "\", style=dashed];\n";
    os << "}\n";
}

}  // namespace isochk
