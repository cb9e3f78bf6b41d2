#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "isochk/history.hpp"
#include "isochk/hyperpolygraph.hpp"
#include "isochk/reach.hpp"

namespace isochk {

struct OracleBudget {
    int max_txns = 7;
    std::int64_t max_enumerations = 10'000'000;
};

struct BudgetExceeded : std::runtime_error {
    BudgetExceeded() : std::runtime_error("oracle budget exceeded") {}
};

namespace oracle_detail {

struct Enumerator {
    const History& h;
    const Summaries sum;
    OracleBudget budget;
    std::int64_t used = 0;

    explicit Enumerator(const History& hist, OracleBudget b) : h(hist), sum(summarize(hist)), budget(b) {
        if (static_cast<int>(h.txns.size()) - 1 > b.max_txns) throw BudgetExceeded();
    }

    void charge() {
        if (++used > budget.max_enumerations) throw BudgetExceeded();
    }
};

// Replays transactions in a given total order against a sequential store.
inline bool replay_order_search(Enumerator& en) {
    const History& h = en.h;
    std::vector<std::size_t> idx(h.sessions.size(), 0);
    std::map<Key, Value> store;
    for (auto& k : h.key_universe) store[k] = h.init_value(k);

    // Depth-first over SO-consistent interleavings; a transaction replays
    // correctly iff each read sees the store value, shadowed by its own
    // earlier writes.
    std::size_t total = 0;
    for (auto& s : h.sessions) total += s.size();
    if (total == 0) return true;  // only the init transaction

    struct Frame {
        std::size_t session;
        std::map<Key, Value> saved;  // store entries this txn overwrote
    };
    std::vector<Frame> stack;

    auto try_txn = [&](std::size_t si, std::map<Key, Value>& saved) -> bool {
        en.charge();
        const Transaction& t = h.txns[std::size_t(h.sessions[si][idx[si]])];
        std::map<Key, Value> local;
        for (auto& op : t.ops) {
            if (op.kind == OpKind::Read) {
                auto it = local.find(op.key);
                Value cur = it != local.end() ? it->second : store[op.key];
                if (cur != op.value) return false;
            } else {
                local[op.key] = op.value;
            }
        }
        for (auto& [k, val] : local) {
            saved[k] = store[k];
            store[k] = val;
        }
        return true;
    };

    std::size_t placed = 0;
    std::size_t next_session = 0;
    for (;;) {
        bool advanced = false;
        for (std::size_t si = next_session; si < h.sessions.size(); ++si) {
            if (idx[si] >= h.sessions[si].size()) continue;
            std::map<Key, Value> saved;
            if (try_txn(si, saved)) {
                stack.push_back({si, std::move(saved)});
                ++idx[si];
                ++placed;
                next_session = 0;
                advanced = true;
                break;
            }
        }
        if (advanced) {
            if (placed == total) return true;
            continue;
        }
        if (stack.empty()) return false;
        Frame f = std::move(stack.back());
        stack.pop_back();
        for (auto& [k, val] : f.saved) store[k] = val;
        --idx[f.session];
        --placed;
        next_session = f.session + 1;
    }
}

struct GraphLeafContext {
    int n = 0;
    std::vector<std::pair<TxnId, TxnId>> base_edges;        // SO
    std::vector<Key> keys;                                  // keys with writers
    std::vector<std::vector<TxnId>> writers;                // per key, init first
    std::vector<std::vector<TxnId>> order;                  // current permutation per key
    struct Read {
        TxnId reader;
        std::size_t key_pos;
        std::vector<TxnId> cands;
        TxnId chosen = -1;
    };
    std::vector<Read> reads;
};

// Edge set for one full choice of WW orders and WR sources. WW edges are the
// per-key chains (transitive reduction of the total order); a read adds its
// WR edge plus one anti-dependency to the first later writer other than the
// reader — later ones follow through the chain.
inline bool leaf_graph_acyclic(const GraphLeafContext& ctx, bool si) {
    std::vector<std::pair<TxnId, TxnId>> nonrw = ctx.base_edges;
    std::vector<std::pair<TxnId, TxnId>> rw;
    for (auto& ord : ctx.order)
        for (std::size_t i = 0; i + 1 < ord.size(); ++i) nonrw.push_back({ord[i], ord[i + 1]});
    for (auto& rd : ctx.reads) {
        nonrw.push_back({rd.chosen, rd.reader});
        auto& ord = ctx.order[rd.key_pos];
        auto it = std::find(ord.begin(), ord.end(), rd.chosen);
        for (auto j = it + 1; j != ord.end(); ++j) {
            if (*j == rd.reader) break;  // the chain from the reader covers the rest
            rw.push_back({rd.reader, *j});
            break;
        }
    }
    std::vector<std::vector<int>> adj(std::size_t(ctx.n));
    if (!si) {
        for (auto& [a, b] : nonrw) adj[std::size_t(a)].push_back(b);
        for (auto& [a, b] : rw) adj[std::size_t(a)].push_back(b);
    } else {
        std::vector<std::vector<TxnId>> rw_out(std::size_t(ctx.n));
        for (auto& [a, b] : rw) rw_out[std::size_t(a)].push_back(b);
        for (auto& [a, b] : nonrw) {
            adj[std::size_t(a)].push_back(b);
            for (TxnId c : rw_out[std::size_t(b)]) adj[std::size_t(a)].push_back(c);
        }
    }
    return topo_order(ctx.n, adj).has_value();
}

inline bool reads_explainable(Enumerator& en, GraphLeafContext& ctx) {
    const History& h = en.h;
    ctx.n = static_cast<int>(h.txns.size());
    for (auto& chain : h.sessions) {
        if (chain.empty()) continue;
        ctx.base_edges.push_back({kInitTxn, chain.front()});
        for (std::size_t i = 0; i + 1 < chain.size(); ++i)
            ctx.base_edges.push_back({chain[i], chain[i + 1]});
    }
    std::map<Key, std::size_t> key_pos;
    for (auto& [k, ws] : en.sum.write_tx) {
        key_pos[k] = ctx.keys.size();
        ctx.keys.push_back(k);
        ctx.writers.push_back(ws);  // sorted by txn id, init txn first
    }
    for (auto& t : h.txns) {
        for (auto& [k, val] : en.sum.txn[t.id].external_reads) {
            GraphLeafContext::Read rd;
            rd.reader = t.id;
            rd.key_pos = key_pos.at(k);
            for (TxnId w : ctx.writers[rd.key_pos]) {
                if (w == t.id) continue;
                auto& writes = en.sum.txn[w].writes;
                auto it = writes.find(k);
                if (it != writes.end() && it->second == val) rd.cands.push_back(w);
            }
            if (rd.cands.empty()) return false;
            rd.chosen = rd.cands[0];
            ctx.reads.push_back(std::move(rd));
        }
    }
    return true;
}

inline bool enumerate_reads(Enumerator& en, GraphLeafContext& ctx, std::size_t r, bool si) {
    if (r == ctx.reads.size()) {
        en.charge();
        return leaf_graph_acyclic(ctx, si);
    }
    for (TxnId cand : ctx.reads[r].cands) {
        ctx.reads[r].chosen = cand;
        if (enumerate_reads(en, ctx, r + 1, si)) return true;
    }
    return false;
}

inline bool enumerate_orders(Enumerator& en, GraphLeafContext& ctx, std::size_t k, bool si) {
    if (k == ctx.keys.size()) return enumerate_reads(en, ctx, 0, si);
    std::vector<TxnId> users(ctx.writers[k].begin() + 1, ctx.writers[k].end());
    std::sort(users.begin(), users.end());
    do {
        ctx.order[k].assign(1, ctx.writers[k].front());
        ctx.order[k].insert(ctx.order[k].end(), users.begin(), users.end());
        if (enumerate_orders(en, ctx, k + 1, si)) return true;
    } while (std::next_permutation(users.begin(), users.end()));
    return false;
}

inline bool graph_search(const History& h, OracleBudget budget, bool si) {
    if (!check_int_axiom(h).empty()) return false;
    Enumerator en(h, budget);
    GraphLeafContext ctx;
    if (!reads_explainable(en, ctx)) return false;
    ctx.order.resize(ctx.keys.size());
    return enumerate_orders(en, ctx, 0, si);
}

}  // namespace oracle_detail

// True iff some SO-consistent total order of transactions replays every read
// against a sequential store.
inline bool oracle_ser_permutation(const History& h, OracleBudget budget = {}) {
    if (!check_int_axiom(h).empty()) return false;
    oracle_detail::Enumerator en(h, budget);
    return oracle_detail::replay_order_search(en);
}

// True iff some read-from selection and per-key version orders yield an
// acyclic RW-closed graph. Independent route through Theorem-style graph
// enumeration; must agree with oracle_ser_permutation.
inline bool oracle_ser_graphs(const History& h, OracleBudget budget = {}) {
    return oracle_detail::graph_search(h, budget, false);
}

// True iff some selection's induced SI graph (SO u WR u WW);RW? is acyclic.
inline bool oracle_si(const History& h, OracleBudget budget = {}) {
    return oracle_detail::graph_search(h, budget, true);
}

}  // namespace isochk
