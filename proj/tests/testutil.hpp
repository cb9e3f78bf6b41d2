#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "isochk/generator.hpp"
#include "isochk/history.hpp"

namespace testutil {

using namespace isochk;

inline std::string data_path(const std::string& name) {
    return std::string(ISOCHK_TEST_DATA_DIR) + "/" + name;
}

inline History load_history(const std::string& name) {
    std::ifstream in(data_path(name));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_history(ss.str());
}

// Compact builder: each session is a list of transactions, each transaction a
// comma-separated op string, e.g. "w x 1, r y 0".
inline History hist(std::vector<std::vector<std::string>> sessions,
                    std::map<Key, Value> init = {}) {
    std::vector<std::vector<std::vector<Operation>>> ops;
    for (auto& sess : sessions) {
        std::vector<std::vector<Operation>> txns;
        for (auto& tstr : sess) {
            std::vector<Operation> txn;
            std::istringstream ss(tstr);
            std::string part;
            while (std::getline(ss, part, ',')) {
                std::istringstream op(part);
                std::string kind, key;
                long long value;
                op >> kind >> key >> value;
                txn.push_back({0, kind == "r" ? OpKind::Read : OpKind::Write, key, value});
            }
            txns.push_back(std::move(txn));
        }
        ops.push_back(std::move(txns));
    }
    return make_history(std::move(ops), std::move(init));
}

inline TxnId by_label(const History& h, const std::string& label) {
    for (auto& t : h.txns)
        if (t.label == label) return t.id;
    return -1;
}

// Random histories within the oracle's comfort zone: <= 6 user transactions,
// <= 3 keys, <= 4 ops per transaction, roughly half the keys drawing from a
// small duplicate-value pool. Three strategies: replay-consistent (mostly
// serializable), value-mutated (explainable but often violating), and wild
// (may be inexplicable or Int-violating).
inline History random_small_history(Rng& rng) {
    int n_keys = 1 + int(rng.below(3));
    int n_txns = 2 + int(rng.below(5));
    int n_sessions = 1 + int(rng.below(3));
    if (n_sessions > n_txns) n_sessions = n_txns;
    std::vector<int> session_of(std::size_t(n_txns));
    for (int t = 0; t < n_txns; ++t) session_of[std::size_t(t)] = int(rng.below(std::uint64_t(n_sessions)));

    struct FlatOp {
        int txn;
        Operation op;
    };
    std::vector<std::vector<Operation>> txn_ops(std::size_t(n_txns));
    std::vector<char> dup(std::size_t(n_keys));
    for (auto& d : dup) d = rng.below(2) == 0;
    Value unique_next = 10;

    // replay in a random SO-consistent interleaving: txns of one session keep
    // relative order because they are appended session by session
    std::vector<int> exec_order;
    {
        std::vector<std::vector<int>> per_session(std::size_t(n_sessions));
        for (int t = 0; t < n_txns; ++t) per_session[std::size_t(session_of[std::size_t(t)])].push_back(t);
        std::vector<std::size_t> idx(std::size_t(n_sessions), 0);
        for (int placed = 0; placed < n_txns;) {
            auto s = rng.below(std::uint64_t(n_sessions));
            if (idx[s] < per_session[s].size()) {
                exec_order.push_back(per_session[s][idx[s]++]);
                ++placed;
            }
        }
    }
    std::vector<Value> store(std::size_t(n_keys), 0);
    for (int t : exec_order) {
        int ops_n = 1 + int(rng.below(4));
        std::map<int, Value> local;
        for (int i = 0; i < ops_n; ++i) {
            int k = int(rng.below(std::uint64_t(n_keys)));
            Key key = "k" + std::to_string(k);
            if (rng.below(2) == 0) {
                Value v = local.count(k) ? local[k] : store[std::size_t(k)];
                txn_ops[std::size_t(t)].push_back({0, OpKind::Read, key, v});
            } else {
                Value v = dup[std::size_t(k)] ? Value(1 + rng.below(3)) : unique_next++;
                local[k] = v;
                txn_ops[std::size_t(t)].push_back({0, OpKind::Write, key, v});
            }
        }
        for (auto& [k, v] : local) store[std::size_t(k)] = v;
    }

    int strategy = int(rng.below(3));
    if (strategy > 0) {
        // collect written values per key (plus the initial 0)
        std::map<Key, std::vector<Value>> written;
        for (auto& ops : txn_ops)
            for (auto& op : ops)
                if (op.kind == OpKind::Write) written[op.key].push_back(op.value);
        int mutations = 1 + int(rng.below(2));
        for (int m = 0; m < mutations; ++m) {
            int t = int(rng.below(std::uint64_t(n_txns)));
            auto& ops = txn_ops[std::size_t(t)];
            std::vector<std::size_t> reads;
            for (std::size_t i = 0; i < ops.size(); ++i)
                if (ops[i].kind == OpKind::Read) reads.push_back(i);
            if (reads.empty()) continue;
            auto& op = ops[reads[std::size_t(rng.below(reads.size()))]];
            if (strategy == 1) {
                auto& vals = written[op.key];
                op.value = vals.empty() || rng.below(4) == 0
                               ? 0
                               : vals[std::size_t(rng.below(vals.size()))];
            } else {
                op.value = Value(rng.below(5));
            }
        }
    }

    std::vector<std::vector<std::vector<Operation>>> sessions(std::size_t(n_sessions));
    std::vector<std::vector<int>> per_session(std::size_t(n_sessions));
    for (int t : exec_order) per_session[std::size_t(session_of[std::size_t(t)])].push_back(t);
    for (int s = 0; s < n_sessions; ++s)
        for (int t : per_session[std::size_t(s)])
            sessions[std::size_t(s)].push_back(txn_ops[std::size_t(t)]);
    // drop empty sessions
    std::vector<std::vector<std::vector<Operation>>> nonempty;
    for (auto& s : sessions)
        if (!s.empty()) nonempty.push_back(std::move(s));
    return make_history(std::move(nonempty));
}

}  // namespace testutil
