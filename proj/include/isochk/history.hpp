#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace isochk {

using Key = std::string;
using Value = std::int64_t;
using TxnId = std::int32_t;  // dense index into History::txns; 0 is the init transaction

constexpr TxnId kInitTxn = 0;

enum class OpKind : std::uint8_t { Read, Write };

struct Operation {
    std::int64_t op_id = 0;
    OpKind kind = OpKind::Read;
    Key key;
    Value value = 0;

    bool operator==(const Operation& o) const {
        return kind == o.kind && key == o.key && value == o.value;
    }
};

struct Transaction {
    TxnId id = 0;
    std::string label;  // "init" or "s<i>t<j>"
    int session = -1;   // -1 for the init transaction
    std::vector<Operation> ops;  // program order
};

// A normalized history. txns[0] is always the synthesized write-only init
// transaction covering every key in key_universe; sessions hold user
// transaction ids in session order.
struct History {
    std::vector<Transaction> txns;
    std::vector<std::vector<TxnId>> sessions;
    std::map<Key, Value> init_overrides;  // keys whose initial value is not 0
    std::vector<Key> key_universe;        // sorted, unique

    const Transaction& init_txn() const { return txns[kInitTxn]; }
    std::size_t user_txn_count() const { return txns.size() - 1; }

    Value init_value(const Key& k) const {
        auto it = init_overrides.find(k);
        return it == init_overrides.end() ? 0 : it->second;
    }
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void synthesize_init(History& h) {
    std::set<Key> keys(h.key_universe.begin(), h.key_universe.end());
    for (auto& [k, v] : h.init_overrides) keys.insert(k);
    h.key_universe.assign(keys.begin(), keys.end());

    Transaction init;
    init.id = kInitTxn;
    init.label = "init";
    init.session = -1;
    std::int64_t op_id = -1;  // init ops get negative ids, user ops nonnegative
    for (auto& k : h.key_universe) {
        Operation op;
        op.op_id = op_id--;
        op.kind = OpKind::Write;
        op.key = k;
        op.value = h.init_value(k);
        init.ops.push_back(std::move(op));
    }
    h.txns[kInitTxn] = std::move(init);
}

}  // namespace detail

// Builds a History from already-parsed user sessions. Ids are assigned by
// (session index, position); the init transaction is synthesized.
inline History make_history(std::vector<std::vector<std::vector<Operation>>> session_ops,
                            std::map<Key, Value> init_overrides = {}) {
    History h;
    h.init_overrides = std::move(init_overrides);
    h.txns.emplace_back();  // placeholder for init
    std::set<Key> keys;
    std::int64_t next_op = 0;
    for (std::size_t si = 0; si < session_ops.size(); ++si) {
        std::vector<TxnId> chain;
        for (std::size_t tj = 0; tj < session_ops[si].size(); ++tj) {
            Transaction t;
            t.id = static_cast<TxnId>(h.txns.size());
            t.label = "s" + std::to_string(si) + "t" + std::to_string(tj);
            t.session = static_cast<int>(si);
            t.ops = std::move(session_ops[si][tj]);
            if (t.ops.empty()) throw ParseError("transaction " + t.label + " has no operations");
            for (auto& op : t.ops) {
                op.op_id = next_op++;
                keys.insert(op.key);
            }
            chain.push_back(t.id);
            h.txns.push_back(std::move(t));
        }
        h.sessions.push_back(std::move(chain));
    }
    h.key_universe.assign(keys.begin(), keys.end());
    detail::synthesize_init(h);
    return h;
}

// Parses the history JSON schema:
//   {"init": {"<key>": <int>, ...}?, "sessions": [[{"ops": [{"t":"r"|"w","k":..,"v":..}..]}..]..]}
// Ops may carry an optional nonnegative "id"; duplicates are rejected.
inline History parse_history(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("$: expected an object");
    if (!j.contains("sessions") || !j["sessions"].is_array())
        throw ParseError("$.sessions: expected an array");

    std::map<Key, Value> init_overrides;
    if (j.contains("init")) {
        if (!j["init"].is_object()) throw ParseError("$.init: expected an object");
        for (auto& [k, v] : j["init"].items()) {
            if (!v.is_number_integer()) throw ParseError("$.init." + k + ": expected an integer");
            Value val = v.get<Value>();
            if (val != 0) init_overrides[k] = val;
        }
    }

    std::set<std::int64_t> explicit_ids;
    std::vector<std::vector<std::vector<Operation>>> sessions;
    std::size_t si = 0;
    for (auto& sess : j["sessions"]) {
        std::string spath = "$.sessions[" + std::to_string(si) + "]";
        if (!sess.is_array()) throw ParseError(spath + ": expected an array of transactions");
        std::vector<std::vector<Operation>> txns;
        std::size_t tj = 0;
        for (auto& txn : sess) {
            std::string tpath = spath + "[" + std::to_string(tj) + "]";
            if (!txn.is_object()) throw ParseError(tpath + ": expected an object");
            if (txn.contains("aborted") && txn["aborted"].is_boolean() && txn["aborted"].get<bool>())
                throw ParseError(tpath + ": aborted transactions are not accepted");
            if (!txn.contains("ops") || !txn["ops"].is_array())
                throw ParseError(tpath + ".ops: expected an array");
            std::vector<Operation> ops;
            std::size_t oi = 0;
            for (auto& op : txn["ops"]) {
                std::string opath = tpath + ".ops[" + std::to_string(oi) + "]";
                if (!op.is_object()) throw ParseError(opath + ": expected an object");
                Operation o;
                if (!op.contains("t") || !op["t"].is_string())
                    throw ParseError(opath + ".t: expected \"r\" or \"w\"");
                std::string t = op["t"].get<std::string>();
                if (t == "r")
                    o.kind = OpKind::Read;
                else if (t == "w")
                    o.kind = OpKind::Write;
                else
                    throw ParseError(opath + ".t: expected \"r\" or \"w\"");
                if (!op.contains("k") || !op["k"].is_string())
                    throw ParseError(opath + ".k: expected a string");
                o.key = op["k"].get<std::string>();
                if (!op.contains("v") || !op["v"].is_number_integer())
                    throw ParseError(opath + ".v: expected an integer");
                o.value = op["v"].get<Value>();
                if (op.contains("id")) {
                    if (!op["id"].is_number_integer() || op["id"].get<std::int64_t>() < 0)
                        throw ParseError(opath + ".id: expected a nonnegative integer");
                    auto id = op["id"].get<std::int64_t>();
                    if (!explicit_ids.insert(id).second)
                        throw ParseError(opath + ".id: duplicate operation id " + std::to_string(id));
                }
                ops.push_back(std::move(o));
                ++oi;
            }
            if (ops.empty()) throw ParseError(tpath + ".ops: must be non-empty");
            txns.push_back(std::move(ops));
            ++tj;
        }
        sessions.push_back(std::move(txns));
        ++si;
    }
    return make_history(std::move(sessions), std::move(init_overrides));
}

inline nlohmann::json history_to_json(const History& h) {
    nlohmann::json j;
    if (!h.init_overrides.empty()) {
        nlohmann::json init = nlohmann::json::object();
        for (auto& [k, v] : h.init_overrides) init[k] = v;
        j["init"] = init;
    }
    nlohmann::json sessions = nlohmann::json::array();
    for (auto& chain : h.sessions) {
        nlohmann::json sess = nlohmann::json::array();
        for (TxnId tid : chain) {
            nlohmann::json ops = nlohmann::json::array();
            for (auto& op : h.txns[tid].ops) {
                ops.push_back({{"t", op.kind == OpKind::Read ? "r" : "w"},
                               {"k", op.key},
                               {"v", op.value}});
            }
            sess.push_back({{"ops", ops}});
        }
        sessions.push_back(sess);
    }
    j["sessions"] = sessions;
    return j;
}

inline std::string serialize_history(const History& h) { return history_to_json(h).dump(); }

inline bool histories_equal(const History& a, const History& b) {
    if (a.sessions.size() != b.sessions.size()) return false;
    if (a.key_universe != b.key_universe) return false;
    for (auto& k : a.key_universe)
        if (a.init_value(k) != b.init_value(k)) return false;
    for (std::size_t s = 0; s < a.sessions.size(); ++s) {
        if (a.sessions[s].size() != b.sessions[s].size()) return false;
        for (std::size_t t = 0; t < a.sessions[s].size(); ++t)
            if (!(a.txns[a.sessions[s][t]].ops == b.txns[b.sessions[s][t]].ops)) return false;
    }
    return true;
}

// -- Int axiom ---------------------------------------------------------------

struct IntViolation {
    TxnId txn;
    std::int64_t op_id;
    std::size_t op_index;
    Key key;
    Value expected;
    Value observed;
};

// A read must return the value of the latest preceding access (read or write)
// to the same key within its transaction. First accesses are unconstrained.
inline std::vector<IntViolation> check_int_axiom(const History& h) {
    std::vector<IntViolation> out;
    for (auto& t : h.txns) {
        std::map<Key, Value> last_access;
        for (std::size_t i = 0; i < t.ops.size(); ++i) {
            const Operation& op = t.ops[i];
            if (op.kind == OpKind::Read) {
                auto it = last_access.find(op.key);
                if (it != last_access.end() && it->second != op.value)
                    out.push_back({t.id, op.op_id, i, op.key, it->second, op.value});
            }
            last_access[op.key] = op.value;
        }
    }
    return out;
}

// -- Summaries ---------------------------------------------------------------

struct TxnSummary {
    std::map<Key, Value> writes;          // key -> last written value
    std::map<Key, Value> external_reads;  // key -> value of the first read before any write
};

struct Summaries {
    std::vector<TxnSummary> txn;                 // indexed by TxnId
    std::map<Key, std::vector<TxnId>> write_tx;  // WriteTx_x
    std::map<Key, std::vector<TxnId>> read_tx;   // external readers of x
};

inline Summaries summarize(const History& h) {
    Summaries s;
    s.txn.resize(h.txns.size());
    for (auto& t : h.txns) {
        TxnSummary& sum = s.txn[t.id];
        for (auto& op : t.ops) {
            if (op.kind == OpKind::Write) {
                sum.writes[op.key] = op.value;  // last write wins
            } else if (!sum.writes.count(op.key) && !sum.external_reads.count(op.key)) {
                sum.external_reads[op.key] = op.value;
            }
        }
        for (auto& [k, v] : sum.writes) s.write_tx[k].push_back(t.id);
        for (auto& [k, v] : sum.external_reads) s.read_tx[k].push_back(t.id);
    }
    return s;
}

}  // namespace isochk
