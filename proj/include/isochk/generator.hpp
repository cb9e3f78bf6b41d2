#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isochk/history.hpp"

namespace isochk {

// Deterministic splitmix64 stream; self-contained so generated histories are
// byte-identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
    double unit() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }

  private:
    std::uint64_t state_;
};

// Inverse-CDF sampler over {1..n} with weight 1/k^theta.
class ZipfSampler {
  public:
    ZipfSampler(double theta, int n) {
        cum_.reserve(std::size_t(n));
        double total = 0;
        for (int k = 1; k <= n; ++k) {
            total += 1.0 / std::pow(double(k), theta);
            cum_.push_back(total);
        }
    }
    std::int64_t sample(Rng& rng) const {
        double r = rng.unit() * cum_.back();
        auto it = std::lower_bound(cum_.begin(), cum_.end(), r);
        return static_cast<std::int64_t>(it - cum_.begin()) + 1;
    }
    double mass(int k) const {
        double prev = k > 1 ? cum_[std::size_t(k) - 2] : 0.0;
        return (cum_[std::size_t(k) - 1] - prev) / cum_.back();
    }

  private:
    std::vector<double> cum_;
};

struct GenParams {
    int sessions = 20;
    int txns_per_session = 100;
    int ops_per_txn = 20;
    double read_fraction = 0.5;
    int num_keys = 5000;
    double dup_key_fraction = 0.5;
    double zipf_theta = 0.5;
    int zipf_n = 100;
    std::uint64_t seed = 1;
    bool rmw = false;        // read-modify-write pairs with globally unique values
    bool zipf_keys = false;  // key-access distribution; uniform by default
    double key_zipf_theta = 0.5;
};

// Produces a history that is serializable by construction: transactions
// execute round-robin across sessions against one in-memory store; reads
// return the store value at execution time. Writes to duplicate-marked keys
// draw values from Zipf(theta) over {1..N}; other writes get values above N,
// globally unique.
inline History generate(const GenParams& p) {
    Rng rng(p.seed);
    ZipfSampler zipf(p.zipf_theta, std::max(1, p.zipf_n));
    ZipfSampler key_zipf(p.key_zipf_theta, std::max(1, p.num_keys));

    std::vector<char> dup(std::size_t(p.num_keys), 0);
    for (int k = 0; k < p.num_keys; ++k) dup[std::size_t(k)] = rng.unit() < p.dup_key_fraction;

    std::vector<Value> store(std::size_t(std::max(1, p.num_keys)), 0);
    std::vector<std::vector<std::vector<Operation>>> session_ops(std::size_t(p.sessions));
    for (auto& s : session_ops) s.resize(std::size_t(p.txns_per_session));

    auto key_name = [](int k) { return "k" + std::to_string(k); };
    auto pick_key = [&]() {
        if (p.num_keys <= 0) return 0;
        if (p.zipf_keys) return static_cast<int>(key_zipf.sample(rng)) - 1;
        return static_cast<int>(rng.below(std::uint64_t(p.num_keys)));
    };

    Value unique_next = p.zipf_n + 1;
    for (int j = 0; j < p.txns_per_session; ++j) {
        for (int s = 0; s < p.sessions; ++s) {
            std::vector<Operation>& ops = session_ops[std::size_t(s)][std::size_t(j)];
            std::map<int, Value> local;
            auto visible = [&](int k) {
                auto it = local.find(k);
                return it != local.end() ? it->second : store[std::size_t(k)];
            };
            if (p.rmw) {
                int pairs = std::max(1, p.ops_per_txn / 2);
                for (int i = 0; i < pairs; ++i) {
                    int k = pick_key();
                    ops.push_back({0, OpKind::Read, key_name(k), visible(k)});
                    local[k] = unique_next++;
                    ops.push_back({0, OpKind::Write, key_name(k), local[k]});
                }
            } else {
                for (int i = 0; i < std::max(1, p.ops_per_txn); ++i) {
                    int k = pick_key();
                    if (rng.unit() < p.read_fraction) {
                        ops.push_back({0, OpKind::Read, key_name(k), visible(k)});
                    } else {
                        Value val = dup[std::size_t(k)] ? zipf.sample(rng) : unique_next++;
                        local[k] = val;
                        ops.push_back({0, OpKind::Write, key_name(k), val});
                    }
                }
            }
            for (auto& [k, val] : local) store[std::size_t(k)] = val;
        }
    }
    return make_history(std::move(session_ops));
}

enum class AnomalyKind { StaleRead, LostUpdateTrace, WriteSkewTrace };

namespace gen_detail {

inline std::vector<std::vector<std::vector<Operation>>> session_op_lists(const History& h) {
    std::vector<std::vector<std::vector<Operation>>> out(h.sessions.size());
    for (std::size_t s = 0; s < h.sessions.size(); ++s)
        for (TxnId tid : h.sessions[s]) out[s].push_back(h.txns[std::size_t(tid)].ops);
    return out;
}

inline Key fresh_key(const History& h, const std::string& stem) {
    for (int i = 0;; ++i) {
        Key k = stem + std::to_string(i);
        if (!std::binary_search(h.key_universe.begin(), h.key_universe.end(), k)) return k;
    }
}

}  // namespace gen_detail

// Rewrites or splices a violation pattern into a copy of h. Returns nullopt
// when no eligible site exists. Results still satisfy the Int axiom.
inline std::optional<History> inject_anomaly(const History& h, AnomalyKind kind,
                                             std::uint64_t seed) {
    if (h.user_txn_count() < 2) return std::nullopt;
    Rng rng(seed);
    auto ops = gen_detail::session_op_lists(h);

    if (kind == AnomalyKind::LostUpdateTrace || kind == AnomalyKind::WriteSkewTrace) {
        if (kind == AnomalyKind::LostUpdateTrace) {
            Key k = gen_detail::fresh_key(h, "lostupd");
            ops.push_back({{{0, OpKind::Read, k, 0}, {0, OpKind::Write, k, 1}}});
            ops.push_back({{{0, OpKind::Read, k, 0}, {0, OpKind::Write, k, 2}}});
        } else {
            Key ka = gen_detail::fresh_key(h, "wskewa");
            Key kb = gen_detail::fresh_key(h, "wskewb");
            ops.push_back({{{0, OpKind::Read, ka, 0}, {0, OpKind::Write, kb, 1}}});
            ops.push_back({{{0, OpKind::Read, kb, 0}, {0, OpKind::Write, ka, 1}}});
        }
        return make_history(std::move(ops), h.init_overrides);
    }

    // StaleRead: pick a transaction whose external read of some key can be
    // rewound to the initial value while a same-session predecessor wrote the
    // key; the session order then pins the reader after the overwrite, so the
    // rewound read is unserializable. Requires that no user transaction
    // (re-)writes the initial value, keeping the init transaction the unique
    // source.
    Summaries sum = summarize(h);
    struct Site {
        std::size_t session, txn;
        Key key;
    };
    std::vector<Site> sites;
    for (std::size_t s = 0; s < h.sessions.size(); ++s) {
        for (std::size_t j = 1; j < h.sessions[s].size(); ++j) {
            TxnId tid = h.sessions[s][j];
            for (auto& [k, val] : sum.txn[std::size_t(tid)].external_reads) {
                if (val == h.init_value(k)) continue;  // already reads the oldest version
                bool init_unique = true;
                for (TxnId w : sum.write_tx[k])
                    if (w != kInitTxn && sum.txn[std::size_t(w)].writes.at(k) == h.init_value(k))
                        init_unique = false;
                if (!init_unique) continue;
                bool predecessor_writes = false;
                for (std::size_t i = 0; i < j && !predecessor_writes; ++i)
                    if (sum.txn[std::size_t(h.sessions[s][i])].writes.count(k))
                        predecessor_writes = true;
                if (predecessor_writes) sites.push_back({s, j, k});
            }
        }
    }
    if (sites.empty()) return std::nullopt;
    const Site& site = sites[std::size_t(rng.below(sites.size()))];
    Value init = h.init_value(site.key);
    for (auto& op : ops[site.session][site.txn]) {
        if (op.key != site.key) continue;
        if (op.kind == OpKind::Write) break;  // rewrite only the external-read prefix
        op.value = init;
    }
    return make_history(std::move(ops), h.init_overrides);
}

}  // namespace isochk
