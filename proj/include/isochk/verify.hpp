#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isochk/encode.hpp"
#include "isochk/history.hpp"
#include "isochk/hyperpolygraph.hpp"
#include "isochk/prune.hpp"
#include "isochk/si.hpp"
#include "isochk/solver.hpp"
#include "isochk/telemetry.hpp"
#include "isochk/theory.hpp"

namespace isochk {

enum class Isolation { Ser, Si };

struct VerifyOptions {
    Isolation isolation = Isolation::Ser;
    bool pruning = true;
    bool two_width = true;
    bool polarity = true;
    bool baseline = false;  // forces pruning/two_width/polarity off, uses the RW-variable encoding
    double timeout_secs = 600.0;
    int encode_width = 2;
    std::size_t pair_budget_vars = 20000;
    bool min_width_debug = false;
    std::size_t max_witness_edges = 50000;
};

struct Verdict {
    Isolation isolation = Isolation::Ser;
    enum class Status { Satisfied, Violated, Unknown } status = Status::Unknown;

    std::vector<Edge> witness;          // compatible graph, for Satisfied
    bool witness_truncated = false;     // too large to embed in JSON
    std::vector<Edge> induced_witness;  // SI: induced edges of the witness (deduped)

    std::string core_kind;    // no_choice | known_cycle | conflict | int_violation | no_writer
    std::string core_detail;
    std::vector<Edge> core_conflict_edges;
    std::vector<std::string> core_cycle;  // vertex labels of one concrete cycle
    std::vector<IntViolation> int_violations;

    // label/key tables for rendering edges
    std::vector<std::string> labels;
    std::vector<Key> keys;

    Telemetry stats;

    bool satisfied() const { return status == Status::Satisfied; }
};

namespace detail {

inline nlohmann::json edge_json(const Edge& e, const std::vector<std::string>& labels,
                                const std::vector<Key>& keys) {
    nlohmann::json j;
    j["from"] = labels[std::size_t(e.from)];
    j["to"] = labels[std::size_t(e.to)];
    j["type"] = edge_type_name(e.type);
    if (e.key != kNoKey) j["key"] = keys[std::size_t(e.key)];
    return j;
}

// RW closure over the non-RW edges: readers of a version precede its
// overwriters (never themselves).
inline std::vector<Edge> rw_closure(const std::vector<Edge>& edges) {
    std::map<std::pair<KeyId, TxnId>, std::vector<TxnId>> wr, ww;
    for (auto& e : edges) {
        if (e.type == EdgeType::WR) wr[{e.key, e.from}].push_back(e.to);
        if (e.type == EdgeType::WW) ww[{e.key, e.from}].push_back(e.to);
    }
    std::set<Edge> rw;
    for (auto& [kt, readers] : wr) {
        auto it = ww.find(kt);
        if (it == ww.end()) continue;
        for (TxnId s : readers)
            for (TxnId tp : it->second)
                if (s != tp) rw.insert({s, tp, EdgeType::RW, kt.first});
    }
    return {rw.begin(), rw.end()};
}

inline std::vector<std::vector<int>> adjacency_of(int n, const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> adj(n);
    for (auto& e : edges) adj[std::size_t(e.from)].push_back(e.to);
    return adj;
}

inline std::vector<Edge> induced_of(int n, const std::vector<Edge>& edges) {
    std::vector<std::vector<TxnId>> rw_out(n);
    for (auto& e : edges)
        if (e.type == EdgeType::RW) rw_out[std::size_t(e.from)].push_back(e.to);
    std::set<std::pair<TxnId, TxnId>> seen;
    std::vector<Edge> out;
    for (auto& e : edges) {
        if (e.type == EdgeType::RW) continue;
        if (seen.insert({e.from, e.to}).second) out.push_back(e);
        for (TxnId w : rw_out[std::size_t(e.to)])
            if (seen.insert({e.from, w}).second) out.push_back({e.from, w, e.type, e.key});
    }
    return out;
}

inline void fill_cycle_labels(Verdict& v, const std::vector<int>& cycle) {
    for (int x : cycle) v.core_cycle.push_back(v.labels[std::size_t(x)]);
}

}  // namespace detail

// End-to-end verification: construct, prune, encode, solve, audit.
inline Verdict verify(const History& h, VerifyOptions opts) {
    Verdict v;
    v.isolation = opts.isolation;
    if (opts.baseline) {
        if (opts.isolation == Isolation::Si)
            throw std::invalid_argument("baseline mode supports serializability only");
        opts.pruning = false;
        opts.two_width = false;
        opts.polarity = false;
    }
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::microseconds(static_cast<std::int64_t>(opts.timeout_secs * 1e6));
    IsolationMode mode = opts.isolation == Isolation::Si ? IsolationMode::Si : IsolationMode::Ser;

    auto finish = [&](Verdict& out) -> Verdict& {
        out.stats.peak_memory_bytes = peak_memory_bytes();
        return out;
    };

    // Int axiom first: internal inconsistency is a violation on its own.
    {
        StageTimer t(v.stats.construct_us);
        v.int_violations = check_int_axiom(h);
    }
    if (!v.int_violations.empty()) {
        for (auto& t : h.txns) v.labels.push_back(t.label);
        v.status = Verdict::Status::Violated;
        v.core_kind = "int_violation";
        v.core_detail = "a read returns a value other than the latest preceding access";
        return finish(v);
    }

    HyperPolygraph hp;
    {
        StageTimer t(v.stats.construct_us);
        auto res = construct(h);
        if (std::holds_alternative<NoWriter>(res)) {
            auto& nw = std::get<NoWriter>(res);
            v.status = Verdict::Status::Violated;
            v.core_kind = "no_writer";
            v.core_detail = "transaction " + h.txns[std::size_t(nw.reader)].label + " reads " +
                            nw.key + " = " + std::to_string(nw.value) +
                            ", which no transaction wrote";
            for (auto& t : h.txns) v.labels.push_back(t.label);
            return finish(v);
        }
        hp = std::move(std::get<HyperPolygraph>(res));
    }
    v.labels = hp.labels;
    v.keys = hp.keys;
    const HyperPolygraph original = hp;  // audits run against the unpruned graph

    ReachInfo info;
    if (opts.pruning) {
        StageTimer t(v.stats.prune_us);
        auto res = prune(std::move(hp), mode, v.stats);
        if (std::holds_alternative<PruneViolation>(res)) {
            auto& pv = std::get<PruneViolation>(res);
            v.status = Verdict::Status::Violated;
            v.core_kind = pv.kind == PruneViolation::Kind::NoChoice ? "no_choice" : "known_cycle";
            v.core_detail = pv.detail;
            detail::fill_cycle_labels(v, pv.cycle);
            return finish(v);
        }
        auto& pr = std::get<PruneResult>(res);
        hp = std::move(pr.hp);
        info = std::move(pr.info);
    } else {
        StageTimer t(v.stats.prune_us);
        auto res = analyze_known(hp, mode);
        if (std::holds_alternative<PruneViolation>(res)) {
            auto& pv = std::get<PruneViolation>(res);
            v.status = Verdict::Status::Violated;
            v.core_kind = "known_cycle";
            v.core_detail = pv.detail;
            detail::fill_cycle_labels(v, pv.cycle);
            return finish(v);
        }
        info = std::move(std::get<ReachInfo>(res));
    }

    CnfProblem cnf;
    {
        StageTimer t(v.stats.encode_us);
        if (opts.baseline) {
            cnf = encode_baseline(hp, v.stats);
        } else {
            EncodeOptions eo;
            eo.two_width = opts.two_width && opts.encode_width >= 2;
            eo.width = opts.encode_width;
            eo.pair_budget_vars = opts.pair_budget_vars;
            eo.mode = mode;
            KnownView view = build_known_view(hp, mode);
            cnf = encode(hp, info, view, eo, v.stats);
        }
    }

    auto build_witness = [&](const std::vector<char>& model) {
        std::vector<Edge> edges;
        for (auto& e : hp.known)
            if (!opts.baseline) edges.push_back(e);
        for (std::size_t i = 0; i < cnf.vars.size(); ++i) {
            if (!model[i]) continue;
            auto& p = cnf.vars[i];
            if (p.type == EdgeType::RW) continue;  // recomputed below
            edges.push_back({p.from, p.to, p.type, p.key});
        }
        std::vector<Edge> non_rw;
        std::set<Edge> dedup;
        for (auto& e : edges)
            if (e.type != EdgeType::RW && dedup.insert(e).second) non_rw.push_back(e);
        std::vector<Edge> rw;
        for (auto& e : edges)
            if (e.type == EdgeType::RW && dedup.insert(e).second) rw.push_back(e);
        std::vector<Edge> all = non_rw;
        for (auto& e : rw) all.push_back(e);
        for (auto& e : detail::rw_closure(non_rw))
            if (dedup.insert(e).second) all.push_back(e);
        return all;
    };

    auto audit_and_accept = [&](std::vector<Edge> witness) {
        if (!compatible_ok(witness, original))
            throw std::logic_error("internal error: witness is not a compatible graph");
        if (opts.isolation == Isolation::Ser) {
            auto adj = detail::adjacency_of(hp.n, witness);
            if (!topo_order(hp.n, adj))
                throw std::logic_error("internal error: witness graph cyclic");
        }
        if (opts.isolation == Isolation::Si) {
            auto induced = detail::induced_of(hp.n, witness);
            auto iadj = detail::adjacency_of(hp.n, induced);
            if (!topo_order(hp.n, iadj))
                throw std::logic_error("internal error: induced SI witness graph cyclic");
            if (induced.size() <= opts.max_witness_edges)
                v.induced_witness = std::move(induced);
            else
                v.witness_truncated = true;
        }
        v.status = Verdict::Status::Satisfied;
        if (witness.size() <= opts.max_witness_edges)
            v.witness = std::move(witness);
        else
            v.witness_truncated = true;
    };

    if (cnf.vars.empty()) {
        // fully prunable: the known graph is the one compatible graph
        v.stats.solve_bypassed = true;
        audit_and_accept(build_witness({}));
        return finish(v);
    }

    {
        StageTimer t(v.stats.solve_us);
        SolverOptions so;
        so.polarity = opts.polarity;
        so.has_deadline = true;
        so.deadline = deadline;

        SolveResult result;
        if (mode == IsolationMode::Si) {
            InducedSiTheory theory;
            theory.setup(&hp, &cnf, info.topo, true, opts.min_width_debug, &v.stats);
            TheoryConflict init_conflict;
            if (!theory.init_known(&init_conflict)) {
                v.status = Verdict::Status::Violated;
                v.core_kind = "known_cycle";
                v.core_detail = "induced SI graph of the known graph is cyclic";
                return finish(v);
            }
            CdclSolver<InducedSiTheory> solver(cnf, theory, v.stats, so);
            result = solver.solve();
        } else {
            PlainTheory theory;
            theory.setup(&hp, &cnf, info.topo, !opts.baseline, opts.min_width_debug, &v.stats);
            TheoryConflict init_conflict;
            if (!theory.init_known(&init_conflict)) {
                v.status = Verdict::Status::Violated;
                v.core_kind = "known_cycle";
                v.core_detail = "known graph is cyclic";
                return finish(v);
            }
            CdclSolver<PlainTheory> solver(cnf, theory, v.stats, so);
            result = solver.solve();
        }

        switch (result.outcome) {
            case SolveOutcome::Sat:
                audit_and_accept(build_witness(result.model));
                break;
            case SolveOutcome::Unsat: {
                v.status = Verdict::Status::Violated;
                v.core_kind = "conflict";
                v.core_detail = "no acyclic compatible graph exists";
                for (VarId var : result.final_conflict) {
                    auto& p = cnf.vars[std::size_t(var)];
                    v.core_conflict_edges.push_back({p.from, p.to, p.type, p.key});
                }
                if (result.last_cycle)
                    for (auto& e : result.last_cycle->edges)
                        v.core_cycle.push_back(v.labels[std::size_t(e.from)] + "->" +
                                               v.labels[std::size_t(e.to)]);
                break;
            }
            case SolveOutcome::Unknown:
                v.status = Verdict::Status::Unknown;
                v.core_kind = "timeout";
                v.core_detail = "wall-clock budget exceeded";
                break;
        }
    }
    return finish(v);
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
    nlohmann::json j;
    j["isolation"] = v.isolation == Isolation::Si ? "si" : "ser";
    if (v.status == Verdict::Status::Unknown)
        j["satisfied"] = nullptr;
    else
        j["satisfied"] = (v.status == Verdict::Status::Satisfied);
    if (v.status == Verdict::Status::Satisfied) {
        nlohmann::json w;
        w["edge_count"] = v.witness.size();
        w["truncated"] = v.witness_truncated;
        nlohmann::json edges = nlohmann::json::array();
        for (auto& e : v.witness) edges.push_back(detail::edge_json(e, v.labels, v.keys));
        w["edges"] = edges;
        if (v.isolation == Isolation::Si) {
            nlohmann::json ind = nlohmann::json::array();
            for (auto& e : v.induced_witness)
                ind.push_back({{"from", v.labels[std::size_t(e.from)]},
                               {"to", v.labels[std::size_t(e.to)]}});
            w["induced_edges"] = ind;
        }
        j["witness"] = w;
    } else if (v.status == Verdict::Status::Violated) {
        nlohmann::json c;
        c["kind"] = v.core_kind;
        c["detail"] = v.core_detail;
        if (!v.core_conflict_edges.empty()) {
            nlohmann::json edges = nlohmann::json::array();
            for (auto& e : v.core_conflict_edges)
                edges.push_back(detail::edge_json(e, v.labels, v.keys));
            c["conflict_edges"] = edges;
        }
        if (!v.core_cycle.empty()) c["cycle"] = v.core_cycle;
        if (!v.int_violations.empty()) {
            nlohmann::json viols = nlohmann::json::array();
            for (auto& iv : v.int_violations)
                viols.push_back({{"txn", v.labels[std::size_t(iv.txn)]},
                                 {"op_index", iv.op_index},
                                 {"key", iv.key},
                                 {"expected", iv.expected},
                                 {"observed", iv.observed}});
            c["int_violations"] = viols;
        }
        j["core"] = c;
    } else {
        j["core"] = {{"kind", v.core_kind}, {"detail", v.core_detail}};
    }
    j["stats"] = v.stats.to_json();
    return j;
}

}  // namespace isochk
