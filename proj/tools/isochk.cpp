#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "isochk/encode.hpp"
#include "isochk/generator.hpp"
#include "isochk/log.hpp"
#include "isochk/oracle.hpp"
#include "isochk/verify.hpp"

namespace {

using namespace isochk;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

int verdict_exit_code(const Verdict& v) {
    switch (v.status) {
        case Verdict::Status::Satisfied: return 0;
        case Verdict::Status::Violated: return 1;
        case Verdict::Status::Unknown: return 2;
    }
    return 3;
}

struct VerifyArgs {
    std::string isolation = "ser";
    std::vector<std::string> inputs;
    bool disable_pruning = false, disable_2width = false, disable_polarity = false;
    bool baseline = false, min_width_debug = false;
    double timeout = 600.0;
    int encode_width = 2;
    int jobs = 1;
    std::size_t max_witness_edges = 50000;
    std::string out, dot, dimacs;
};

VerifyOptions to_options(const VerifyArgs& a) {
    VerifyOptions o;
    o.isolation = a.isolation == "si" ? Isolation::Si : Isolation::Ser;
    o.pruning = !a.disable_pruning;
    o.two_width = !a.disable_2width;
    o.polarity = !a.disable_polarity;
    o.baseline = a.baseline;
    o.timeout_secs = a.timeout;
    o.encode_width = a.encode_width;
    o.min_width_debug = a.min_width_debug;
    o.max_witness_edges = a.max_witness_edges;
    return o;
}

void dump_debug_artifacts(const History& h, const VerifyArgs& a) {
    if (a.dot.empty() && a.dimacs.empty()) return;
    auto res = construct(h);
    if (std::holds_alternative<NoWriter>(res)) return;
    auto& hp = std::get<HyperPolygraph>(res);
    if (!a.dot.empty()) {
        std::ofstream out(a.dot);
        dump_dot(hp, out);
    }
    if (!a.dimacs.empty()) {
        Telemetry tel;
        auto opts = to_options(a);
        IsolationMode mode = opts.isolation == Isolation::Si ? IsolationMode::Si
                                                             : IsolationMode::Ser;
        HyperPolygraph base = hp;
        ReachInfo info;
        if (opts.pruning) {
            auto pr = prune(std::move(base), mode, tel);
            if (std::holds_alternative<PruneViolation>(pr)) return;
            base = std::move(std::get<PruneResult>(pr).hp);
            info = std::move(std::get<PruneResult>(pr).info);
        } else {
            auto ar = analyze_known(base, mode);
            if (std::holds_alternative<PruneViolation>(ar)) return;
            info = std::move(std::get<ReachInfo>(ar));
        }
        EncodeOptions eo;
        eo.two_width = opts.two_width && opts.encode_width >= 2;
        eo.width = opts.encode_width;
        eo.mode = mode;
        KnownView view = build_known_view(base, mode);
        CnfProblem cnf = opts.baseline ? encode_baseline(base, tel)
                                       : encode(base, info, view, eo, tel);
        std::ofstream out(a.dimacs);
        export_dimacs(cnf, base, out);
    }
}

int run_verify(const VerifyArgs& a) {
    struct Row {
        int code = 3;
        std::string json;
    };
    std::vector<Row> rows(a.inputs.size());
    std::mutex next_mu;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lk(next_mu);
                if (next >= a.inputs.size()) return;
                i = next++;
            }
            try {
                History h = parse_history(read_file(a.inputs[i]));
                if (a.inputs.size() == 1) dump_debug_artifacts(h, a);
                Verdict v = verify(h, to_options(a));
                nlohmann::json j = verdict_to_json(v);
                j["input"] = a.inputs[i];
                rows[i] = {verdict_exit_code(v), j.dump()};
            } catch (const std::exception& e) {
                nlohmann::json j{{"input", a.inputs[i]}, {"error", e.what()}};
                rows[i] = {3, j.dump()};
            }
        }
    };
    int jobs = std::max(1, std::min<int>(a.jobs, static_cast<int>(a.inputs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream out;
    for (auto& r : rows) out << r.json << "\n";
    if (a.out.empty())
        std::cout << out.str();
    else
        write_file(a.out, out.str());

    int code = 0;
    for (auto& r : rows) code = std::max(code, r.code);
    return code;
}

int run_oracle(const std::string& isolation, const std::string& input, int max_txns,
               std::int64_t max_enum) {
    History h = parse_history(read_file(input));
    OracleBudget budget{max_txns, max_enum};
    nlohmann::json j;
    j["input"] = input;
    j["isolation"] = isolation;
    int code;
    try {
        bool ok;
        if (isolation == "si") {
            ok = oracle_si(h, budget);
        } else {
            ok = oracle_ser_graphs(h, budget);
            bool perm = oracle_ser_permutation(h, budget);
            j["agreement"] = (ok == perm);
            if (ok != perm) {
                std::cerr << "oracle disagreement on " << input << "\n";
                std::cout << j.dump() << "\n";
                return 3;
            }
        }
        j["satisfied"] = ok;
        code = ok ? 0 : 1;
    } catch (const BudgetExceeded&) {
        j["satisfied"] = nullptr;
        j["error"] = "budget exceeded";
        code = 2;
    }
    std::cout << j.dump() << "\n";
    return code;
}

int run_stats(const std::vector<std::string>& inputs, const std::string& isolation,
              const std::string& out_path) {
    nlohmann::json report = nlohmann::json::array();
    std::ostringstream table;
    table << std::left;
    auto header = [&] {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-28s %10s %10s %10s %10s %9s %9s %10s  %s\n", "input",
                      "construct", "prune", "encode", "solve", "confl(H)", "confl(-H)", "pk_calls",
                      "width histogram (-H -C)");
        table << buf;
    };
    header();
    for (auto& input : inputs) {
        History h = parse_history(read_file(input));
        VerifyOptions base;
        base.isolation = isolation == "si" ? Isolation::Si : Isolation::Ser;

        Verdict full = verify(h, base);
        VerifyOptions no_h = base;
        no_h.polarity = false;
        Verdict without_h = verify(h, no_h);
        VerifyOptions hist_cfg = no_h;
        hist_cfg.two_width = false;  // measure conflict widths without pre-encoding
        Verdict hist = verify(h, hist_cfg);

        nlohmann::json j;
        j["input"] = input;
        j["satisfied"] = full.status == Verdict::Status::Satisfied;
        j["stage_timings_us"] = {{"construct", full.stats.construct_us},
                                 {"prune", full.stats.prune_us},
                                 {"encode", full.stats.encode_us},
                                 {"solve", full.stats.solve_us}};
        j["solve_bypassed"] = full.stats.solve_bypassed;
        j["conflicts_with_polarity"] = full.stats.conflicts;
        j["conflicts_without_polarity"] = without_h.stats.conflicts;
        j["pk"] = {{"calls", full.stats.pk_calls},
                   {"traversals", full.stats.pk_traversals},
                   {"cycles_detected", full.stats.cycles_detected},
                   {"reorders", full.stats.reorders}};
        nlohmann::json hj = nlohmann::json::object();
        std::ostringstream hs;
        for (auto& [w, c] : hist.stats.width_histogram) {
            hj[std::to_string(w)] = c;
            hs << w << ":" << c << " ";
        }
        j["width_histogram"] = hj;
        report.push_back(j);

        char buf[512];
        std::snprintf(buf, sizeof buf, "%-28s %10lld %10lld %10lld %10lld %9lld %9lld %10lld  %s\n",
                      input.c_str(), static_cast<long long>(full.stats.construct_us),
                      static_cast<long long>(full.stats.prune_us),
                      static_cast<long long>(full.stats.encode_us),
                      static_cast<long long>(full.stats.solve_us),
                      static_cast<long long>(full.stats.conflicts),
                      static_cast<long long>(without_h.stats.conflicts),
                      static_cast<long long>(full.stats.pk_calls), hs.str().c_str());
        table << buf;
    }
    std::cout << table.str();
    std::string json_text = report.dump(2) + "\n";
    if (!out_path.empty())
        write_file(out_path, json_text);
    else
        std::cout << json_text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"black-box serializability / snapshot-isolation checker"};
    app.require_subcommand(1);

    VerifyArgs va;
    auto* verify_cmd = app.add_subcommand("verify", "verify a history file");
    verify_cmd->add_option("input", va.inputs, "history JSON file(s)")->required();
    verify_cmd->add_option("--isolation", va.isolation, "ser|si")
        ->check(CLI::IsMember({"ser", "si"}));
    verify_cmd->add_flag("--disable-pruning", va.disable_pruning, "skip 1-width cycle pruning");
    verify_cmd->add_flag("--disable-2width", va.disable_2width, "skip 2-width cycle encoding");
    verify_cmd->add_flag("--disable-polarity", va.disable_polarity,
                         "skip order-guided polarity picking");
    verify_cmd->add_flag("--baseline", va.baseline,
                         "RW-variable baseline encoding (ser only, implies all --disable-*)");
    verify_cmd->add_option("--timeout", va.timeout, "wall-clock budget in seconds");
    verify_cmd->add_option("--encode-width", va.encode_width,
                           "experimental cycle pre-encoding width (1..4)");
    verify_cmd->add_flag("--min-width-debug", va.min_width_debug,
                         "also record approximate minimal conflict widths");
    verify_cmd->add_option("--jobs", va.jobs, "verify inputs in parallel");
    verify_cmd->add_option("--max-witness-edges", va.max_witness_edges,
                           "witness edges embedded in the verdict JSON");
    verify_cmd->add_option("--out", va.out, "write verdict JSON here instead of stdout");
    verify_cmd->add_option("--dot", va.dot, "dump the hyper-polygraph in DOT format");
    verify_cmd->add_option("--dimacs", va.dimacs, "export the base+2-width formula as DIMACS");

    GenParams gp;
    std::string gen_out, gen_inject, gen_key_dist = "uniform";
    std::uint64_t inject_seed = 1;
    auto* gen_cmd = app.add_subcommand("gen", "generate a workload history");
    gen_cmd->add_option("--sessions", gp.sessions, "client sessions");
    gen_cmd->add_option("--txns", gp.txns_per_session, "transactions per session");
    gen_cmd->add_option("--ops", gp.ops_per_txn, "operations per transaction");
    gen_cmd->add_option("--read-frac", gp.read_fraction, "read proportion");
    gen_cmd->add_option("--keys", gp.num_keys, "number of keys");
    gen_cmd->add_option("--dup-frac", gp.dup_key_fraction, "fraction of duplicate-value keys");
    gen_cmd->add_option("--theta", gp.zipf_theta, "zipf exponent for duplicate values");
    gen_cmd->add_option("--zipf-n", gp.zipf_n, "zipf domain size");
    gen_cmd->add_option("--seed", gp.seed, "rng seed");
    gen_cmd->add_flag("--rmw", gp.rmw, "read-modify-write transactions with unique values");
    gen_cmd->add_option("--key-dist", gen_key_dist, "key access distribution")
        ->check(CLI::IsMember({"uniform", "zipf"}));
    gen_cmd->add_option("--key-theta", gp.key_zipf_theta, "zipf exponent for key access");
    gen_cmd->add_option("--inject", gen_inject, "splice an anomaly into the output")
        ->check(CLI::IsMember({"stale-read", "lost-update", "write-skew"}));
    gen_cmd->add_option("--inject-seed", inject_seed, "anomaly site selection seed");
    gen_cmd->add_option("--out", gen_out, "output file")->required();

    std::string oracle_isolation = "ser", oracle_input;
    int oracle_max_txns = 7;
    std::int64_t oracle_max_enum = 10'000'000;
    auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive ground-truth check (small inputs)");
    oracle_cmd->add_option("input", oracle_input, "history JSON file")->required();
    oracle_cmd->add_option("--isolation", oracle_isolation, "ser|si")
        ->check(CLI::IsMember({"ser", "si"}));
    oracle_cmd->add_option("--max-txns", oracle_max_txns, "budget: transaction count");
    oracle_cmd->add_option("--max-enum", oracle_max_enum, "budget: enumeration count");

    std::vector<std::string> stats_inputs;
    std::string stats_isolation = "ser", stats_out;
    auto* stats_cmd = app.add_subcommand("stats", "stage decomposition and conflict statistics");
    stats_cmd->add_option("input", stats_inputs, "history JSON file(s)")->required();
    stats_cmd->add_option("--isolation", stats_isolation, "ser|si")
        ->check(CLI::IsMember({"ser", "si"}));
    stats_cmd->add_option("--out", stats_out, "write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*verify_cmd) return run_verify(va);
        if (*gen_cmd) {
            gp.zipf_keys = gen_key_dist == "zipf";
            History h = generate(gp);
            if (!gen_inject.empty()) {
                AnomalyKind kind = gen_inject == "stale-read"    ? AnomalyKind::StaleRead
                                   : gen_inject == "lost-update" ? AnomalyKind::LostUpdateTrace
                                                                 : AnomalyKind::WriteSkewTrace;
                auto injected = inject_anomaly(h, kind, inject_seed);
                if (!injected) {
                    std::cerr << "no eligible anomaly site in the generated history\n";
                    return 3;
                }
                h = std::move(*injected);
            }
            write_file(gen_out, serialize_history(h) + "\n");
            return 0;
        }
        if (*oracle_cmd)
            return run_oracle(oracle_isolation, oracle_input, oracle_max_txns, oracle_max_enum);
        if (*stats_cmd) return run_stats(stats_inputs, stats_isolation, stats_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 3;
}
