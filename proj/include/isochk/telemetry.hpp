#pragma once

#include <sys/resource.h>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

namespace isochk {

// Counters and timers shared by the prune/encode/solve stages.
struct Telemetry {
    // stage timings, microseconds
    std::int64_t construct_us = 0;
    std::int64_t prune_us = 0;
    std::int64_t encode_us = 0;
    std::int64_t solve_us = 0;
    bool solve_bypassed = false;

    // SAT core
    std::int64_t decisions = 0;
    std::int64_t propagations = 0;
    std::int64_t conflicts = 0;
    std::int64_t learned_clauses = 0;
    std::int64_t restarts = 0;

    // theory / PK
    std::int64_t pk_calls = 0;
    std::int64_t pk_traversals = 0;
    std::int64_t cycles_detected = 0;
    std::int64_t reorders = 0;

    // pruning
    std::int64_t prune_passes = 0;
    std::int64_t ww_choices_eliminated = 0;
    std::int64_t wr_choices_eliminated = 0;
    std::int64_t constraints_resolved = 0;

    // encoding
    std::int64_t variables = 0;
    std::int64_t base_clauses = 0;
    std::int64_t two_width_clauses = 0;

    // conflict cycle widths: width -> count
    std::map<int, std::int64_t> width_histogram;
    // populated only in min-width debug mode
    std::map<int, std::int64_t> min_width_histogram;

    std::int64_t peak_memory_bytes = 0;

    void merge_solver(const Telemetry& o) {
        decisions += o.decisions;
        propagations += o.propagations;
        conflicts += o.conflicts;
        learned_clauses += o.learned_clauses;
        restarts += o.restarts;
        pk_calls += o.pk_calls;
        pk_traversals += o.pk_traversals;
        cycles_detected += o.cycles_detected;
        reorders += o.reorders;
        for (auto& [w, c] : o.width_histogram) width_histogram[w] += c;
        for (auto& [w, c] : o.min_width_histogram) min_width_histogram[w] += c;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["timings_us"] = {{"construct", construct_us},
                           {"prune", prune_us},
                           {"encode", encode_us},
                           {"solve", solve_us}};
        j["solve_bypassed"] = solve_bypassed;
        j["decisions"] = decisions;
        j["propagations"] = propagations;
        j["conflicts"] = conflicts;
        j["learned_clauses"] = learned_clauses;
        j["restarts"] = restarts;
        j["pk_calls"] = pk_calls;
        j["pk_traversals"] = pk_traversals;
        j["cycles_detected"] = cycles_detected;
        j["reorders"] = reorders;
        j["prune_passes"] = prune_passes;
        j["ww_choices_eliminated"] = ww_choices_eliminated;
        j["wr_choices_eliminated"] = wr_choices_eliminated;
        j["constraints_resolved"] = constraints_resolved;
        j["variables"] = variables;
        j["base_clauses"] = base_clauses;
        j["two_width_clauses"] = two_width_clauses;
        nlohmann::json hist = nlohmann::json::object();
        for (auto& [w, c] : width_histogram) hist[std::to_string(w)] = c;
        j["min_cycle_width_histogram"] = hist;
        if (!min_width_histogram.empty()) {
            nlohmann::json mh = nlohmann::json::object();
            for (auto& [w, c] : min_width_histogram) mh[std::to_string(w)] = c;
            j["min_width_debug_histogram"] = mh;
        }
        j["peak_memory_bytes"] = peak_memory_bytes;
        return j;
    }
};

class StageTimer {
  public:
    explicit StageTimer(std::int64_t& slot)
        : slot_(&slot), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() { stop(); }
    void stop() {
        if (!slot_) return;
        auto end = std::chrono::steady_clock::now();
        *slot_ += std::chrono::duration_cast<std::chrono::microseconds>(end - start_).count();
        slot_ = nullptr;
    }

  private:
    std::int64_t* slot_;
    std::chrono::steady_clock::time_point start_;
};

// Peak RSS of this process in bytes; 0 if unavailable.
inline std::int64_t peak_memory_bytes() {
    struct rusage ru{};
    if (getrusage(RUSAGE_SELF, &ru) == 0 && ru.ru_maxrss > 0)
        return static_cast<std::int64_t>(ru.ru_maxrss) * 1024;
    std::ifstream in("/proc/self/status");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            std::int64_t kb = 0;
            for (char c : line)
                if (c >= '0' && c <= '9') kb = kb * 10 + (c - '0');
            return kb * 1024;
        }
    }
    return 0;
}

}  // namespace isochk
