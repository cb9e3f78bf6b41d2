#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "isochk/cnf.hpp"
#include "isochk/telemetry.hpp"
#include "isochk/theory.hpp"

namespace isochk {

enum class SolveOutcome { Sat, Unsat, Unknown };

struct SolveResult {
    SolveOutcome outcome = SolveOutcome::Unknown;
    std::vector<char> model;                // var -> 0/1, valid for Sat
    std::vector<VarId> final_conflict;      // vars of the terminal conflict (Unsat)
    std::optional<CycleDesc> last_cycle;    // most recent theory cycle, if any
};

struct SolverOptions {
    bool polarity = true;  // ord-guided polarity picking; plain negative otherwise
    bool has_deadline = false;
    std::chrono::steady_clock::time_point deadline{};
};

namespace detail {

// Indexed max-heap over variable activities, ties broken by lowest VarId.
class VarOrderHeap {
  public:
    void init(int n, const std::vector<double>* act) {
        act_ = act;
        pos_.assign(n, -1);
        heap_.clear();
        for (int v = 0; v < n; ++v) push(v);
    }
    bool empty() const { return heap_.empty(); }
    bool contains(int v) const { return pos_[v] >= 0; }
    void push(int v) {
        if (pos_[v] >= 0) return;
        pos_[v] = static_cast<int>(heap_.size());
        heap_.push_back(v);
        up(pos_[v]);
    }
    int pop() {
        int v = heap_[0];
        swap_at(0, static_cast<int>(heap_.size()) - 1);
        heap_.pop_back();
        pos_[v] = -1;
        if (!heap_.empty()) down(0);
        return v;
    }
    void bumped(int v) {
        if (pos_[v] >= 0) up(pos_[v]);
    }

  private:
    bool before(int a, int b) const {
        double aa = (*act_)[a], ab = (*act_)[b];
        return aa > ab || (aa == ab && a < b);
    }
    void swap_at(int i, int j) {
        std::swap(heap_[i], heap_[j]);
        pos_[heap_[i]] = i;
        pos_[heap_[j]] = j;
    }
    void up(int i) {
        while (i > 0) {
            int p = (i - 1) >> 1;
            if (!before(heap_[i], heap_[p])) break;
            swap_at(i, p);
            i = p;
        }
    }
    void down(int i) {
        int n = static_cast<int>(heap_.size());
        for (;;) {
            int l = 2 * i + 1, r = 2 * i + 2, best = i;
            if (l < n && before(heap_[l], heap_[best])) best = l;
            if (r < n && before(heap_[r], heap_[best])) best = r;
            if (best == i) break;
            swap_at(i, best);
            i = best;
        }
    }
    const std::vector<double>* act_ = nullptr;
    std::vector<int> heap_, pos_;
};

inline std::int64_t luby(std::int64_t i) {
    std::int64_t k = 1;
    while ((1LL << k) - 1 < i + 1) ++k;
    while ((1LL << (k - 1)) - 1 != i && k > 1) {
        --k;
        i -= (1LL << k) - 1;
        while ((1LL << (k - 1)) - 1 > i && k > 1) --k;
    }
    return 1LL << (k - 1);
}

}  // namespace detail

// CDCL with a graph theory backend. Decisions are activity-ordered; positive
// assignment batches are handed to the theory after every unit-propagation
// fixpoint; theory conflict clauses are learned and resolved with standard
// first-UIP analysis and backjumping.
template <class Theory>
class CdclSolver {
  public:
    CdclSolver(const CnfProblem& cnf, Theory& theory, Telemetry& tel, SolverOptions opts)
        : cnf_(cnf), theory_(theory), tel_(tel), opts_(opts) {}

    SolveResult solve() {
        const int n = static_cast<int>(cnf_.vars.size());
        assign_.assign(n, kUndef);
        level_.assign(n, 0);
        reason_.assign(n, kRefUndef);
        activity_.assign(n, 0.0);
        seen_.assign(n, 0);
        trail_.clear();
        trail_lim_.clear();
        qhead_ = 0;
        theory_qhead_ = 0;
        heap_.init(n, &activity_);

        watches_.assign(2 * std::size_t(n) + 2, {});
        lbd_seen_.assign(std::size_t(n) + 2, 0);
        lbd_stamp_ = 0;

        SolveResult res;
        for (auto& cl : cnf_.clauses) {
            if (!add_problem_clause(cl)) {
                res.outcome = SolveOutcome::Unsat;  // trivially conflicting input
                if (theory_last_cycle_) res.last_cycle = theory_last_cycle_;
                theory_.flush_counters();
                return res;
            }
        }

        std::int64_t next_restart = kRestartBase * detail::luby(tel_.restarts);
        std::int64_t conflicts_since_restart = 0;
        std::int64_t checks = 0;

        for (;;) {
            if (opts_.has_deadline && (++checks & 1023) == 0 &&
                std::chrono::steady_clock::now() > opts_.deadline) {
                res.outcome = SolveOutcome::Unknown;
                if (theory_last_cycle_) res.last_cycle = theory_last_cycle_;
                theory_.flush_counters();
                return res;
            }

            CRef confl = propagate();
            bool theory_confl = false;
            std::vector<Lit> theory_clause;
            if (confl == kRefUndef) {
                // Hand every newly true variable to the theory, in trail order.
                while (theory_qhead_ < trail_.size()) {
                    Lit p = trail_[theory_qhead_];
                    if (!lit_neg(p)) {
                        const TheoryConflict* tc = theory_.assert_true(lit_var(p), theory_qhead_);
                        if (tc) {
                            theory_confl = true;
                            theory_last_cycle_ = tc->cycle;
                            for (VarId v : tc->vars) theory_clause.push_back(mk_lit(v, true));
                            break;
                        }
                    }
                    ++theory_qhead_;
                }
            }

            if (theory_confl && theory_clause.empty()) {
                // cycle among always-true edges: unconditionally unsatisfiable
                res.outcome = SolveOutcome::Unsat;
                if (theory_last_cycle_) res.last_cycle = theory_last_cycle_;
                theory_.flush_counters();
                return res;
            }

            if (confl != kRefUndef || theory_confl) {
                ++tel_.conflicts;
                ++conflicts_since_restart;
                if (decision_level() == 0) {
                    res.outcome = SolveOutcome::Unsat;
                    res.final_conflict = conflict_vars(confl, theory_clause);
                    if (theory_last_cycle_) res.last_cycle = theory_last_cycle_;
                    theory_.flush_counters();
                    return res;
                }
                std::vector<Lit> learnt;
                int bt_level = 0;
                if (confl != kRefUndef)
                    analyze(clause_lits(confl), learnt, bt_level);
                else
                    analyze(theory_clause, learnt, bt_level);
                cancel_until(bt_level);
                // Learn the theory clause itself so the same cycle is never
                // re-derived through a different assignment order.
                if (!theory_clause.empty() && theory_clause.size() > 1 &&
                    !same_clause(theory_clause, learnt))
                    attach_extra_clause(theory_clause);
                add_learnt(learnt);
                var_decay();
                continue;
            }

            if (trail_.size() == static_cast<std::size_t>(n)) {
                res.outcome = SolveOutcome::Sat;
                res.model.assign(n, 0);
                for (int v = 0; v < n; ++v) res.model[v] = (assign_[v] == kTrue);
                if (theory_last_cycle_) res.last_cycle = theory_last_cycle_;
                theory_.flush_counters();
                return res;
            }

            if (conflicts_since_restart >= next_restart) {
                ++tel_.restarts;
                conflicts_since_restart = 0;
                next_restart = kRestartBase * detail::luby(tel_.restarts);
                cancel_until(0);
                continue;
            }

            if (learnts_.size() > max_learnts_) reduce_db();

            // Decide.
            int v = -1;
            while (!heap_.empty()) {
                int cand = heap_.pop();
                if (assign_[cand] == kUndef) {
                    v = cand;
                    break;
                }
            }
            if (v < 0) continue;  // all assigned; SAT detected next iteration
            ++tel_.decisions;
            bool positive = opts_.polarity ? theory_.prefer_positive(v) : false;
            trail_lim_.push_back(static_cast<int>(trail_.size()));
            enqueue(mk_lit(v, !positive), kRefUndef);
        }
    }

  private:
    using CRef = std::uint32_t;
    static constexpr CRef kRefUndef = UINT32_MAX;
    static constexpr std::int8_t kUndef = -1, kFalse = 0, kTrue = 1;
    static constexpr std::int64_t kRestartBase = 100;

    struct Watch {
        CRef cref;
        Lit blocker;
    };

    // clause layout in arena: [size][lbd][lit0..litN-1]; size==0 marks removal
    CRef alloc_clause(const std::vector<Lit>& lits, std::uint32_t lbd) {
        CRef ref = static_cast<CRef>(arena_.size());
        arena_.push_back(static_cast<std::uint32_t>(lits.size()));
        arena_.push_back(lbd);
        for (Lit l : lits) arena_.push_back(l);
        return ref;
    }
    std::uint32_t clause_size(CRef c) const { return arena_[c]; }
    std::uint32_t& clause_lbd(CRef c) { return arena_[c + 1]; }
    Lit* clause_begin(CRef c) { return reinterpret_cast<Lit*>(&arena_[c + 2]); }
    std::vector<Lit> clause_lits(CRef c) {
        return std::vector<Lit>(clause_begin(c), clause_begin(c) + clause_size(c));
    }

    std::int8_t value(Lit l) const {
        std::int8_t a = assign_[lit_var(l)];
        if (a == kUndef) return kUndef;
        return static_cast<std::int8_t>(lit_neg(l) ? !a : a);
    }
    int decision_level() const { return static_cast<int>(trail_lim_.size()); }
    int level_of(Lit l) const { return level_[lit_var(l)]; }

    void enqueue(Lit p, CRef from) {
        int v = lit_var(p);
        assign_[v] = lit_neg(p) ? kFalse : kTrue;
        level_[v] = decision_level();
        reason_[v] = from;
        trail_.push_back(p);
        if (from != kRefUndef) ++tel_.propagations;
    }

    void watch(Lit l, CRef c, Lit blocker) { watches_[l].push_back({c, blocker}); }

    bool add_problem_clause(const std::vector<Lit>& lits) {
        if (lits.empty()) return false;
        if (lits.size() == 1) {
            if (value(lits[0]) == kFalse) return false;
            if (value(lits[0]) == kUndef) enqueue(lits[0], kRefUndef);
            return propagate() == kRefUndef;
        }
        CRef c = alloc_clause(lits, 0);
        originals_.push_back(c);
        watch(lits[0], c, lits[1]);
        watch(lits[1], c, lits[0]);
        return true;
    }

    // Attach a clause that may be (partially) falsified under the current
    // assignment: watch the two literals assigned at the highest levels, so
    // any later falsification revisits the clause.
    void attach_extra_clause(std::vector<Lit> lits) {
        auto rank = [&](Lit l) {
            return value(l) == kUndef ? INT32_MAX : level_of(l);
        };
        std::partial_sort(lits.begin(), lits.begin() + 2, lits.end(),
                          [&](Lit a, Lit b) { return rank(a) > rank(b); });
        CRef c = alloc_clause(lits, static_cast<std::uint32_t>(lits.size()));
        learnts_.push_back(c);
        ++tel_.learned_clauses;
        watch(lits[0], c, lits[1]);
        watch(lits[1], c, lits[0]);
    }

    void add_learnt(const std::vector<Lit>& learnt) {
        ++tel_.learned_clauses;
        if (learnt.size() == 1) {
            enqueue(learnt[0], kRefUndef);
            return;
        }
        std::uint32_t lbd = compute_lbd(learnt);
        CRef c = alloc_clause(learnt, lbd);
        learnts_.push_back(c);
        watch(learnt[0], c, learnt[1]);
        watch(learnt[1], c, learnt[0]);
        enqueue(learnt[0], c);
    }

    std::uint32_t compute_lbd(const std::vector<Lit>& lits) {
        lbd_stamp_ += 2;
        std::uint32_t lbd = 0;
        for (Lit l : lits) {
            int lv = level_of(l);
            if (lv >= 0 && static_cast<std::size_t>(lv) < lbd_seen_.size() &&
                lbd_seen_[lv] != lbd_stamp_) {
                lbd_seen_[lv] = lbd_stamp_;
                ++lbd;
            }
        }
        return lbd;
    }

    CRef propagate() {
        while (qhead_ < trail_.size()) {
            Lit p = trail_[qhead_++];
            Lit not_p = lit_negate(p);
            auto& ws = watches_[not_p];
            std::size_t i = 0, j = 0;
            CRef confl = kRefUndef;
            while (i < ws.size()) {
                Watch w = ws[i++];
                if (value(w.blocker) == kTrue) {
                    ws[j++] = w;
                    continue;
                }
                CRef c = w.cref;
                std::uint32_t sz = clause_size(c);
                if (sz == 0) continue;  // removed
                Lit* lits = clause_begin(c);
                // ensure lits[1] is the falsified watch
                if (lits[0] == not_p) std::swap(lits[0], lits[1]);
                if (value(lits[0]) == kTrue) {
                    ws[j++] = {c, lits[0]};
                    continue;
                }
                bool moved = false;
                for (std::uint32_t k = 2; k < sz; ++k) {
                    if (value(lits[k]) != kFalse) {
                        std::swap(lits[1], lits[k]);
                        watch(lits[1], c, lits[0]);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[j++] = {c, lits[0]};
                if (value(lits[0]) == kFalse) {
                    confl = c;
                    qhead_ = trail_.size();
                    break;
                }
                enqueue(lits[0], c);
            }
            while (i < ws.size()) ws[j++] = ws[i++];
            ws.resize(j);
            if (confl != kRefUndef) return confl;
        }
        return kRefUndef;
    }

    void bump(int v) {
        activity_[v] += var_inc_;
        if (activity_[v] > 1e100) {
            for (auto& a : activity_) a *= 1e-100;
            var_inc_ *= 1e-100;
        }
        heap_.bumped(v);
    }
    void var_decay() { var_inc_ /= 0.95; }

    // Standard first-UIP conflict analysis starting from an explicit literal
    // vector (problem clause, learnt clause, or theory conflict clause).
    void analyze(std::vector<Lit> confl, std::vector<Lit>& learnt, int& bt_level) {
        learnt.clear();
        learnt.push_back(0);  // slot for the asserting literal
        int pathC = 0;
        std::size_t index = trail_.size();
        Lit p = 0;
        bool first = true;

        for (;;) {
            for (std::size_t k = first ? 0 : 1; k < confl.size(); ++k) {
                Lit q = confl[k];
                int v = lit_var(q);
                if (!seen_[v] && level_[v] > 0) {
                    seen_[v] = 1;
                    bump(v);
                    if (level_[v] >= decision_level())
                        ++pathC;
                    else
                        learnt.push_back(q);
                }
            }
            while (!seen_[lit_var(trail_[index - 1])]) --index;
            p = trail_[--index];
            seen_[lit_var(p)] = 0;
            --pathC;
            if (pathC <= 0) break;
            CRef rc = reason_[lit_var(p)];
            confl = clause_lits(rc);
            confl[0] = p;  // by construction lits[0] is the propagated literal
            first = false;
        }
        learnt[0] = lit_negate(p);

        bt_level = 0;
        if (learnt.size() > 1) {
            std::size_t max_i = 1;
            for (std::size_t k = 2; k < learnt.size(); ++k)
                if (level_of(learnt[k]) > level_of(learnt[max_i])) max_i = k;
            std::swap(learnt[1], learnt[max_i]);
            bt_level = level_of(learnt[1]);
        }
        for (std::size_t k = 1; k < learnt.size(); ++k) seen_[lit_var(learnt[k])] = 0;
    }

    void cancel_until(int lvl) {
        if (decision_level() <= lvl) return;
        std::size_t lim = static_cast<std::size_t>(trail_lim_[lvl]);
        for (std::size_t i = trail_.size(); i-- > lim;) {
            int v = lit_var(trail_[i]);
            assign_[v] = kUndef;
            reason_[v] = kRefUndef;
            heap_.push(v);
        }
        trail_.resize(lim);
        trail_lim_.resize(lvl);
        qhead_ = trail_.size();
        theory_.undo_to_trail(trail_.size());
        if (theory_qhead_ > trail_.size()) theory_qhead_ = trail_.size();
    }

    void reduce_db() {
        // keep glue clauses and the more recent half of the rest
        std::vector<CRef> keep, rest;
        for (CRef c : learnts_) {
            if (clause_size(c) == 0) continue;
            if (clause_lbd(c) <= 3 || locked(c))
                keep.push_back(c);
            else
                rest.push_back(c);
        }
        std::size_t half = rest.size() / 2;
        for (std::size_t i = 0; i < rest.size(); ++i) {
            if (i >= half)
                keep.push_back(rest[i]);
            else
                arena_[rest[i]] = 0;  // tombstone
        }
        learnts_ = std::move(keep);
        rebuild_watches();
        max_learnts_ = max_learnts_ + max_learnts_ / 2;
    }

    bool locked(CRef c) {
        Lit l0 = clause_begin(c)[0];
        return value(l0) == kTrue && reason_[lit_var(l0)] == c;
    }

    void rebuild_watches() {
        for (auto& ws : watches_) ws.clear();
        auto reattach = [&](CRef c) {
            Lit* lits = clause_begin(c);
            watch(lits[0], c, lits[1]);
            watch(lits[1], c, lits[0]);
        };
        for (CRef c : originals_) reattach(c);
        for (CRef c : learnts_) reattach(c);
    }

    std::vector<VarId> conflict_vars(CRef confl, const std::vector<Lit>& theory_clause) {
        std::vector<VarId> vars;
        if (confl != kRefUndef)
            for (Lit l : clause_lits(confl)) vars.push_back(lit_var(l));
        else
            for (Lit l : theory_clause) vars.push_back(lit_var(l));
        std::sort(vars.begin(), vars.end());
        vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
        return vars;
    }

    static bool same_clause(std::vector<Lit> a, std::vector<Lit> b) {
        if (a.size() != b.size()) return false;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    }

    const CnfProblem& cnf_;
    Theory& theory_;
    Telemetry& tel_;
    SolverOptions opts_;

    std::vector<std::uint32_t> arena_;
    std::vector<CRef> originals_, learnts_;
    std::vector<std::vector<Watch>> watches_;
    std::vector<std::int8_t> assign_;
    std::vector<int> level_;
    std::vector<CRef> reason_;
    std::vector<Lit> trail_;
    std::vector<int> trail_lim_;
    std::size_t qhead_ = 0, theory_qhead_ = 0;
    std::vector<double> activity_;
    double var_inc_ = 1.0;
    detail::VarOrderHeap heap_;
    std::vector<char> seen_;
    std::vector<std::uint32_t> lbd_seen_;
    std::uint32_t lbd_stamp_ = 0;
    std::size_t max_learnts_ = 20000;
    std::optional<CycleDesc> theory_last_cycle_;
};

}  // namespace isochk
