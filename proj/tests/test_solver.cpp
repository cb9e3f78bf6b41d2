#include <catch2/catch_amalgamated.hpp>

#include "isochk/encode.hpp"
#include "isochk/oracle.hpp"
#include "isochk/solver.hpp"
#include "isochk/verify.hpp"
#include "testutil.hpp"

using namespace isochk;
using testutil::hist;

namespace {

struct Instance {
    HyperPolygraph hp;
    ReachInfo info;
    CnfProblem cnf;
    Telemetry tel;
};

Instance make_instance(const History& h) {
    auto res = construct(h);
    REQUIRE(std::holds_alternative<HyperPolygraph>(res));
    Instance inst;
    auto pruned = prune(std::get<HyperPolygraph>(std::move(res)), IsolationMode::Ser, inst.tel);
    REQUIRE(std::holds_alternative<PruneResult>(pruned));
    auto& pr = std::get<PruneResult>(pruned);
    inst.hp = std::move(pr.hp);
    inst.info = std::move(pr.info);
    KnownView view = build_known_view(inst.hp, IsolationMode::Ser);
    inst.cnf = encode(inst.hp, inst.info, view, {}, inst.tel);
    return inst;
}

}  // namespace

TEST_CASE("anti-dependency derivation closes the textbook conflict", "[solver]") {
    // choosing T1->WR(x)T3 and then T1->WW(x)T2 derives T3->RW(x)T2, which
    // closes a cycle with the known T2->SO T3 edge; the conflict clause names
    // exactly the two chosen variables
    auto h = testutil::load_history("fig3.json");
    auto inst = make_instance(h);
    TxnId t1 = testutil::by_label(h, "s0t0"), t2 = testutil::by_label(h, "s1t0"),
          t3 = testutil::by_label(h, "s1t1");
    KeyId x = inst.hp.key_id("x");
    VarId wr13 = inst.cnf.var_of(EdgeType::WR, x, t1, t3);
    VarId ww12 = inst.cnf.var_of(EdgeType::WW, x, t1, t2);

    PlainTheory theory;
    theory.setup(&inst.hp, &inst.cnf, inst.info.topo, true, false, &inst.tel);
    TheoryConflict init_conflict;
    REQUIRE(theory.init_known(&init_conflict));

    REQUIRE(theory.assert_true(wr13, 0) == nullptr);
    const TheoryConflict* c = theory.assert_true(ww12, 1);
    REQUIRE(c != nullptr);
    CHECK(c->vars == std::vector<VarId>{std::min(ww12, wr13), std::max(ww12, wr13)});
    CHECK(c->cycle.width == 2);
    CHECK(inst.tel.width_histogram.at(2) == 1);
    // the cycle itself consists of the derived RW edge plus the session edge
    bool has_rw = false, has_so = false;
    for (auto& e : c->cycle.edges) {
        if (e.type == EdgeType::RW && e.from == t3 && e.to == t2) has_rw = true;
        if (e.type == EdgeType::SO && e.from == t2 && e.to == t3) has_so = true;
    }
    CHECK(has_rw);
    CHECK(has_so);
}

TEST_CASE("a version-order choice with no matching reads adds one edge", "[solver]") {
    auto h = testutil::load_history("fig3.json");
    auto inst = make_instance(h);
    TxnId t1 = testutil::by_label(h, "s0t0"), t2 = testutil::by_label(h, "s1t0");
    KeyId x = inst.hp.key_id("x");
    VarId ww21 = inst.cnf.var_of(EdgeType::WW, x, t2, t1);

    PlainTheory theory;
    theory.setup(&inst.hp, &inst.cnf, inst.info.topo, true, false, &inst.tel);
    TheoryConflict init_conflict;
    REQUIRE(theory.init_known(&init_conflict));
    std::size_t before = theory.graph().edge_count();
    REQUIRE(theory.assert_true(ww21, 0) == nullptr);
    CHECK(theory.graph().edge_count() == before + 1);
}

TEST_CASE("read-from against a known version order derives with one reason", "[solver]") {
    // S reads the initial x; its source candidates are init and D (which also
    // writes 0). Choosing init as the source derives S -> RW(x) T' against the
    // known init -> WW(x) T', whose reason is the WR variable alone; the
    // session edge T' -> S closes a width-1 cycle.
    auto h = hist({{"w x 5", "r x 0"}, {"w x 0"}});
    auto inst = make_instance(h);
    TxnId tp = testutil::by_label(h, "s0t0"), s = testutil::by_label(h, "s0t1");
    KeyId x = inst.hp.key_id("x");
    REQUIRE(inst.hp.has_edge({kInitTxn, tp, EdgeType::WW, x}));
    VarId wr = inst.cnf.var_of(EdgeType::WR, x, kInitTxn, s);
    REQUIRE(wr >= 0);

    PlainTheory theory;
    theory.setup(&inst.hp, &inst.cnf, inst.info.topo, true, false, &inst.tel);
    TheoryConflict init_conflict;
    REQUIRE(theory.init_known(&init_conflict));
    const TheoryConflict* c = theory.assert_true(wr, 0);
    REQUIRE(c != nullptr);
    CHECK(c->vars == std::vector<VarId>{wr});
    CHECK(c->cycle.width == 1);
}

TEST_CASE("three single-reason edges yield a ternary conflict clause", "[solver]") {
    // three keys, three writer pairs arranged so that one orientation each
    // forms a 3-cycle a->b->c->a
    auto h = hist({{"w x 1, w z 9"}, {"w x 1, w y 2"}, {"w y 2, w z 9"}});
    auto inst = make_instance(h);
    TxnId a = 1, b = 2, c = 3;
    KeyId x = inst.hp.key_id("x"), y = inst.hp.key_id("y"), z = inst.hp.key_id("z");
    VarId v1 = inst.cnf.var_of(EdgeType::WW, x, a, b);
    VarId v2 = inst.cnf.var_of(EdgeType::WW, y, b, c);
    VarId v3 = inst.cnf.var_of(EdgeType::WW, z, c, a);
    REQUIRE(v1 >= 0);
    REQUIRE(v2 >= 0);
    REQUIRE(v3 >= 0);

    PlainTheory theory;
    theory.setup(&inst.hp, &inst.cnf, inst.info.topo, true, false, &inst.tel);
    TheoryConflict init_conflict;
    REQUIRE(theory.init_known(&init_conflict));
    REQUIRE(theory.assert_true(v1, 0) == nullptr);
    REQUIRE(theory.assert_true(v2, 1) == nullptr);
    const TheoryConflict* confl = theory.assert_true(v3, 2);
    REQUIRE(confl != nullptr);
    std::vector<VarId> expect{v1, v2, v3};
    std::sort(expect.begin(), expect.end());
    CHECK(confl->vars == expect);
    CHECK(confl->cycle.width == 3);
}

TEST_CASE("theory state unwinds with the trail", "[solver]") {
    auto h = testutil::load_history("fig3.json");
    auto inst = make_instance(h);
    KeyId x = inst.hp.key_id("x");
    TxnId t1 = testutil::by_label(h, "s0t0"), t2 = testutil::by_label(h, "s1t0"),
          t3 = testutil::by_label(h, "s1t1");
    VarId wr13 = inst.cnf.var_of(EdgeType::WR, x, t1, t3);
    VarId ww21 = inst.cnf.var_of(EdgeType::WW, x, t2, t1);

    PlainTheory theory;
    theory.setup(&inst.hp, &inst.cnf, inst.info.topo, true, false, &inst.tel);
    TheoryConflict init_conflict;
    REQUIRE(theory.init_known(&init_conflict));
    std::size_t base = theory.graph().edge_count();

    SECTION("an asserted edge disappears after backtracking past it") {
        REQUIRE(theory.assert_true(wr13, 5) == nullptr);
        CHECK(theory.graph().edge_count() > base);
        theory.undo_to_trail(5);
        CHECK(theory.graph().edge_count() == base);
    }
    SECTION("two assertions at the same level vanish together") {
        REQUIRE(theory.assert_true(wr13, 5) == nullptr);
        REQUIRE(theory.assert_true(ww21, 6) == nullptr);
        theory.undo_to_trail(5);
        CHECK(theory.graph().edge_count() == base);
    }
    SECTION("backtracking to the current position is a no-op") {
        REQUIRE(theory.assert_true(wr13, 5) == nullptr);
        std::size_t with_edge = theory.graph().edge_count();
        theory.undo_to_trail(6);
        CHECK(theory.graph().edge_count() == with_edge);
    }
    SECTION("re-asserting after undo rebuilds the same state") {
        REQUIRE(theory.assert_true(wr13, 5) == nullptr);
        std::size_t with_edge = theory.graph().edge_count();
        theory.undo_to_trail(5);
        REQUIRE(theory.assert_true(wr13, 5) == nullptr);
        CHECK(theory.graph().edge_count() == with_edge);
    }
}

TEST_CASE("polarity follows the pseudo-topological order", "[solver]") {
    auto h = testutil::load_history("fig3.json");
    auto inst = make_instance(h);
    KeyId x = inst.hp.key_id("x");
    TxnId t1 = testutil::by_label(h, "s0t0"), t2 = testutil::by_label(h, "s1t0"),
          t3 = testutil::by_label(h, "s1t1");

    PlainTheory theory;
    theory.setup(&inst.hp, &inst.cnf, inst.info.topo, true, false, &inst.tel);
    TheoryConflict init_conflict;
    REQUIRE(theory.init_known(&init_conflict));

    // a candidate agreeing with the session order is included
    VarId wr23 = inst.cnf.var_of(EdgeType::WR, x, t2, t3);
    CHECK(theory.prefer_positive(wr23));
    // exactly one orientation of a version-order pair is positive
    VarId ww12 = inst.cnf.var_of(EdgeType::WW, x, t1, t2);
    VarId ww21 = inst.cnf.var_of(EdgeType::WW, x, t2, t1);
    CHECK(theory.prefer_positive(ww12) != theory.prefer_positive(ww21));
}

TEST_CASE("the running example solves to a compatible acyclic graph", "[solver]") {
    auto h = testutil::load_history("fig3.json");
    Verdict v = verify(h, {});
    REQUIRE(v.status == Verdict::Status::Satisfied);
    // width histogram only counts real conflicts
    for (auto& [w, c] : v.stats.width_histogram) CHECK(w >= 1);
}

TEST_CASE("the solver alone refutes the duplicate-value example", "[solver]") {
    auto h = testutil::load_history("fig2b.json");
    VerifyOptions opts;
    opts.pruning = false;
    opts.two_width = false;
    opts.polarity = false;
    Verdict v = verify(h, opts);
    CHECK(v.status == Verdict::Status::Violated);
    CHECK(v.core_kind == "conflict");
}

TEST_CASE("zero-variable problems bypass the solver", "[solver]") {
    auto h = hist({{"w x 1"}});
    Verdict v = verify(h, {});
    CHECK(v.status == Verdict::Status::Satisfied);
    CHECK(v.stats.solve_bypassed);
    CHECK(v.stats.solve_us == 0);
    CHECK(v.stats.decisions == 0);
}

TEST_CASE("a zero budget reports unknown", "[solver]") {
    auto h = testutil::load_history("fig3.json");
    VerifyOptions opts;
    opts.timeout_secs = 0.0;
    Verdict v = verify(h, opts);
    CHECK(v.status == Verdict::Status::Unknown);
    CHECK(v.core_kind == "timeout");
}

TEST_CASE("solver verdicts match the oracles on small histories", "[solver]") {
    Rng rng(66);
    int checked = 0;
    for (int i = 0; i < 150; ++i) {
        auto h = testutil::random_small_history(rng);
        bool want;
        try {
            want = oracle_ser_graphs(h);
        } catch (const BudgetExceeded&) {
            continue;
        }
        Verdict v = verify(h, {});
        REQUIRE(v.status != Verdict::Status::Unknown);
        CHECK(v.satisfied() == want);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("pk counter relations hold after solving", "[solver]") {
    Rng rng(77);
    for (int i = 0; i < 30; ++i) {
        auto h = testutil::random_small_history(rng);
        Verdict v = verify(h, {});
        CHECK(v.stats.cycles_detected <= v.stats.pk_traversals);
        CHECK(v.stats.pk_traversals <= v.stats.pk_calls);
        std::int64_t widths = 0;
        for (auto& [w, c] : v.stats.width_histogram) widths += c;
        CHECK(widths <= v.stats.conflicts);
    }
}
