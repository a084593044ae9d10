#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "fctree/errors.hpp"
#include "fctree/grammar.hpp"
#include "fctree/rng.hpp"

using namespace fctree;

namespace {

Schema higgs_like_schema() {
    Schema s;
    s.add("PRI_tau_pt", UnitClass::gev(1));
    s.add("PRI_tau_eta", UnitClass::angle());
    s.add("PRI_tau_phi", UnitClass::angle());
    s.add("PRI_lep_pt", UnitClass::gev(1));
    s.add("PRI_lep_eta", UnitClass::angle());
    s.add("PRI_lep_phi", UnitClass::angle());
    s.add("PRI_met", UnitClass::gev(1));
    s.add("PRI_jet_num", UnitClass::dimless());
    return s;
}

Schema angles_only() {
    Schema s;
    s.add("alpha", UnitClass::angle());
    s.add("beta", UnitClass::angle());
    return s;
}

} // namespace

TEST_CASE("achievable units: angle-only schema") {
    Grammar g;
    const auto t = UnitTable::build(g, angles_only());
    CHECK(t.achievable(1, UnitClass::angle()));
    CHECK(!t.achievable(1, UnitClass::dimless()));
    CHECK(!t.achievable(1, UnitClass::gev(1)));
    // depth 2: trig opens dimensionless; nothing ever reaches gev
    CHECK(t.achievable(2, UnitClass::dimless()));
    for (int d = 1; d <= g.max_depth; ++d) {
        CHECK(!t.achievable(d, UnitClass::gev(1)));
        CHECK(!t.achievable(d, UnitClass::gev(-1)));
    }
}

TEST_CASE("achievable units grow with depth on a gev schema") {
    Grammar g;
    Schema s;
    s.add("e1", UnitClass::gev(1));
    const auto t = UnitTable::build(g, s);
    CHECK(t.achievable(1, UnitClass::gev(1)));
    CHECK(!t.achievable(1, UnitClass::gev(2)));
    CHECK(t.achievable(2, UnitClass::gev(2)));  // e1 * e1, sq(e1)
    CHECK(t.achievable(2, UnitClass::dimless())); // e1 / e1
    CHECK(t.achievable(3, UnitClass::gev(4)));
    CHECK(!t.achievable(2, UnitClass::gev(4)));
    for (int d = 1; d <= g.max_depth; ++d) CHECK(!t.achievable(d, UnitClass::angle()));
}

namespace {

bool has_trig(const Expr& e) {
    if (e.op == Op::Cos || e.op == Op::Sin) return true;
    if (e.left && has_trig(*e.left)) return true;
    return e.right && has_trig(*e.right);
}

} // namespace

TEST_CASE("dimensionless from angles only comes through trig") {
    Grammar g;
    const auto s = angles_only();
    const auto t = UnitTable::build(g, s);
    Rng rng(11);
    // at the minimal depth the root itself must be cos/sin: they are the only
    // dimensionless producers reachable in two levels from angle terminals
    for (int i = 0; i < 100; ++i) {
        const auto e = sample_expr(g, s, t, rng, UnitClass::dimless(), 2);
        CHECK(e->unit == UnitClass::dimless());
        CHECK((e->op == Op::Cos || e->op == Op::Sin));
    }
    // at any depth, every dimensionless expression contains a trig bridge
    for (int i = 0; i < 200; ++i) {
        const auto e = sample_expr(g, s, t, rng, UnitClass::dimless());
        CHECK(e->unit == UnitClass::dimless());
        CHECK(has_trig(*e));
    }
}

TEST_CASE("depth budget one forces a terminal") {
    Grammar g;
    const auto s = higgs_like_schema();
    const auto t = UnitTable::build(g, s);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto e = sample_expr(g, s, t, rng, std::nullopt, 1);
        CHECK(e->is_terminal());
    }
}

TEST_CASE("sampler soundness: 10000 samples all well-typed and depth-bounded") {
    Grammar g;
    const auto s = higgs_like_schema();
    const auto t = UnitTable::build(g, s);
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const auto e = sample_expr(g, s, t, rng);
        CHECK(e->depth <= g.max_depth);
        CHECK_NOTHROW((void)infer_unit(*e, s, g.power_cap));
        CHECK(infer_unit(*e, s, g.power_cap) == e->unit);
    }
}

TEST_CASE("required unit respected across draws") {
    Grammar g;
    const auto s = higgs_like_schema();
    const auto t = UnitTable::build(g, s);
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto e = sample_expr(g, s, t, rng, UnitClass::gev(2));
        CHECK(e->unit == UnitClass::gev(2));
        CHECK(infer_unit(*e, s) == UnitClass::gev(2));
    }
}

TEST_CASE("infeasible required unit raises") {
    Grammar g;
    const auto s = angles_only();
    const auto t = UnitTable::build(g, s);
    Rng rng(1);
    CHECK_THROWS_AS((void)sample_expr(g, s, t, rng, UnitClass::gev(1)), ConfigError);
    // dimensionless needs depth >= 2 here
    CHECK_THROWS_AS((void)sample_expr(g, s, t, rng, UnitClass::dimless(), 1), ConfigError);
}

TEST_CASE("fixed seed reproduces samples") {
    Grammar g;
    const auto s = higgs_like_schema();
    const auto t = UnitTable::build(g, s);
    Rng a(99);
    Rng b(99);
    for (int i = 0; i < 50; ++i) {
        const auto ea = sample_expr(g, s, t, a);
        const auto eb = sample_expr(g, s, t, b);
        CHECK(exprs_equal(*ea, *eb));
    }
}

TEST_CASE("empty schema is rejected") {
    Grammar g;
    Schema s;
    Rng rng(1);
    CHECK_THROWS_AS((void)sample_expr(g, s, rng), ConfigError);
}

TEST_CASE("transition matrix validation") {
    TransitionMatrix t = TransitionMatrix::uniform();
    CHECK_NOTHROW(t.validate());
    t.at(kRootContext, kTerminalCategory) = 0.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = TransitionMatrix::uniform();
    t.at(0, 3) = -1.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("transition matrix file round trip") {
    TransitionMatrix t = TransitionMatrix::uniform();
    t.at(kRootContext, 4) = 3.5; // favor cos at the root
    t.at(2, kTerminalCategory) = 0.25;
    const std::string path = "tm_roundtrip.txt";
    save_transition_matrix(t, path);
    const auto back = load_transition_matrix(path);
    for (int r = 0; r < kNumCategories; ++r) {
        for (int c = 0; c < kNumCategories; ++c) {
            CHECK(back.at(r, c) == t.at(r, c));
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("transition matrix zeroed ops still terminate via terminals") {
    Grammar g;
    for (int r = 0; r < kNumCategories; ++r) {
        for (int c = 0; c < kNumOps; ++c) g.transition.at(r, c) = 0.0;
    }
    g.transition.validate();
    const auto s = higgs_like_schema();
    const auto t = UnitTable::build(g, s);
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const auto e = sample_expr(g, s, t, rng);
        CHECK(e->is_terminal());
    }
}

TEST_CASE("matrix weights steer category frequencies") {
    Grammar g;
    // heavily favor cos at the root over everything else
    for (int c = 0; c < kNumCategories; ++c) g.transition.at(kRootContext, c) = 0.001;
    g.transition.at(kRootContext, 4) = 1000.0;           // cos
    g.transition.at(kRootContext, kTerminalCategory) = 0.001;
    const auto s = higgs_like_schema();
    const auto t = UnitTable::build(g, s);
    Rng rng(17);
    int n_cos = 0;
    const int n = 500;
    for (int i = 0; i < n; ++i) {
        if (sample_expr(g, s, t, rng)->op == Op::Cos) ++n_cos;
    }
    CHECK(n_cos > n * 9 / 10);
}
