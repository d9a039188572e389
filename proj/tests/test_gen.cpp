#include <doctest.h>

#include "coop/denote.hpp"
#include "coop/diag.hpp"
#include "coop/gen.hpp"
#include "coop/print.hpp"
#include "coop/subst.hpp"
#include "coop/tree.hpp"
#include "coop/typecheck.hpp"

using namespace coop;

TEST_CASE("oracle tables declare the fixed signature") {
    EffectTables t = oracle_tables();
    CHECK(t.is_exception("E1"));
    CHECK(t.is_exception("E2"));
    CHECK(t.is_signal("S1"));
    CHECK(t.is_signal("S2"));
    REQUIRE(t.operations.count("op0") == 1);
    REQUIRE(t.operations.count("op1") == 1);
    REQUIRE(t.operations.count("op2") == 1);
    CHECK(show(t.operations.at("op0").result) == "bool");
    CHECK(t.operations.at("op0").excs.empty());
    CHECK(t.operations.at("op1").excs == NameSet{"E1"});
    CHECK(t.operations.at("op2").excs == NameSet{"E1", "E2"});
}

TEST_CASE("generated programs are closed and mostly well-typed") {
    EffectTables t = oracle_tables();
    int typed = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Gen g(seed, t);
        TermPtr prog = g.program(3);
        CHECK(free_vars(prog).empty());
        Checker ck(t);
        try {
            auto [elab, ty] = ck.synth_user({}, prog);
            ++typed;
            // Whatever typechecks must denote without falling out of domain.
            TreeCtx ctx(t);
            Denoter d(ctx);
            d.denote_user({}, elab);
        } catch (const Diagnostic&) {
            // Rejection (for example a carrier join failure) is allowed but
            // must stay rare; the bound below keeps the generator honest.
        }
    }
    CHECK(typed >= 90);
}

TEST_CASE("pure-mode programs denote to leaves") {
    EffectTables t = oracle_tables();
    int checked = 0;
    for (uint64_t seed = 0; seed < 60; ++seed) {
        Gen g(seed, t, GenConfig{4, true});
        TermPtr prog = g.program(3);
        Checker ck(t);
        try {
            auto [elab, ty] = ck.synth_user({}, prog);
            TreeCtx ctx(t);
            Denoter d(ctx);
            TreePtr tree = d.denote_user({}, elab);
            ++checked;
            bool leaf = tree->tag == Tree::Tag::Ret || tree->tag == Tree::Tag::Exc;
            CHECK(leaf);
        } catch (const Diagnostic&) {
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("generation is deterministic in the seed") {
    EffectTables t = oracle_tables();
    for (uint64_t seed : {7ull, 23ull, 4096ull}) {
        Gen g1(seed, t), g2(seed, t);
        TermPtr a = g1.program(3);
        TermPtr b = g2.program(3);
        CHECK(alpha_equal(a, b));
        CHECK(show_term(a) == show_term(b));
    }
    Gen g1(1, t), g2(2, t);
    // Different seeds almost surely diverge; these two do.
    CHECK(show_term(g1.program(3)) != show_term(g2.program(3)));
}

TEST_CASE("generated runners handle every operation") {
    EffectTables t = oracle_tables();
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Gen g(seed, t);
        TermPtr r = g.runner_lit(ground_bool(), 2);
        REQUIRE(r->kind == TermKind::RunnerLit);
        for (const auto& [op, sig] : t.operations) CHECK(r->coops.count(op) == 1);
        CHECK(show(r->ground) == "bool");
    }
}

TEST_CASE("generated finally clauses are total") {
    EffectTables t = oracle_tables();
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Gen g(seed, t);
        FinallyPtr f = g.fin_clauses(2);
        for (const auto& e : {std::string("E1"), std::string("E2")})
            CHECK(f->on_raise.count(e) == 1);
        for (const auto& s : {std::string("S1"), std::string("S2")})
            CHECK(f->on_kill.count(s) == 1);
    }
}

TEST_CASE("generated values inhabit their requested type") {
    EffectTables t = oracle_tables();
    for (uint64_t seed = 0; seed < 40; ++seed) {
        Gen g(seed, t);
        ValueTypePtr ty = g.ground_type(2);
        TermPtr v = g.value(ty, 2);
        Checker ck(t);
        // check_value throws when the value does not fit.
        ck.check_value({}, v, ty);
    }
}
