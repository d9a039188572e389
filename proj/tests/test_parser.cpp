#include <doctest.h>

#include <string>

#include "coop/desugar.hpp"
#include "coop/diag.hpp"
#include "coop/parser.hpp"
#include "coop/print.hpp"
#include "coop/subst.hpp"

using namespace coop;

namespace {

EffectTables demo_tables() {
    EffectTables t = EffectTables::with_builtins();
    t.declare_exception("E");
    t.declare_exception("F");
    t.declare_signal("S");
    t.declare_operation("tick", OpSig{ground_unit(), ground_int(), {}});
    t.declare_operation("ask", OpSig{ground_str(), ground_int(), {"E"}});
    return t;
}

} // namespace

TEST_CASE("program structure: declarations, top-level lets, main") {
    SourceProgram p = parse_program(R"(
operation tick : unit ~> int
exception E

let one = return 1

tick ()
)");
    CHECK(p.tables.is_operation("tick"));
    CHECK(p.tables.is_exception("E"));
    REQUIRE(p.lets.size() == 1);
    CHECK(p.lets[0].name == "one");
    CHECK(p.main->kind == TermKind::UGenericOp);
}

TEST_CASE("a let with 'in' is the main computation, not a top-level binding") {
    SourceProgram p = parse_program("let x = return 1 in return x");
    CHECK(p.lets.empty());
    CHECK(p.main->kind == TermKind::ULet);
}

TEST_CASE("sequencing becomes a let with an unused binder") {
    EffectTables t = demo_tables();
    TermPtr a = parse_computation("tick (); return 2", t, Sort::User);
    REQUIRE(a->kind == TermKind::ULet);
    CHECK(free_vars(a->t1).empty());
}

TEST_CASE("setenv carries its continuation") {
    EffectTables t = demo_tables();
    TermPtr a = parse_computation("setenv (3); getenv ()", t, Sort::Kernel);
    REQUIRE(a->kind == TermKind::KSetenv);
    CHECK(a->t1->kind == TermKind::KGetenv);
}

TEST_CASE("operation call forms") {
    EffectTables t = demo_tables();
    CHECK(parse_computation("tick ()", t, Sort::User)->kind == TermKind::UGenericOp);
    CHECK(parse_computation("ask (\"q\")", t, Sort::User)->kind == TermKind::UGenericOp);
    TermPtr ex = parse_computation("ask (\"q\", x. return x, { E -> return 0 })", t, Sort::User);
    REQUIRE(ex->kind == TermKind::UOp);
    CHECK(ex->name == "ask");
    CHECK(ex->name2 == "x");
    CHECK(ex->handlers.count("E") == 1);
}

TEST_CASE("runner literals parse co-operations and state") {
    EffectTables t = demo_tables();
    TermPtr r = parse_value("{ tick u -> getenv (), ask s -> return 0 } @ int", t);
    REQUIRE(r->kind == TermKind::RunnerLit);
    CHECK(r->coops.size() == 2);
    CHECK(equal(r->ground, ground_int()));
}

TEST_CASE("shadowed binders are renamed apart at parse time") {
    EffectTables t = demo_tables();
    TermPtr a = parse_computation("let x = return 1 in let x = return x in return x", t,
                                  Sort::User);
    REQUIRE(a->kind == TermKind::ULet);
    CHECK(a->name != a->t1->name);
}

TEST_CASE("print then reparse is alpha-identity (user)") {
    EffectTables t = demo_tables();
    const char* samples[] = {
        "return (1 + 2, true)",
        "return concat \"a\" \"b\"",
        "let x = return 3 in return (x < 4)",
        "try ask (\"q\", x. return x, { E -> return 0 }) with "
        "{ return y -> return y, raise E -> return 1 }",
        "if true then return (inl 1 : int + bool) else raise E",
        "match (1, true) with { (a, b) -> return b }",
        "match (inl 2 : int + str) with { inl a -> return 0, inr s -> return 1 }",
        "return fun (f : int -> int ! {tick}) -> f 1",
        "using { tick u -> getenv (c. setenv (c + 1); return c) } @ int @ 0 run "
        "tick ((), x. return x, {}) finally { return x @ c -> return (x, c) }",
        "kernel setenv (7); getenv () @ 0 finally "
        "{ return x @ c -> return (x, c), raise E @ c -> return (0, c), kill S -> return (9, 9) }",
        "(raise E : int)",
    };
    for (const char* s : samples) {
        CAPTURE(s);
        TermPtr a = parse_computation(s, t, Sort::User);
        TermPtr a2 = parse_computation(show_term(a), t, Sort::User, ParseOptions{1000});
        CHECK(alpha_equal(a, a2));
    }
}

TEST_CASE("print then reparse is alpha-identity (kernel)") {
    EffectTables t = demo_tables();
    const char* samples[] = {
        "getenv (c. setenv (c + 1); return c)",
        "user return 1 with { return x -> return x, raise E -> return 0 }",
        "kill S",
        "(kill S : int @ str)",
        "try raise E with { return x -> return x, raise E -> return 0 }",
        "return funK (x : int) @ int -> setenv (x)",
        "tick ((), y. return y, {})",
    };
    for (const char* s : samples) {
        CAPTURE(s);
        TermPtr a = parse_computation(s, t, Sort::Kernel);
        TermPtr a2 = parse_computation(show_term(a), t, Sort::Kernel, ParseOptions{1000});
        CHECK(alpha_equal(a, a2));
    }
}

TEST_CASE("generic operations desugar to explicit calls with re-raising handlers") {
    EffectTables t = demo_tables();
    NameSupply supply;
    supply.next = 100;
    TermPtr g = parse_computation("ask \"q\"", t, Sort::User);
    REQUIRE(g->kind == TermKind::UGenericOp);
    TermPtr d = desugar(g, t, supply);
    REQUIRE(d->kind == TermKind::UOp);
    CHECK(d->t1->kind == TermKind::UReturn);
    REQUIRE(d->handlers.count("E") == 1);
    CHECK(d->handlers.at("E")->kind == TermKind::URaise);
}

TEST_CASE("computations in value positions are hoisted unless strict") {
    EffectTables t = demo_tables();
    NameSupply supply;
    supply.next = 100;
    TermPtr g = parse_computation("return (tick (), 2)", t, Sort::User);
    TermPtr d = desugar(g, t, supply);
    CHECK(d->kind == TermKind::ULet);
    NameSupply supply2;
    CHECK_THROWS_AS(desugar(g, t, supply2, DesugarOptions{true}), Diagnostic);
}

TEST_CASE("parse diagnostics") {
    EffectTables t = demo_tables();
    CHECK_THROWS_AS(parse_program("raise Nope"), Diagnostic);
    CHECK_THROWS_AS(parse_computation("{ nop u -> return 0 } @ int", t, Sort::User), Diagnostic);
    CHECK_THROWS_AS(parse_computation("return (1, 2, 3)", t, Sort::User), Diagnostic);
    CHECK_THROWS_AS(parse_computation("return 1, return 2", t, Sort::User), Diagnostic);
    CHECK_THROWS_AS(parse_computation("kill S", t, Sort::User), Diagnostic);
    CHECK_THROWS_AS(parse_computation("getenv ()", t, Sort::User), Diagnostic);
    CHECK_THROWS_AS(parse_program("operation dup : unit ~> unit\noperation dup : unit ~> unit\n"
                                  "return 0"),
                    Diagnostic);
}
