#include <doctest.h>

#include "coop/container.hpp"
#include "coop/desugar.hpp"
#include "coop/eval.hpp"
#include "coop/parser.hpp"
#include "coop/print.hpp"
#include "coop/typecheck.hpp"

using namespace coop;

namespace {

// Parses, desugars, and checks a full program, returning the elaborated term
// and its tables.
TypedProgram compile(const std::string& src) {
    return check_program(desugar_program(parse_program(src)));
}

// Runs main with no container; the program must settle without outer ops.
UserStep eval_main(const TypedProgram& tp, Evaluator& ev) {
    return ev.eval_user(nullptr, tp.term);
}

const char* kDecls =
    "operation tick : unit ~> int\n"
    "exception E\n"
    "signal S\n";

} // namespace

TEST_CASE("run threads kernel state through co-operations") {
    TypedProgram tp = compile(std::string(kDecls) +
        "using { tick u -> getenv (c. setenv (c + 1); return c) } @ int @ 1 run "
        "let a = tick () in let b = tick () in return (a, b) "
        "finally { return x @ c -> return (x, c) }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "((1, 2), 3)");
    CHECK(ev.stats.op_calls == 2);
}

TEST_CASE("kernel block runs setenv/getenv against its own state") {
    TypedProgram tp = compile(
        "kernel setenv (7); getenv () @ 0 finally { return x @ c -> return (x, c) }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "(7, 7)");
}

TEST_CASE("kernel kill lands in the finally kill clause, discarding state") {
    TypedProgram tp = compile(std::string(kDecls) +
        "kernel setenv (42); kill S @ 0 "
        "finally { return x @ c -> return 0, kill S -> return 9 }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "9");
    REQUIRE(ev.finalisations.records.size() == 1);
    CHECK(ev.finalisations.records[0]->count == 1);
    CHECK(ev.finalisations.records[0]->kind == "kill");
}

TEST_CASE("exception escaping a run takes the finally raise clause") {
    TypedProgram tp = compile(std::string(kDecls) +
        "using { tick u -> getenv (c. setenv (c + 1); return c) } @ int @ 10 run "
        "tick (); raise E "
        "finally { return x @ c -> return (0, c), raise E @ c -> return (1, c) }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    // The finaliser still sees the state after one tick.
    CHECK(show_value(s.value) == "(1, 11)");
    REQUIRE(ev.finalisations.records.size() == 1);
    CHECK(ev.finalisations.records[0]->kind == "raise");
}

TEST_CASE("trace records ops, co-op outcomes, and finalisation with depths") {
    TypedProgram tp = compile(std::string(kDecls) +
        "using { tick u -> getenv (c. setenv (c + 1); return c) } @ int @ 1 run "
        "tick () "
        "finally { return x @ c -> return (x, c) }");
    Evaluator ev(tp.tables);
    TraceLog log;
    ev.trace = &log;
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "(1, 2)");

    REQUIRE(log.events.size() == 3);
    CHECK(log.events[0].event == "op");
    CHECK(log.events[0].op == "tick");
    CHECK(log.events[0].run_depth == 1);
    CHECK(log.events[1].event == "coop-return");
    CHECK(log.events[1].op == "tick");
    CHECK(log.events[1].run_depth == 1);
    CHECK(log.events[2].event == "finally");
    CHECK(log.events[2].run_depth == 0);

    REQUIRE(ev.finalisations.records.size() == 1);
    CHECK(ev.finalisations.records[0]->count == 1);
    CHECK(ev.finalisations.records[0]->kind == "return");
}

TEST_CASE("co-op raise routes to the matching exception continuation") {
    TypedProgram tp = compile(
        "exception E\n"
        "operation ask : str ~> int ! {E}\n"
        "using { ask q -> raise E } @ unit @ () run "
        "ask (\"q\", n. return n, { E -> return 55 }) "
        "finally { return x @ c -> return x }");
    Evaluator ev(tp.tables);
    TraceLog log;
    ev.trace = &log;
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "55");
    REQUIRE(log.events.size() >= 2);
    CHECK(log.events[1].event == "coop-raise");
    CHECK(log.events[1].exception == "E");
}

TEST_CASE("continuations are one-shot") {
    TypedProgram tp = compile(std::string(kDecls) + "tick ()");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Op);
    REQUIRE(s.call != nullptr);
    CHECK(s.call->op == "tick");
    UserStep done = s.call->succ(rt_int(3));
    REQUIRE(done.tag == UserStep::Tag::Return);
    CHECK(show_value(done.value) == "3");
    CHECK(ev.stats.resumes == 1);
    CHECK_THROWS_AS(s.call->succ(rt_int(4)), AffinityViolation);
    // Sibling continuations of the same suspension share the guard.
    CHECK_THROWS_AS(s.call->kill("S"), AffinityViolation);
    CHECK(ev.stats.resumes == 1);
}

TEST_CASE("kill passes through a finally block without a matching clause") {
    // Built below the checker: the finally block only covers return, so the
    // kill keeps unwinding and surfaces as a Killed step.
    EffectTables t = EffectTables::with_builtins();
    t.declare_signal("S");
    namespace b = build;
    SourcePos p{1, 1};
    auto fin = make_finally("x", "c", b::ureturn(b::var("x", p), p), {}, {});
    TermPtr term = b::ukernel(b::kkill("S", nullptr, nullptr, p), b::int_lit(0, p), fin, p);
    Evaluator ev(t);
    UserStep s = ev.eval_user(nullptr, term);
    REQUIRE(s.tag == UserStep::Tag::Killed);
    CHECK(s.name == "S");
    REQUIRE(ev.finalisations.records.size() == 1);
    CHECK(ev.finalisations.records[0]->count == 0);
}

TEST_CASE("inner run finalises before an outer kill clause sees the signal") {
    TypedProgram tp = compile(
        "operation boom : unit ~> unit\n"
        "signal S\n"
        "using { boom u -> kill S } @ int @ 0 run "
        "(using { boom u -> kill S } @ int @ 1 run boom () "
        " finally { return x @ c -> return 0, kill S -> return 7 }) "
        "finally { return x @ c -> return (x + 100), kill S -> return 999 }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    // The inner finaliser catches the kill; the outer sees a normal return.
    CHECK(show_value(s.value) == "107");
}

TEST_CASE("outer kill clause fires when the inner run lacks one") {
    TypedProgram tp = compile(
        "operation boom : unit ~> unit\n"
        "signal S\n"
        "using { boom u -> getenv (c. kill S) } @ int @ 0 run "
        "boom (); return 1 "
        "finally { return x @ c -> return x, kill S -> return 41 }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "41");
}

TEST_CASE("user block inside kernel code") {
    TypedProgram tp = compile(
        "exception E\n"
        "kernel "
        "(user (if true then raise E else return 3) with "
        " { return n -> setenv (n); return n, raise E -> setenv (0 - 1); return 0 }) "
        "@ 5 finally { return x @ c -> return (x, c) }");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "(0, -1)");
}

TEST_CASE("closures capture their environment") {
    TypedProgram tp = compile(
        "let mk = return (fun (x : int) -> return (fun (y : int) -> return (x + y)))\n"
        "let add3 = mk 3 in add3 4");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "7");
}

TEST_CASE("toplevel outcomes against the pure container") {
    TypedProgram tp = compile("exception E\nif false then return 1 else raise E");
    Evaluator ev(tp.tables);
    auto c = make_pure_container();
    Outcome out = run_toplevel(*c, ev, eval_main(tp, ev));
    CHECK(out == Outcome::raise("E"));

    TypedProgram tp2 = compile("return (1, (2, \"x\"))");
    Evaluator ev2(tp2.tables);
    Outcome out2 = run_toplevel(*c, ev2, ev2.eval_user(nullptr, tp2.term));
    REQUIRE(out2.tag == Outcome::Tag::Return);
    CHECK(show_value(out2.value) == "(1, (2, \"x\"))");
}

TEST_CASE("builtin constants evaluate") {
    TypedProgram tp = compile(
        "return (concat \"ab\" \"cd\", (3 * 4 - 1, (2 < 3, 2 = 3)))");
    Evaluator ev(tp.tables);
    UserStep s = eval_main(tp, ev);
    REQUIRE(s.tag == UserStep::Tag::Return);
    CHECK(show_value(s.value) == "(\"abcd\", (11, (true, false)))");
}
