#include <doctest.h>

#include "coop/desugar.hpp"
#include "coop/diag.hpp"
#include "coop/parser.hpp"
#include "coop/print.hpp"
#include "coop/typecheck.hpp"

using namespace coop;

namespace {

EffectTables demo_tables() {
    EffectTables t = EffectTables::with_builtins();
    t.declare_exception("E");
    t.declare_exception("F");
    t.declare_signal("S");
    t.declare_operation("tick", OpSig{ground_unit(), ground_int(), {}});
    t.declare_operation("load", OpSig{ground_unit(), ground_int(), {}});
    t.declare_operation("store", OpSig{ground_int(), ground_unit(), {}});
    t.declare_operation("ask", OpSig{ground_str(), ground_int(), {"E"}});
    return t;
}

TermPtr parse_user_term(const EffectTables& t, const std::string& src) {
    TermPtr m = parse_computation(src, t, Sort::User);
    NameSupply supply{100000};
    return desugar(m, t, supply);
}

TermPtr parse_kernel_term(const EffectTables& t, const std::string& src) {
    TermPtr m = parse_computation(src, t, Sort::Kernel);
    NameSupply supply{100000};
    return desugar(m, t, supply);
}

UserTypePtr user_type_of(const EffectTables& t, const std::string& src) {
    Checker ck(t);
    return ck.synth_user({}, parse_user_term(t, src)).second;
}

KernelTypePtr kernel_type_of(const EffectTables& t, const std::string& src,
                             GroundPtr state_ctx = nullptr) {
    Checker ck(t);
    return ck.synth_kernel({}, parse_kernel_term(t, src), state_ctx).second;
}

std::string rule_of_user(const EffectTables& t, const std::string& src) {
    Checker ck(t);
    try {
        ck.synth_user({}, parse_user_term(t, src));
    } catch (const Diagnostic& d) {
        return d.rule;
    }
    return "";
}

std::string rule_of_kernel(const EffectTables& t, const std::string& src,
                           GroundPtr state_ctx = nullptr) {
    Checker ck(t);
    try {
        ck.synth_kernel({}, parse_kernel_term(t, src), state_ctx);
    } catch (const Diagnostic& d) {
        return d.rule;
    }
    return "";
}

} // namespace

TEST_CASE("structural value types synthesize") {
    EffectTables t = demo_tables();
    UserTypePtr ty = user_type_of(t, "return (1 + 2, true)");
    CHECK(show(ty) == "int * bool ! {}");
    CHECK(ty->ops.empty());
    CHECK(ty->excs.empty());

    CHECK(show(user_type_of(t, "return (fun (x : int) -> return x)")) ==
          "(int -> int ! {}) ! {}");
    CHECK(show(user_type_of(t, "return \"hi\"")) == "str ! {}");
}

TEST_CASE("operation calls extend effect rows") {
    EffectTables t = demo_tables();
    UserTypePtr ty = user_type_of(t, "tick ()");
    CHECK(ty->ops == NameSet{"tick"});
    CHECK(ty->excs.empty());

    // ask's signature contributes its exception row too.
    ty = user_type_of(t, "let n = ask \"q\" in tick (); return n");
    CHECK(ty->ops == NameSet{"ask", "tick"});
    CHECK(ty->excs == NameSet{"E"});
    CHECK(show(ty->carrier) == "int");

    // An explicit handler that covers E removes it from the row.
    ty = user_type_of(t, "ask (\"q\", n. return n, { E -> return 0 })");
    CHECK(ty->excs.empty());
}

TEST_CASE("run removes handled operations and adds runner externals") {
    EffectTables t = demo_tables();
    UserTypePtr ty = user_type_of(t,
        "using { load u -> getenv (), store x -> setenv (x) } @ int @ 0 run "
        "store 5; load () "
        "finally { return x @ c -> return x }");
    CHECK(ty->ops.empty());
    CHECK(show(ty->carrier) == "int");

    // Co-operations that call tick surface it as an external effect.
    ty = user_type_of(t,
        "using { load u -> user (tick ()) with { return n -> return n } } @ unit @ () run "
        "load () "
        "finally { return x @ c -> return x }");
    CHECK(ty->ops == NameSet{"tick"});
}

TEST_CASE("let elaborates into try with re-raising clauses") {
    EffectTables t = demo_tables();
    Checker ck(t);
    auto [elab, ty] = ck.synth_user({}, parse_user_term(t, "let n = ask \"q\" in return n"));
    REQUIRE(elab->kind == TermKind::UTry);
    REQUIRE(elab->handlers.count("E") == 1);
    CHECK(elab->handlers.at("E")->kind == TermKind::URaise);
    CHECK(ty->excs == NameSet{"E"});
}

TEST_CASE("raise joins through bottom") {
    EffectTables t = demo_tables();
    UserTypePtr ty = user_type_of(t, "if true then return 1 else raise E");
    CHECK(show(ty->carrier) == "int");
    CHECK(ty->excs == NameSet{"E"});

    // Both branches raising leaves the carrier free for any join partner.
    ty = user_type_of(t, "let x = (if true then raise E else raise F) in return (x, x)");
    CHECK(ty->excs == NameSet{"E", "F"});
}

TEST_CASE("kernel state inference") {
    EffectTables t = demo_tables();
    // The kernel block pins its own state from the initial value.
    UserTypePtr ty = user_type_of(t,
        "kernel getenv () @ 7 finally { return x @ c -> return (x, c) }");
    CHECK(show(ty->carrier) == "int * int");

    // Unconstrained kernel computation leaves state open...
    KernelTypePtr kt = kernel_type_of(t, "return 3");
    CHECK(kt->state == nullptr);
    // ...until getenv/setenv or the context pins it.
    kt = kernel_type_of(t, "setenv (4)");
    REQUIRE(kt->state != nullptr);
    CHECK(show(kt->state) == "int");
    kt = kernel_type_of(t, "return 3", ground_str());
    REQUIRE(kt->state != nullptr);
    CHECK(show(kt->state) == "str");

    // Conflicting uses of the state are rejected.
    CHECK(rule_of_kernel(t, "setenv (4); setenv (true)") == "TyKernel-State");
    CHECK(rule_of_kernel(t, "setenv (true)", ground_int()) == "TyKernel-State");
    // Only ground values can be installed as state.
    CHECK(rule_of_kernel(t, "setenv (fun (x : int) -> return x)") == "TyKernel-Setenv");
}

TEST_CASE("bare injections need an ascription") {
    EffectTables t = demo_tables();
    CHECK(rule_of_user(t, "return inl 3") == "TyValue-Inject");
    UserTypePtr ty = user_type_of(t, "return (inl 3 : int + bool)");
    CHECK(show(ty->carrier) == "int + bool");
    // check_value pushes the expected type into the injection.
    ty = user_type_of(t, "(fun (s : int + str) -> return s) (inr \"x\")");
    CHECK(show(ty->carrier) == "int + str");
}

TEST_CASE("negative: unhandled operation under run") {
    EffectTables t = demo_tables();
    CHECK(rule_of_user(t,
        "using { load u -> getenv () } @ int @ 0 run store 3 "
        "finally { return x @ c -> return x }") == "TyUser-Run");
}

TEST_CASE("negative: finally coverage") {
    EffectTables t = demo_tables();
    // Body may raise E; the finally block has no clause for it.
    CHECK(rule_of_user(t,
        "using { load u -> getenv () } @ int @ 0 run "
        "(if true then raise E else load ()) "
        "finally { return x @ c -> return x }") == "TyUser-Run");
    // Co-operation may kill S; no kill clause.
    CHECK(rule_of_user(t,
        "using { load u -> kill S } @ int @ 0 run load () "
        "finally { return x @ c -> return x }") == "TyUser-Run");
    // Kernel block body may raise E.
    CHECK(rule_of_user(t,
        "kernel (if true then raise E else return 1) @ 0 "
        "finally { return x @ c -> return x }") == "TyUser-Kernel");
    // With the clauses present, both check.
    CHECK(rule_of_user(t,
        "using { load u -> kill S } @ int @ 0 run "
        "(if true then raise E else load ()) "
        "finally { return x @ c -> return x, raise E @ c -> return 0, kill S -> return 1 }")
        == "");
}

TEST_CASE("negative: co-operation raising outside declared row") {
    EffectTables t = demo_tables();
    // load's signature has no exceptions, so its co-operation may not raise.
    CHECK(rule_of_user(t,
        "using { load u -> raise E } @ int @ 0 run load () "
        "finally { return x @ c -> return x }") == "TyValue-Runner");
    // ask declares E, so raising E is allowed there.
    CHECK(rule_of_user(t,
        "using { ask q -> raise E } @ int @ 0 run "
        "ask (\"q\", n. return n, { E -> return 0 }) "
        "finally { return x @ c -> return x }") == "");
}

TEST_CASE("negative: op handler coverage and stray handlers") {
    EffectTables t = demo_tables();
    // Handler for an exception the operation cannot raise.
    CHECK(rule_of_user(t, "tick ((), n. return n, { E -> return 0 })") == "TyUser-Op");
    // funK whose declared state disagrees with its body.
    CHECK(rule_of_user(t,
        "return (funK (x : int) @ int -> setenv (true))") == "TyKernel-State");
}

TEST_CASE("kernel raise and kill carry ascribed types") {
    EffectTables t = demo_tables();
    KernelTypePtr kt = kernel_type_of(t, "(kill S : int @ str)");
    CHECK(show(kt->carrier) == "int");
    CHECK(kt->sigs == NameSet{"S"});
    REQUIRE(kt->state != nullptr);
    CHECK(show(kt->state) == "str");

    kt = kernel_type_of(t, "if true then (raise E : int @ int) else return 2");
    CHECK(show(kt->carrier) == "int");
    CHECK(kt->excs == NameSet{"E"});
}

TEST_CASE("check_program folds top-level lets") {
    SourceProgram prog = parse_program(
        "operation tick : unit ~> int\n"
        "let one = return 1\n"
        "let add = return (fun (x : int) -> return (x + 1))\n"
        "let n = one in add n");
    TypedProgram tp = check_program(desugar_program(std::move(prog)));
    CHECK(show(tp.type) == "int ! {}");
    CHECK(tp.term->kind == TermKind::UTry);
}

TEST_CASE("subtype and join on rows") {
    UserTypePtr small = ut_make(vt_ground(ground_int()), {"tick"}, {});
    UserTypePtr big = ut_make(vt_ground(ground_int()), {"tick", "ask"}, {"E"});
    CHECK(subtype(small, big));
    CHECK(!subtype(big, small));
    UserTypePtr j = join_user(small, big, SourcePos{1, 1});
    CHECK(j->ops == NameSet{"tick", "ask"});
    CHECK(j->excs == NameSet{"E"});
}
