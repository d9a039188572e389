#include <doctest.h>

#include "coop/denote.hpp"
#include "coop/desugar.hpp"
#include "coop/parser.hpp"
#include "coop/tree.hpp"
#include "coop/typecheck.hpp"

using namespace coop;

namespace {

EffectTables demo_tables() {
    EffectTables t = EffectTables::with_builtins();
    t.declare_exception("E1");
    t.declare_exception("E2");
    t.declare_signal("S1");
    t.declare_operation("op0", OpSig{ground_unit(), ground_bool(), {}});
    t.declare_operation("op1", OpSig{ground_int(), ground_int(), {"E1"}});
    t.declare_operation("op2", OpSig{ground_bool(), ground_unit(), {"E1", "E2"}});
    return t;
}

TermPtr user_term(const EffectTables& t, const std::string& src) {
    TermPtr m = parse_computation(src, t, Sort::User);
    NameSupply supply{100000};
    return desugar(m, t, supply);
}

TermPtr kernel_term(const EffectTables& t, const std::string& src) {
    TermPtr m = parse_computation(src, t, Sort::Kernel);
    NameSupply supply{100000};
    return desugar(m, t, supply);
}

} // namespace

TEST_CASE("enumerate covers ground types in canonical order") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);

    auto bools = enumerate(ctx, ground_bool());
    REQUIRE(bools.size() == 2);
    CHECK(show_sem(bools[0]) == "false");
    CHECK(show_sem(bools[1]) == "true");

    CHECK(enumerate(ctx, ground_int()).size() == 4);
    CHECK(enumerate(ctx, ground_unit()).size() == 1);
    CHECK(enumerate(ctx, ground_prod(ground_bool(), ground_int())).size() == 8);
    CHECK(enumerate(ctx, ground_sum(ground_bool(), ground_unit())).size() == 3);
    CHECK(enumerate(ctx, ground_empty()).empty());

    CHECK_THROWS_AS(enumerate(ctx, ground_str()), OracleError);
    CHECK(!enumerable(ctx, vt_ground(ground_str())));
    CHECK(enumerable(ctx, vt_ground(ground_int())));

    // enum_index inverts enumerate.
    GroundPtr g = ground_prod(ground_bool(), ground_int());
    auto all = enumerate(ctx, g);
    for (size_t i = 0; i < all.size(); ++i) CHECK(enum_index(ctx, g, all[i]) == i);
    CHECK_THROWS_AS(enum_index(ctx, ground_int(), sem_int(99)), OracleError);
}

TEST_CASE("tree_op validates its children") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    // op0 : unit ~> bool needs exactly two children and no exception children.
    CHECK_THROWS_AS(tree_op(ctx, "op0", sem_unit(), {tree_ret(sem_int(0))}, {}), OracleError);
    // op1 : int ~> int ! {E1} needs int_bound children plus an E1 child.
    CHECK_THROWS_AS(
        tree_op(ctx, "op1", sem_int(0),
                {tree_ret(sem_int(0)), tree_ret(sem_int(1)), tree_ret(sem_int(2)),
                 tree_ret(sem_int(3))},
                {}),
        OracleError);
    TreePtr ok = tree_op(ctx, "op1", sem_int(0),
                         {tree_ret(sem_int(0)), tree_ret(sem_int(1)), tree_ret(sem_int(2)),
                          tree_ret(sem_int(3))},
                         {{"E1", tree_exc("E1")}});
    CHECK(ok->tag == Tree::Tag::Op);
    CHECK(ctx.nodes == 1);
}

TEST_CASE("sem_equal compares functions extensionally") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    auto doubler = [](const SemPtr& v) { return tree_ret(sem_int(v->ival * 2)); };
    auto doubler2 = [](const SemPtr& v) { return tree_ret(sem_int(v->ival + v->ival)); };
    auto tripler = [](const SemPtr& v) { return tree_ret(sem_int(v->ival * 3)); };
    ValueTypePtr ity = vt_ground(ground_int());
    CHECK(sem_equal(ctx, sem_user_fn(doubler, ity), sem_user_fn(doubler2, ity)));
    CHECK(!sem_equal(ctx, sem_user_fn(doubler, ity), sem_user_fn(tripler, ity)));

    // Kernel functions compare over argument and state enumerations.
    auto swap = [](const SemPtr& v, const SemPtr& s) { return tree_kret(s, v); };
    auto swap2 = [](const SemPtr& v, const SemPtr& s) { return tree_kret(s, v); };
    auto keep = [](const SemPtr& v, const SemPtr& s) { return tree_kret(v, s); };
    CHECK(sem_equal(ctx, sem_kernel_fn(swap, ity, ground_int()),
                    sem_kernel_fn(swap2, ity, ground_int())));
    CHECK(!sem_equal(ctx, sem_kernel_fn(swap, ity, ground_int()),
                     sem_kernel_fn(keep, ity, ground_int())));

    // Functions over unenumerable arguments are out of the oracle's domain.
    CHECK_THROWS_AS(sem_equal(ctx, sem_user_fn(doubler, vt_ground(ground_str())),
                              sem_user_fn(doubler2, vt_ground(ground_str()))),
                    OracleError);
}

TEST_CASE("sem/rt conversions round-trip ground data") {
    SemPtr v = sem_pair(sem_inl(sem_int(3)), sem_pair(sem_str("x"), sem_bool(true)));
    RtPtr r = sem_to_rt(v);
    CHECK(show_value(r) == "(inl 3, (\"x\", true))");
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    CHECK(sem_equal(ctx, rt_to_sem(r), v));
    CHECK_THROWS_AS(sem_to_rt(sem_user_fn([](const SemPtr&) { return tree_ret(sem_unit()); },
                                          vt_ground(ground_unit()))),
                    OracleError);
}

TEST_CASE("denotations match hand-built trees") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    Denoter d(ctx);

    // A pure computation denotes to a single leaf.
    TreePtr leaf = d.denote_user({}, user_term(t, "let x = return 2 in return (x + 1)"));
    CHECK(tree_equal(ctx, leaf, tree_ret(sem_int(3))));

    // An op call denotes to a node whose children follow the continuation.
    TreePtr got = d.denote_user({}, user_term(t, "op0 ((), b. if b then return 1 else return 0, {})"));
    TreePtr want = tree_op(ctx, "op0", sem_unit(),
                           {tree_ret(sem_int(0)), tree_ret(sem_int(1))}, {});
    CHECK(tree_equal(ctx, got, want));

    // Kernel denotation threads state.
    TreePtr k = d.denote_kernel({}, kernel_term(t, "getenv (c. setenv (c + 1); return c)"),
                                sem_int(1));
    CHECK(tree_equal(ctx, k, tree_kret(sem_int(1), sem_int(2))));

    // A raise under try resumes with the handler.
    TreePtr h = d.denote_user({}, user_term(t,
        "try (raise E1 : int) with { return x -> return x, raise E1 -> return 9 }"));
    CHECK(tree_equal(ctx, h, tree_ret(sem_int(9))));

    CHECK_THROWS_AS(d.denote_user({}, build::ureturn(build::var("nope", {}), {})), OracleError);
}

TEST_CASE("run_morphism maps user trees into kernel trees") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);

    RunnerDen den;
    den.state_ty = ground_int();
    // op1's co-operation: return the current state, then bump it.
    den.coops["op1"] = [](const SemPtr&, const SemPtr& s) {
        return tree_kret(s, sem_int(s->ival + 1));
    };

    // Return leaves pair up with the state.
    TreePtr r = run_morphism(ctx, den, tree_ret(sem_int(7)), sem_int(3));
    CHECK(tree_equal(ctx, r, tree_kret(sem_int(7), sem_int(3))));
    r = run_morphism(ctx, den, tree_exc("E1"), sem_int(3));
    CHECK(tree_equal(ctx, r, tree_kexc("E1", sem_int(3))));

    // An op1 node: continuation receives the old state, state advances.
    TreePtr probe = op_probe(ctx, "op1", sem_int(0));
    r = run_morphism(ctx, den, probe, sem_int(2));
    CHECK(tree_equal(ctx, r, tree_kret(sem_int(2), sem_int(3))));

    // Unhandled operations are out of domain.
    RunnerDen empty;
    empty.state_ty = ground_int();
    CHECK_THROWS_AS(run_morphism(ctx, empty, probe, sem_int(0)), OracleError);
}

TEST_CASE("op_probe recovers co-operations from the morphism") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    RunnerDen den;
    den.state_ty = ground_bool();
    den.coops["op0"] = [](const SemPtr&, const SemPtr& s) {
        return tree_kret(s, sem_bool(!s->bval));
    };
    den.coops["op1"] = [](const SemPtr& a, const SemPtr& s) {
        return a->ival == 0 ? tree_kexc("E1", s) : tree_kret(sem_int(a->ival), s);
    };
    for (const std::string& op : {std::string("op0"), std::string("op1")}) {
        const OpSig& sig = ctx.sig(op);
        for (const SemPtr& arg : enumerate(ctx, sig.param))
            for (const SemPtr& st : enumerate(ctx, den.state_ty)) {
                TreePtr via = run_morphism(ctx, den, op_probe(ctx, op, arg), st);
                CHECK(tree_equal(ctx, via, den.coops.at(op)(arg, st)));
            }
    }
}

TEST_CASE("finalisation applies phi and keeps a factoring witness") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);

    FinalisationMap phi;
    phi.excs = {"E1"};
    phi.sigs = {"S1"};
    phi.on_ret = [](const SemPtr& v, const SemPtr& s) {
        return tree_ret(sem_pair(v, s));
    };
    phi.on_exc = [](const std::string&, const SemPtr& s) {
        return tree_ret(sem_pair(sem_int(-1), s));
    };
    phi.on_sig = [](const std::string&) { return tree_ret(sem_pair(sem_int(-2), sem_int(0))); };

    Finalised f = finalisation_apply(ctx, phi, tree_kret(sem_int(5), sem_int(9)));
    CHECK(tree_equal(ctx, f.result, tree_ret(sem_pair(sem_int(5), sem_int(9)))));
    f = finalisation_apply(ctx, phi, tree_kexc("E1", sem_int(2)));
    CHECK(tree_equal(ctx, f.result, tree_ret(sem_pair(sem_int(-1), sem_int(2)))));
    f = finalisation_apply(ctx, phi, tree_sig("S1"));
    CHECK(tree_equal(ctx, f.result, tree_ret(sem_pair(sem_int(-2), sem_int(0)))));

    // Leaves outside the map's domain are hard failures.
    CHECK_THROWS_AS(finalisation_apply(ctx, phi, tree_kexc("E2", sem_int(0))), OracleError);

    // phi pushes through op nodes; re-extending phi over the witness gives
    // back the result.
    TreePtr node = tree_op(ctx, "op0", sem_unit(),
                           {tree_kret(sem_int(0), sem_int(1)), tree_kexc("E1", sem_int(2))}, {});
    f = finalisation_apply(ctx, phi, node);
    CHECK(f.witness == node);
    Finalised again = finalisation_apply(ctx, phi, f.witness);
    CHECK(tree_equal(ctx, f.result, again.result));
}

TEST_CASE("denoter logs runs with their phi and witness") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    Denoter d(ctx);
    TreePtr result = d.denote_user({}, user_term(t,
        "using { op1 x -> getenv (c. setenv (c + 1); return (x + c)) } @ int @ 0 run "
        "op1 (2, n. return n, { E1 -> return 0 }) "
        "finally { return x @ c -> return (x, c) }"));
    CHECK(tree_equal(ctx, result, tree_ret(sem_pair(sem_int(2), sem_int(1)))));
    REQUIRE(d.runs.size() == 1);
    const RunDenotation& rd = d.runs[0];
    CHECK(!rd.is_kernel_block);
    CHECK(tree_equal(ctx, rd.result, result));
    Finalised ref = finalisation_apply(ctx, rd.phi, rd.witness);
    CHECK(tree_equal(ctx, ref.result, rd.result));
}

TEST_CASE("monad laws on fixed trees") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);

    auto eta = [](const SemPtr& v) { return tree_ret(v); };
    auto rethrow = [](const std::string& e) { return tree_exc(e); };
    auto f = [&ctx](const SemPtr& v) {
        return v->ival % 2 == 0 ? tree_exc("E1") : op_probe(ctx, "op0", sem_unit());
    };
    auto g = [](const SemPtr& v) { return tree_ret(sem_pair(v, v)); };
    auto gexc = [](const std::string&) { return tree_ret(sem_unit()); };

    TreePtr t1 = op_probe(ctx, "op1", sem_int(1));

    // Right identity: bind with the units is the identity.
    CHECK(tree_equal(ctx, utree_bind(ctx, t1, eta, rethrow), t1));
    // Left identity: binding a leaf applies the callback directly.
    CHECK(tree_equal(ctx, utree_bind(ctx, tree_ret(sem_int(2)), f, rethrow), f(sem_int(2))));
    CHECK(tree_equal(ctx, utree_bind(ctx, tree_exc("E2"), f, gexc), gexc("E2")));
    // Associativity.
    TreePtr lhs = utree_bind(ctx, utree_bind(ctx, t1, f, rethrow), g, gexc);
    TreePtr rhs = utree_bind(
        ctx, t1, [&](const SemPtr& v) { return utree_bind(ctx, f(v), g, gexc); },
        [&](const std::string& e) { return utree_bind(ctx, rethrow(e), g, gexc); });
    CHECK(tree_equal(ctx, lhs, rhs));

    // Kernel bind threads state through the callbacks.
    auto keta = [](const SemPtr& v, const SemPtr& s) { return tree_kret(v, s); };
    auto krethrow = [](const std::string& e, const SemPtr& s) { return tree_kexc(e, s); };
    TreePtr k1 = tree_op(ctx, "op0", sem_unit(),
                         {tree_kret(sem_int(0), sem_int(1)), tree_sig("S1")}, {});
    CHECK(tree_equal(ctx, ktree_bind(ctx, k1, keta, krethrow), k1));
    auto kf = [](const SemPtr& v, const SemPtr& s) {
        return tree_kret(sem_int(v->ival + s->ival), s);
    };
    CHECK(tree_equal(ctx, ktree_bind(ctx, tree_kret(sem_int(2), sem_int(3)), kf, krethrow),
                     kf(sem_int(2), sem_int(3))));
    // Sig leaves pass through any bind.
    CHECK(tree_equal(ctx, ktree_bind(ctx, tree_sig("S1"), kf, krethrow), tree_sig("S1")));
}

TEST_CASE("node budget is a hard stop") {
    EffectTables t = demo_tables();
    TreeCtx ctx(t);
    ctx.node_budget = 3;
    CHECK_THROWS_AS(
        [&] {
            TreePtr probe = op_probe(ctx, "op0", sem_unit());
            for (int i = 0; i < 10; ++i)
                probe = utree_bind(
                    ctx, probe, [&](const SemPtr&) { return op_probe(ctx, "op0", sem_unit()); },
                    [](const std::string& e) { return tree_exc(e); });
        }(),
        OracleError);
}
