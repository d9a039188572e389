#include <doctest.h>

#include "coop/ast.hpp"
#include "coop/subst.hpp"

using namespace coop;
namespace b = build;

TEST_CASE("free variables see through binders") {
    TermPtr t = b::ulet("x", b::ureturn(b::var("y")),
                        b::ureturn(b::pair(b::var("x"), b::var("z"))));
    CHECK(free_vars(t) == NameSet{"y", "z"});

    TermPtr f = b::fun("x", vt_int(), b::ureturn(b::var("x")));
    CHECK(free_vars(f).empty());
}

TEST_CASE("alpha equivalence ignores binder names and positions") {
    TermPtr a = b::fun("x", vt_int(), b::ureturn(b::var("x")));
    TermPtr c = b::fun("y", vt_int(), b::ureturn(b::var("y")));
    CHECK(alpha_equal(a, c));
    CHECK(nameless_form(a) == nameless_form(c));

    TermPtr d = b::fun("y", vt_int(), b::ureturn(b::int_lit(1)));
    CHECK_FALSE(alpha_equal(a, d));

    // Distinct free variables are distinct terms.
    CHECK_FALSE(alpha_equal(b::ureturn(b::var("p")), b::ureturn(b::var("q"))));
}

TEST_CASE("alpha equivalence distinguishes annotations") {
    TermPtr a = b::fun("x", vt_int(), b::ureturn(b::var("x")));
    TermPtr c = b::fun("x", vt_bool(), b::ureturn(b::var("x")));
    CHECK_FALSE(alpha_equal(a, c));
}

TEST_CASE("substitution avoids capture") {
    // (fun y -> return (x, y))[x := y]  must rename the binder
    TermPtr f = b::fun("y", vt_int(), b::ureturn(b::pair(b::var("x"), b::var("y"))));
    TermPtr g = substitute(f, "x", b::var("y"));
    TermPtr want = b::fun("w", vt_int(), b::ureturn(b::pair(b::var("y"), b::var("w"))));
    CHECK(alpha_equal(g, want));
    CHECK(free_vars(g) == NameSet{"y"});
}

TEST_CASE("substitution respects shadowing") {
    // (let x = return x in return x)[x := 1] replaces only the bound occurrence
    TermPtr t = b::ulet("x", b::ureturn(b::var("x")), b::ureturn(b::var("x")));
    TermPtr r = substitute(t, "x", b::int_lit(1));
    TermPtr want = b::ulet("x", b::ureturn(b::int_lit(1)), b::ureturn(b::var("x")));
    CHECK(alpha_equal(r, want));
}

TEST_CASE("substituting for an absent variable is the identity") {
    TermPtr t = b::ulet("x", b::ureturn(b::int_lit(1)), b::ureturn(b::var("x")));
    CHECK(alpha_equal(substitute(t, "q", b::int_lit(9)), t));
}

TEST_CASE("substitution reaches finally clauses and runner literals") {
    FinallyPtr fin = make_finally("r", "c", b::ureturn(b::pair(b::var("r"), b::var("v"))), {}, {});
    TermPtr t = b::ukernel(b::kreturn(b::var("v")), b::int_lit(0), fin);
    TermPtr r = substitute(t, "v", b::int_lit(5));
    CHECK(free_vars(r).empty());
    CHECK(r->fin->ret_body->t0->t1->ival == 5);
}

TEST_CASE("uniquify renames shadowing binders and preserves meaning") {
    NameSupply s;
    TermPtr t = b::ulet("x", b::ureturn(b::int_lit(1)),
                        b::ulet("x", b::ureturn(b::var("x")), b::ureturn(b::var("x"))));
    TermPtr u = uniquify(t, s);
    CHECK(alpha_equal(t, u));
    CHECK(u->name != u->t1->name);   // outer and inner binder now differ
}

TEST_CASE("effect tables reject duplicate or colliding declarations") {
    EffectTables t = EffectTables::with_builtins();
    t.declare_exception("E");
    CHECK_THROWS_AS(t.declare_exception("E"), std::invalid_argument);
    t.declare_operation("tick", OpSig{ground_unit(), ground_int(), {}});
    CHECK_THROWS_AS(t.declare_operation("tick", OpSig{ground_unit(), ground_int(), {}}),
                    std::invalid_argument);
    // Kinds share one namespace.
    CHECK_THROWS_AS(t.declare_signal("tick"), std::invalid_argument);
}

TEST_CASE("ground type equality is structural") {
    CHECK(equal(ground_prod(ground_int(), ground_bool()),
                ground_prod(ground_int(), ground_bool())));
    CHECK_FALSE(equal(ground_prod(ground_int(), ground_bool()),
                      ground_prod(ground_bool(), ground_int())));
    CHECK_FALSE(equal(ground_unit(), ground_empty()));
}
