#include "coop/eqtest.hpp"

#include <exception>
#include <initializer_list>
#include <iterator>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coop/container.hpp"
#include "coop/denote.hpp"
#include "coop/diag.hpp"
#include "coop/eval.hpp"
#include "coop/subst.hpp"
#include "coop/tree.hpp"
#include "coop/typecheck.hpp"

namespace coop {

namespace b = build;

namespace {

using Handlers = std::map<std::string, TermPtr>;
using Binding = std::pair<std::string, ValueTypePtr>;

// Generates a computation with extra variables in scope; the caller closes
// the term with binders or substitution.
TermPtr open_user(Gen& g, std::initializer_list<Binding> binds, const ValueTypePtr& carrier,
                  int depth) {
    size_t m = g.scope_mark();
    for (const auto& bv : binds) g.scope_push(bv.first, bv.second);
    TermPtr t = g.user(carrier, depth);
    g.scope_reset(m);
    return t;
}

TermPtr open_kernel(Gen& g, std::initializer_list<Binding> binds, const ValueTypePtr& carrier,
                    const GroundPtr& state, int depth) {
    size_t m = g.scope_mark();
    for (const auto& bv : binds) g.scope_push(bv.first, bv.second);
    TermPtr t = g.kernel(carrier, state, depth);
    g.scope_reset(m);
    return t;
}

std::string pick_name(Gen& g, const NameSet& names) {
    auto it = names.begin();
    std::advance(it, static_cast<long>(g.pick(names.size())));
    return *it;
}

std::string pick_op(Gen& g) {
    auto it = g.tables.operations.begin();
    std::advance(it, static_cast<long>(g.pick(g.tables.operations.size())));
    return it->first;
}

// Exception handlers over a random subset of the declared exceptions,
// forced to include everything in `need`.
Handlers user_handlers(Gen& g, const NameSet& need, const ValueTypePtr& carrier, int depth) {
    Handlers h;
    for (const auto& e : g.tables.exceptions)
        if (need.count(e) || g.flip()) h.emplace(e, g.user(carrier, depth));
    return h;
}

Handlers kernel_handlers(Gen& g, const NameSet& need, const ValueTypePtr& carrier,
                         const GroundPtr& state, int depth) {
    Handlers h;
    for (const auto& e : g.tables.exceptions)
        if (need.count(e) || g.flip()) h.emplace(e, g.kernel(carrier, state, depth));
    return h;
}

// Handlers a generated op call needs: exactly the operation's exceptions.
Handlers op_user_handlers(Gen& g, const OpSig& sig, const ValueTypePtr& carrier, int depth) {
    Handlers h;
    for (const auto& e : sig.excs) h.emplace(e, g.user(carrier, depth));
    return h;
}

Handlers op_kernel_handlers(Gen& g, const OpSig& sig, const ValueTypePtr& carrier,
                            const GroundPtr& state, int depth) {
    Handlers h;
    for (const auto& e : sig.excs) h.emplace(e, g.kernel(carrier, state, depth));
    return h;
}

// Finalisation clauses with a known shape: the schemas substitute into the
// clause bodies directly. Total over every exception and signal.
FinallyPtr fin_for(Gen& g, const ValueTypePtr& body_ty, const GroundPtr& state,
                   const ValueTypePtr& result_ty, int depth) {
    std::string rv = g.fresh_name();
    std::string rc = g.fresh_name();
    size_t m = g.scope_mark();
    g.scope_push(rv, body_ty);
    g.scope_push(rc, vt_ground(state));
    TermPtr ret = g.user(result_ty, depth);
    g.scope_reset(m);
    std::map<std::string, RaiseClause> on_raise;
    for (const auto& e : g.tables.exceptions) {
        std::string sv = g.fresh_name();
        g.scope_push(sv, vt_ground(state));
        on_raise.emplace(e, RaiseClause{sv, g.user(result_ty, depth)});
        g.scope_reset(m);
    }
    std::map<std::string, TermPtr> on_kill;
    for (const auto& s : g.tables.signals) on_kill.emplace(s, g.user(result_ty, depth));
    return make_finally(rv, rc, ret, std::move(on_raise), std::move(on_kill));
}

EqInstance user_eq(TermPtr lhs, TermPtr rhs) {
    return {Sort::User, std::move(lhs), std::move(rhs), nullptr};
}

EqInstance kernel_eq(TermPtr lhs, TermPtr rhs, GroundPtr state) {
    return {Sort::Kernel, std::move(lhs), std::move(rhs), std::move(state)};
}

// ---------------------------------------------------------------------------
// Equation schemas.

std::vector<Schema> make_equation_schemas() {
    std::vector<Schema> out;
    auto add = [&](const char* id, std::function<EqInstance(Gen&)> make) {
        out.push_back({id, std::move(make)});
    };

    // --- user beta/commuting conversions -----------------------------------

    add("fun-beta", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), X = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr M = open_user(g, {{x, A}}, X, 2);
        return user_eq(b::uapply(b::fun(x, A, M), V), substitute(M, x, V));
    });

    add("pair-match", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), X = g.ground_type(1);
        std::string x = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(A, 2), W = g.value(B, 2);
        TermPtr M = open_user(g, {{x, A}, {y, B}}, X, 2);
        return user_eq(b::umatch_pair(b::pair(V, W), x, y, M),
                       substitute(substitute(M, x, V), y, W));
    });

    add("inl-match", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), X = g.ground_type(1);
        ValueTypePtr S = vt_sum(A, B);
        std::string x = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr M = open_user(g, {{x, A}}, X, 2);
        TermPtr N = open_user(g, {{y, B}}, X, 2);
        return user_eq(b::umatch_sum(b::inl(V, S), x, M, y, N), substitute(M, x, V));
    });

    add("inr-match", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), X = g.ground_type(1);
        ValueTypePtr S = vt_sum(A, B);
        std::string x = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(B, 2);
        TermPtr M = open_user(g, {{x, A}}, X, 2);
        TermPtr N = open_user(g, {{y, B}}, X, 2);
        return user_eq(b::umatch_sum(b::inr(V, S), x, M, y, N), substitute(N, y, V));
    });

    add("if-true", [](Gen& g) {
        ValueTypePtr X = g.ground_type(1);
        TermPtr M = g.user(X, 2), N = g.user(X, 2);
        return user_eq(b::umatch_bool(b::bool_lit(true), M, N), M);
    });

    add("if-false", [](Gen& g) {
        ValueTypePtr X = g.ground_type(1);
        TermPtr M = g.user(X, 2), N = g.user(X, 2);
        return user_eq(b::umatch_bool(b::bool_lit(false), M, N), N);
    });

    add("let-return-user", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), X = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr M = open_user(g, {{x, A}}, X, 2);
        return user_eq(b::ulet(x, b::ureturn(V), M), substitute(M, x, V));
    });

    add("try-return", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), X = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr R = open_user(g, {{x, A}}, X, 2);
        Handlers H = user_handlers(g, {}, X, 2);
        return user_eq(b::utry(b::ureturn(V), x, R, H), substitute(R, x, V));
    });

    add("try-raise", [](Gen& g) {
        ValueTypePtr X = g.ground_type(1);
        std::string e = pick_name(g, g.tables.exceptions);
        std::string x = g.fresh_name();
        TermPtr R = g.user(X, 2);
        Handlers H = user_handlers(g, {e}, X, 2);
        return user_eq(b::utry(b::uraise(e), x, R, H), H.at(e));
    });

    add("try-op", [](Gen& g) {
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        ValueTypePtr A = g.ground_type(1), X = g.ground_type(1);
        std::string bn = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(vt_ground(sig.param), 2);
        TermPtr M = open_user(g, {{bn, vt_ground(sig.result)}}, A, 2);
        Handlers Me = op_user_handlers(g, sig, A, 2);
        TermPtr R = open_user(g, {{y, A}}, X, 2);
        Handlers H = user_handlers(g, {}, X, 2);
        Handlers pushed;
        for (const auto& [e, body] : Me) pushed.emplace(e, b::utry(body, y, R, H));
        return user_eq(b::utry(b::uop(op, V, bn, M, Me), y, R, H),
                       b::uop(op, V, bn, b::utry(M, y, R, H), pushed));
    });

    // --- running user code under a runner -----------------------------------

    add("run-return", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        TermPtr R = g.runner_lit(C, 2);
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr V = g.value(Y, 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        return user_eq(b::urun(R, W, b::ureturn(V), F),
                       substitute(substitute(F->ret_body, F->ret_var, V), F->ret_state, W));
    });

    add("run-raise", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        std::string e = pick_name(g, g.tables.exceptions);
        TermPtr R = g.runner_lit(C, 2);
        TermPtr W = g.value(vt_ground(C), 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        const RaiseClause& cl = F->on_raise.at(e);
        return user_eq(b::urun(R, W, b::uraise(e), F), substitute(cl.body, cl.state_var, W));
    });

    add("run-op", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), X = g.ground_type(1);
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        TermPtr R = g.runner_lit(C, 2);
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr V = g.value(vt_ground(sig.param), 2);
        std::string bn = g.fresh_name();
        TermPtr M = open_user(g, {{bn, vt_ground(sig.result)}}, A, 2);
        Handlers Me = op_user_handlers(g, sig, A, 2);
        FinallyPtr F = fin_for(g, A, C, X, 2);
        TermPtr lhs = b::urun(R, W, b::uop(op, V, bn, M, Me), F);

        const CoopClause& cl = R->coops.at(op);
        TermPtr kbody = substitute(cl.body, cl.param, V);
        std::string c2 = g.fresh_name();
        std::map<std::string, RaiseClause> r2;
        for (const auto& [e, body] : Me) {
            std::string cv = g.fresh_name();
            r2.emplace(e, RaiseClause{cv, b::urun(R, b::var(cv), body, F)});
        }
        FinallyPtr fin2 =
            make_finally(bn, c2, b::urun(R, b::var(c2), M, F), std::move(r2), F->on_kill);
        return user_eq(lhs, b::ukernel(kbody, W, fin2));
    });

    // --- kernel blocks -------------------------------------------------------

    add("kernel-block-return", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr V = g.value(Y, 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        return user_eq(b::ukernel(b::kreturn(V), W, F),
                       substitute(substitute(F->ret_body, F->ret_var, V), F->ret_state, W));
    });

    add("kernel-block-raise", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        std::string e = pick_name(g, g.tables.exceptions);
        TermPtr W = g.value(vt_ground(C), 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        const RaiseClause& cl = F->on_raise.at(e);
        return user_eq(b::ukernel(b::kraise(e), W, F), substitute(cl.body, cl.state_var, W));
    });

    add("kernel-block-kill", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        std::string s = pick_name(g, g.tables.signals);
        TermPtr W = g.value(vt_ground(C), 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        return user_eq(b::ukernel(b::kkill(s), W, F), F->on_kill.at(s));
    });

    add("kernel-block-getenv", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        std::string c = g.fresh_name();
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr K = open_kernel(g, {{c, vt_ground(C)}}, Y, C, 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        return user_eq(b::ukernel(b::kgetenv(c, K), W, F),
                       b::ukernel(substitute(K, c, W), W, F));
    });

    add("kernel-block-setenv", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr V = g.value(vt_ground(C), 2);
        TermPtr K = g.kernel(Y, C, 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        return user_eq(b::ukernel(b::ksetenv(V, K), W, F), b::ukernel(K, V, F));
    });

    add("kernel-block-op", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr X = g.ground_type(1), Y = g.ground_type(1);
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr V = g.value(vt_ground(sig.param), 2);
        std::string bn = g.fresh_name();
        TermPtr K = open_kernel(g, {{bn, vt_ground(sig.result)}}, Y, C, 2);
        Handlers Ke = op_kernel_handlers(g, sig, Y, C, 2);
        FinallyPtr F = fin_for(g, Y, C, X, 2);
        Handlers pushed;
        for (const auto& [e, body] : Ke) pushed.emplace(e, b::ukernel(body, W, F));
        return user_eq(b::ukernel(b::kop(op, V, bn, K, Ke), W, F),
                       b::uop(op, V, bn, b::ukernel(K, W, F), pushed));
    });

    // --- kernel beta/commuting conversions ----------------------------------

    add("funk-beta", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr K = open_kernel(g, {{x, A}}, Y, C, 2);
        return kernel_eq(b::kapply(b::funk(x, A, C, K), V), substitute(K, x, V), C);
    });

    add("let-return-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr K = open_kernel(g, {{x, A}}, Y, C, 2);
        return kernel_eq(b::klet(x, b::kreturn(V), K), substitute(K, x, V), C);
    });

    add("pair-match-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), Y = g.ground_type(1);
        std::string x = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(A, 2), W = g.value(B, 2);
        TermPtr K = open_kernel(g, {{x, A}, {y, B}}, Y, C, 2);
        return kernel_eq(b::kmatch_pair(b::pair(V, W), x, y, K),
                         substitute(substitute(K, x, V), y, W), C);
    });

    add("inl-match-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), Y = g.ground_type(1);
        ValueTypePtr S = vt_sum(A, B);
        std::string x = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr K = open_kernel(g, {{x, A}}, Y, C, 2);
        TermPtr L = open_kernel(g, {{y, B}}, Y, C, 2);
        return kernel_eq(b::kmatch_sum(b::inl(V, S), x, K, y, L), substitute(K, x, V), C);
    });

    add("inr-match-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), Y = g.ground_type(1);
        ValueTypePtr S = vt_sum(A, B);
        std::string x = g.fresh_name(), y = g.fresh_name();
        TermPtr V = g.value(B, 2);
        TermPtr K = open_kernel(g, {{x, A}}, Y, C, 2);
        TermPtr L = open_kernel(g, {{y, B}}, Y, C, 2);
        return kernel_eq(b::kmatch_sum(b::inr(V, S), x, K, y, L), substitute(L, y, V), C);
    });

    add("if-true-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        TermPtr K = g.kernel(Y, C, 2), L = g.kernel(Y, C, 2);
        return kernel_eq(b::kmatch_bool(b::bool_lit(true), K, L), K, C);
    });

    add("if-false-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        TermPtr K = g.kernel(Y, C, 2), L = g.kernel(Y, C, 2);
        return kernel_eq(b::kmatch_bool(b::bool_lit(false), K, L), L, C);
    });

    add("try-return-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr R = open_kernel(g, {{x, A}}, Y, C, 2);
        Handlers H = kernel_handlers(g, {}, Y, C, 2);
        return kernel_eq(b::ktry(b::kreturn(V), x, R, H), substitute(R, x, V), C);
    });

    add("try-raise-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string e = pick_name(g, g.tables.exceptions);
        std::string x = g.fresh_name();
        TermPtr R = g.kernel(Y, C, 2);
        Handlers H = kernel_handlers(g, {e}, Y, C, 2);
        return kernel_eq(b::ktry(b::kraise(e), x, R, H), H.at(e), C);
    });

    add("try-kill-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string s = pick_name(g, g.tables.signals);
        std::string x = g.fresh_name();
        TermPtr R = g.kernel(Y, C, 2);
        Handlers H = kernel_handlers(g, {}, Y, C, 2);
        return kernel_eq(b::ktry(b::kkill(s), x, R, H), b::kkill(s), C);
    });

    add("try-op-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        TermPtr V = g.value(vt_ground(sig.param), 2);
        std::string bn = g.fresh_name(), y = g.fresh_name();
        TermPtr K = open_kernel(g, {{bn, vt_ground(sig.result)}}, A, C, 2);
        Handlers Ke = op_kernel_handlers(g, sig, A, C, 2);
        TermPtr R = open_kernel(g, {{y, A}}, Y, C, 2);
        Handlers H = kernel_handlers(g, {}, Y, C, 2);
        Handlers pushed;
        for (const auto& [e, body] : Ke) pushed.emplace(e, b::ktry(body, y, R, H));
        return kernel_eq(b::ktry(b::kop(op, V, bn, K, Ke), y, R, H),
                         b::kop(op, V, bn, b::ktry(K, y, R, H), pushed), C);
    });

    add("try-getenv-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string c = g.fresh_name(), y = g.fresh_name();
        TermPtr K = open_kernel(g, {{c, vt_ground(C)}}, A, C, 2);
        TermPtr R = open_kernel(g, {{y, A}}, Y, C, 2);
        Handlers H = kernel_handlers(g, {}, Y, C, 2);
        return kernel_eq(b::ktry(b::kgetenv(c, K), y, R, H),
                         b::kgetenv(c, b::ktry(K, y, R, H)), C);
    });

    add("try-setenv-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string y = g.fresh_name();
        TermPtr V = g.value(vt_ground(C), 2);
        TermPtr K = g.kernel(A, C, 2);
        TermPtr R = open_kernel(g, {{y, A}}, Y, C, 2);
        Handlers H = kernel_handlers(g, {}, Y, C, 2);
        return kernel_eq(b::ktry(b::ksetenv(V, K), y, R, H),
                         b::ksetenv(V, b::ktry(K, y, R, H)), C);
    });

    // --- kernel state laws ---------------------------------------------------

    add("getenv-getenv", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string c = g.fresh_name(), c2 = g.fresh_name();
        TermPtr K = open_kernel(g, {{c2, vt_ground(C)}}, Y, C, 2);
        return kernel_eq(b::kgetenv(c, b::kgetenv(c2, K)),
                         b::kgetenv(c, substitute(K, c2, b::var(c))), C);
    });

    add("setenv-getenv", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string c = g.fresh_name();
        TermPtr V = g.value(vt_ground(C), 2);
        TermPtr K = open_kernel(g, {{c, vt_ground(C)}}, Y, C, 2);
        return kernel_eq(b::ksetenv(V, b::kgetenv(c, K)),
                         b::ksetenv(V, substitute(K, c, V)), C);
    });

    add("setenv-setenv", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        TermPtr V = g.value(vt_ground(C), 2);
        TermPtr W = g.value(vt_ground(C), 2);
        TermPtr K = g.kernel(Y, C, 2);
        return kernel_eq(b::ksetenv(V, b::ksetenv(W, K)), b::ksetenv(W, K), C);
    });

    add("getenv-setenv-noop", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string c = g.fresh_name();
        TermPtr K = g.kernel(Y, C, 2);
        return kernel_eq(b::kgetenv(c, b::ksetenv(b::var(c), K)), K, C);
    });

    add("setenv-kill", [](Gen& g) {
        GroundPtr C = g.ground(1);
        std::string s = pick_name(g, g.tables.signals);
        TermPtr V = g.value(vt_ground(C), 2);
        return kernel_eq(b::ksetenv(V, b::kkill(s)), b::kkill(s), C);
    });

    add("getenv-unused", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string c = g.fresh_name();
        TermPtr K = g.kernel(Y, C, 2);
        return kernel_eq(b::kgetenv(c, K), K, C);
    });

    // --- switching to user mode inside the kernel ----------------------------

    add("user-block-return", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(A, 2);
        TermPtr K = open_kernel(g, {{x, A}}, Y, C, 2);
        Handlers H = kernel_handlers(g, g.tables.exceptions, Y, C, 2);
        return kernel_eq(b::kuser(b::ureturn(V), x, K, H), substitute(K, x, V), C);
    });

    add("user-block-raise", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string e = pick_name(g, g.tables.exceptions);
        std::string x = g.fresh_name();
        TermPtr K = g.kernel(Y, C, 2);
        Handlers H = kernel_handlers(g, g.tables.exceptions, Y, C, 2);
        return kernel_eq(b::kuser(b::uraise(e), x, K, H), H.at(e), C);
    });

    add("user-block-op", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr A = g.ground_type(1), Y = g.ground_type(1);
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        TermPtr V = g.value(vt_ground(sig.param), 2);
        std::string bn = g.fresh_name(), x = g.fresh_name();
        TermPtr M = open_user(g, {{bn, vt_ground(sig.result)}}, A, 2);
        Handlers Me = op_user_handlers(g, sig, A, 2);
        TermPtr K = open_kernel(g, {{x, A}}, Y, C, 2);
        Handlers H = kernel_handlers(g, g.tables.exceptions, Y, C, 2);
        Handlers pushed;
        for (const auto& [e, body] : Me) pushed.emplace(e, b::kuser(body, x, K, H));
        return kernel_eq(b::kuser(b::uop(op, V, bn, M, Me), x, K, H),
                         b::kop(op, V, bn, b::kuser(M, x, K, H), pushed), C);
    });

    // --- eta laws ------------------------------------------------------------

    add("try-eta", [](Gen& g) {
        ValueTypePtr X = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr M = g.user(X, 2);
        Handlers H;
        for (const auto& e : g.tables.exceptions) H.emplace(e, b::uraise(e));
        return user_eq(b::utry(M, x, b::ureturn(b::var(x)), H), M);
    });

    add("try-eta-kernel", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr K = g.kernel(Y, C, 2);
        Handlers H;
        for (const auto& e : g.tables.exceptions) H.emplace(e, b::kraise(e));
        return kernel_eq(b::ktry(K, x, b::kreturn(b::var(x)), H), K, C);
    });

    add("fun-eta", [](Gen& g) {
        ValueTypePtr A = g.ground_type(0), X = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(vt_user_fun(A, ut_make(X)), 2);
        return user_eq(b::ureturn(b::fun(x, A, b::uapply(V, b::var(x)))), b::ureturn(V));
    });

    add("funk-eta", [](Gen& g) {
        GroundPtr C = g.ground(0);
        ValueTypePtr A = g.ground_type(0), X = g.ground_type(1);
        std::string x = g.fresh_name();
        TermPtr V = g.value(vt_kernel_fun(A, kt_make(X, {}, {}, {}, C)), 2);
        return user_eq(b::ureturn(b::funk(x, A, C, b::kapply(V, b::var(x)))), b::ureturn(V));
    });

    add("pair-eta", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), X = g.ground_type(1);
        std::string x = g.fresh_name(), y = g.fresh_name(), z = g.fresh_name();
        TermPtr V = g.value(vt_prod(A, B), 2);
        TermPtr M = open_user(g, {{z, vt_prod(A, B)}}, X, 2);
        return user_eq(
            b::umatch_pair(V, x, y, substitute(M, z, b::pair(b::var(x), b::var(y)))),
            substitute(M, z, V));
    });

    add("sum-eta", [](Gen& g) {
        ValueTypePtr A = g.ground_type(1), B = g.ground_type(1), X = g.ground_type(1);
        ValueTypePtr S = vt_sum(A, B);
        std::string x = g.fresh_name(), y = g.fresh_name(), z = g.fresh_name();
        TermPtr V = g.value(S, 2);
        TermPtr M = open_user(g, {{z, S}}, X, 2);
        return user_eq(b::umatch_sum(V, x, substitute(M, z, b::inl(b::var(x), S)), y,
                                     substitute(M, z, b::inr(b::var(y), S))),
                       substitute(M, z, V));
    });

    // --- state commutes with operation calls ---------------------------------

    add("getenv-op-commute", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        TermPtr V = g.value(vt_ground(sig.param), 2);
        std::string c = g.fresh_name(), bn = g.fresh_name();
        TermPtr K = open_kernel(g, {{c, vt_ground(C)}, {bn, vt_ground(sig.result)}}, Y, C, 2);
        Handlers Ke;
        for (const auto& e : sig.excs)
            Ke.emplace(e, open_kernel(g, {{c, vt_ground(C)}}, Y, C, 2));
        Handlers pushed;
        for (const auto& [e, body] : Ke) pushed.emplace(e, b::kgetenv(c, body));
        return kernel_eq(b::kgetenv(c, b::kop(op, V, bn, K, Ke)),
                         b::kop(op, V, bn, b::kgetenv(c, K), pushed), C);
    });

    add("setenv-op-commute", [](Gen& g) {
        GroundPtr C = g.ground(1);
        ValueTypePtr Y = g.ground_type(1);
        std::string op = pick_op(g);
        const OpSig& sig = g.tables.operations.at(op);
        TermPtr V = g.value(vt_ground(C), 2);
        TermPtr W = g.value(vt_ground(sig.param), 2);
        std::string bn = g.fresh_name();
        TermPtr K = open_kernel(g, {{bn, vt_ground(sig.result)}}, Y, C, 2);
        Handlers Ke = op_kernel_handlers(g, sig, Y, C, 2);
        Handlers pushed;
        for (const auto& [e, body] : Ke) pushed.emplace(e, b::ksetenv(V, body));
        return kernel_eq(b::ksetenv(V, b::kop(op, W, bn, K, Ke)),
                         b::kop(op, W, bn, b::ksetenv(V, K), pushed), C);
    });

    return out;
}

// ---------------------------------------------------------------------------
// Mutations: deliberately wrong equations with pinned distinguishing
// instances. Every one of these must fail.

std::vector<Schema> make_mutation_schemas() {
    std::vector<Schema> out;
    auto add = [&](const char* id, std::function<EqInstance(Gen&)> make) {
        out.push_back({id, std::move(make)});
    };
    GroundPtr CI = ground_int();

    add("mut-setenv-overwrite-dropped", [CI](Gen& g) {
        std::string c = g.fresh_name();
        TermPtr K = b::kgetenv(c, b::kreturn(b::var(c)));
        return kernel_eq(b::ksetenv(b::int_lit(0), b::ksetenv(b::int_lit(1), K)),
                         b::ksetenv(b::int_lit(0), K), CI);
    });

    add("mut-if-branches-swapped", [](Gen&) {
        return user_eq(
            b::umatch_bool(b::bool_lit(true), b::ureturn(b::int_lit(0)), b::ureturn(b::int_lit(1))),
            b::ureturn(b::int_lit(1)));
    });

    add("mut-try-return-wrong-value", [](Gen& g) {
        std::string x = g.fresh_name();
        return user_eq(b::utry(b::ureturn(b::int_lit(0)), x, b::ureturn(b::var(x)), {}),
                       b::ureturn(b::int_lit(1)));
    });

    add("mut-pair-components-swapped", [](Gen& g) {
        std::string x = g.fresh_name(), y = g.fresh_name();
        return user_eq(b::umatch_pair(b::pair(b::int_lit(0), b::int_lit(1)), x, y,
                                      b::ureturn(b::var(x))),
                       b::ureturn(b::int_lit(1)));
    });

    add("mut-finaliser-skipped", [CI](Gen& g) {
        std::string x = g.fresh_name(), c = g.fresh_name();
        FinallyPtr F =
            make_finally(x, c, b::ureturn(b::pair(b::var(x), b::var(c))), {}, {});
        TermPtr R = b::runner({}, CI);
        return user_eq(b::urun(R, b::int_lit(1), b::ureturn(b::int_lit(0)), F),
                       b::ureturn(b::int_lit(0)));
    });

    add("mut-setenv-lost-before-op", [CI](Gen& g) {
        std::string bn = g.fresh_name(), c = g.fresh_name();
        TermPtr body = b::kop("op0", b::unit(), bn, b::kgetenv(c, b::kreturn(b::var(c))), {});
        return kernel_eq(b::ksetenv(b::int_lit(1), body), body, CI);
    });

    add("mut-getenv-commutes-past-setenv", [CI](Gen& g) {
        std::string c = g.fresh_name();
        return kernel_eq(b::ksetenv(b::int_lit(1), b::kgetenv(c, b::kreturn(b::var(c)))),
                         b::kgetenv(c, b::ksetenv(b::int_lit(1), b::kreturn(b::var(c)))), CI);
    });

    add("mut-kill-behaves-like-raise", [CI](Gen&) {
        return kernel_eq(b::kkill("S1"), b::kraise("E1"), CI);
    });

    add("mut-op-exception-clause-ignored", [](Gen& g) {
        std::string bn = g.fresh_name();
        auto call = [&](long long v) {
            return b::uop("op1", b::int_lit(0), bn, b::ureturn(b::var(bn)),
                          {{"E1", b::ureturn(b::int_lit(v))}});
        };
        return user_eq(call(3), call(2));
    });

    add("mut-run-state-not-threaded", [](Gen& g) {
        GroundPtr CB = ground_bool();
        std::string x = g.fresh_name(), c = g.fresh_name();
        std::string px = g.fresh_name(), pc = g.fresh_name(), bn = g.fresh_name();
        // Co-operation returns the old state, then flips it to true.
        TermPtr coop = b::kgetenv(pc, b::ksetenv(b::bool_lit(true), b::kreturn(b::var(pc))));
        TermPtr R = b::runner({{"op0", CoopClause{px, coop}}}, CB);
        FinallyPtr F = make_finally(x, c, b::ureturn(b::pair(b::var(x), b::var(c))), {}, {});
        TermPtr body = b::uop("op0", b::unit(), bn, b::ureturn(b::var(bn)), {});
        return user_eq(b::urun(R, b::bool_lit(false), body, F),
                       b::ureturn(b::pair(b::bool_lit(false), b::bool_lit(false))));
    });

    add("mut-op-result-negated", [](Gen& g) {
        std::string bn = g.fresh_name();
        TermPtr flipped = b::umatch_bool(b::var(bn), b::ureturn(b::bool_lit(false)),
                                         b::ureturn(b::bool_lit(true)));
        return user_eq(b::uop("op0", b::unit(), bn, b::ureturn(b::var(bn)), {}),
                       b::uop("op0", b::unit(), bn, flipped, {}));
    });

    add("mut-try-eta-reroutes-exceptions", [](Gen& g) {
        std::string x = g.fresh_name();
        Handlers H{{"E1", b::uraise("E2")}, {"E2", b::uraise("E2")}};
        return user_eq(b::utry(b::uraise("E1"), x, b::ureturn(b::var(x)), H),
                       b::uraise("E1"));
    });

    return out;
}

// ---------------------------------------------------------------------------
// Checking one instance.

bool is_leaf(const TreePtr& t) { return t->tag != Tree::Tag::Op; }

// Does the evaluator outcome match a leaf user tree?
bool outcome_matches(const Outcome& o, const TreePtr& t) {
    switch (t->tag) {
    case Tree::Tag::Ret: {
        if (o.tag != Outcome::Tag::Return) return false;
        try {
            return rt_equal(sem_to_rt(t->value), o.value);
        } catch (const OracleError&) {
            return true;   // function payload: tags agreeing is all we can ask
        }
    }
    case Tree::Tag::Exc: return o.tag == Outcome::Tag::Raise && o.name == t->name;
    case Tree::Tag::Sig: return o.tag == Outcome::Tag::Kill && o.name == t->name;
    default: return false;
    }
}

std::string eval_cross_check_user(const EffectTables& tables, const TermPtr& lt,
                                  const TermPtr& rt, const TreePtr& ta, const TreePtr& tb) {
    Evaluator ea(tables), eb(tables);
    auto pure = make_pure_container();
    Outcome oa = run_toplevel(*pure, ea, ea.eval_user(nullptr, lt));
    Outcome ob = run_toplevel(*pure, eb, eb.eval_user(nullptr, rt));
    if (!outcome_matches(oa, ta))
        return "evaluator disagrees with lhs denotation: " + show_outcome(oa) + " vs " +
               show_tree(ta);
    if (!outcome_matches(ob, tb))
        return "evaluator disagrees with rhs denotation: " + show_outcome(ob) + " vs " +
               show_tree(tb);
    return "";
}

// Does a kernel step match a leaf kernel tree?
bool kstep_matches(const KernelStep& k, const TreePtr& t) {
    switch (t->tag) {
    case Tree::Tag::KRet: {
        if (k.tag != KernelStep::Tag::Return) return false;
        if (!rt_equal(sem_to_rt(t->state), k.state)) return false;
        try {
            return rt_equal(sem_to_rt(t->value), k.value);
        } catch (const OracleError&) {
            return true;
        }
    }
    case Tree::Tag::KExc:
        return k.tag == KernelStep::Tag::Raise && k.name == t->name &&
               rt_equal(sem_to_rt(t->state), k.state);
    case Tree::Tag::Sig: return k.tag == KernelStep::Tag::Kill && k.name == t->name;
    default: return false;
    }
}

std::string eval_cross_check_kernel(const EffectTables& tables, const TermPtr& lt,
                                    const TermPtr& rt, const SemPtr& state, const TreePtr& ta,
                                    const TreePtr& tb) {
    Evaluator ea(tables), eb(tables);
    RtPtr rs = sem_to_rt(state);
    KernelStep ka = ea.eval_kernel(nullptr, lt, rs);
    KernelStep kb = eb.eval_kernel(nullptr, rt, rs);
    if (!kstep_matches(ka, ta))
        return "evaluator disagrees with lhs denotation at state " + show_sem(state);
    if (!kstep_matches(kb, tb))
        return "evaluator disagrees with rhs denotation at state " + show_sem(state);
    return "";
}

} // namespace

const std::vector<Schema>& equation_schemas() {
    static const std::vector<Schema> schemas = make_equation_schemas();
    return schemas;
}

const std::vector<Schema>& mutation_schemas() {
    static const std::vector<Schema> schemas = make_mutation_schemas();
    return schemas;
}

CheckOutcome check_instance(const EffectTables& tables, const EqInstance& inst,
                            long long int_bound, long long node_budget) {
    TermPtr lt, rt;
    Checker chk(tables);
    try {
        if (inst.sort == Sort::User) {
            lt = chk.synth_user({}, inst.lhs).first;
            rt = chk.synth_user({}, inst.rhs).first;
        } else {
            lt = chk.synth_kernel({}, inst.lhs, inst.state_ty).first;
            rt = chk.synth_kernel({}, inst.rhs, inst.state_ty).first;
        }
    } catch (const Diagnostic& d) {
        return {false, true, d.what()};
    }
    try {
        TreeCtx ctx(tables);
        ctx.int_bound = int_bound;
        ctx.node_budget = node_budget;
        Denoter den(ctx);
        if (inst.sort == Sort::User) {
            TreePtr ta = den.denote_user({}, lt);
            TreePtr tb = den.denote_user({}, rt);
            if (!tree_equal(ctx, ta, tb))
                return {false, false,
                        "trees differ: " + show_tree(ta) + "  vs  " + show_tree(tb)};
            if (is_leaf(ta) && is_leaf(tb)) {
                std::string err = eval_cross_check_user(tables, lt, rt, ta, tb);
                if (!err.empty()) return {false, false, err};
            }
        } else {
            for (const SemPtr& s : enumerate(ctx, inst.state_ty)) {
                TreePtr ta = den.denote_kernel({}, lt, s);
                TreePtr tb = den.denote_kernel({}, rt, s);
                if (!tree_equal(ctx, ta, tb))
                    return {false, false,
                            "at state " + show_sem(s) + ": " + show_tree(ta) + "  vs  " +
                                show_tree(tb)};
                if (is_leaf(ta) && is_leaf(tb)) {
                    std::string err = eval_cross_check_kernel(tables, lt, rt, s, ta, tb);
                    if (!err.empty()) return {false, false, err};
                }
            }
        }
        return {true, false, ""};
    } catch (const OracleError& e) {
        return {false, false, std::string("oracle: ") + e.what()};
    } catch (const std::exception& e) {
        return {false, false, std::string("exception: ") + e.what()};
    }
}

namespace {

SchemaResult run_schema(const Schema& s, const EffectTables& tables, const SuiteConfig& cfg,
                        uint64_t seed, int cases) {
    SchemaResult r;
    r.id = s.id;
    GenConfig gc;
    gc.int_bound = cfg.int_bound;
    Gen g(seed, tables, gc);
    const int max_attempts = 50;
    for (int i = 0; i < cases; ++i) {
        CheckOutcome out;
        bool made = false;
        for (int a = 0; a < max_attempts && !made; ++a) {
            EqInstance inst = s.make(g);
            out = check_instance(tables, inst, cfg.int_bound, cfg.node_budget);
            if (out.rejected) {
                ++r.rejected;
                continue;
            }
            made = true;
        }
        if (!made) {
            ++r.failures;
            if (r.first_failure.empty())
                r.first_failure = "no well-typed instance in 50 attempts (" + out.detail + ")";
            continue;
        }
        ++r.cases;
        if (!out.ok) {
            ++r.failures;
            if (r.first_failure.empty()) r.first_failure = out.detail;
        }
    }
    return r;
}

} // namespace

bool SuiteResult::ok() const {
    if (schemas.empty()) return false;
    for (const auto& r : schemas)
        if (r.cases == 0 || r.failures != 0) return false;
    for (const auto& r : mutations)
        if (r.failures == 0) return false;
    return true;
}

SuiteResult run_equation_suite(const SuiteConfig& cfg) {
    EffectTables tables = oracle_tables();
    SuiteResult res;
    uint64_t idx = 0;
    for (const Schema& s : equation_schemas()) {
        ++idx;
        if (!cfg.only_schema.empty() && s.id != cfg.only_schema) continue;
        res.schemas.push_back(run_schema(s, tables, cfg, cfg.seed * 1000003u + idx, cfg.cases));
    }
    for (const Schema& s : mutation_schemas()) {
        ++idx;
        if (!cfg.only_schema.empty() && s.id != cfg.only_schema) continue;
        res.mutations.push_back(
            run_schema(s, tables, cfg, cfg.seed * 1000003u + idx, cfg.mutation_cases));
    }
    return res;
}

} // namespace coop
