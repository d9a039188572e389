#include "coop/gen.hpp"

namespace coop {

EffectTables oracle_tables() {
    EffectTables t = EffectTables::with_builtins();
    t.declare_exception("E1");
    t.declare_exception("E2");
    t.declare_signal("S1");
    t.declare_signal("S2");
    t.declare_operation("op0", {ground_unit(), ground_bool(), {}});
    t.declare_operation("op1", {ground_int(), ground_int(), {"E1"}});
    t.declare_operation("op2", {ground_bool(), ground_unit(), {"E1", "E2"}});
    return t;
}

Gen::Gen(uint64_t seed, const EffectTables& tables_, GenConfig cfg_)
    : tables(tables_), cfg(cfg_), rng(seed) {}

uint64_t Gen::pick(uint64_t n) {
    if (n == 0) throw InternalError("pick from an empty range");
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(rng);
}

bool Gen::flip(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::string Gen::fresh_name() { return "g" + std::to_string(fresh_++); }

void Gen::scope_push(const std::string& name, const ValueTypePtr& ty) {
    scope_.emplace_back(name, ty);
}

GroundPtr Gen::ground(int depth) {
    if (depth <= 0) {
        switch (pick(3)) {
        case 0: return ground_unit();
        case 1: return ground_bool();
        default: return ground_int();
        }
    }
    switch (pick(5)) {
    case 0: return ground_unit();
    case 1: return ground_bool();
    case 2: return ground_int();
    case 3: return ground_prod(ground(depth - 1), ground(depth - 1));
    default: return ground_sum(ground(depth - 1), ground(depth - 1));
    }
}

ValueTypePtr Gen::ground_type(int depth) { return vt_ground(ground(depth)); }

TermPtr Gen::var_of(const ValueTypePtr& ty) {
    std::vector<const std::string*> hits;
    for (const auto& [name, t] : scope_)
        if (equal(t, ty)) hits.push_back(&name);
    if (hits.empty()) return nullptr;
    return build::var(*hits[pick(hits.size())]);
}

TermPtr Gen::value(const ValueTypePtr& ty, int depth) {
    if (flip(0.4)) {
        if (TermPtr v = var_of(ty)) return v;
    }
    switch (ty->tag) {
    case ValueType::Tag::Ground: {
        const GroundPtr& g = ty->ground;
        switch (g->tag) {
        case Ground::Tag::Unit: return build::unit();
        case Ground::Tag::Base:
            if (g->base == "int") return build::int_lit(static_cast<long long>(pick(
                static_cast<uint64_t>(cfg.int_bound))));
            if (g->base == "bool") return build::bool_lit(flip());
            if (g->base == "str") {
                static const char* words[] = {"a", "b", "ab"};
                return build::str_lit(words[pick(3)]);
            }
            throw InternalError("unknown base type '" + g->base + "'");
        default: throw InternalError("cannot generate a value of an uninhabited ground type");
        }
    }
    case ValueType::Tag::Prod:
        return build::pair(value(ty->v0, depth - 1), value(ty->v1, depth - 1));
    case ValueType::Tag::Sum:
        if (flip()) return build::inl(value(ty->v0, depth - 1), ty);
        return build::inr(value(ty->v1, depth - 1), ty);
    case ValueType::Tag::UserFun: {
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, ty->v0);
        TermPtr body = user_at(ty->uresult->carrier, depth - 1, !cfg.pure);
        scope_reset(mark);
        return build::fun(x, ty->v0, body);
    }
    case ValueType::Tag::KernelFun: {
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, ty->v0);
        TermPtr body = kernel_at(ty->kresult->carrier, ty->kresult->state, depth - 1, !cfg.pure,
                                 tables.exceptions, tables.signals);
        scope_reset(mark);
        return build::funk(x, ty->v0, ty->kresult->state, body);
    }
    case ValueType::Tag::Runner: return runner_at(ty->state, depth, !cfg.pure);
    case ValueType::Tag::Bottom: break;
    }
    throw InternalError("cannot generate a value of this type");
}

TermPtr Gen::user(const ValueTypePtr& carrier, int depth) {
    return user_at(carrier, depth, !cfg.pure);
}

TermPtr Gen::kernel(const ValueTypePtr& carrier, const GroundPtr& state, int depth) {
    return kernel_at(carrier, state, depth, !cfg.pure, tables.exceptions, tables.signals);
}

TermPtr Gen::runner_lit(const GroundPtr& state, int depth) {
    return runner_at(state, depth, !cfg.pure);
}

FinallyPtr Gen::fin_clauses(int depth) { return fin_at(depth, !cfg.pure); }

TermPtr Gen::program(int depth) { return user_at(ground_type(), depth, !cfg.pure); }

// `ops_ok` is false when an operation call here would escape past every
// enclosing run straight to the container (pure mode forbids that).
TermPtr Gen::user_at(const ValueTypePtr& carrier, int depth, bool ops_ok) {
    std::vector<int> cases{0};             // 0: return
    if (depth > 0) {
        cases.insert(cases.end(), {1, 1, 2, 3, 4, 5, 7});
        if (ops_ok) cases.insert(cases.end(), {6, 6});
        if (depth >= 2) cases.insert(cases.end(), {8, 9});
    }
    switch (cases[pick(cases.size())]) {
    case 0: return build::ureturn(value(carrier, depth));
    case 1: { // let
        ValueTypePtr y = ground_type();
        TermPtr m = user_at(y, depth - 1, ops_ok);
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, y);
        TermPtr body = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        return build::ulet(x, m, body);
    }
    case 2: { // try
        TermPtr m = user_at(carrier, depth - 1, ops_ok);
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, carrier);
        TermPtr ret = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        std::map<std::string, TermPtr> handlers;
        for (const auto& e : tables.exceptions)
            if (flip()) handlers[e] = user_at(carrier, depth - 1, ops_ok);
        return build::utry(m, x, ret, std::move(handlers));
    }
    case 3: { // if
        TermPtr v = value(vt_bool(), depth - 1);
        return build::umatch_bool(v, user_at(carrier, depth - 1, ops_ok),
                          user_at(carrier, depth - 1, ops_ok));
    }
    case 4: { // match pair
        ValueTypePtr a = ground_type(0), b = ground_type(0);
        TermPtr v = value(vt_prod(a, b), depth - 1);
        std::string x = fresh_name(), y = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, a);
        scope_push(y, b);
        TermPtr body = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        return build::umatch_pair(v, x, y, body);
    }
    case 5: { // match sum
        ValueTypePtr a = ground_type(0), b = ground_type(0);
        TermPtr v = value(vt_sum(a, b), depth - 1);
        std::string x = fresh_name(), y = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, a);
        TermPtr left = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        scope_push(y, b);
        TermPtr right = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        return build::umatch_sum(v, x, left, y, right);
    }
    case 6: { // op call, handlers total over the op's exceptions
        auto it = tables.operations.begin();
        std::advance(it, pick(tables.operations.size()));
        const std::string& op = it->first;
        const OpSig& sig = it->second;
        TermPtr arg = value(vt_ground(sig.param), depth - 1);
        std::string b = fresh_name();
        size_t mark = scope_mark();
        scope_push(b, vt_ground(sig.result));
        TermPtr succ = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        std::map<std::string, TermPtr> handlers;
        for (const auto& e : sig.excs) handlers[e] = user_at(carrier, depth - 1, ops_ok);
        return build::uop(op, arg, b, succ, std::move(handlers));
    }
    case 7: { // raise
        auto it = tables.exceptions.begin();
        std::advance(it, pick(tables.exceptions.size()));
        return build::uraise(*it);
    }
    case 8: { // apply an inline function
        ValueTypePtr a = ground_type();
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, a);
        TermPtr body = user_at(carrier, depth - 1, ops_ok);
        scope_reset(mark);
        return build::uapply(build::fun(x, a, body), value(a, depth - 1));
    }
    default: { // run or kernel block; body effects are finalised in full
        GroundPtr c = ground(1);
        TermPtr w = value(vt_ground(c), depth - 1);
        ValueTypePtr y = ground_type();
        FinallyPtr fin;
        {
            std::string rv = fresh_name(), rc = fresh_name();
            size_t mark = scope_mark();
            scope_push(rv, y);
            scope_push(rc, vt_ground(c));
            TermPtr ret_body = user_at(carrier, depth - 1, ops_ok);
            scope_reset(mark);
            std::map<std::string, RaiseClause> on_raise;
            for (const auto& e : tables.exceptions) {
                std::string sv = fresh_name();
                scope_push(sv, vt_ground(c));
                on_raise[e] = {sv, user_at(carrier, depth - 1, ops_ok)};
                scope_reset(mark);
            }
            std::map<std::string, TermPtr> on_kill;
            for (const auto& s : tables.signals)
                on_kill[s] = user_at(carrier, depth - 1, ops_ok);
            fin = make_finally(rv, rc, ret_body, std::move(on_raise), std::move(on_kill));
        }
        if (flip()) {
            TermPtr r = runner_at(c, depth - 1, ops_ok);
            TermPtr body = user_at(y, depth - 1, /*ops_ok=*/true);
            return build::urun(r, w, body, fin);
        }
        TermPtr k = kernel_at(y, c, depth - 1, ops_ok, tables.exceptions, tables.signals);
        return build::ukernel(k, w, fin);
    }
    }
}

TermPtr Gen::kernel_at(const ValueTypePtr& carrier, const GroundPtr& state, int depth,
                       bool ops_ok, const NameSet& excs_ok, const NameSet& sigs_ok) {
    std::vector<int> cases{0};
    if (!excs_ok.empty()) cases.push_back(1);
    if (!sigs_ok.empty()) cases.push_back(2);
    if (depth > 0) {
        cases.insert(cases.end(), {3, 4, 5, 6, 7, 8, 9, 10});
        if (ops_ok) cases.insert(cases.end(), {11, 11});
        if (depth >= 2) cases.push_back(12);
    }
    switch (cases[pick(cases.size())]) {
    case 0: return build::kreturn(value(carrier, depth));
    case 1: {
        auto it = excs_ok.begin();
        std::advance(it, pick(excs_ok.size()));
        return build::kraise(*it);
    }
    case 2: {
        auto it = sigs_ok.begin();
        std::advance(it, pick(sigs_ok.size()));
        return build::kkill(*it);
    }
    case 3: { // let
        ValueTypePtr y = ground_type();
        TermPtr m = kernel_at(y, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, y);
        TermPtr body = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        return build::klet(x, m, body);
    }
    case 4: { // try
        TermPtr m = kernel_at(carrier, state, depth - 1, ops_ok, tables.exceptions, sigs_ok);
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, carrier);
        TermPtr ret = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        std::map<std::string, TermPtr> handlers;
        for (const auto& e : tables.exceptions)
            handlers[e] = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        return build::ktry(m, x, ret, std::move(handlers));
    }
    case 5: { // if
        TermPtr v = value(vt_bool(), depth - 1);
        return build::kmatch_bool(v, kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok),
                          kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok));
    }
    case 6: { // match pair
        ValueTypePtr a = ground_type(0), b = ground_type(0);
        TermPtr v = value(vt_prod(a, b), depth - 1);
        std::string x = fresh_name(), y = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, a);
        scope_push(y, b);
        TermPtr body = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        return build::kmatch_pair(v, x, y, body);
    }
    case 7: { // match sum
        ValueTypePtr a = ground_type(0), b = ground_type(0);
        TermPtr v = value(vt_sum(a, b), depth - 1);
        std::string x = fresh_name(), y = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, a);
        TermPtr left = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        scope_push(y, b);
        TermPtr right = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        return build::kmatch_sum(v, x, left, y, right);
    }
    case 8: { // getenv
        std::string c = fresh_name();
        size_t mark = scope_mark();
        scope_push(c, vt_ground(state));
        TermPtr body = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        return build::kgetenv(c, body);
    }
    case 9: { // setenv
        TermPtr v = value(vt_ground(state), depth - 1);
        return build::ksetenv(v, kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok));
    }
    case 10: { // user block; its exceptions are handled in full
        ValueTypePtr y = ground_type();
        TermPtr m = user_at(y, depth - 1, ops_ok);
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, y);
        TermPtr ret = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        std::map<std::string, TermPtr> handlers;
        for (const auto& e : tables.exceptions)
            handlers[e] = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        return build::kuser(m, x, ret, std::move(handlers));
    }
    case 11: { // op call
        auto it = tables.operations.begin();
        std::advance(it, pick(tables.operations.size()));
        const std::string& op = it->first;
        const OpSig& sig = it->second;
        TermPtr arg = value(vt_ground(sig.param), depth - 1);
        std::string b = fresh_name();
        size_t mark = scope_mark();
        scope_push(b, vt_ground(sig.result));
        TermPtr succ = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        std::map<std::string, TermPtr> handlers;
        for (const auto& e : sig.excs)
            handlers[e] = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        return build::kop(op, arg, b, succ, std::move(handlers));
    }
    default: { // apply an inline kernel function
        ValueTypePtr a = ground_type();
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, a);
        TermPtr body = kernel_at(carrier, state, depth - 1, ops_ok, excs_ok, sigs_ok);
        scope_reset(mark);
        return build::kapply(build::funk(x, a, state, body), value(a, depth - 1));
    }
    }
}

TermPtr Gen::runner_at(const GroundPtr& state, int depth, bool ops_ok) {
    std::map<std::string, CoopClause> coops;
    for (const auto& [op, sig] : tables.operations) {
        std::string x = fresh_name();
        size_t mark = scope_mark();
        scope_push(x, vt_ground(sig.param));
        TermPtr body = kernel_at(vt_ground(sig.result), state, depth > 0 ? depth - 1 : 0, ops_ok,
                                 sig.excs, tables.signals);
        scope_reset(mark);
        coops[op] = {x, body};
    }
    return build::runner(std::move(coops), state);
}

FinallyPtr Gen::fin_at(int depth, bool ops_ok) {
    // Free-standing variant used by schemas: return and state binders of
    // ground types chosen here, every exception and signal covered.
    ValueTypePtr y = ground_type(0);
    GroundPtr c = ground(0);
    ValueTypePtr carrier = ground_type();
    std::string rv = fresh_name(), rc = fresh_name();
    size_t mark = scope_mark();
    scope_push(rv, y);
    scope_push(rc, vt_ground(c));
    TermPtr ret_body = user_at(carrier, depth, ops_ok);
    scope_reset(mark);
    std::map<std::string, RaiseClause> on_raise;
    for (const auto& e : tables.exceptions) {
        std::string sv = fresh_name();
        scope_push(sv, vt_ground(c));
        on_raise[e] = {sv, user_at(carrier, depth, ops_ok)};
        scope_reset(mark);
    }
    std::map<std::string, TermPtr> on_kill;
    for (const auto& s : tables.signals) on_kill[s] = user_at(carrier, depth, ops_ok);
    return make_finally(rv, rc, ret_body, std::move(on_raise), std::move(on_kill));
}

} // namespace coop
