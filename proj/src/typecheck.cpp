#include "coop/typecheck.hpp"

#include <algorithm>
#include <optional>

#include "coop/diag.hpp"
#include "coop/print.hpp"

namespace coop {
namespace {

bool subset(const NameSet& a, const NameSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}
NameSet set_union(const NameSet& a, const NameSet& b) {
    NameSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}
NameSet set_inter(const NameSet& a, const NameSet& b) {
    NameSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(out, out.end()));
    return out;
}
NameSet set_diff(const NameSet& a, const NameSet& b) {
    NameSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

[[noreturn]] void err(SourcePos pos, const char* rule, const std::string& msg) {
    throw Diagnostic(pos, rule, msg);
}

// Ambient kernel states: null means "not yet constrained".
GroundPtr state_join(const GroundPtr& a, const GroundPtr& b, SourcePos pos) {
    if (!a) return b;
    if (!b) return a;
    if (equal(a, b)) return a;
    err(pos, "TyKernel-State", "kernel state mismatch: " + show(a) + " vs " + show(b));
}

} // namespace

// ------------------------------------------------------------------ subtyping

bool subtype(const ValueTypePtr& a, const ValueTypePtr& b) {
    if (a->tag == ValueType::Tag::Bottom) return true;
    if (a->tag != b->tag) return false;
    switch (a->tag) {
        case ValueType::Tag::Ground: return equal(a->ground, b->ground);
        case ValueType::Tag::Prod:
        case ValueType::Tag::Sum: return subtype(a->v0, b->v0) && subtype(a->v1, b->v1);
        case ValueType::Tag::UserFun:
            return subtype(b->v0, a->v0) && subtype(a->uresult, b->uresult);
        case ValueType::Tag::KernelFun:
            return subtype(b->v0, a->v0) && subtype(a->kresult, b->kresult);
        case ValueType::Tag::Runner:
            return subset(b->handled, a->handled) && subset(a->external, b->external) &&
                   subset(a->sigs, b->sigs) && equal(a->state, b->state);
        case ValueType::Tag::Bottom: return true;
    }
    return false;
}

bool subtype(const UserTypePtr& a, const UserTypePtr& b) {
    return subtype(a->carrier, b->carrier) && subset(a->ops, b->ops) &&
           subset(a->excs, b->excs);
}

bool subtype(const KernelTypePtr& a, const KernelTypePtr& b) {
    bool state_ok = !a->state || !b->state || equal(a->state, b->state);
    return subtype(a->carrier, b->carrier) && subset(a->ops, b->ops) &&
           subset(a->excs, b->excs) && subset(a->sigs, b->sigs) && state_ok;
}

// ------------------------------------------------------------------ joins

ValueTypePtr join_value(const ValueTypePtr& a, const ValueTypePtr& b, SourcePos pos) {
    if (a->tag == ValueType::Tag::Bottom) return b;
    if (b->tag == ValueType::Tag::Bottom) return a;
    if (a->tag == b->tag) {
        switch (a->tag) {
            case ValueType::Tag::Ground:
                if (equal(a->ground, b->ground)) return a;
                break;
            case ValueType::Tag::Prod:
                return vt_prod(join_value(a->v0, b->v0, pos), join_value(a->v1, b->v1, pos));
            case ValueType::Tag::Sum:
                return vt_sum(join_value(a->v0, b->v0, pos), join_value(a->v1, b->v1, pos));
            case ValueType::Tag::UserFun:
                if (equal(a->v0, b->v0))
                    return vt_user_fun(a->v0, join_user(a->uresult, b->uresult, pos));
                break;
            case ValueType::Tag::KernelFun:
                if (equal(a->v0, b->v0))
                    return vt_kernel_fun(a->v0, join_kernel(a->kresult, b->kresult, pos));
                break;
            case ValueType::Tag::Runner:
                if (equal(a->state, b->state))
                    return vt_runner(set_inter(a->handled, b->handled),
                                     set_union(a->external, b->external),
                                     set_union(a->sigs, b->sigs), a->state);
                break;
            case ValueType::Tag::Bottom: return a;
        }
    }
    err(pos, "Sub-Value", "incompatible types " + show(a) + " and " + show(b));
}

UserTypePtr join_user(const UserTypePtr& a, const UserTypePtr& b, SourcePos pos) {
    return ut_make(join_value(a->carrier, b->carrier, pos), set_union(a->ops, b->ops),
                   set_union(a->excs, b->excs));
}

KernelTypePtr join_kernel(const KernelTypePtr& a, const KernelTypePtr& b, SourcePos pos) {
    return kt_make(join_value(a->carrier, b->carrier, pos), set_union(a->ops, b->ops),
                   set_union(a->excs, b->excs), set_union(a->sigs, b->sigs),
                   state_join(a->state, b->state, pos));
}

// ------------------------------------------------------------------ validation

void Checker::validate_type(const ValueTypePtr& t, SourcePos pos) const {
    auto check_rows = [&](const NameSet& ops, const NameSet& excs, const NameSet& sigs) {
        for (const std::string& o : ops)
            if (!tables_.is_operation(o)) err(pos, "TyType", "unknown operation '" + o + "' in type");
        for (const std::string& e : excs)
            if (!tables_.is_exception(e)) err(pos, "TyType", "unknown exception '" + e + "' in type");
        for (const std::string& s : sigs)
            if (!tables_.is_signal(s)) err(pos, "TyType", "unknown signal '" + s + "' in type");
    };
    switch (t->tag) {
        case ValueType::Tag::Bottom:
        case ValueType::Tag::Ground: return;
        case ValueType::Tag::Prod:
        case ValueType::Tag::Sum:
            validate_type(t->v0, pos);
            validate_type(t->v1, pos);
            return;
        case ValueType::Tag::UserFun:
            validate_type(t->v0, pos);
            check_rows(t->uresult->ops, t->uresult->excs, {});
            validate_type(t->uresult->carrier, pos);
            return;
        case ValueType::Tag::KernelFun:
            validate_type(t->v0, pos);
            check_rows(t->kresult->ops, t->kresult->excs, t->kresult->sigs);
            validate_type(t->kresult->carrier, pos);
            return;
        case ValueType::Tag::Runner:
            check_rows(set_union(t->handled, t->external), {}, t->sigs);
            return;
    }
}

// ------------------------------------------------------------------ values

std::pair<TermPtr, ValueTypePtr> Checker::synth_value(const Env& env, const TermPtr& t) {
    switch (t->kind) {
        case TermKind::Var: {
            auto it = env.find(t->name);
            if (it == env.end()) err(t->pos, "TyValue-Var", "undefined variable '" + t->name + "'");
            return {t, it->second};
        }
        case TermKind::IntLit: return {t, vt_int()};
        case TermKind::BoolLit: return {t, vt_bool()};
        case TermKind::StrLit: return {t, vt_str()};
        case TermKind::UnitLit: return {t, vt_unit()};
        case TermKind::ConstApp: {
            auto it = tables_.constants.find(t->name);
            if (it == tables_.constants.end())
                err(t->pos, "TyValue-Const", "unknown constant '" + t->name + "'");
            const ConstSig& sig = it->second;
            if (sig.args.size() != t->args.size())
                err(t->pos, "TyValue-Const",
                    "constant '" + t->name + "' expects " + std::to_string(sig.args.size()) +
                        " arguments");
            std::vector<TermPtr> args;
            for (std::size_t i = 0; i < sig.args.size(); ++i)
                args.push_back(check_value(env, t->args[i], vt_ground(sig.args[i])));
            return {build::const_app(t->name, std::move(args), t->pos), vt_ground(sig.result)};
        }
        case TermKind::Pair: {
            auto [a, ta] = synth_value(env, t->t0);
            auto [b, tb] = synth_value(env, t->t1);
            return {build::pair(a, b, t->pos), vt_prod(ta, tb)};
        }
        case TermKind::Inl:
        case TermKind::Inr: {
            if (!t->vtype)
                err(t->pos, "TyValue-Inject",
                    "cannot infer the type of a bare injection; add an ascription");
            validate_type(t->vtype, t->pos);
            return {check_value(env, t, t->vtype), t->vtype};
        }
        case TermKind::Annot: {
            validate_type(t->vtype, t->pos);
            TermPtr inner = check_value(env, t->t0, t->vtype);
            return {build::annot(inner, t->vtype, t->pos), t->vtype};
        }
        case TermKind::Fun: {
            validate_type(t->vtype, t->pos);
            Env inner = env;
            inner[t->name] = t->vtype;
            auto [body, ut] = synth_user(inner, t->t0);
            return {build::fun(t->name, t->vtype, body, t->pos), vt_user_fun(t->vtype, ut)};
        }
        case TermKind::FunK: {
            validate_type(t->vtype, t->pos);
            Env inner = env;
            inner[t->name] = t->vtype;
            auto [body, kt] = synth_kernel(inner, t->t0, t->ground);
            GroundPtr state = t->ground ? t->ground : kt->state;
            if (!state)
                err(t->pos, "TyValue-FunK",
                    "cannot determine the kernel state; annotate the funK with '@'");
            KernelTypePtr full = kt_make(kt->carrier, kt->ops, kt->excs, kt->sigs, state);
            // Write the settled state into the term so later passes see it.
            return {build::funk(t->name, t->vtype, state, body, t->pos),
                    vt_kernel_fun(t->vtype, full)};
        }
        case TermKind::RunnerLit: {
            NameSet handled, external, sigs;
            std::map<std::string, CoopClause> coops;
            for (const auto& [op, cl] : t->coops) {
                auto it = tables_.operations.find(op);
                if (it == tables_.operations.end())
                    err(t->pos, "TyValue-Runner", "undeclared operation '" + op + "'");
                const OpSig& sig = it->second;
                Env inner = env;
                inner[cl.param] = vt_ground(sig.param);
                auto [body, kt] = synth_kernel(inner, cl.body, t->ground);
                if (!subtype(kt->carrier, vt_ground(sig.result)))
                    err(cl.body->pos, "TyValue-Runner",
                        "co-operation '" + op + "' returns " + show(kt->carrier) +
                            ", expected " + show(sig.result));
                NameSet extra = set_diff(kt->excs, sig.excs);
                if (!extra.empty())
                    err(cl.body->pos, "TyValue-Runner",
                        "co-operation '" + op + "' may raise '" + *extra.begin() +
                            "', which is not in its signature");
                handled.insert(op);
                external = set_union(external, kt->ops);
                sigs = set_union(sigs, kt->sigs);
                coops.emplace(op, CoopClause{cl.param, body});
            }
            return {build::runner(std::move(coops), t->ground, t->pos),
                    vt_runner(std::move(handled), std::move(external), std::move(sigs),
                              t->ground)};
        }
        default: break;
    }
    throw InternalError("synth_value called on a computation");
}

TermPtr Checker::check_value(const Env& env, const TermPtr& t, const ValueTypePtr& expected) {
    switch (t->kind) {
        case TermKind::Pair:
            if (expected->tag == ValueType::Tag::Prod) {
                TermPtr a = check_value(env, t->t0, expected->v0);
                TermPtr b = check_value(env, t->t1, expected->v1);
                return build::pair(a, b, t->pos);
            }
            break;
        case TermKind::Inl:
            if (expected->tag != ValueType::Tag::Sum)
                err(t->pos, "Sub-Value", "an injection needs a sum type, got " + show(expected));
            return build::inl(check_value(env, t->t0, expected->v0), expected, t->pos);
        case TermKind::Inr:
            if (expected->tag != ValueType::Tag::Sum)
                err(t->pos, "Sub-Value", "an injection needs a sum type, got " + show(expected));
            return build::inr(check_value(env, t->t0, expected->v1), expected, t->pos);
        default: break;
    }
    auto [term, ty] = synth_value(env, t);
    if (!subtype(ty, expected))
        err(t->pos, "Sub-Value", show(ty) + " is not a subtype of " + show(expected));
    return term;
}

// ------------------------------------------------------------------ user computations

std::pair<TermPtr, UserTypePtr> Checker::synth_user(const Env& env, const TermPtr& t) {
    switch (t->kind) {
        case TermKind::UReturn: {
            auto [v, ty] = synth_value(env, t->t0);
            return {build::ureturn(v, t->pos), ut_make(ty)};
        }
        case TermKind::UApply: {
            auto [f, ft] = synth_value(env, t->t0);
            if (ft->tag != ValueType::Tag::UserFun)
                err(t->pos, "TyUser-Apply", "expected a user function, got " + show(ft));
            TermPtr a = check_value(env, t->t1, ft->v0);
            return {build::uapply(f, a, t->pos), ft->uresult};
        }
        case TermKind::UTry: {
            auto [m, um] = synth_user(env, t->t0);
            Env inner = env;
            inner[t->name] = um->carrier;
            auto [n, joined] = synth_user(inner, t->t1);
            NameSet covered;
            std::map<std::string, TermPtr> handlers;
            for (const auto& [e, body] : t->handlers) {
                covered.insert(e);
                auto [b, ue] = synth_user(env, body);
                joined = join_user(joined, ue, body->pos);
                handlers.emplace(e, b);
            }
            UserTypePtr ty = ut_make(joined->carrier, set_union(um->ops, joined->ops),
                                     set_union(set_diff(um->excs, covered), joined->excs));
            return {build::utry(m, t->name, n, std::move(handlers), t->pos), ty};
        }
        case TermKind::UMatchPair: {
            auto [v, ty] = synth_value(env, t->t0);
            if (ty->tag != ValueType::Tag::Prod)
                err(t->pos, "TyUser-Match", "expected a pair, got " + show(ty));
            Env inner = env;
            inner[t->name] = ty->v0;
            inner[t->name2] = ty->v1;
            auto [body, ut] = synth_user(inner, t->t1);
            return {build::umatch_pair(v, t->name, t->name2, body, t->pos), ut};
        }
        case TermKind::UMatchEmpty: {
            validate_type(t->vtype, t->pos);
            TermPtr v = check_value(env, t->t0, vt_empty());
            return {build::umatch_empty(v, t->vtype, t->pos), ut_make(t->vtype)};
        }
        case TermKind::UMatchSum: {
            auto [v, ty] = synth_value(env, t->t0);
            if (ty->tag != ValueType::Tag::Sum)
                err(t->pos, "TyUser-Match", "expected a sum, got " + show(ty));
            Env le = env;
            le[t->name] = ty->v0;
            auto [l, ul] = synth_user(le, t->t1);
            Env re = env;
            re[t->name2] = ty->v1;
            auto [r, ur] = synth_user(re, t->t2);
            return {build::umatch_sum(v, t->name, l, t->name2, r, t->pos),
                    join_user(ul, ur, t->pos)};
        }
        case TermKind::UMatchBool: {
            TermPtr v = check_value(env, t->t0, vt_bool());
            auto [a, ua] = synth_user(env, t->t1);
            auto [b, ub] = synth_user(env, t->t2);
            return {build::umatch_bool(v, a, b, t->pos), join_user(ua, ub, t->pos)};
        }
        case TermKind::UOp: {
            auto it = tables_.operations.find(t->name);
            if (it == tables_.operations.end())
                err(t->pos, "TyUser-Op", "undeclared operation '" + t->name + "'");
            const OpSig& sig = it->second;
            TermPtr arg = check_value(env, t->t0, vt_ground(sig.param));
            Env inner = env;
            inner[t->name2] = vt_ground(sig.result);
            auto [succ, joined] = synth_user(inner, t->t1);
            for (const std::string& e : sig.excs)
                if (!t->handlers.count(e))
                    err(t->pos, "TyUser-Op",
                        "operation '" + t->name + "' may raise '" + e +
                            "'; add an exception clause");
            std::map<std::string, TermPtr> handlers;
            for (const auto& [e, body] : t->handlers) {
                if (!sig.excs.count(e))
                    err(body->pos, "TyUser-Op",
                        "operation '" + t->name + "' cannot raise '" + e + "'");
                auto [b, ue] = synth_user(env, body);
                joined = join_user(joined, ue, body->pos);
                handlers.emplace(e, b);
            }
            ValueTypePtr carrier = joined->carrier;
            if (t->vtype) {
                validate_type(t->vtype, t->pos);
                if (!subtype(carrier, t->vtype))
                    err(t->pos, "TyUser-Op",
                        show(carrier) + " is not a subtype of the annotation " + show(t->vtype));
                carrier = t->vtype;
            }
            NameSet ops = joined->ops;
            ops.insert(t->name);
            return {build::uop(t->name, arg, t->name2, succ, std::move(handlers), t->vtype,
                               t->pos),
                    ut_make(carrier, std::move(ops), joined->excs)};
        }
        case TermKind::URaise: {
            if (!tables_.is_exception(t->name))
                err(t->pos, "TyUser-Raise", "undeclared exception '" + t->name + "'");
            ValueTypePtr carrier = vt_bottom();
            if (t->vtype) {
                validate_type(t->vtype, t->pos);
                carrier = t->vtype;
            }
            return {t, ut_make(carrier, {}, {t->name})};
        }
        case TermKind::URun: {
            auto [rv, rt] = synth_value(env, t->t0);
            if (rt->tag != ValueType::Tag::Runner)
                err(t->pos, "TyUser-Run", "expected a runner, got " + show(rt));
            TermPtr init = check_value(env, t->t1, vt_ground(rt->state));
            auto [body, ub] = synth_user(env, t->t2);
            NameSet unhandled = set_diff(ub->ops, rt->handled);
            if (!unhandled.empty())
                err(t->pos, "TyUser-Run",
                    "operation '" + *unhandled.begin() + "' is not handled by the runner");
            auto [fin, uf] = check_finally(env, t->fin, ub->carrier, rt->state, ub->excs,
                                           rt->sigs, t->pos, "TyUser-Run");
            return {build::urun(rv, init, body, fin, t->pos),
                    ut_make(uf->carrier, set_union(rt->external, uf->ops), uf->excs)};
        }
        case TermKind::UKernelSwitch: {
            auto [init, wt] = synth_value(env, t->t1);
            auto stc = as_ground(wt);
            if (!stc)
                err(t->pos, "TyUser-Kernel",
                    "kernel state must be a ground type, got " + show(wt));
            auto [k, kt] = synth_kernel(env, t->t0, *stc);
            auto [fin, uf] = check_finally(env, t->fin, kt->carrier, *stc, kt->excs, kt->sigs,
                                           t->pos, "TyUser-Kernel");
            return {build::ukernel(k, init, fin, t->pos),
                    ut_make(uf->carrier, set_union(kt->ops, uf->ops), uf->excs)};
        }
        case TermKind::ULet: {
            auto [m, um] = synth_user(env, t->t0);
            Env inner = env;
            inner[t->name] = um->carrier;
            auto [n, un] = synth_user(inner, t->t1);
            std::map<std::string, TermPtr> handlers;
            for (const std::string& e : um->excs)
                handlers.emplace(e, build::uraise(e, nullptr, t->pos));
            UserTypePtr ty = ut_make(un->carrier, set_union(um->ops, un->ops),
                                     set_union(um->excs, un->excs));
            return {build::utry(m, t->name, n, std::move(handlers), t->pos), ty};
        }
        case TermKind::UGenericOp:
            throw InternalError("generic operation call survived desugaring");
        default: break;
    }
    throw InternalError("synth_user called on a non-user term");
}

// ------------------------------------------------------------------ kernel computations

std::pair<TermPtr, KernelTypePtr> Checker::synth_kernel(const Env& env, const TermPtr& t,
                                                        const GroundPtr& state_ctx) {
    switch (t->kind) {
        case TermKind::KReturn: {
            auto [v, ty] = synth_value(env, t->t0);
            GroundPtr state = state_join(state_ctx, t->ground, t->pos);
            return {build::kreturn(v, t->ground, t->pos), kt_make(ty, {}, {}, {}, state)};
        }
        case TermKind::KApply: {
            auto [f, ft] = synth_value(env, t->t0);
            if (ft->tag != ValueType::Tag::KernelFun)
                err(t->pos, "TyKernel-Apply", "expected a kernel function, got " + show(ft));
            TermPtr a = check_value(env, t->t1, ft->v0);
            const KernelTypePtr& kr = ft->kresult;
            GroundPtr state = state_join(state_ctx, kr->state, t->pos);
            return {build::kapply(f, a, t->pos),
                    kt_make(kr->carrier, kr->ops, kr->excs, kr->sigs, state)};
        }
        case TermKind::KTry: {
            auto [m, km] = synth_kernel(env, t->t0, state_ctx);
            Env inner = env;
            inner[t->name] = km->carrier;
            auto [n, joined] = synth_kernel(inner, t->t1, km->state ? km->state : state_ctx);
            NameSet covered;
            std::map<std::string, TermPtr> handlers;
            for (const auto& [e, body] : t->handlers) {
                covered.insert(e);
                auto [b, ke] = synth_kernel(env, body, km->state ? km->state : state_ctx);
                joined = join_kernel(joined, ke, body->pos);
                handlers.emplace(e, b);
            }
            KernelTypePtr ty =
                kt_make(joined->carrier, set_union(km->ops, joined->ops),
                        set_union(set_diff(km->excs, covered), joined->excs),
                        set_union(km->sigs, joined->sigs),
                        state_join(km->state, joined->state, t->pos));
            return {build::ktry(m, t->name, n, std::move(handlers), t->pos), ty};
        }
        case TermKind::KMatchPair: {
            auto [v, ty] = synth_value(env, t->t0);
            if (ty->tag != ValueType::Tag::Prod)
                err(t->pos, "TyKernel-Match", "expected a pair, got " + show(ty));
            Env inner = env;
            inner[t->name] = ty->v0;
            inner[t->name2] = ty->v1;
            auto [body, kt] = synth_kernel(inner, t->t1, state_ctx);
            return {build::kmatch_pair(v, t->name, t->name2, body, t->pos), kt};
        }
        case TermKind::KMatchEmpty: {
            validate_type(t->vtype, t->pos);
            TermPtr v = check_value(env, t->t0, vt_empty());
            GroundPtr state = state_join(state_ctx, t->ground, t->pos);
            return {build::kmatch_empty(v, t->vtype, t->ground, t->pos),
                    kt_make(t->vtype, {}, {}, {}, state)};
        }
        case TermKind::KMatchSum: {
            auto [v, ty] = synth_value(env, t->t0);
            if (ty->tag != ValueType::Tag::Sum)
                err(t->pos, "TyKernel-Match", "expected a sum, got " + show(ty));
            Env le = env;
            le[t->name] = ty->v0;
            auto [l, kl] = synth_kernel(le, t->t1, state_ctx);
            Env re = env;
            re[t->name2] = ty->v1;
            auto [r, kr] = synth_kernel(re, t->t2, state_ctx);
            return {build::kmatch_sum(v, t->name, l, t->name2, r, t->pos),
                    join_kernel(kl, kr, t->pos)};
        }
        case TermKind::KMatchBool: {
            TermPtr v = check_value(env, t->t0, vt_bool());
            auto [a, ka] = synth_kernel(env, t->t1, state_ctx);
            auto [b, kb] = synth_kernel(env, t->t2, state_ctx);
            return {build::kmatch_bool(v, a, b, t->pos), join_kernel(ka, kb, t->pos)};
        }
        case TermKind::KOp: {
            auto it = tables_.operations.find(t->name);
            if (it == tables_.operations.end())
                err(t->pos, "TyKernel-Op", "undeclared operation '" + t->name + "'");
            const OpSig& sig = it->second;
            TermPtr arg = check_value(env, t->t0, vt_ground(sig.param));
            Env inner = env;
            inner[t->name2] = vt_ground(sig.result);
            auto [succ, joined] = synth_kernel(inner, t->t1, state_ctx);
            for (const std::string& e : sig.excs)
                if (!t->handlers.count(e))
                    err(t->pos, "TyKernel-Op",
                        "operation '" + t->name + "' may raise '" + e +
                            "'; add an exception clause");
            std::map<std::string, TermPtr> handlers;
            for (const auto& [e, body] : t->handlers) {
                if (!sig.excs.count(e))
                    err(body->pos, "TyKernel-Op",
                        "operation '" + t->name + "' cannot raise '" + e + "'");
                auto [b, ke] = synth_kernel(env, body, state_ctx);
                joined = join_kernel(joined, ke, body->pos);
                handlers.emplace(e, b);
            }
            ValueTypePtr carrier = joined->carrier;
            if (t->vtype) {
                validate_type(t->vtype, t->pos);
                if (!subtype(carrier, t->vtype))
                    err(t->pos, "TyKernel-Op",
                        show(carrier) + " is not a subtype of the annotation " + show(t->vtype));
                carrier = t->vtype;
            }
            NameSet ops = joined->ops;
            ops.insert(t->name);
            GroundPtr state = state_join(joined->state, t->ground, t->pos);
            return {build::kop(t->name, arg, t->name2, succ, std::move(handlers), t->vtype,
                               t->ground, t->pos),
                    kt_make(carrier, std::move(ops), joined->excs, joined->sigs, state)};
        }
        case TermKind::KRaise: {
            if (!tables_.is_exception(t->name))
                err(t->pos, "TyKernel-Raise", "undeclared exception '" + t->name + "'");
            ValueTypePtr carrier = vt_bottom();
            if (t->vtype) {
                validate_type(t->vtype, t->pos);
                carrier = t->vtype;
            }
            GroundPtr state = state_join(state_ctx, t->ground, t->pos);
            return {t, kt_make(carrier, {}, {t->name}, {}, state)};
        }
        case TermKind::KKill: {
            if (!tables_.is_signal(t->name))
                err(t->pos, "TyKernel-Kill", "undeclared signal '" + t->name + "'");
            ValueTypePtr carrier = vt_bottom();
            if (t->vtype) {
                validate_type(t->vtype, t->pos);
                carrier = t->vtype;
            }
            GroundPtr state = state_join(state_ctx, t->ground, t->pos);
            return {t, kt_make(carrier, {}, {}, {t->name}, state)};
        }
        case TermKind::KGetenv: {
            GroundPtr state = state_join(state_ctx, t->ground, t->pos);
            if (!state)
                err(t->pos, "TyKernel-Getenv",
                    "cannot determine the kernel state here; annotate the enclosing funK "
                    "with '@'");
            Env inner = env;
            inner[t->name] = vt_ground(state);
            auto [body, kt] = synth_kernel(inner, t->t0, state);
            return {build::kgetenv(t->name, body, t->ground, t->pos), kt};
        }
        case TermKind::KSetenv: {
            auto [v, ty] = synth_value(env, t->t0);
            auto g = as_ground(ty);
            if (!g)
                err(t->pos, "TyKernel-Setenv",
                    "kernel state must be a ground type, got " + show(ty));
            GroundPtr state = state_join(state_ctx, *g, t->pos);
            auto [k, kt] = synth_kernel(env, t->t1, state);
            return {build::ksetenv(v, k, t->pos), kt};
        }
        case TermKind::KUserSwitch: {
            auto [m, um] = synth_user(env, t->t0);
            Env inner = env;
            inner[t->name] = um->carrier;
            auto [ret, joined] = synth_kernel(inner, t->t1, state_ctx);
            for (const std::string& e : um->excs)
                if (!t->handlers.count(e))
                    err(t->pos, "TyKernel-User",
                        "user block misses exception clause '" + e + "'");
            std::map<std::string, TermPtr> handlers;
            for (const auto& [e, body] : t->handlers) {
                auto [b, ke] = synth_kernel(env, body, state_ctx);
                joined = join_kernel(joined, ke, body->pos);
                handlers.emplace(e, b);
            }
            return {build::kuser(m, t->name, ret, std::move(handlers), t->pos),
                    kt_make(joined->carrier, set_union(um->ops, joined->ops), joined->excs,
                            joined->sigs, joined->state)};
        }
        case TermKind::KLet: {
            auto [m, km] = synth_kernel(env, t->t0, state_ctx);
            Env inner = env;
            inner[t->name] = km->carrier;
            auto [n, kn] = synth_kernel(inner, t->t1, km->state ? km->state : state_ctx);
            std::map<std::string, TermPtr> handlers;
            for (const std::string& e : km->excs)
                handlers.emplace(e, build::kraise(e, nullptr, nullptr, t->pos));
            KernelTypePtr ty = kt_make(kn->carrier, set_union(km->ops, kn->ops),
                                       set_union(km->excs, kn->excs),
                                       set_union(km->sigs, kn->sigs),
                                       state_join(km->state, kn->state, t->pos));
            return {build::ktry(m, t->name, n, std::move(handlers), t->pos), ty};
        }
        case TermKind::KGenericOp:
            throw InternalError("generic operation call survived desugaring");
        default: break;
    }
    throw InternalError("synth_kernel called on a non-kernel term");
}

// ------------------------------------------------------------------ finalisation

// Shared by run and kernel blocks: the return clause binds the result and the
// final state; raise clauses must cover `excs`, kill clauses must cover
// `sigs`. Returns the elaborated clauses and the joined user type of all
// bodies.
std::pair<FinallyPtr, UserTypePtr> Checker::check_finally(const Env& env, const FinallyPtr& fin,
                                                          const ValueTypePtr& result,
                                                          const GroundPtr& state,
                                                          const NameSet& excs,
                                                          const NameSet& sigs, SourcePos pos,
                                                          const char* rule) {
    Env ret_env = env;
    ret_env[fin->ret_var] = result;
    ret_env[fin->ret_state] = vt_ground(state);
    auto [rbody, joined] = synth_user(ret_env, fin->ret_body);

    for (const std::string& e : excs)
        if (!fin->on_raise.count(e))
            err(pos, rule, "finalisation misses exception clause '" + e + "'");
    for (const std::string& s : sigs)
        if (!fin->on_kill.count(s))
            err(pos, rule, "finalisation misses signal clause '" + s + "'");

    std::map<std::string, RaiseClause> on_raise;
    for (const auto& [e, cl] : fin->on_raise) {
        Env ce = env;
        ce[cl.state_var] = vt_ground(state);
        auto [b, ue] = synth_user(ce, cl.body);
        joined = join_user(joined, ue, cl.body->pos);
        on_raise.emplace(e, RaiseClause{cl.state_var, b});
    }
    std::map<std::string, TermPtr> on_kill;
    for (const auto& [s, body] : fin->on_kill) {
        auto [b, us] = synth_user(env, body);
        joined = join_user(joined, us, body->pos);
        on_kill.emplace(s, b);
    }
    return {make_finally(fin->ret_var, fin->ret_state, rbody, std::move(on_raise),
                         std::move(on_kill)),
            joined};
}

// ------------------------------------------------------------------ programs

TypedProgram check_program(const SourceProgram& prog) {
    TermPtr term = prog.main;
    for (auto it = prog.lets.rbegin(); it != prog.lets.rend(); ++it)
        term = build::ulet(it->name, it->comp, term, it->pos);
    Checker checker(prog.tables);
    auto [elaborated, type] = checker.synth_user({}, term);
    return TypedProgram{prog.tables, elaborated, type};
}

} // namespace coop
