#include "coop/denote.hpp"

namespace coop {

namespace {

SemEnv extend(SemEnv env, const std::string& name, SemPtr v) {
    env[name] = std::move(v);
    return env;
}

SemPtr sem_const(const std::string& name, const std::vector<SemPtr>& args) {
    if (name == "+") return sem_int(args[0]->ival + args[1]->ival);
    if (name == "-") return sem_int(args[0]->ival - args[1]->ival);
    if (name == "*") return sem_int(args[0]->ival * args[1]->ival);
    if (name == "=") return sem_bool(args[0]->ival == args[1]->ival);
    if (name == "<") return sem_bool(args[0]->ival < args[1]->ival);
    if (name == "concat") return sem_str(args[0]->sval + args[1]->sval);
    throw OracleError("unknown constant '" + name + "'");
}

} // namespace

SemPtr Denoter::denote_value(const SemEnv& env, const TermPtr& t) {
    switch (t->kind) {
    case TermKind::Var: {
        auto it = env.find(t->name);
        if (it == env.end()) throw OracleError("unbound variable '" + t->name + "'");
        return it->second;
    }
    case TermKind::IntLit: return sem_int(t->ival);
    case TermKind::BoolLit: return sem_bool(t->bval);
    case TermKind::StrLit: return sem_str(t->sval);
    case TermKind::UnitLit: return sem_unit();
    case TermKind::ConstApp: {
        std::vector<SemPtr> args;
        args.reserve(t->args.size());
        for (const auto& a : t->args) args.push_back(denote_value(env, a));
        return sem_const(t->name, args);
    }
    case TermKind::Pair: return sem_pair(denote_value(env, t->t0), denote_value(env, t->t1));
    case TermKind::Inl: return sem_inl(denote_value(env, t->t0));
    case TermKind::Inr: return sem_inr(denote_value(env, t->t0));
    case TermKind::Annot: return denote_value(env, t->t0);
    case TermKind::Fun: {
        TermPtr body = t->t0;
        std::string param = t->name;
        return sem_user_fn(
            [this, env, param, body](const SemPtr& v) {
                return denote_user(extend(env, param, v), body);
            },
            t->vtype);
    }
    case TermKind::FunK: {
        TermPtr body = t->t0;
        std::string param = t->name;
        return sem_kernel_fn(
            [this, env, param, body](const SemPtr& v, const SemPtr& c) {
                return denote_kernel(extend(env, param, v), body, c);
            },
            t->vtype, t->ground);
    }
    case TermKind::RunnerLit: {
        auto den = std::make_shared<RunnerDen>();
        den->state_ty = t->ground;
        for (const auto& [op, clause] : t->coops) {
            std::string param = clause.param;
            TermPtr body = clause.body;
            den->coops[op] = [this, env, param, body](const SemPtr& a, const SemPtr& c) {
                return denote_kernel(extend(env, param, a), body, c);
            };
        }
        return sem_runner(den);
    }
    default: throw OracleError("denote_value applied to a computation");
    }
}

TreePtr Denoter::denote_user(const SemEnv& env, const TermPtr& t) {
    switch (t->kind) {
    case TermKind::UReturn: return tree_ret(denote_value(env, t->t0));
    case TermKind::UApply: {
        SemPtr f = denote_value(env, t->t0);
        if (f->tag != SemValue::Tag::UserFn) throw OracleError("applying a non-function");
        return f->ufn(denote_value(env, t->t1));
    }
    case TermKind::ULet: {
        TreePtr m = denote_user(env, t->t0);
        return utree_bind(
            ctx_, m,
            [this, env, t](const SemPtr& v) {
                return denote_user(extend(env, t->name, v), t->t1);
            },
            [](const std::string& e) { return tree_exc(e); });
    }
    case TermKind::UTry: {
        TreePtr m = denote_user(env, t->t0);
        return utree_bind(
            ctx_, m,
            [this, env, t](const SemPtr& v) {
                return denote_user(extend(env, t->name, v), t->t1);
            },
            [this, env, t](const std::string& e) {
                auto it = t->handlers.find(e);
                if (it == t->handlers.end()) return tree_exc(e);
                return denote_user(env, it->second);
            });
    }
    case TermKind::UMatchPair: {
        SemPtr v = denote_value(env, t->t0);
        if (v->tag != SemValue::Tag::Pair) throw OracleError("match on a non-pair");
        return denote_user(extend(extend(env, t->name, v->v0), t->name2, v->v1), t->t1);
    }
    case TermKind::UMatchEmpty: throw OracleError("match on the empty type reached");
    case TermKind::UMatchSum: {
        SemPtr v = denote_value(env, t->t0);
        if (v->tag == SemValue::Tag::Inl)
            return denote_user(extend(env, t->name, v->v0), t->t1);
        if (v->tag == SemValue::Tag::Inr)
            return denote_user(extend(env, t->name2, v->v0), t->t2);
        throw OracleError("match on a non-injection");
    }
    case TermKind::UMatchBool: {
        SemPtr v = denote_value(env, t->t0);
        if (v->tag != SemValue::Tag::Bool) throw OracleError("conditional on a non-boolean");
        return denote_user(env, v->bval ? t->t1 : t->t2);
    }
    case TermKind::UOp: {
        const OpSig& sig = ctx_.sig(t->name);
        SemPtr arg = denote_value(env, t->t0);
        std::vector<TreePtr> children;
        for (const auto& b : enumerate(ctx_, sig.result))
            children.push_back(denote_user(extend(env, t->name2, b), t->t1));
        std::map<std::string, TreePtr> exc_children;
        for (const auto& e : sig.excs) {
            auto it = t->handlers.find(e);
            exc_children[e] = it == t->handlers.end() ? tree_exc(e) : denote_user(env, it->second);
        }
        return tree_op(ctx_, t->name, arg, std::move(children), std::move(exc_children));
    }
    case TermKind::URaise: return tree_exc(t->name);
    case TermKind::URun: {
        SemPtr rv = denote_value(env, t->t0);
        if (rv->tag != SemValue::Tag::Runner) throw OracleError("running a non-runner");
        SemPtr init = denote_value(env, t->t1);
        TreePtr body = denote_user(env, t->t2);
        TreePtr witness = run_morphism(ctx_, *rv->runner, body, init);
        FinalisationMap phi = make_phi(env, t->fin);
        Finalised fd = finalisation_apply(ctx_, phi, witness);
        runs.push_back({fd.witness, fd.result, phi, false});
        return fd.result;
    }
    case TermKind::UKernelSwitch: {
        SemPtr init = denote_value(env, t->t1);
        TreePtr k = denote_kernel(env, t->t0, init);
        FinalisationMap phi = make_phi(env, t->fin);
        Finalised fd = finalisation_apply(ctx_, phi, k);
        runs.push_back({fd.witness, fd.result, phi, true});
        return fd.result;
    }
    case TermKind::UGenericOp: throw OracleError("generic operation call reached the oracle");
    default: throw OracleError("denote_user applied to a non-user term");
    }
}

TreePtr Denoter::denote_kernel(const SemEnv& env, const TermPtr& t, const SemPtr& state) {
    switch (t->kind) {
    case TermKind::KReturn: return tree_kret(denote_value(env, t->t0), state);
    case TermKind::KApply: {
        SemPtr f = denote_value(env, t->t0);
        if (f->tag != SemValue::Tag::KernelFn)
            throw OracleError("applying a non-kernel-function");
        return f->kfn(denote_value(env, t->t1), state);
    }
    case TermKind::KLet: {
        TreePtr m = denote_kernel(env, t->t0, state);
        return ktree_bind(
            ctx_, m,
            [this, env, t](const SemPtr& v, const SemPtr& c) {
                return denote_kernel(extend(env, t->name, v), t->t1, c);
            },
            [](const std::string& e, const SemPtr& c) { return tree_kexc(e, c); });
    }
    case TermKind::KTry: {
        TreePtr m = denote_kernel(env, t->t0, state);
        return ktree_bind(
            ctx_, m,
            [this, env, t](const SemPtr& v, const SemPtr& c) {
                return denote_kernel(extend(env, t->name, v), t->t1, c);
            },
            [this, env, t](const std::string& e, const SemPtr& c) {
                auto it = t->handlers.find(e);
                if (it == t->handlers.end()) return tree_kexc(e, c);
                return denote_kernel(env, it->second, c);
            });
    }
    case TermKind::KMatchPair: {
        SemPtr v = denote_value(env, t->t0);
        if (v->tag != SemValue::Tag::Pair) throw OracleError("match on a non-pair");
        return denote_kernel(extend(extend(env, t->name, v->v0), t->name2, v->v1), t->t1, state);
    }
    case TermKind::KMatchEmpty: throw OracleError("match on the empty type reached");
    case TermKind::KMatchSum: {
        SemPtr v = denote_value(env, t->t0);
        if (v->tag == SemValue::Tag::Inl)
            return denote_kernel(extend(env, t->name, v->v0), t->t1, state);
        if (v->tag == SemValue::Tag::Inr)
            return denote_kernel(extend(env, t->name2, v->v0), t->t2, state);
        throw OracleError("match on a non-injection");
    }
    case TermKind::KMatchBool: {
        SemPtr v = denote_value(env, t->t0);
        if (v->tag != SemValue::Tag::Bool) throw OracleError("conditional on a non-boolean");
        return denote_kernel(env, v->bval ? t->t1 : t->t2, state);
    }
    case TermKind::KOp: {
        const OpSig& sig = ctx_.sig(t->name);
        SemPtr arg = denote_value(env, t->t0);
        std::vector<TreePtr> children;
        for (const auto& b : enumerate(ctx_, sig.result))
            children.push_back(denote_kernel(extend(env, t->name2, b), t->t1, state));
        std::map<std::string, TreePtr> exc_children;
        for (const auto& e : sig.excs) {
            auto it = t->handlers.find(e);
            exc_children[e] =
                it == t->handlers.end() ? tree_kexc(e, state) : denote_kernel(env, it->second, state);
        }
        return tree_op(ctx_, t->name, arg, std::move(children), std::move(exc_children));
    }
    case TermKind::KRaise: return tree_kexc(t->name, state);
    case TermKind::KKill: return tree_sig(t->name);
    case TermKind::KGetenv: return denote_kernel(extend(env, t->name, state), t->t0, state);
    case TermKind::KSetenv:
        return denote_kernel(env, t->t1, denote_value(env, t->t0));
    case TermKind::KUserSwitch: {
        TreePtr m = denote_user(env, t->t0);
        return utree_bind(
            ctx_, m,
            [this, env, t, state](const SemPtr& v) {
                return denote_kernel(extend(env, t->name, v), t->t1, state);
            },
            [this, env, t, state](const std::string& e) {
                auto it = t->handlers.find(e);
                if (it == t->handlers.end()) return tree_kexc(e, state);
                return denote_kernel(env, it->second, state);
            });
    }
    case TermKind::KGenericOp: throw OracleError("generic operation call reached the oracle");
    default: throw OracleError("denote_kernel applied to a non-kernel term");
    }
}

FinalisationMap Denoter::make_phi(const SemEnv& env, const FinallyPtr& fin) {
    FinalisationMap phi;
    phi.on_ret = [this, env, fin](const SemPtr& v, const SemPtr& c) {
        return denote_user(extend(extend(env, fin->ret_var, v), fin->ret_state, c),
                           fin->ret_body);
    };
    phi.on_exc = [this, env, fin](const std::string& e, const SemPtr& c) {
        const RaiseClause& cl = fin->on_raise.at(e);
        return denote_user(extend(env, cl.state_var, c), cl.body);
    };
    phi.on_sig = [this, env, fin](const std::string& s) {
        return denote_user(env, fin->on_kill.at(s));
    };
    for (const auto& [e, cl] : fin->on_raise) phi.excs.insert(e);
    for (const auto& [s, body] : fin->on_kill) phi.sigs.insert(s);
    return phi;
}

} // namespace coop
