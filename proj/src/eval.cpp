#include "coop/eval.hpp"

#include <utility>

namespace coop {

UserStep user_return(RtPtr v) {
    UserStep s;
    s.tag = UserStep::Tag::Return;
    s.value = std::move(v);
    return s;
}

UserStep user_raise(std::string e) {
    UserStep s;
    s.tag = UserStep::Tag::Raise;
    s.name = std::move(e);
    return s;
}

UserStep user_killed(std::string sig) {
    UserStep s;
    s.tag = UserStep::Tag::Killed;
    s.name = std::move(sig);
    return s;
}

KernelStep kernel_return(RtPtr v, RtPtr state) {
    KernelStep s;
    s.tag = KernelStep::Tag::Return;
    s.value = std::move(v);
    s.state = std::move(state);
    return s;
}

KernelStep kernel_raise(std::string e, RtPtr state) {
    KernelStep s;
    s.tag = KernelStep::Tag::Raise;
    s.name = std::move(e);
    s.state = std::move(state);
    return s;
}

KernelStep kernel_kill(std::string sig) {
    KernelStep s;
    s.tag = KernelStep::Tag::Kill;
    s.name = std::move(sig);
    return s;
}

namespace {

RtPtr apply_const(const std::string& name, const std::vector<RtPtr>& args) {
    if (name == "+") return rt_int(args[0]->ival + args[1]->ival);
    if (name == "-") return rt_int(args[0]->ival - args[1]->ival);
    if (name == "*") return rt_int(args[0]->ival * args[1]->ival);
    if (name == "=") return rt_bool(args[0]->ival == args[1]->ival);
    if (name == "<") return rt_bool(args[0]->ival < args[1]->ival);
    if (name == "concat") return rt_str(args[0]->sval + args[1]->sval);
    throw InternalError("unknown constant '" + name + "'");
}

// One flag shared by a suspension's succ, exc, and kill entry points.
struct OneShot {
    std::shared_ptr<bool> used = std::make_shared<bool>(false);
    void fire() const {
        if (*used) throw AffinityViolation();
        *used = true;
    }
};

} // namespace

UserStep Evaluator::make_user_op(std::string op, RtPtr arg,
                                 std::function<UserStep(const RtPtr&)> succ,
                                 std::map<std::string, std::function<UserStep()>> exc,
                                 std::function<UserStep(const std::string&)> kill) {
    OneShot guard;
    auto call = std::make_shared<UserOpCall>();
    call->op = std::move(op);
    call->arg = std::move(arg);
    call->succ = [this, guard, f = std::move(succ)](const RtPtr& r) {
        guard.fire();
        ++stats.resumes;
        return f(r);
    };
    for (auto& [e, f] : exc)
        call->exc[e] = [this, guard, g = f]() {
            guard.fire();
            ++stats.resumes;
            return g();
        };
    call->kill = [this, guard, f = std::move(kill)](const std::string& s) {
        guard.fire();
        ++stats.resumes;
        return f(s);
    };
    UserStep out;
    out.tag = UserStep::Tag::Op;
    out.call = std::move(call);
    return out;
}

KernelStep Evaluator::make_kernel_op(std::string op, RtPtr arg,
                                     std::function<KernelStep(const RtPtr&)> succ,
                                     std::map<std::string, std::function<KernelStep()>> exc,
                                     std::function<KernelStep(const std::string&)> kill) {
    OneShot guard;
    auto call = std::make_shared<KernelOpCall>();
    call->op = std::move(op);
    call->arg = std::move(arg);
    call->succ = [this, guard, f = std::move(succ)](const RtPtr& r) {
        guard.fire();
        ++stats.resumes;
        return f(r);
    };
    for (auto& [e, f] : exc)
        call->exc[e] = [this, guard, g = f]() {
            guard.fire();
            ++stats.resumes;
            return g();
        };
    call->kill = [this, guard, f = std::move(kill)](const std::string& s) {
        guard.fire();
        ++stats.resumes;
        return f(s);
    };
    KernelStep out;
    out.tag = KernelStep::Tag::Op;
    out.call = std::move(call);
    return out;
}

UserStep Evaluator::transform_user(UserStep s, std::function<UserStep(const RtPtr&)> on_ret,
                                   std::function<UserStep(const std::string&)> on_raise) {
    switch (s.tag) {
    case UserStep::Tag::Return: return on_ret(s.value);
    case UserStep::Tag::Raise: return on_raise(s.name);
    case UserStep::Tag::Killed: return s;
    case UserStep::Tag::Op: {
        auto call = s.call;
        std::map<std::string, std::function<UserStep()>> exc;
        for (auto& [e, f] : call->exc)
            exc[e] = [this, f, on_ret, on_raise]() {
                return transform_user(f(), on_ret, on_raise);
            };
        return make_user_op(
            call->op, call->arg,
            [this, call, on_ret, on_raise](const RtPtr& r) {
                return transform_user(call->succ(r), on_ret, on_raise);
            },
            std::move(exc),
            [this, call, on_ret, on_raise](const std::string& sig) {
                return transform_user(call->kill(sig), on_ret, on_raise);
            });
    }
    }
    throw InternalError("corrupt user step");
}

KernelStep Evaluator::transform_kernel(
    KernelStep s, std::function<KernelStep(const RtPtr&, const RtPtr&)> on_ret,
    std::function<KernelStep(const std::string&, const RtPtr&)> on_raise) {
    switch (s.tag) {
    case KernelStep::Tag::Return: return on_ret(s.value, s.state);
    case KernelStep::Tag::Raise: return on_raise(s.name, s.state);
    case KernelStep::Tag::Kill: return s;
    case KernelStep::Tag::Op: {
        auto call = s.call;
        std::map<std::string, std::function<KernelStep()>> exc;
        for (auto& [e, f] : call->exc)
            exc[e] = [this, f, on_ret, on_raise]() {
                return transform_kernel(f(), on_ret, on_raise);
            };
        return make_kernel_op(
            call->op, call->arg,
            [this, call, on_ret, on_raise](const RtPtr& r) {
                return transform_kernel(call->succ(r), on_ret, on_raise);
            },
            std::move(exc),
            [this, call, on_ret, on_raise](const std::string& sig) {
                return transform_kernel(call->kill(sig), on_ret, on_raise);
            });
    }
    }
    throw InternalError("corrupt kernel step");
}

RtPtr Evaluator::eval_value(const EnvPtr& env, const TermPtr& t) {
    switch (t->kind) {
    case TermKind::Var: {
        RtPtr v = env_lookup(env, t->name);
        if (!v) throw InternalError("unbound variable '" + t->name + "'");
        return v;
    }
    case TermKind::IntLit: return rt_int(t->ival);
    case TermKind::BoolLit: return rt_bool(t->bval);
    case TermKind::StrLit: return rt_str(t->sval);
    case TermKind::UnitLit: return rt_unit();
    case TermKind::ConstApp: {
        std::vector<RtPtr> args;
        args.reserve(t->args.size());
        for (auto& a : t->args) args.push_back(eval_value(env, a));
        return apply_const(t->name, args);
    }
    case TermKind::Pair: return rt_pair(eval_value(env, t->t0), eval_value(env, t->t1));
    case TermKind::Inl: return rt_inl(eval_value(env, t->t0));
    case TermKind::Inr: return rt_inr(eval_value(env, t->t0));
    case TermKind::Annot: return eval_value(env, t->t0);
    case TermKind::Fun: return rt_fun(env, t->name, t->t0);
    case TermKind::FunK: return rt_funk(env, t->name, t->t0);
    case TermKind::RunnerLit: return rt_runner(env, t->coops, t->ground);
    default: throw InternalError("eval_value applied to a computation");
    }
}

UserStep Evaluator::eval_user(const EnvPtr& env, const TermPtr& t, int depth) {
    switch (t->kind) {
    case TermKind::UReturn: return user_return(eval_value(env, t->t0));
    case TermKind::UApply: {
        RtPtr f = eval_value(env, t->t0);
        if (f->tag != RtValue::Tag::Fun) throw InternalError("applying a non-function");
        RtPtr a = eval_value(env, t->t1);
        return eval_user(env_bind(f->env, f->param, a), f->body, depth);
    }
    case TermKind::ULet: {
        UserStep m = eval_user(env, t->t0, depth);
        return transform_user(
            std::move(m),
            [this, env, t, depth](const RtPtr& v) {
                return eval_user(env_bind(env, t->name, v), t->t1, depth);
            },
            [](const std::string& e) { return user_raise(e); });
    }
    case TermKind::UTry: {
        UserStep m = eval_user(env, t->t0, depth);
        return transform_user(
            std::move(m),
            [this, env, t, depth](const RtPtr& v) {
                return eval_user(env_bind(env, t->name, v), t->t1, depth);
            },
            [this, env, t, depth](const std::string& e) {
                auto it = t->handlers.find(e);
                if (it == t->handlers.end()) return user_raise(e);
                return eval_user(env, it->second, depth);
            });
    }
    case TermKind::UMatchPair: {
        RtPtr v = eval_value(env, t->t0);
        if (v->tag != RtValue::Tag::Pair) throw InternalError("match on a non-pair");
        return eval_user(env_bind(env_bind(env, t->name, v->v0), t->name2, v->v1), t->t1, depth);
    }
    case TermKind::UMatchEmpty: throw InternalError("match on the empty type reached at runtime");
    case TermKind::UMatchSum: {
        RtPtr v = eval_value(env, t->t0);
        if (v->tag == RtValue::Tag::Inl) return eval_user(env_bind(env, t->name, v->v0), t->t1, depth);
        if (v->tag == RtValue::Tag::Inr) return eval_user(env_bind(env, t->name2, v->v0), t->t2, depth);
        throw InternalError("match on a non-injection");
    }
    case TermKind::UMatchBool: {
        RtPtr v = eval_value(env, t->t0);
        if (v->tag != RtValue::Tag::Bool) throw InternalError("conditional on a non-boolean");
        return eval_user(env, v->bval ? t->t1 : t->t2, depth);
    }
    case TermKind::UOp: {
        RtPtr arg = eval_value(env, t->t0);
        emit({"op", t->name, "", "", depth});
        ++stats.op_calls;
        std::map<std::string, std::function<UserStep()>> exc;
        for (auto& [e, body] : t->handlers)
            exc[e] = [this, env, body, depth]() { return eval_user(env, body, depth); };
        return make_user_op(
            t->name, arg,
            [this, env, t, depth](const RtPtr& r) {
                return eval_user(env_bind(env, t->name2, r), t->t1, depth);
            },
            std::move(exc), [](const std::string& s) { return user_killed(s); });
    }
    case TermKind::URaise: return user_raise(t->name);
    case TermKind::URun: {
        RtPtr runner = eval_value(env, t->t0);
        if (runner->tag != RtValue::Tag::Runner) throw InternalError("running a non-runner");
        RtPtr init = eval_value(env, t->t1);
        auto rec = new_record(t->pos);
        UserStep body = eval_user(env, t->t2, depth + 1);
        return drive_run(runner, init, std::move(body), t->fin, env, depth, rec);
    }
    case TermKind::UKernelSwitch: {
        RtPtr init = eval_value(env, t->t1);
        auto rec = new_record(t->pos);
        KernelStep ks = eval_kernel(env, t->t0, init, depth + 1);
        return settle_kernel_block(std::move(ks), t->fin, env, depth, rec);
    }
    case TermKind::UGenericOp:
        throw InternalError("generic operation call reached the evaluator");
    default: throw InternalError("eval_user applied to a non-user term");
    }
}

KernelStep Evaluator::eval_kernel(const EnvPtr& env, const TermPtr& t, const RtPtr& state,
                                  int depth) {
    switch (t->kind) {
    case TermKind::KReturn: return kernel_return(eval_value(env, t->t0), state);
    case TermKind::KApply: {
        RtPtr f = eval_value(env, t->t0);
        if (f->tag != RtValue::Tag::FunK) throw InternalError("applying a non-kernel-function");
        RtPtr a = eval_value(env, t->t1);
        return eval_kernel(env_bind(f->env, f->param, a), f->body, state, depth);
    }
    case TermKind::KLet: {
        KernelStep m = eval_kernel(env, t->t0, state, depth);
        return transform_kernel(
            std::move(m),
            [this, env, t, depth](const RtPtr& v, const RtPtr& c) {
                return eval_kernel(env_bind(env, t->name, v), t->t1, c, depth);
            },
            [](const std::string& e, const RtPtr& c) { return kernel_raise(e, c); });
    }
    case TermKind::KTry: {
        KernelStep m = eval_kernel(env, t->t0, state, depth);
        return transform_kernel(
            std::move(m),
            [this, env, t, depth](const RtPtr& v, const RtPtr& c) {
                return eval_kernel(env_bind(env, t->name, v), t->t1, c, depth);
            },
            [this, env, t, depth](const std::string& e, const RtPtr& c) {
                auto it = t->handlers.find(e);
                if (it == t->handlers.end()) return kernel_raise(e, c);
                return eval_kernel(env, it->second, c, depth);
            });
    }
    case TermKind::KMatchPair: {
        RtPtr v = eval_value(env, t->t0);
        if (v->tag != RtValue::Tag::Pair) throw InternalError("match on a non-pair");
        return eval_kernel(env_bind(env_bind(env, t->name, v->v0), t->name2, v->v1), t->t1, state,
                           depth);
    }
    case TermKind::KMatchEmpty: throw InternalError("match on the empty type reached at runtime");
    case TermKind::KMatchSum: {
        RtPtr v = eval_value(env, t->t0);
        if (v->tag == RtValue::Tag::Inl)
            return eval_kernel(env_bind(env, t->name, v->v0), t->t1, state, depth);
        if (v->tag == RtValue::Tag::Inr)
            return eval_kernel(env_bind(env, t->name2, v->v0), t->t2, state, depth);
        throw InternalError("match on a non-injection");
    }
    case TermKind::KMatchBool: {
        RtPtr v = eval_value(env, t->t0);
        if (v->tag != RtValue::Tag::Bool) throw InternalError("conditional on a non-boolean");
        return eval_kernel(env, v->bval ? t->t1 : t->t2, state, depth);
    }
    case TermKind::KOp: {
        RtPtr arg = eval_value(env, t->t0);
        emit({"op", t->name, "", "", depth});
        ++stats.op_calls;
        std::map<std::string, std::function<KernelStep()>> exc;
        for (auto& [e, body] : t->handlers)
            exc[e] = [this, env, body, state, depth]() {
                return eval_kernel(env, body, state, depth);
            };
        return make_kernel_op(
            t->name, arg,
            [this, env, t, state, depth](const RtPtr& r) {
                return eval_kernel(env_bind(env, t->name2, r), t->t1, state, depth);
            },
            std::move(exc), [](const std::string& s) { return kernel_kill(s); });
    }
    case TermKind::KRaise: return kernel_raise(t->name, state);
    case TermKind::KKill: return kernel_kill(t->name);
    case TermKind::KGetenv: return eval_kernel(env_bind(env, t->name, state), t->t0, state, depth);
    case TermKind::KSetenv: {
        RtPtr v = eval_value(env, t->t0);
        return eval_kernel(env, t->t1, v, depth);
    }
    case TermKind::KUserSwitch: {
        UserStep us = eval_user(env, t->t0, depth);
        return settle_user_block(std::move(us), t->name, t->t1, t->handlers, state, env, depth);
    }
    case TermKind::KGenericOp:
        throw InternalError("generic operation call reached the evaluator");
    default: throw InternalError("eval_kernel applied to a non-kernel term");
    }
}

// A run settles its body step by step: co-operations consume external ops,
// terminal steps go through finalisation, kills look for a matching clause
// here and keep unwinding outward when there is none.
UserStep Evaluator::drive_run(const RtPtr& runner, const RtPtr& state, UserStep body,
                              const FinallyPtr& fin, const EnvPtr& env, int depth,
                              const std::shared_ptr<FinalisationRecord>& rec) {
    switch (body.tag) {
    case UserStep::Tag::Return: return finalise(fin, env, depth, rec, "return", "", body.value, state);
    case UserStep::Tag::Raise: {
        if (fin->on_raise.count(body.name))
            return finalise(fin, env, depth, rec, "raise", body.name, nullptr, state);
        return body;
    }
    case UserStep::Tag::Killed: {
        if (fin->on_kill.count(body.name))
            return finalise(fin, env, depth, rec, "kill", body.name, nullptr, nullptr);
        return body;
    }
    case UserStep::Tag::Op: {
        auto call = body.call;
        auto it = runner->coops.find(call->op);
        if (it == runner->coops.end()) {
            // Not handled here: bubble outward, continuations re-enter this run.
            std::map<std::string, std::function<UserStep()>> exc;
            for (auto& [e, f] : call->exc)
                exc[e] = [this, runner, state, f, fin, env, depth, rec]() {
                    return drive_run(runner, state, f(), fin, env, depth, rec);
                };
            return make_user_op(
                call->op, call->arg,
                [this, runner, state, call, fin, env, depth, rec](const RtPtr& r) {
                    return drive_run(runner, state, call->succ(r), fin, env, depth, rec);
                },
                std::move(exc),
                [this, runner, state, call, fin, env, depth, rec](const std::string& s) {
                    return drive_run(runner, state, call->kill(s), fin, env, depth, rec);
                });
        }
        const CoopClause& cl = it->second;
        KernelStep ks =
            eval_kernel(env_bind(runner->env, cl.param, call->arg), cl.body, state, depth + 1);
        return drive_coop(runner, call->op, std::move(ks), call, fin, env, depth, rec);
    }
    }
    throw InternalError("corrupt user step");
}

// Settles the kernel step of one co-operation against the suspended caller.
UserStep Evaluator::drive_coop(const RtPtr& runner, const std::string& op, KernelStep ks,
                               const std::shared_ptr<UserOpCall>& call, const FinallyPtr& fin,
                               const EnvPtr& env, int depth,
                               const std::shared_ptr<FinalisationRecord>& rec) {
    switch (ks.tag) {
    case KernelStep::Tag::Return:
        emit({"coop-return", op, "", "", depth + 1});
        return drive_run(runner, ks.state, call->succ(ks.value), fin, env, depth, rec);
    case KernelStep::Tag::Raise: {
        emit({"coop-raise", op, ks.name, "", depth + 1});
        auto it = call->exc.find(ks.name);
        if (it == call->exc.end())
            throw EvalError("co-operation for '" + op + "' raised unexpected exception '" +
                            ks.name + "'");
        return drive_run(runner, ks.state, it->second(), fin, env, depth, rec);
    }
    case KernelStep::Tag::Kill: {
        emit({"coop-kill", op, "", ks.name, depth + 1});
        if (fin->on_kill.count(ks.name))
            return finalise(fin, env, depth, rec, "kill", ks.name, nullptr, nullptr);
        return user_killed(ks.name);
    }
    case KernelStep::Tag::Op: {
        // The co-operation itself performs an outer operation: the whole run
        // suspends; resuming settles the rest of the co-operation first.
        auto ko = ks.call;
        std::map<std::string, std::function<UserStep()>> exc;
        for (auto& [e, f] : ko->exc)
            exc[e] = [this, runner, op, f, call, fin, env, depth, rec]() {
                return drive_coop(runner, op, f(), call, fin, env, depth, rec);
            };
        return make_user_op(
            ko->op, ko->arg,
            [this, runner, op, ko, call, fin, env, depth, rec](const RtPtr& r) {
                return drive_coop(runner, op, ko->succ(r), call, fin, env, depth, rec);
            },
            std::move(exc),
            [this, runner, op, ko, call, fin, env, depth, rec](const std::string& s) {
                return drive_coop(runner, op, ko->kill(s), call, fin, env, depth, rec);
            });
    }
    }
    throw InternalError("corrupt kernel step");
}

UserStep Evaluator::settle_kernel_block(KernelStep ks, const FinallyPtr& fin, const EnvPtr& env,
                                        int depth,
                                        const std::shared_ptr<FinalisationRecord>& rec) {
    switch (ks.tag) {
    case KernelStep::Tag::Return:
        return finalise(fin, env, depth, rec, "return", "", ks.value, ks.state);
    case KernelStep::Tag::Raise: {
        if (fin->on_raise.count(ks.name))
            return finalise(fin, env, depth, rec, "raise", ks.name, nullptr, ks.state);
        return user_raise(ks.name);
    }
    case KernelStep::Tag::Kill: {
        if (fin->on_kill.count(ks.name))
            return finalise(fin, env, depth, rec, "kill", ks.name, nullptr, nullptr);
        return user_killed(ks.name);
    }
    case KernelStep::Tag::Op: {
        auto call = ks.call;
        std::map<std::string, std::function<UserStep()>> exc;
        for (auto& [e, f] : call->exc)
            exc[e] = [this, f, fin, env, depth, rec]() {
                return settle_kernel_block(f(), fin, env, depth, rec);
            };
        return make_user_op(
            call->op, call->arg,
            [this, call, fin, env, depth, rec](const RtPtr& r) {
                return settle_kernel_block(call->succ(r), fin, env, depth, rec);
            },
            std::move(exc),
            [this, call, fin, env, depth, rec](const std::string& s) {
                return settle_kernel_block(call->kill(s), fin, env, depth, rec);
            });
    }
    }
    throw InternalError("corrupt kernel step");
}

KernelStep Evaluator::settle_user_block(UserStep us, const std::string& ret_var,
                                        const TermPtr& ret_body,
                                        const std::map<std::string, TermPtr>& handlers,
                                        const RtPtr& state, const EnvPtr& env, int depth) {
    switch (us.tag) {
    case UserStep::Tag::Return:
        return eval_kernel(env_bind(env, ret_var, us.value), ret_body, state, depth);
    case UserStep::Tag::Raise: {
        auto it = handlers.find(us.name);
        if (it == handlers.end()) return kernel_raise(us.name, state);
        return eval_kernel(env, it->second, state, depth);
    }
    case UserStep::Tag::Killed: return kernel_kill(us.name);
    case UserStep::Tag::Op: {
        auto call = us.call;
        std::map<std::string, std::function<KernelStep()>> exc;
        for (auto& [e, f] : call->exc)
            exc[e] = [this, f, ret_var, ret_body, handlers, state, env, depth]() {
                return settle_user_block(f(), ret_var, ret_body, handlers, state, env, depth);
            };
        return make_kernel_op(
            call->op, call->arg,
            [this, call, ret_var, ret_body, handlers, state, env, depth](const RtPtr& r) {
                return settle_user_block(call->succ(r), ret_var, ret_body, handlers, state, env,
                                         depth);
            },
            std::move(exc),
            [this, call, ret_var, ret_body, handlers, state, env, depth](const std::string& s) {
                return settle_user_block(call->kill(s), ret_var, ret_body, handlers, state, env,
                                         depth);
            });
    }
    }
    throw InternalError("corrupt user step");
}

UserStep Evaluator::finalise(const FinallyPtr& fin, const EnvPtr& env, int depth,
                             const std::shared_ptr<FinalisationRecord>& rec, const char* kind,
                             const std::string& name, const RtPtr& value, const RtPtr& state) {
    ++rec->count;
    rec->kind = kind;
    TraceEvent ev;
    ev.event = "finally";
    if (std::string(kind) == "raise") ev.exception = name;
    if (std::string(kind) == "kill") ev.signal = name;
    ev.run_depth = depth;
    emit(ev);
    if (std::string(kind) == "return") {
        EnvPtr e = env_bind(env_bind(env, fin->ret_var, value), fin->ret_state, state);
        return eval_user(e, fin->ret_body, depth);
    }
    if (std::string(kind) == "raise") {
        const RaiseClause& cl = fin->on_raise.at(name);
        return eval_user(env_bind(env, cl.state_var, state), cl.body, depth);
    }
    return eval_user(env, fin->on_kill.at(name), depth);
}

} // namespace coop
