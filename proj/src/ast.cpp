#include "coop/ast.hpp"

namespace coop {

// ---------------------------------------------------------------- ground types

static GroundPtr mk_ground(Ground g) { return std::make_shared<const Ground>(std::move(g)); }

GroundPtr ground_base(const std::string& name) {
    if (name != "int" && name != "bool" && name != "str")
        throw std::invalid_argument("unknown base type: " + name);
    Ground g;
    g.tag = Ground::Tag::Base;
    g.base = name;
    return mk_ground(std::move(g));
}

GroundPtr ground_int() { return ground_base("int"); }
GroundPtr ground_bool() { return ground_base("bool"); }
GroundPtr ground_str() { return ground_base("str"); }

GroundPtr ground_unit() {
    Ground g;
    g.tag = Ground::Tag::Unit;
    return mk_ground(std::move(g));
}

GroundPtr ground_empty() {
    Ground g;
    g.tag = Ground::Tag::Empty;
    return mk_ground(std::move(g));
}

GroundPtr ground_prod(GroundPtr a, GroundPtr b) {
    Ground g;
    g.tag = Ground::Tag::Prod;
    g.fst = std::move(a);
    g.snd = std::move(b);
    return mk_ground(std::move(g));
}

GroundPtr ground_sum(GroundPtr a, GroundPtr b) {
    Ground g;
    g.tag = Ground::Tag::Sum;
    g.fst = std::move(a);
    g.snd = std::move(b);
    return mk_ground(std::move(g));
}

bool equal(const GroundPtr& a, const GroundPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->tag != b->tag) return false;
    switch (a->tag) {
        case Ground::Tag::Base: return a->base == b->base;
        case Ground::Tag::Unit:
        case Ground::Tag::Empty: return true;
        case Ground::Tag::Prod:
        case Ground::Tag::Sum: return equal(a->fst, b->fst) && equal(a->snd, b->snd);
    }
    return false;
}

// ---------------------------------------------------------------- value types

static ValueTypePtr mk_vt(ValueType t) { return std::make_shared<const ValueType>(std::move(t)); }

ValueTypePtr vt_bottom() {
    ValueType t;
    t.tag = ValueType::Tag::Bottom;
    return mk_vt(std::move(t));
}

ValueTypePtr vt_ground(GroundPtr g) {
    if (!g) throw InternalError("vt_ground: null ground type");
    switch (g->tag) {
        case Ground::Tag::Prod: return vt_prod(vt_ground(g->fst), vt_ground(g->snd));
        case Ground::Tag::Sum: return vt_sum(vt_ground(g->fst), vt_ground(g->snd));
        default: break;
    }
    ValueType t;
    t.tag = ValueType::Tag::Ground;
    t.ground = std::move(g);
    return mk_vt(std::move(t));
}

ValueTypePtr vt_unit() { return vt_ground(ground_unit()); }
ValueTypePtr vt_int() { return vt_ground(ground_int()); }
ValueTypePtr vt_bool() { return vt_ground(ground_bool()); }
ValueTypePtr vt_str() { return vt_ground(ground_str()); }
ValueTypePtr vt_empty() { return vt_ground(ground_empty()); }

ValueTypePtr vt_prod(ValueTypePtr a, ValueTypePtr b) {
    ValueType t;
    t.tag = ValueType::Tag::Prod;
    t.v0 = std::move(a);
    t.v1 = std::move(b);
    return mk_vt(std::move(t));
}

ValueTypePtr vt_sum(ValueTypePtr a, ValueTypePtr b) {
    ValueType t;
    t.tag = ValueType::Tag::Sum;
    t.v0 = std::move(a);
    t.v1 = std::move(b);
    return mk_vt(std::move(t));
}

ValueTypePtr vt_user_fun(ValueTypePtr arg, UserTypePtr result) {
    ValueType t;
    t.tag = ValueType::Tag::UserFun;
    t.v0 = std::move(arg);
    t.uresult = std::move(result);
    return mk_vt(std::move(t));
}

ValueTypePtr vt_kernel_fun(ValueTypePtr arg, KernelTypePtr result) {
    ValueType t;
    t.tag = ValueType::Tag::KernelFun;
    t.v0 = std::move(arg);
    t.kresult = std::move(result);
    return mk_vt(std::move(t));
}

ValueTypePtr vt_runner(NameSet handled, NameSet external, NameSet sigs, GroundPtr state) {
    ValueType t;
    t.tag = ValueType::Tag::Runner;
    t.handled = std::move(handled);
    t.external = std::move(external);
    t.sigs = std::move(sigs);
    t.state = std::move(state);
    return mk_vt(std::move(t));
}

UserTypePtr ut_make(ValueTypePtr carrier, NameSet ops, NameSet excs) {
    UserType u;
    u.carrier = std::move(carrier);
    u.ops = std::move(ops);
    u.excs = std::move(excs);
    return std::make_shared<const UserType>(std::move(u));
}

KernelTypePtr kt_make(ValueTypePtr carrier, NameSet ops, NameSet excs, NameSet sigs,
                      GroundPtr state) {
    KernelType k;
    k.carrier = std::move(carrier);
    k.ops = std::move(ops);
    k.excs = std::move(excs);
    k.sigs = std::move(sigs);
    k.state = std::move(state);
    return std::make_shared<const KernelType>(std::move(k));
}

bool equal(const ValueTypePtr& a, const ValueTypePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->tag != b->tag) return false;
    switch (a->tag) {
        case ValueType::Tag::Bottom: return true;
        case ValueType::Tag::Ground: return equal(a->ground, b->ground);
        case ValueType::Tag::Prod:
        case ValueType::Tag::Sum: return equal(a->v0, b->v0) && equal(a->v1, b->v1);
        case ValueType::Tag::UserFun:
            return equal(a->v0, b->v0) && equal(a->uresult, b->uresult);
        case ValueType::Tag::KernelFun:
            return equal(a->v0, b->v0) && equal(a->kresult, b->kresult);
        case ValueType::Tag::Runner:
            return a->handled == b->handled && a->external == b->external &&
                   a->sigs == b->sigs && equal(a->state, b->state);
    }
    return false;
}

bool equal(const UserTypePtr& a, const UserTypePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return equal(a->carrier, b->carrier) && a->ops == b->ops && a->excs == b->excs;
}

bool equal(const KernelTypePtr& a, const KernelTypePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return equal(a->carrier, b->carrier) && a->ops == b->ops && a->excs == b->excs &&
           a->sigs == b->sigs && equal(a->state, b->state);
}

std::optional<GroundPtr> as_ground(const ValueTypePtr& t) {
    if (!t) return std::nullopt;
    switch (t->tag) {
        case ValueType::Tag::Ground: return t->ground;
        case ValueType::Tag::Prod: {
            auto a = as_ground(t->v0), b = as_ground(t->v1);
            if (a && b) return ground_prod(*a, *b);
            return std::nullopt;
        }
        case ValueType::Tag::Sum: {
            auto a = as_ground(t->v0), b = as_ground(t->v1);
            if (a && b) return ground_sum(*a, *b);
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

// ---------------------------------------------------------------- effect tables

void EffectTables::check_fresh(const std::string& name) const {
    if (is_operation(name) || is_constant(name) || is_exception(name) || is_signal(name))
        throw std::invalid_argument("name already declared: " + name);
}

void EffectTables::declare_operation(const std::string& name, OpSig sig) {
    check_fresh(name);
    operations.emplace(name, std::move(sig));
}

void EffectTables::declare_exception(const std::string& name) {
    check_fresh(name);
    exceptions.insert(name);
}

void EffectTables::declare_signal(const std::string& name) {
    check_fresh(name);
    signals.insert(name);
}

EffectTables EffectTables::with_builtins() {
    EffectTables t;
    auto i = ground_int();
    auto s = ground_str();
    t.constants["+"] = ConstSig{{i, i}, i};
    t.constants["-"] = ConstSig{{i, i}, i};
    t.constants["*"] = ConstSig{{i, i}, i};
    t.constants["="] = ConstSig{{i, i}, ground_bool()};
    t.constants["<"] = ConstSig{{i, i}, ground_bool()};
    t.constants["concat"] = ConstSig{{s, s}, s};
    return t;
}

// ---------------------------------------------------------------- sorts

Sort sort_of(TermKind k) {
    switch (k) {
        case TermKind::Var:
        case TermKind::IntLit:
        case TermKind::BoolLit:
        case TermKind::StrLit:
        case TermKind::UnitLit:
        case TermKind::ConstApp:
        case TermKind::Pair:
        case TermKind::Inl:
        case TermKind::Inr:
        case TermKind::Annot:
        case TermKind::Fun:
        case TermKind::FunK:
        case TermKind::RunnerLit: return Sort::Value;
        case TermKind::UReturn:
        case TermKind::UApply:
        case TermKind::UTry:
        case TermKind::UMatchPair:
        case TermKind::UMatchEmpty:
        case TermKind::UMatchSum:
        case TermKind::UMatchBool:
        case TermKind::UOp:
        case TermKind::UGenericOp:
        case TermKind::URaise:
        case TermKind::URun:
        case TermKind::UKernelSwitch:
        case TermKind::ULet: return Sort::User;
        default: return Sort::Kernel;
    }
}

// ---------------------------------------------------------------- finally

FinallyPtr make_finally(std::string ret_var, std::string ret_state, TermPtr ret_body,
                        std::map<std::string, RaiseClause> on_raise,
                        std::map<std::string, TermPtr> on_kill) {
    if (ret_var.empty() || !ret_body)
        throw std::invalid_argument("finally clauses need a return clause");
    FinallyClauses f;
    f.ret_var = std::move(ret_var);
    f.ret_state = std::move(ret_state);
    f.ret_body = std::move(ret_body);
    f.on_raise = std::move(on_raise);
    f.on_kill = std::move(on_kill);
    return std::make_shared<const FinallyClauses>(std::move(f));
}

// ---------------------------------------------------------------- builders

namespace build {

static TermPtr mk(Term t) { return std::make_shared<const Term>(std::move(t)); }

TermPtr var(const std::string& n, SourcePos pos) {
    Term t;
    t.kind = TermKind::Var;
    t.pos = pos;
    t.name = n;
    return mk(std::move(t));
}

TermPtr int_lit(long long v, SourcePos pos) {
    Term t;
    t.kind = TermKind::IntLit;
    t.pos = pos;
    t.ival = v;
    return mk(std::move(t));
}

TermPtr bool_lit(bool v, SourcePos pos) {
    Term t;
    t.kind = TermKind::BoolLit;
    t.pos = pos;
    t.bval = v;
    return mk(std::move(t));
}

TermPtr str_lit(const std::string& v, SourcePos pos) {
    Term t;
    t.kind = TermKind::StrLit;
    t.pos = pos;
    t.sval = v;
    return mk(std::move(t));
}

TermPtr unit(SourcePos pos) {
    Term t;
    t.kind = TermKind::UnitLit;
    t.pos = pos;
    return mk(std::move(t));
}

TermPtr const_app(const std::string& name, std::vector<TermPtr> args, SourcePos pos) {
    Term t;
    t.kind = TermKind::ConstApp;
    t.pos = pos;
    t.name = name;
    t.args = std::move(args);
    return mk(std::move(t));
}

TermPtr pair(TermPtr a, TermPtr b, SourcePos pos) {
    Term t;
    t.kind = TermKind::Pair;
    t.pos = pos;
    t.t0 = std::move(a);
    t.t1 = std::move(b);
    return mk(std::move(t));
}

static TermPtr inject(TermKind k, TermPtr v, ValueTypePtr anno, SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.t0 = std::move(v);
    t.vtype = std::move(anno);
    return mk(std::move(t));
}

TermPtr inl(TermPtr v, ValueTypePtr anno, SourcePos pos) {
    return inject(TermKind::Inl, std::move(v), std::move(anno), pos);
}

TermPtr inr(TermPtr v, ValueTypePtr anno, SourcePos pos) {
    return inject(TermKind::Inr, std::move(v), std::move(anno), pos);
}

TermPtr annot(TermPtr v, ValueTypePtr ty, SourcePos pos) {
    Term t;
    t.kind = TermKind::Annot;
    t.pos = pos;
    t.t0 = std::move(v);
    t.vtype = std::move(ty);
    return mk(std::move(t));
}

TermPtr fun(const std::string& param, ValueTypePtr pt, TermPtr body, SourcePos pos) {
    Term t;
    t.kind = TermKind::Fun;
    t.pos = pos;
    t.name = param;
    t.vtype = std::move(pt);
    t.t0 = std::move(body);
    return mk(std::move(t));
}

TermPtr funk(const std::string& param, ValueTypePtr pt, GroundPtr state, TermPtr body,
             SourcePos pos) {
    Term t;
    t.kind = TermKind::FunK;
    t.pos = pos;
    t.name = param;
    t.vtype = std::move(pt);
    t.ground = std::move(state);
    t.t0 = std::move(body);
    return mk(std::move(t));
}

TermPtr runner(std::map<std::string, CoopClause> coops, GroundPtr state, SourcePos pos) {
    Term t;
    t.kind = TermKind::RunnerLit;
    t.pos = pos;
    t.coops = std::move(coops);
    t.ground = std::move(state);
    return mk(std::move(t));
}

TermPtr ureturn(TermPtr v, SourcePos pos) {
    Term t;
    t.kind = TermKind::UReturn;
    t.pos = pos;
    t.t0 = std::move(v);
    return mk(std::move(t));
}

static TermPtr apply(TermKind k, TermPtr f, TermPtr a, SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.t0 = std::move(f);
    t.t1 = std::move(a);
    return mk(std::move(t));
}

TermPtr uapply(TermPtr f, TermPtr a, SourcePos pos) {
    return apply(TermKind::UApply, std::move(f), std::move(a), pos);
}

static TermPtr try_with(TermKind k, TermPtr m, const std::string& x, TermPtr body,
                        std::map<std::string, TermPtr> handlers, SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.t0 = std::move(m);
    t.name = x;
    t.t1 = std::move(body);
    t.handlers = std::move(handlers);
    return mk(std::move(t));
}

TermPtr utry(TermPtr m, const std::string& x, TermPtr body,
             std::map<std::string, TermPtr> handlers, SourcePos pos) {
    return try_with(TermKind::UTry, std::move(m), x, std::move(body), std::move(handlers), pos);
}

static TermPtr match_pair(TermKind k, TermPtr scrut, const std::string& x,
                          const std::string& y, TermPtr body, SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.t0 = std::move(scrut);
    t.name = x;
    t.name2 = y;
    t.t1 = std::move(body);
    return mk(std::move(t));
}

TermPtr umatch_pair(TermPtr scrut, const std::string& x, const std::string& y, TermPtr body,
                    SourcePos pos) {
    return match_pair(TermKind::UMatchPair, std::move(scrut), x, y, std::move(body), pos);
}

TermPtr umatch_empty(TermPtr scrut, ValueTypePtr carrier, SourcePos pos) {
    Term t;
    t.kind = TermKind::UMatchEmpty;
    t.pos = pos;
    t.t0 = std::move(scrut);
    t.vtype = std::move(carrier);
    return mk(std::move(t));
}

static TermPtr match_sum(TermKind k, TermPtr scrut, const std::string& x, TermPtr l,
                         const std::string& y, TermPtr r, SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.t0 = std::move(scrut);
    t.name = x;
    t.t1 = std::move(l);
    t.name2 = y;
    t.t2 = std::move(r);
    return mk(std::move(t));
}

TermPtr umatch_sum(TermPtr scrut, const std::string& x, TermPtr l, const std::string& y,
                   TermPtr r, SourcePos pos) {
    return match_sum(TermKind::UMatchSum, std::move(scrut), x, std::move(l), y, std::move(r),
                     pos);
}

static TermPtr match_bool(TermKind k, TermPtr scrut, TermPtr then_b, TermPtr else_b,
                          SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.t0 = std::move(scrut);
    t.t1 = std::move(then_b);
    t.t2 = std::move(else_b);
    return mk(std::move(t));
}

TermPtr umatch_bool(TermPtr scrut, TermPtr then_b, TermPtr else_b, SourcePos pos) {
    return match_bool(TermKind::UMatchBool, std::move(scrut), std::move(then_b),
                      std::move(else_b), pos);
}

static TermPtr op_call(TermKind k, const std::string& op, TermPtr arg, const std::string& x,
                       TermPtr succ, std::map<std::string, TermPtr> handlers,
                       ValueTypePtr anno, GroundPtr state, SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.name = op;
    t.t0 = std::move(arg);
    t.name2 = x;
    t.t1 = std::move(succ);
    t.handlers = std::move(handlers);
    t.vtype = std::move(anno);
    t.ground = std::move(state);
    return mk(std::move(t));
}

TermPtr uop(const std::string& op, TermPtr arg, const std::string& x, TermPtr succ,
            std::map<std::string, TermPtr> handlers, ValueTypePtr anno, SourcePos pos) {
    return op_call(TermKind::UOp, op, std::move(arg), x, std::move(succ), std::move(handlers),
                   std::move(anno), nullptr, pos);
}

TermPtr ugeneric(const std::string& op, TermPtr arg, SourcePos pos) {
    Term t;
    t.kind = TermKind::UGenericOp;
    t.pos = pos;
    t.name = op;
    t.t0 = std::move(arg);
    return mk(std::move(t));
}

TermPtr uraise(const std::string& e, ValueTypePtr anno, SourcePos pos) {
    Term t;
    t.kind = TermKind::URaise;
    t.pos = pos;
    t.name = e;
    t.vtype = std::move(anno);
    return mk(std::move(t));
}

TermPtr urun(TermPtr runner, TermPtr init, TermPtr body, FinallyPtr fin, SourcePos pos) {
    Term t;
    t.kind = TermKind::URun;
    t.pos = pos;
    t.t0 = std::move(runner);
    t.t1 = std::move(init);
    t.t2 = std::move(body);
    t.fin = std::move(fin);
    return mk(std::move(t));
}

TermPtr ukernel(TermPtr k, TermPtr init, FinallyPtr fin, SourcePos pos) {
    Term t;
    t.kind = TermKind::UKernelSwitch;
    t.pos = pos;
    t.t0 = std::move(k);
    t.t1 = std::move(init);
    t.fin = std::move(fin);
    return mk(std::move(t));
}

static TermPtr let(TermKind k, const std::string& x, TermPtr bound, TermPtr body,
                   SourcePos pos) {
    Term t;
    t.kind = k;
    t.pos = pos;
    t.name = x;
    t.t0 = std::move(bound);
    t.t1 = std::move(body);
    return mk(std::move(t));
}

TermPtr ulet(const std::string& x, TermPtr bound, TermPtr body, SourcePos pos) {
    return let(TermKind::ULet, x, std::move(bound), std::move(body), pos);
}

TermPtr kreturn(TermPtr v, GroundPtr anno, SourcePos pos) {
    Term t;
    t.kind = TermKind::KReturn;
    t.pos = pos;
    t.t0 = std::move(v);
    t.ground = std::move(anno);
    return mk(std::move(t));
}

TermPtr kapply(TermPtr f, TermPtr a, SourcePos pos) {
    return apply(TermKind::KApply, std::move(f), std::move(a), pos);
}

TermPtr ktry(TermPtr k, const std::string& x, TermPtr body,
             std::map<std::string, TermPtr> handlers, SourcePos pos) {
    return try_with(TermKind::KTry, std::move(k), x, std::move(body), std::move(handlers), pos);
}

TermPtr kmatch_pair(TermPtr scrut, const std::string& x, const std::string& y, TermPtr body,
                    SourcePos pos) {
    return match_pair(TermKind::KMatchPair, std::move(scrut), x, y, std::move(body), pos);
}

TermPtr kmatch_empty(TermPtr scrut, ValueTypePtr carrier, GroundPtr state, SourcePos pos) {
    Term t;
    t.kind = TermKind::KMatchEmpty;
    t.pos = pos;
    t.t0 = std::move(scrut);
    t.vtype = std::move(carrier);
    t.ground = std::move(state);
    return mk(std::move(t));
}

TermPtr kmatch_sum(TermPtr scrut, const std::string& x, TermPtr l, const std::string& y,
                   TermPtr r, SourcePos pos) {
    return match_sum(TermKind::KMatchSum, std::move(scrut), x, std::move(l), y, std::move(r),
                     pos);
}

TermPtr kmatch_bool(TermPtr scrut, TermPtr then_b, TermPtr else_b, SourcePos pos) {
    return match_bool(TermKind::KMatchBool, std::move(scrut), std::move(then_b),
                      std::move(else_b), pos);
}

TermPtr kop(const std::string& op, TermPtr arg, const std::string& x, TermPtr succ,
            std::map<std::string, TermPtr> handlers, ValueTypePtr anno, GroundPtr state,
            SourcePos pos) {
    return op_call(TermKind::KOp, op, std::move(arg), x, std::move(succ), std::move(handlers),
                   std::move(anno), std::move(state), pos);
}

TermPtr kgeneric(const std::string& op, TermPtr arg, SourcePos pos) {
    Term t;
    t.kind = TermKind::KGenericOp;
    t.pos = pos;
    t.name = op;
    t.t0 = std::move(arg);
    return mk(std::move(t));
}

TermPtr kraise(const std::string& e, ValueTypePtr anno, GroundPtr state, SourcePos pos) {
    Term t;
    t.kind = TermKind::KRaise;
    t.pos = pos;
    t.name = e;
    t.vtype = std::move(anno);
    t.ground = std::move(state);
    return mk(std::move(t));
}

TermPtr kkill(const std::string& s, ValueTypePtr anno, GroundPtr state, SourcePos pos) {
    Term t;
    t.kind = TermKind::KKill;
    t.pos = pos;
    t.name = s;
    t.vtype = std::move(anno);
    t.ground = std::move(state);
    return mk(std::move(t));
}

TermPtr kgetenv(const std::string& c, TermPtr body, GroundPtr anno, SourcePos pos) {
    Term t;
    t.kind = TermKind::KGetenv;
    t.pos = pos;
    t.name = c;
    t.t0 = std::move(body);
    t.ground = std::move(anno);
    return mk(std::move(t));
}

TermPtr ksetenv(TermPtr v, TermPtr k, SourcePos pos) {
    Term t;
    t.kind = TermKind::KSetenv;
    t.pos = pos;
    t.t0 = std::move(v);
    t.t1 = std::move(k);
    return mk(std::move(t));
}

TermPtr kuser(TermPtr m, const std::string& x, TermPtr ret_body,
              std::map<std::string, TermPtr> handlers, SourcePos pos) {
    Term t;
    t.kind = TermKind::KUserSwitch;
    t.pos = pos;
    t.t0 = std::move(m);
    t.name = x;
    t.t1 = std::move(ret_body);
    t.handlers = std::move(handlers);
    return mk(std::move(t));
}

TermPtr klet(const std::string& x, TermPtr bound, TermPtr body, SourcePos pos) {
    return let(TermKind::KLet, x, std::move(bound), std::move(body), pos);
}

} // namespace build
} // namespace coop
