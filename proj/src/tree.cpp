#include "coop/tree.hpp"

#include <sstream>

namespace coop {

namespace {
std::shared_ptr<SemValue> mk_sem(SemValue::Tag tag) {
    auto v = std::make_shared<SemValue>();
    v->tag = tag;
    return v;
}
} // namespace

SemPtr sem_int(long long v) {
    auto s = mk_sem(SemValue::Tag::Int);
    s->ival = v;
    return s;
}

SemPtr sem_bool(bool v) {
    auto s = mk_sem(SemValue::Tag::Bool);
    s->bval = v;
    return s;
}

SemPtr sem_str(std::string v) {
    auto s = mk_sem(SemValue::Tag::Str);
    s->sval = std::move(v);
    return s;
}

SemPtr sem_unit() {
    static const SemPtr u = mk_sem(SemValue::Tag::Unit);
    return u;
}

SemPtr sem_pair(SemPtr a, SemPtr b) {
    auto s = mk_sem(SemValue::Tag::Pair);
    s->v0 = std::move(a);
    s->v1 = std::move(b);
    return s;
}

SemPtr sem_inl(SemPtr v) {
    auto s = mk_sem(SemValue::Tag::Inl);
    s->v0 = std::move(v);
    return s;
}

SemPtr sem_inr(SemPtr v) {
    auto s = mk_sem(SemValue::Tag::Inr);
    s->v0 = std::move(v);
    return s;
}

SemPtr sem_user_fn(std::function<TreePtr(const SemPtr&)> f, ValueTypePtr arg) {
    auto s = mk_sem(SemValue::Tag::UserFn);
    s->ufn = std::move(f);
    s->fn_arg = std::move(arg);
    return s;
}

SemPtr sem_kernel_fn(std::function<TreePtr(const SemPtr&, const SemPtr&)> f, ValueTypePtr arg,
                     GroundPtr state) {
    auto s = mk_sem(SemValue::Tag::KernelFn);
    s->kfn = std::move(f);
    s->fn_arg = std::move(arg);
    s->fn_state = std::move(state);
    return s;
}

SemPtr sem_runner(RunnerDenPtr r) {
    auto s = mk_sem(SemValue::Tag::Runner);
    s->runner = std::move(r);
    return s;
}

namespace {
std::shared_ptr<Tree> mk_tree(Tree::Tag tag) {
    auto t = std::make_shared<Tree>();
    t->tag = tag;
    return t;
}
} // namespace

TreePtr tree_ret(SemPtr v) {
    auto t = mk_tree(Tree::Tag::Ret);
    t->value = std::move(v);
    return t;
}

TreePtr tree_exc(std::string e) {
    auto t = mk_tree(Tree::Tag::Exc);
    t->name = std::move(e);
    return t;
}

TreePtr tree_kret(SemPtr v, SemPtr state) {
    auto t = mk_tree(Tree::Tag::KRet);
    t->value = std::move(v);
    t->state = std::move(state);
    return t;
}

TreePtr tree_kexc(std::string e, SemPtr state) {
    auto t = mk_tree(Tree::Tag::KExc);
    t->name = std::move(e);
    t->state = std::move(state);
    return t;
}

TreePtr tree_sig(std::string s) {
    auto t = mk_tree(Tree::Tag::Sig);
    t->name = std::move(s);
    return t;
}

const OpSig& TreeCtx::sig(const std::string& op) const {
    auto it = tables.operations.find(op);
    if (it == tables.operations.end())
        throw OracleError("operation '" + op + "' is not declared");
    return it->second;
}

TreePtr tree_op(TreeCtx& ctx, const std::string& op, SemPtr arg, std::vector<TreePtr> children,
                std::map<std::string, TreePtr> exc_children) {
    const OpSig& sig = ctx.sig(op);
    if (children.size() != enumerate(ctx, sig.result).size())
        throw OracleError("op node for '" + op + "' has the wrong number of children");
    for (const auto& e : sig.excs)
        if (!exc_children.count(e))
            throw OracleError("op node for '" + op + "' misses exception child '" + e + "'");
    if (exc_children.size() != sig.excs.size())
        throw OracleError("op node for '" + op + "' has a stray exception child");
    ctx.charge();
    auto t = mk_tree(Tree::Tag::Op);
    t->name = op;
    t->arg = std::move(arg);
    t->children = std::move(children);
    t->exc_children = std::move(exc_children);
    return t;
}

std::vector<SemPtr> enumerate(const TreeCtx& ctx, const GroundPtr& g) {
    switch (g->tag) {
    case Ground::Tag::Unit: return {sem_unit()};
    case Ground::Tag::Empty: return {};
    case Ground::Tag::Base: {
        if (g->base == "bool") return {sem_bool(false), sem_bool(true)};
        if (g->base == "int") {
            std::vector<SemPtr> out;
            for (long long i = 0; i < ctx.int_bound; ++i) out.push_back(sem_int(i));
            return out;
        }
        throw OracleError("type '" + g->base + "' is not enumerable");
    }
    case Ground::Tag::Prod: {
        std::vector<SemPtr> out;
        for (const auto& a : enumerate(ctx, g->fst))
            for (const auto& b : enumerate(ctx, g->snd)) out.push_back(sem_pair(a, b));
        return out;
    }
    case Ground::Tag::Sum: {
        std::vector<SemPtr> out;
        for (const auto& a : enumerate(ctx, g->fst)) out.push_back(sem_inl(a));
        for (const auto& b : enumerate(ctx, g->snd)) out.push_back(sem_inr(b));
        return out;
    }
    }
    throw OracleError("corrupt ground type");
}

std::vector<SemPtr> enumerate(const TreeCtx& ctx, const ValueTypePtr& t) {
    switch (t->tag) {
    case ValueType::Tag::Ground: return enumerate(ctx, t->ground);
    case ValueType::Tag::Bottom: return {};
    case ValueType::Tag::Prod: {
        std::vector<SemPtr> out;
        for (const auto& a : enumerate(ctx, t->v0))
            for (const auto& b : enumerate(ctx, t->v1)) out.push_back(sem_pair(a, b));
        return out;
    }
    case ValueType::Tag::Sum: {
        std::vector<SemPtr> out;
        for (const auto& a : enumerate(ctx, t->v0)) out.push_back(sem_inl(a));
        for (const auto& b : enumerate(ctx, t->v1)) out.push_back(sem_inr(b));
        return out;
    }
    case ValueType::Tag::UserFun:
    case ValueType::Tag::KernelFun:
    case ValueType::Tag::Runner: throw OracleError("function types are not enumerable");
    }
    throw OracleError("corrupt value type");
}

bool enumerable(const TreeCtx& ctx, const ValueTypePtr& t) {
    try {
        (void)enumerate(ctx, t);
        return true;
    } catch (const OracleError&) {
        return false;
    }
}

size_t enum_index(const TreeCtx& ctx, const GroundPtr& g, const SemPtr& v) {
    auto values = enumerate(ctx, g);
    for (size_t i = 0; i < values.size(); ++i)
        if (sem_equal(ctx, values[i], v)) return i;
    throw OracleError("value " + show_sem(v) + " is outside the enumeration bound");
}

bool sem_equal(const TreeCtx& ctx, const SemPtr& a, const SemPtr& b) {
    if (a->tag != b->tag) return false;
    switch (a->tag) {
    case SemValue::Tag::Int: return a->ival == b->ival;
    case SemValue::Tag::Bool: return a->bval == b->bval;
    case SemValue::Tag::Str: return a->sval == b->sval;
    case SemValue::Tag::Unit: return true;
    case SemValue::Tag::Pair:
        return sem_equal(ctx, a->v0, b->v0) && sem_equal(ctx, a->v1, b->v1);
    case SemValue::Tag::Inl:
    case SemValue::Tag::Inr: return sem_equal(ctx, a->v0, b->v0);
    case SemValue::Tag::UserFn: {
        if (!a->fn_arg || !b->fn_arg || !equal(a->fn_arg, b->fn_arg)) return false;
        for (const auto& x : enumerate(ctx, a->fn_arg))
            if (!tree_equal(ctx, a->ufn(x), b->ufn(x))) return false;
        return true;
    }
    case SemValue::Tag::KernelFn: {
        if (!a->fn_arg || !b->fn_arg || !equal(a->fn_arg, b->fn_arg)) return false;
        if (!a->fn_state || !b->fn_state || !equal(a->fn_state, b->fn_state)) return false;
        for (const auto& x : enumerate(ctx, a->fn_arg))
            for (const auto& c : enumerate(ctx, a->fn_state))
                if (!tree_equal(ctx, a->kfn(x, c), b->kfn(x, c))) return false;
        return true;
    }
    case SemValue::Tag::Runner: {
        const RunnerDen& ra = *a->runner;
        const RunnerDen& rb = *b->runner;
        if (!equal(ra.state_ty, rb.state_ty)) return false;
        if (ra.coops.size() != rb.coops.size()) return false;
        for (const auto& [op, fa] : ra.coops) {
            auto it = rb.coops.find(op);
            if (it == rb.coops.end()) return false;
            const OpSig& sig = ctx.sig(op);
            for (const auto& x : enumerate(ctx, sig.param))
                for (const auto& c : enumerate(ctx, ra.state_ty))
                    if (!tree_equal(ctx, fa(x, c), it->second(x, c))) return false;
        }
        return true;
    }
    }
    return false;
}

bool tree_equal(const TreeCtx& ctx, const TreePtr& a, const TreePtr& b) {
    if (a->tag != b->tag) return false;
    switch (a->tag) {
    case Tree::Tag::Ret: return sem_equal(ctx, a->value, b->value);
    case Tree::Tag::Exc:
    case Tree::Tag::Sig: return a->name == b->name;
    case Tree::Tag::KRet:
        return sem_equal(ctx, a->value, b->value) && sem_equal(ctx, a->state, b->state);
    case Tree::Tag::KExc: return a->name == b->name && sem_equal(ctx, a->state, b->state);
    case Tree::Tag::Op: {
        if (a->name != b->name || !sem_equal(ctx, a->arg, b->arg)) return false;
        if (a->children.size() != b->children.size()) return false;
        for (size_t i = 0; i < a->children.size(); ++i)
            if (!tree_equal(ctx, a->children[i], b->children[i])) return false;
        if (a->exc_children.size() != b->exc_children.size()) return false;
        for (const auto& [e, ta] : a->exc_children) {
            auto it = b->exc_children.find(e);
            if (it == b->exc_children.end() || !tree_equal(ctx, ta, it->second)) return false;
        }
        return true;
    }
    }
    return false;
}

std::string show_sem(const SemPtr& v) {
    switch (v->tag) {
    case SemValue::Tag::Int: return std::to_string(v->ival);
    case SemValue::Tag::Bool: return v->bval ? "true" : "false";
    case SemValue::Tag::Str: return "\"" + v->sval + "\"";
    case SemValue::Tag::Unit: return "()";
    case SemValue::Tag::Pair: return "(" + show_sem(v->v0) + ", " + show_sem(v->v1) + ")";
    case SemValue::Tag::Inl: return "inl " + show_sem(v->v0);
    case SemValue::Tag::Inr: return "inr " + show_sem(v->v0);
    case SemValue::Tag::UserFn: return "<fun>";
    case SemValue::Tag::KernelFn: return "<funK>";
    case SemValue::Tag::Runner: return "<runner>";
    }
    return "?";
}

std::string show_tree(const TreePtr& t) {
    switch (t->tag) {
    case Tree::Tag::Ret: return "return " + show_sem(t->value);
    case Tree::Tag::Exc: return "raise " + t->name;
    case Tree::Tag::KRet: return "return " + show_sem(t->value) + " @ " + show_sem(t->state);
    case Tree::Tag::KExc: return "raise " + t->name + " @ " + show_sem(t->state);
    case Tree::Tag::Sig: return "kill " + t->name;
    case Tree::Tag::Op: {
        std::ostringstream out;
        out << t->name << "(" << show_sem(t->arg) << "; ";
        for (size_t i = 0; i < t->children.size(); ++i) {
            if (i) out << ", ";
            out << show_tree(t->children[i]);
        }
        for (const auto& [e, child] : t->exc_children) out << "; " << e << " -> " << show_tree(child);
        out << ")";
        return out.str();
    }
    }
    return "?";
}

RtPtr sem_to_rt(const SemPtr& v) {
    switch (v->tag) {
    case SemValue::Tag::Int: return rt_int(v->ival);
    case SemValue::Tag::Bool: return rt_bool(v->bval);
    case SemValue::Tag::Str: return rt_str(v->sval);
    case SemValue::Tag::Unit: return rt_unit();
    case SemValue::Tag::Pair: return rt_pair(sem_to_rt(v->v0), sem_to_rt(v->v1));
    case SemValue::Tag::Inl: return rt_inl(sem_to_rt(v->v0));
    case SemValue::Tag::Inr: return rt_inr(sem_to_rt(v->v0));
    default: throw OracleError("cannot compare a function value with the evaluator");
    }
}

SemPtr rt_to_sem(const RtPtr& v) {
    switch (v->tag) {
    case RtValue::Tag::Int: return sem_int(v->ival);
    case RtValue::Tag::Bool: return sem_bool(v->bval);
    case RtValue::Tag::Str: return sem_str(v->sval);
    case RtValue::Tag::Unit: return sem_unit();
    case RtValue::Tag::Pair: return sem_pair(rt_to_sem(v->v0), rt_to_sem(v->v1));
    case RtValue::Tag::Inl: return sem_inl(rt_to_sem(v->v0));
    case RtValue::Tag::Inr: return sem_inr(rt_to_sem(v->v0));
    default: throw OracleError("cannot denote a closure as ground data");
    }
}

TreePtr utree_bind(TreeCtx& ctx, const TreePtr& t,
                   const std::function<TreePtr(const SemPtr&)>& on_ret,
                   const std::function<TreePtr(const std::string&)>& on_exc) {
    switch (t->tag) {
    case Tree::Tag::Ret: return on_ret(t->value);
    case Tree::Tag::Exc: return on_exc(t->name);
    case Tree::Tag::Sig: return t;
    case Tree::Tag::Op: {
        std::vector<TreePtr> children;
        children.reserve(t->children.size());
        for (const auto& c : t->children) children.push_back(utree_bind(ctx, c, on_ret, on_exc));
        std::map<std::string, TreePtr> exc_children;
        for (const auto& [e, c] : t->exc_children)
            exc_children[e] = utree_bind(ctx, c, on_ret, on_exc);
        return tree_op(ctx, t->name, t->arg, std::move(children), std::move(exc_children));
    }
    default: throw OracleError("kernel payload in a user tree");
    }
}

TreePtr ktree_bind(TreeCtx& ctx, const TreePtr& t,
                   const std::function<TreePtr(const SemPtr&, const SemPtr&)>& on_ret,
                   const std::function<TreePtr(const std::string&, const SemPtr&)>& on_exc) {
    switch (t->tag) {
    case Tree::Tag::KRet: return on_ret(t->value, t->state);
    case Tree::Tag::KExc: return on_exc(t->name, t->state);
    case Tree::Tag::Sig: return t;
    case Tree::Tag::Op: {
        std::vector<TreePtr> children;
        children.reserve(t->children.size());
        for (const auto& c : t->children) children.push_back(ktree_bind(ctx, c, on_ret, on_exc));
        std::map<std::string, TreePtr> exc_children;
        for (const auto& [e, c] : t->exc_children)
            exc_children[e] = ktree_bind(ctx, c, on_ret, on_exc);
        return tree_op(ctx, t->name, t->arg, std::move(children), std::move(exc_children));
    }
    default: throw OracleError("user payload in a kernel tree");
    }
}

TreePtr run_morphism(TreeCtx& ctx, const RunnerDen& r, const TreePtr& user_tree,
                     const SemPtr& state) {
    switch (user_tree->tag) {
    case Tree::Tag::Ret: return tree_kret(user_tree->value, state);
    case Tree::Tag::Exc: return tree_kexc(user_tree->name, state);
    case Tree::Tag::Op: {
        auto it = r.coops.find(user_tree->name);
        if (it == r.coops.end())
            throw OracleError("runner has no co-operation for '" + user_tree->name + "'");
        const OpSig& sig = ctx.sig(user_tree->name);
        TreePtr coop = it->second(user_tree->arg, state);
        return ktree_bind(
            ctx, coop,
            [&](const SemPtr& b, const SemPtr& c) {
                size_t i = enum_index(ctx, sig.result, b);
                return run_morphism(ctx, r, user_tree->children[i], c);
            },
            [&](const std::string& e, const SemPtr& c) {
                auto child = user_tree->exc_children.find(e);
                if (child == user_tree->exc_children.end())
                    throw OracleError("co-operation for '" + user_tree->name +
                                      "' raised unexpected exception '" + e + "'");
                return run_morphism(ctx, r, child->second, c);
            });
    }
    default: throw OracleError("kernel payload in a user tree");
    }
}

TreePtr op_probe(TreeCtx& ctx, const std::string& op, const SemPtr& arg) {
    const OpSig& sig = ctx.sig(op);
    std::vector<TreePtr> children;
    for (const auto& b : enumerate(ctx, sig.result)) children.push_back(tree_ret(b));
    std::map<std::string, TreePtr> exc_children;
    for (const auto& e : sig.excs) exc_children[e] = tree_exc(e);
    return tree_op(ctx, op, arg, std::move(children), std::move(exc_children));
}

Finalised finalisation_apply(TreeCtx& ctx, const FinalisationMap& phi, const TreePtr& t) {
    std::function<TreePtr(const TreePtr&)> go = [&](const TreePtr& node) -> TreePtr {
        switch (node->tag) {
        case Tree::Tag::KRet: return phi.on_ret(node->value, node->state);
        case Tree::Tag::KExc:
            if (!phi.excs.count(node->name))
                throw OracleError("finalisation has no clause for exception '" + node->name + "'");
            return phi.on_exc(node->name, node->state);
        case Tree::Tag::Sig:
            if (!phi.sigs.count(node->name))
                throw OracleError("finalisation has no clause for signal '" + node->name + "'");
            return phi.on_sig(node->name);
        case Tree::Tag::Op: {
            std::vector<TreePtr> children;
            children.reserve(node->children.size());
            for (const auto& c : node->children) children.push_back(go(c));
            std::map<std::string, TreePtr> exc_children;
            for (const auto& [e, c] : node->exc_children) exc_children[e] = go(c);
            return tree_op(ctx, node->name, node->arg, std::move(children),
                           std::move(exc_children));
        }
        default: throw OracleError("user payload in a kernel tree");
        }
    };
    return {go(t), t};
}

} // namespace coop
