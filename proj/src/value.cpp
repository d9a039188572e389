#include "coop/value.hpp"

#include <sstream>

namespace coop {

EnvPtr env_bind(const EnvPtr& env, const std::string& name, const RtPtr& value) {
    return std::make_shared<const EnvNode>(EnvNode{name, value, env});
}

RtPtr env_lookup(const EnvPtr& env, const std::string& name) {
    for (const EnvNode* n = env.get(); n; n = n->tail.get())
        if (n->name == name) return n->value;
    return nullptr;
}

namespace {
RtPtr mk(RtValue v) { return std::make_shared<const RtValue>(std::move(v)); }
} // namespace

RtPtr rt_int(long long v) {
    RtValue r;
    r.tag = RtValue::Tag::Int;
    r.ival = v;
    return mk(std::move(r));
}
RtPtr rt_bool(bool v) {
    RtValue r;
    r.tag = RtValue::Tag::Bool;
    r.bval = v;
    return mk(std::move(r));
}
RtPtr rt_str(std::string v) {
    RtValue r;
    r.tag = RtValue::Tag::Str;
    r.sval = std::move(v);
    return mk(std::move(r));
}
RtPtr rt_unit() {
    static const RtPtr u = mk(RtValue{});
    return u;
}
RtPtr rt_pair(RtPtr a, RtPtr b) {
    RtValue r;
    r.tag = RtValue::Tag::Pair;
    r.v0 = std::move(a);
    r.v1 = std::move(b);
    return mk(std::move(r));
}
RtPtr rt_inl(RtPtr v) {
    RtValue r;
    r.tag = RtValue::Tag::Inl;
    r.v0 = std::move(v);
    return mk(std::move(r));
}
RtPtr rt_inr(RtPtr v) {
    RtValue r;
    r.tag = RtValue::Tag::Inr;
    r.v0 = std::move(v);
    return mk(std::move(r));
}
RtPtr rt_fun(EnvPtr env, std::string param, TermPtr body) {
    RtValue r;
    r.tag = RtValue::Tag::Fun;
    r.env = std::move(env);
    r.param = std::move(param);
    r.body = std::move(body);
    return mk(std::move(r));
}
RtPtr rt_funk(EnvPtr env, std::string param, TermPtr body) {
    RtValue r;
    r.tag = RtValue::Tag::FunK;
    r.env = std::move(env);
    r.param = std::move(param);
    r.body = std::move(body);
    return mk(std::move(r));
}
RtPtr rt_runner(EnvPtr env, std::map<std::string, CoopClause> coops, GroundPtr state_ty) {
    RtValue r;
    r.tag = RtValue::Tag::Runner;
    r.env = std::move(env);
    r.coops = std::move(coops);
    r.state_ty = std::move(state_ty);
    return mk(std::move(r));
}

bool rt_equal(const RtPtr& a, const RtPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b || a->tag != b->tag) return false;
    switch (a->tag) {
        case RtValue::Tag::Int: return a->ival == b->ival;
        case RtValue::Tag::Bool: return a->bval == b->bval;
        case RtValue::Tag::Str: return a->sval == b->sval;
        case RtValue::Tag::Unit: return true;
        case RtValue::Tag::Pair: return rt_equal(a->v0, b->v0) && rt_equal(a->v1, b->v1);
        case RtValue::Tag::Inl:
        case RtValue::Tag::Inr: return rt_equal(a->v0, b->v0);
        case RtValue::Tag::Fun:
        case RtValue::Tag::FunK:
        case RtValue::Tag::Runner: return false;   // identity handled above
    }
    return false;
}

std::string show_value(const RtPtr& v) {
    if (!v) return "<null>";
    std::ostringstream out;
    switch (v->tag) {
        case RtValue::Tag::Int: out << v->ival; break;
        case RtValue::Tag::Bool: out << (v->bval ? "true" : "false"); break;
        case RtValue::Tag::Str: {
            out << '"';
            for (char c : v->sval) {
                switch (c) {
                    case '"': out << "\\\""; break;
                    case '\\': out << "\\\\"; break;
                    case '\n': out << "\\n"; break;
                    case '\t': out << "\\t"; break;
                    default: out << c;
                }
            }
            out << '"';
            break;
        }
        case RtValue::Tag::Unit: out << "()"; break;
        case RtValue::Tag::Pair:
            out << '(' << show_value(v->v0) << ", " << show_value(v->v1) << ')';
            break;
        case RtValue::Tag::Inl: out << "inl " << show_value(v->v0); break;
        case RtValue::Tag::Inr: out << "inr " << show_value(v->v0); break;
        case RtValue::Tag::Fun: out << "<fun>"; break;
        case RtValue::Tag::FunK: out << "<funK>"; break;
        case RtValue::Tag::Runner: out << "<runner>"; break;
    }
    return out.str();
}

bool conforms(const RtPtr& v, const GroundPtr& g) {
    if (!v || !g) return false;
    switch (g->tag) {
        case Ground::Tag::Base:
            if (g->base == "int") return v->tag == RtValue::Tag::Int;
            if (g->base == "bool") return v->tag == RtValue::Tag::Bool;
            return v->tag == RtValue::Tag::Str;
        case Ground::Tag::Unit: return v->tag == RtValue::Tag::Unit;
        case Ground::Tag::Empty: return false;
        case Ground::Tag::Prod:
            return v->tag == RtValue::Tag::Pair && conforms(v->v0, g->fst) &&
                   conforms(v->v1, g->snd);
        case Ground::Tag::Sum:
            if (v->tag == RtValue::Tag::Inl) return conforms(v->v0, g->fst);
            if (v->tag == RtValue::Tag::Inr) return conforms(v->v0, g->snd);
            return false;
    }
    return false;
}

} // namespace coop
