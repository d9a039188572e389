#include "coop/subst.hpp"

#include <sstream>

#include "coop/print.hpp"

namespace coop {

std::string NameSupply::fresh(const std::string& base) {
    std::string stem = base.substr(0, base.find('$'));
    if (stem.empty()) stem = "x";
    return stem + "$" + std::to_string(next++);
}

// ---------------------------------------------------------------- free_vars

namespace {

void fv(const TermPtr& t, NameSet& bound, NameSet& acc) {
    if (!t) return;
    auto scoped = [&](const std::vector<std::string>& binders, const TermPtr& body) {
        std::vector<std::string> added;
        for (const auto& b : binders)
            if (bound.insert(b).second) added.push_back(b);
        fv(body, bound, acc);
        for (const auto& b : added) bound.erase(b);
    };
    switch (t->kind) {
        case TermKind::Var:
            if (!bound.count(t->name)) acc.insert(t->name);
            return;
        case TermKind::IntLit:
        case TermKind::BoolLit:
        case TermKind::StrLit:
        case TermKind::UnitLit:
        case TermKind::URaise:
        case TermKind::KRaise:
        case TermKind::KKill: return;
        case TermKind::ConstApp:
            for (const auto& a : t->args) fv(a, bound, acc);
            return;
        case TermKind::Pair:
        case TermKind::UApply:
        case TermKind::KApply:
        case TermKind::KSetenv:
            fv(t->t0, bound, acc);
            fv(t->t1, bound, acc);
            return;
        case TermKind::Inl:
        case TermKind::Inr:
        case TermKind::Annot:
        case TermKind::UReturn:
        case TermKind::KReturn:
        case TermKind::UGenericOp:
        case TermKind::KGenericOp:
        case TermKind::UMatchEmpty:
        case TermKind::KMatchEmpty: fv(t->t0, bound, acc); return;
        case TermKind::Fun:
        case TermKind::FunK: scoped({t->name}, t->t0); return;
        case TermKind::RunnerLit:
            for (const auto& [op, cl] : t->coops) scoped({cl.param}, cl.body);
            return;
        case TermKind::UTry:
        case TermKind::KTry:
        case TermKind::KUserSwitch:
            fv(t->t0, bound, acc);
            scoped({t->name}, t->t1);
            for (const auto& [e, h] : t->handlers) fv(h, bound, acc);
            return;
        case TermKind::UMatchPair:
        case TermKind::KMatchPair:
            fv(t->t0, bound, acc);
            scoped({t->name, t->name2}, t->t1);
            return;
        case TermKind::UMatchSum:
        case TermKind::KMatchSum:
            fv(t->t0, bound, acc);
            scoped({t->name}, t->t1);
            scoped({t->name2}, t->t2);
            return;
        case TermKind::UMatchBool:
        case TermKind::KMatchBool:
            fv(t->t0, bound, acc);
            fv(t->t1, bound, acc);
            fv(t->t2, bound, acc);
            return;
        case TermKind::UOp:
        case TermKind::KOp:
            fv(t->t0, bound, acc);
            scoped({t->name2}, t->t1);
            for (const auto& [e, h] : t->handlers) fv(h, bound, acc);
            return;
        case TermKind::URun:
        case TermKind::UKernelSwitch: {
            fv(t->t0, bound, acc);
            fv(t->t1, bound, acc);
            if (t->kind == TermKind::URun) fv(t->t2, bound, acc);
            const auto& f = *t->fin;
            scoped({f.ret_var, f.ret_state}, f.ret_body);
            for (const auto& [e, cl] : f.on_raise) scoped({cl.state_var}, cl.body);
            for (const auto& [s, body] : f.on_kill) fv(body, bound, acc);
            return;
        }
        case TermKind::ULet:
        case TermKind::KLet:
            fv(t->t0, bound, acc);
            scoped({t->name}, t->t1);
            return;
        case TermKind::KGetenv: scoped({t->name}, t->t0); return;
    }
}

} // namespace

NameSet free_vars(const TermPtr& t) {
    NameSet bound, acc;
    fv(t, bound, acc);
    return acc;
}

// ---------------------------------------------------------------- substitute

namespace {

struct Subst {
    const std::string& var;
    const TermPtr& value;
    NameSet value_fv;
    NameSupply& supply;

    TermPtr go(const TermPtr& t) {
        if (!t) return t;
        Term out = *t;
        switch (t->kind) {
            case TermKind::Var: return t->name == var ? value : t;
            case TermKind::IntLit:
            case TermKind::BoolLit:
            case TermKind::StrLit:
            case TermKind::UnitLit:
            case TermKind::URaise:
            case TermKind::KRaise:
            case TermKind::KKill: return t;
            case TermKind::ConstApp:
                for (auto& a : out.args) a = go(a);
                break;
            case TermKind::Pair:
            case TermKind::UApply:
            case TermKind::KApply:
            case TermKind::KSetenv:
                out.t0 = go(t->t0);
                out.t1 = go(t->t1);
                break;
            case TermKind::Inl:
            case TermKind::Inr:
            case TermKind::Annot:
            case TermKind::UReturn:
            case TermKind::KReturn:
            case TermKind::UGenericOp:
            case TermKind::KGenericOp:
            case TermKind::UMatchEmpty:
            case TermKind::KMatchEmpty: out.t0 = go(t->t0); break;
            case TermKind::Fun:
            case TermKind::FunK: scope1(out.name, out.t0); break;
            case TermKind::RunnerLit:
                for (auto& [op, cl] : out.coops) scope1(cl.param, cl.body);
                break;
            case TermKind::UTry:
            case TermKind::KTry:
            case TermKind::KUserSwitch:
                out.t0 = go(t->t0);
                scope1(out.name, out.t1);
                for (auto& [e, h] : out.handlers) h = go(h);
                break;
            case TermKind::UMatchPair:
            case TermKind::KMatchPair:
                out.t0 = go(t->t0);
                scope2(out.name, out.name2, out.t1);
                break;
            case TermKind::UMatchSum:
            case TermKind::KMatchSum:
                out.t0 = go(t->t0);
                scope1(out.name, out.t1);
                scope1(out.name2, out.t2);
                break;
            case TermKind::UMatchBool:
            case TermKind::KMatchBool:
                out.t0 = go(t->t0);
                out.t1 = go(t->t1);
                out.t2 = go(t->t2);
                break;
            case TermKind::UOp:
            case TermKind::KOp:
                out.t0 = go(t->t0);
                scope1(out.name2, out.t1);
                for (auto& [e, h] : out.handlers) h = go(h);
                break;
            case TermKind::URun:
            case TermKind::UKernelSwitch: {
                out.t0 = go(t->t0);
                out.t1 = go(t->t1);
                if (t->kind == TermKind::URun) out.t2 = go(t->t2);
                FinallyClauses f = *t->fin;
                scope2(f.ret_var, f.ret_state, f.ret_body);
                for (auto& [e, cl] : f.on_raise) scope1(cl.state_var, cl.body);
                for (auto& [s, body] : f.on_kill) body = go(body);
                out.fin = std::make_shared<const FinallyClauses>(std::move(f));
                break;
            }
            case TermKind::ULet:
            case TermKind::KLet:
                out.t0 = go(t->t0);
                scope1(out.name, out.t1);
                break;
            case TermKind::KGetenv: scope1(out.name, out.t0); break;
        }
        return std::make_shared<const Term>(std::move(out));
    }

    // Substitutes inside one binding scope, renaming the binder when it would
    // capture a free variable of the replacement.
    void scope1(std::string& binder, TermPtr& body) {
        if (binder == var) return;  // shadowed
        if (value_fv.count(binder) && free_vars(body).count(var)) {
            std::string renamed = supply.fresh(binder);
            body = Subst{binder, build::var(renamed), {renamed}, supply}.go(body);
            binder = renamed;
        }
        body = go(body);
    }

    void scope2(std::string& b1, std::string& b2, TermPtr& body) {
        if (b1 == var || b2 == var) return;  // shadowed

        if (free_vars(body).count(var)) {
            for (std::string* b : {&b1, &b2}) {
                if (value_fv.count(*b)) {
                    std::string renamed = supply.fresh(*b);
                    body = Subst{*b, build::var(renamed), {renamed}, supply}.go(body);
                    *b = renamed;
                }
            }
        }
        body = go(body);
    }
};

} // namespace

TermPtr substitute(const TermPtr& t, const std::string& var, const TermPtr& value,
                   NameSupply& supply) {
    return Subst{var, value, free_vars(value), supply}.go(t);
}

namespace {

// Seeds a private supply beyond any '$n' suffix in either term so generated
// names are fresh for both.
unsigned long long max_suffix(const TermPtr& t) {
    unsigned long long hi = 0;
    std::string s = nameless_form(t);
    for (size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] != '$') continue;
        size_t j = i + 1, v = 0;
        bool any = false;
        while (j < s.size() && isdigit(static_cast<unsigned char>(s[j]))) {
            v = v * 10 + static_cast<size_t>(s[j] - '0');
            ++j;
            any = true;
        }
        if (any && v + 1 > hi) hi = v + 1;
    }
    return hi;
}

} // namespace

TermPtr substitute(const TermPtr& t, const std::string& var, const TermPtr& value) {
    NameSupply supply;
    supply.next = std::max(max_suffix(t), max_suffix(value));
    return substitute(t, var, value, supply);
}

// ---------------------------------------------------------------- nameless form

namespace {

struct Nameless {
    std::ostringstream out;
    std::vector<std::string> stack;  // binder stack; index from the top

    void var(const std::string& n) {
        for (size_t i = stack.size(); i-- > 0;) {
            if (stack[i] == n) {
                out << "%" << (stack.size() - 1 - i);
                return;
            }
        }
        out << n;
    }

    void scoped(std::initializer_list<std::string> binders, const TermPtr& body) {
        for (const auto& b : binders) stack.push_back(b);
        out << "(%";
        go(body);
        out << ")";
        for (size_t i = 0; i < binders.size(); ++i) stack.pop_back();
    }

    void anno(const ValueTypePtr& t) {
        if (t) out << ":" << show(t);
    }

    void anno(const GroundPtr& g) {
        if (g) out << "@" << show(g);
    }

    void go(const TermPtr& t) {
        if (!t) {
            out << "_";
            return;
        }
        switch (t->kind) {
            case TermKind::Var: var(t->name); return;
            case TermKind::IntLit: out << t->ival; return;
            case TermKind::BoolLit: out << (t->bval ? "true" : "false"); return;
            case TermKind::StrLit: out << '"' << t->sval << '"'; return;
            case TermKind::UnitLit: out << "()"; return;
            case TermKind::ConstApp:
                out << "(const " << t->name;
                for (const auto& a : t->args) {
                    out << " ";
                    go(a);
                }
                out << ")";
                return;
            case TermKind::Pair:
                out << "(pair ";
                go(t->t0);
                out << " ";
                go(t->t1);
                out << ")";
                return;
            case TermKind::Inl:
            case TermKind::Inr:
                out << (t->kind == TermKind::Inl ? "(inl " : "(inr ");
                go(t->t0);
                anno(t->vtype);
                out << ")";
                return;
            case TermKind::Annot:
                out << "(anno ";
                go(t->t0);
                anno(t->vtype);
                out << ")";
                return;
            case TermKind::Fun:
            case TermKind::FunK:
                out << (t->kind == TermKind::Fun ? "(fun" : "(funk");
                anno(t->vtype);
                anno(t->ground);
                scoped({t->name}, t->t0);
                out << ")";
                return;
            case TermKind::RunnerLit:
                out << "(runner";
                for (const auto& [op, cl] : t->coops) {
                    out << " " << op;
                    scoped({cl.param}, cl.body);
                }
                anno(t->ground);
                out << ")";
                return;
            case TermKind::UReturn:
            case TermKind::KReturn:
                out << (t->kind == TermKind::UReturn ? "(return " : "(kreturn ");
                go(t->t0);
                anno(t->ground);
                out << ")";
                return;
            case TermKind::UApply:
            case TermKind::KApply:
                out << (t->kind == TermKind::UApply ? "(app " : "(kapp ");
                go(t->t0);
                out << " ";
                go(t->t1);
                out << ")";
                return;
            case TermKind::UTry:
            case TermKind::KTry:
            case TermKind::KUserSwitch:
                out << (t->kind == TermKind::UTry     ? "(try "
                        : t->kind == TermKind::KTry   ? "(ktry "
                                                      : "(uswitch ");
                go(t->t0);
                scoped({t->name}, t->t1);
                for (const auto& [e, h] : t->handlers) {
                    out << " " << e << "->";
                    go(h);
                }
                out << ")";
                return;
            case TermKind::UMatchPair:
            case TermKind::KMatchPair:
                out << (t->kind == TermKind::UMatchPair ? "(mpair " : "(kmpair ");
                go(t->t0);
                scoped({t->name, t->name2}, t->t1);
                out << ")";
                return;
            case TermKind::UMatchEmpty:
            case TermKind::KMatchEmpty:
                out << (t->kind == TermKind::UMatchEmpty ? "(mempty " : "(kmempty ");
                go(t->t0);
                anno(t->vtype);
                anno(t->ground);
                out << ")";
                return;
            case TermKind::UMatchSum:
            case TermKind::KMatchSum:
                out << (t->kind == TermKind::UMatchSum ? "(msum " : "(kmsum ");
                go(t->t0);
                scoped({t->name}, t->t1);
                scoped({t->name2}, t->t2);
                out << ")";
                return;
            case TermKind::UMatchBool:
            case TermKind::KMatchBool:
                out << (t->kind == TermKind::UMatchBool ? "(mbool " : "(kmbool ");
                go(t->t0);
                out << " ";
                go(t->t1);
                out << " ";
                go(t->t2);
                out << ")";
                return;
            case TermKind::UOp:
            case TermKind::KOp:
                out << (t->kind == TermKind::UOp ? "(op " : "(kop ") << t->name << " ";
                go(t->t0);
                anno(t->vtype);
                anno(t->ground);
                scoped({t->name2}, t->t1);
                for (const auto& [e, h] : t->handlers) {
                    out << " " << e << "->";
                    go(h);
                }
                out << ")";
                return;
            case TermKind::UGenericOp:
            case TermKind::KGenericOp:
                out << (t->kind == TermKind::UGenericOp ? "(gop " : "(kgop ") << t->name
                    << " ";
                go(t->t0);
                out << ")";
                return;
            case TermKind::URaise:
            case TermKind::KRaise:
                out << (t->kind == TermKind::URaise ? "(raise " : "(kraise ") << t->name;
                anno(t->vtype);
                anno(t->ground);
                out << ")";
                return;
            case TermKind::KKill:
                out << "(kill " << t->name;
                anno(t->vtype);
                anno(t->ground);
                out << ")";
                return;
            case TermKind::URun:
            case TermKind::UKernelSwitch: {
                out << (t->kind == TermKind::URun ? "(run " : "(kswitch ");
                go(t->t0);
                out << " ";
                go(t->t1);
                if (t->kind == TermKind::URun) {
                    out << " ";
                    go(t->t2);
                }
                const auto& f = *t->fin;
                out << " fin";
                stack.push_back(f.ret_var);
                stack.push_back(f.ret_state);
                out << "(%";
                go(f.ret_body);
                out << ")";
                stack.pop_back();
                stack.pop_back();
                for (const auto& [e, cl] : f.on_raise) {
                    out << " " << e << "->";
                    scoped({cl.state_var}, cl.body);
                }
                for (const auto& [s, body] : f.on_kill) {
                    out << " " << s << "->";
                    go(body);
                }
                out << ")";
                return;
            }
            case TermKind::ULet:
            case TermKind::KLet:
                out << (t->kind == TermKind::ULet ? "(let " : "(klet ");
                go(t->t0);
                scoped({t->name}, t->t1);
                out << ")";
                return;
            case TermKind::KGetenv:
                out << "(getenv";
                anno(t->ground);
                scoped({t->name}, t->t0);
                out << ")";
                return;
            case TermKind::KSetenv:
                out << "(setenv ";
                go(t->t0);
                out << " ";
                go(t->t1);
                out << ")";
                return;
        }
    }
};

} // namespace

std::string nameless_form(const TermPtr& t) {
    Nameless n;
    n.go(t);
    return n.out.str();
}

bool alpha_equal(const TermPtr& a, const TermPtr& b) {
    return nameless_form(a) == nameless_form(b);
}

// ---------------------------------------------------------------- uniquify

namespace {

struct Uniquify {
    NameSupply& supply;
    NameSet used;
    std::map<std::string, std::vector<std::string>> renames;  // source name -> stack

    std::string bind(const std::string& b) {
        std::string target = b;
        while (used.count(target)) target = supply.fresh(b);
        used.insert(target);
        renames[b].push_back(target);
        return target;
    }

    void unbind(const std::string& b) { renames[b].pop_back(); }

    TermPtr go(const TermPtr& t) {
        if (!t) return t;
        Term out = *t;
        switch (t->kind) {
            case TermKind::Var: {
                auto it = renames.find(t->name);
                if (it != renames.end() && !it->second.empty()) out.name = it->second.back();
                break;
            }
            case TermKind::IntLit:
            case TermKind::BoolLit:
            case TermKind::StrLit:
            case TermKind::UnitLit:
            case TermKind::URaise:
            case TermKind::KRaise:
            case TermKind::KKill: break;
            case TermKind::ConstApp:
                for (auto& a : out.args) a = go(a);
                break;
            case TermKind::Pair:
            case TermKind::UApply:
            case TermKind::KApply:
            case TermKind::KSetenv:
                out.t0 = go(t->t0);
                out.t1 = go(t->t1);
                break;
            case TermKind::Inl:
            case TermKind::Inr:
            case TermKind::Annot:
            case TermKind::UReturn:
            case TermKind::KReturn:
            case TermKind::UGenericOp:
            case TermKind::KGenericOp:
            case TermKind::UMatchEmpty:
            case TermKind::KMatchEmpty: out.t0 = go(t->t0); break;
            case TermKind::Fun:
            case TermKind::FunK: scope1(out.name, out.t0); break;
            case TermKind::RunnerLit:
                for (auto& [op, cl] : out.coops) scope1(cl.param, cl.body);
                break;
            case TermKind::UTry:
            case TermKind::KTry:
            case TermKind::KUserSwitch:
                out.t0 = go(t->t0);
                scope1(out.name, out.t1);
                for (auto& [e, h] : out.handlers) h = go(h);
                break;
            case TermKind::UMatchPair:
            case TermKind::KMatchPair: {
                out.t0 = go(t->t0);
                std::string b1 = bind(out.name), b2 = bind(out.name2);
                out.t1 = go(out.t1);
                unbind(out.name2);
                unbind(out.name);
                out.name = b1;
                out.name2 = b2;
                break;
            }
            case TermKind::UMatchSum:
            case TermKind::KMatchSum:
                out.t0 = go(t->t0);
                scope1(out.name, out.t1);
                scope1(out.name2, out.t2);
                break;
            case TermKind::UMatchBool:
            case TermKind::KMatchBool:
                out.t0 = go(t->t0);
                out.t1 = go(t->t1);
                out.t2 = go(t->t2);
                break;
            case TermKind::UOp:
            case TermKind::KOp:
                out.t0 = go(t->t0);
                scope1(out.name2, out.t1);
                for (auto& [e, h] : out.handlers) h = go(h);
                break;
            case TermKind::URun:
            case TermKind::UKernelSwitch: {
                out.t0 = go(t->t0);
                out.t1 = go(t->t1);
                if (t->kind == TermKind::URun) out.t2 = go(t->t2);
                FinallyClauses f = *t->fin;
                std::string b1 = bind(f.ret_var), b2 = bind(f.ret_state);
                f.ret_body = go(f.ret_body);
                unbind(f.ret_state);
                unbind(f.ret_var);
                f.ret_var = b1;
                f.ret_state = b2;
                for (auto& [e, cl] : f.on_raise) scope1(cl.state_var, cl.body);
                for (auto& [s, body] : f.on_kill) body = go(body);
                out.fin = std::make_shared<const FinallyClauses>(std::move(f));
                break;
            }
            case TermKind::ULet:
            case TermKind::KLet:
                out.t0 = go(t->t0);
                scope1(out.name, out.t1);
                break;
            case TermKind::KGetenv: scope1(out.name, out.t0); break;
        }
        return std::make_shared<const Term>(std::move(out));
    }

    void scope1(std::string& binder, TermPtr& body) {
        std::string fresh = bind(binder);
        body = go(body);
        unbind(binder);
        binder = fresh;
    }
};

} // namespace

TermPtr uniquify(const TermPtr& t, NameSupply& supply) {
    // Free names are off-limits as rename targets, else a renamed binder
    // could capture one.
    Uniquify u{supply, free_vars(t), {}};
    return u.go(t);
}

} // namespace coop
