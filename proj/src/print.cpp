#include "coop/print.hpp"

#include <sstream>

namespace coop {

// ---------------------------------------------------------------- types

namespace {

// precedence: 0 arrow (lowest), 1 sum, 2 prod, 3 atom
void show_ground_at(const GroundPtr& g, int prec, std::ostringstream& out) {
    switch (g->tag) {
        case Ground::Tag::Base: out << g->base; return;
        case Ground::Tag::Unit: out << "unit"; return;
        case Ground::Tag::Empty: out << "empty"; return;
        case Ground::Tag::Prod:
            if (prec > 2) out << "(";
            show_ground_at(g->fst, 3, out);
            out << " * ";
            show_ground_at(g->snd, 3, out);
            if (prec > 2) out << ")";
            return;
        case Ground::Tag::Sum:
            if (prec > 1) out << "(";
            show_ground_at(g->fst, 2, out);
            out << " + ";
            show_ground_at(g->snd, 2, out);
            if (prec > 1) out << ")";
            return;
    }
}

void show_vt_at(const ValueTypePtr& t, int prec, std::ostringstream& out);

void show_user_at(const UserTypePtr& u, std::ostringstream& out) {
    show_vt_at(u->carrier, 1, out);
    out << " ! {" << show(u->ops);
    if (!u->excs.empty()) out << "; " << show(u->excs);
    out << "}";
}

void show_kernel_at(const KernelTypePtr& k, std::ostringstream& out) {
    show_vt_at(k->carrier, 1, out);
    out << " ! {" << show(k->ops) << "; " << show(k->excs) << "; " << show(k->sigs) << "} @ ";
    show_ground_at(k->state, 0, out);
}

void show_vt_at(const ValueTypePtr& t, int prec, std::ostringstream& out) {
    switch (t->tag) {
        case ValueType::Tag::Bottom: out << "_|_"; return;
        case ValueType::Tag::Ground: show_ground_at(t->ground, prec, out); return;
        case ValueType::Tag::Prod:
            if (prec > 2) out << "(";
            show_vt_at(t->v0, 3, out);
            out << " * ";
            show_vt_at(t->v1, 3, out);
            if (prec > 2) out << ")";
            return;
        case ValueType::Tag::Sum:
            if (prec > 1) out << "(";
            show_vt_at(t->v0, 2, out);
            out << " + ";
            show_vt_at(t->v1, 2, out);
            if (prec > 1) out << ")";
            return;
        case ValueType::Tag::UserFun:
            if (prec > 0) out << "(";
            show_vt_at(t->v0, 1, out);
            out << " -> ";
            show_user_at(t->uresult, out);
            if (prec > 0) out << ")";
            return;
        case ValueType::Tag::KernelFun:
            if (prec > 0) out << "(";
            show_vt_at(t->v0, 1, out);
            out << " -> ";
            show_kernel_at(t->kresult, out);
            if (prec > 0) out << ")";
            return;
        case ValueType::Tag::Runner:
            out << "{" << show(t->handled) << "} => ({" << show(t->external) << "}, {"
                << show(t->sigs) << "}, ";
            show_ground_at(t->state, 0, out);
            out << ")";
            return;
    }
}

} // namespace

std::string show(const GroundPtr& g) {
    std::ostringstream out;
    show_ground_at(g, 0, out);
    return out.str();
}

std::string show(const ValueTypePtr& t) {
    std::ostringstream out;
    show_vt_at(t, 0, out);
    return out.str();
}

std::string show(const UserTypePtr& t) {
    std::ostringstream out;
    show_user_at(t, out);
    return out.str();
}

std::string show(const KernelTypePtr& t) {
    std::ostringstream out;
    show_kernel_at(t, out);
    return out.str();
}

std::string show(const NameSet& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

// ---------------------------------------------------------------- terms

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += "\"";
    return out;
}

struct TermPrinter {
    std::ostringstream out;

    bool atomic(const TermPtr& t) {
        switch (t->kind) {
            case TermKind::Var:
            case TermKind::IntLit:
            case TermKind::BoolLit:
            case TermKind::StrLit:
            case TermKind::UnitLit:
            case TermKind::Pair:      // prints as (a, b)
            case TermKind::Annot:     // prints as (v : T)
            case TermKind::ConstApp:  // prints fully parenthesised
                return true;
            default: return false;
        }
    }

    void atom(const TermPtr& t) {
        if (atomic(t)) {
            go(t);
        } else {
            out << "(";
            go(t);
            out << ")";
        }
    }

    void clauses_open() { out << " { "; }
    void clauses_close() { out << " }"; }

    void finally(const FinallyClauses& f) {
        out << " finally { return " << f.ret_var << " @ " << f.ret_state << " -> ";
        go(f.ret_body);
        for (const auto& [e, cl] : f.on_raise) {
            out << ", raise " << e << " @ " << cl.state_var << " -> ";
            go(cl.body);
        }
        for (const auto& [s, body] : f.on_kill) {
            out << ", kill " << s << " -> ";
            go(body);
        }
        out << " }";
    }

    void handler_clauses(const std::map<std::string, TermPtr>& handlers,
                         const std::string& x, const TermPtr& body) {
        out << "{ return " << x << " -> ";
        go(body);
        for (const auto& [e, h] : handlers) {
            out << ", raise " << e << " -> ";
            go(h);
        }
        out << " }";
    }

    void go(const TermPtr& t) {
        if (!t) {
            out << "<null>";
            return;
        }
        switch (t->kind) {
            case TermKind::Var: out << t->name; return;
            case TermKind::IntLit: out << t->ival; return;
            case TermKind::BoolLit: out << (t->bval ? "true" : "false"); return;
            case TermKind::StrLit: out << quote(t->sval); return;
            case TermKind::UnitLit: out << "()"; return;
            case TermKind::ConstApp:
                if (t->args.size() == 2 && (t->name == "+" || t->name == "-" ||
                                            t->name == "*" || t->name == "=" ||
                                            t->name == "<")) {
                    out << "(";
                    go(t->args[0]);
                    out << " " << t->name << " ";
                    go(t->args[1]);
                    out << ")";
                } else {
                    out << "(" << t->name;
                    for (const auto& a : t->args) {
                        out << " ";
                        atom(a);
                    }
                    out << ")";
                }
                return;
            case TermKind::Pair:
                out << "(";
                go(t->t0);
                out << ", ";
                go(t->t1);
                out << ")";
                return;
            case TermKind::Inl:
            case TermKind::Inr: {
                const char* tag = t->kind == TermKind::Inl ? "inl " : "inr ";
                if (t->vtype) {
                    out << "(" << tag;
                    atom(t->t0);
                    out << " : " << show(t->vtype) << ")";
                } else {
                    out << tag;
                    atom(t->t0);
                }
                return;
            }
            case TermKind::Annot:
                out << "(";
                go(t->t0);
                out << " : " << show(t->vtype) << ")";
                return;
            case TermKind::Fun:
                out << "fun (" << t->name << " : " << show(t->vtype) << ") -> ";
                go(t->t0);
                return;
            case TermKind::FunK:
                out << "funK (" << t->name << " : " << show(t->vtype) << ")";
                if (t->ground) out << " @ " << show(t->ground);
                out << " -> ";
                go(t->t0);
                return;
            case TermKind::RunnerLit: {
                out << "{ ";
                bool first = true;
                for (const auto& [op, cl] : t->coops) {
                    if (!first) out << ", ";
                    first = false;
                    out << op << " " << cl.param << " -> ";
                    go(cl.body);
                }
                out << " } @ " << show(t->ground);
                return;
            }
            case TermKind::UReturn:
            case TermKind::KReturn:
                out << "return ";
                atom(t->t0);
                return;
            case TermKind::UApply:
            case TermKind::KApply:
                atom(t->t0);
                out << " ";
                atom(t->t1);
                return;
            case TermKind::UTry:
            case TermKind::KTry:
                out << "try ";
                atom(t->t0);
                out << " with ";
                handler_clauses(t->handlers, t->name, t->t1);
                return;
            case TermKind::KUserSwitch:
                out << "user ";
                atom(t->t0);
                out << " with ";
                handler_clauses(t->handlers, t->name, t->t1);
                return;
            case TermKind::UMatchPair:
            case TermKind::KMatchPair:
                out << "match ";
                atom(t->t0);
                out << " with { (" << t->name << ", " << t->name2 << ") -> ";
                go(t->t1);
                out << " }";
                return;
            case TermKind::UMatchEmpty:
            case TermKind::KMatchEmpty:
                out << "match ";
                atom(t->t0);
                out << " with {} : " << show(t->vtype);
                if (t->ground) out << " @ " << show(t->ground);
                return;
            case TermKind::UMatchSum:
            case TermKind::KMatchSum:
                out << "match ";
                atom(t->t0);
                out << " with { inl " << t->name << " -> ";
                go(t->t1);
                out << ", inr " << t->name2 << " -> ";
                go(t->t2);
                out << " }";
                return;
            case TermKind::UMatchBool:
            case TermKind::KMatchBool:
                out << "if ";
                atom(t->t0);
                out << " then ";
                atom(t->t1);
                out << " else ";
                atom(t->t2);
                return;
            case TermKind::UOp:
            case TermKind::KOp:
                out << t->name << "(";
                go(t->t0);
                out << ", " << t->name2 << ". ";
                go(t->t1);
                if (!t->handlers.empty()) {
                    out << ", { ";
                    bool first = true;
                    for (const auto& [e, h] : t->handlers) {
                        if (!first) out << ", ";
                        first = false;
                        out << e << " -> ";
                        go(h);
                    }
                    out << " }";
                }
                out << ")";
                return;
            case TermKind::UGenericOp:
            case TermKind::KGenericOp:
                out << t->name << " ";
                atom(t->t0);
                return;
            case TermKind::URaise:
            case TermKind::KRaise:
                if (t->vtype) {
                    out << "(raise " << t->name << " : " << show(t->vtype);
                    if (t->ground) out << " @ " << show(t->ground);
                    out << ")";
                } else {
                    out << "raise " << t->name;
                }
                return;
            case TermKind::KKill:
                if (t->vtype) {
                    out << "(kill " << t->name << " : " << show(t->vtype);
                    if (t->ground) out << " @ " << show(t->ground);
                    out << ")";
                } else {
                    out << "kill " << t->name;
                }
                return;
            case TermKind::URun:
                out << "using ";
                atom(t->t0);
                out << " @ ";
                atom(t->t1);
                out << " run ";
                atom(t->t2);
                finally(*t->fin);
                return;
            case TermKind::UKernelSwitch:
                out << "kernel ";
                atom(t->t0);
                out << " @ ";
                atom(t->t1);
                finally(*t->fin);
                return;
            case TermKind::ULet:
            case TermKind::KLet:
                out << "let " << t->name << " = ";
                atom(t->t0);
                out << " in ";
                go(t->t1);
                return;
            case TermKind::KGetenv:
                out << "getenv (" << t->name << ". ";
                go(t->t0);
                out << ")";
                return;
            case TermKind::KSetenv:
                // `setenv (V)` is the parseable form; a non-trivial
                // continuation prints as sequencing (α-distinct but
                // semantically the same computation).
                out << "setenv (";
                go(t->t0);
                out << ")";
                if (!(t->t1 && t->t1->kind == TermKind::KReturn &&
                      t->t1->t0->kind == TermKind::UnitLit)) {
                    out << "; ";
                    go(t->t1);
                }
                return;
        }
    }
};

} // namespace

std::string show_term(const TermPtr& t) {
    TermPrinter p;
    p.go(t);
    return p.out.str();
}

} // namespace coop
