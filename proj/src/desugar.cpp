#include "coop/desugar.hpp"

#include <utility>

#include "coop/diag.hpp"

namespace coop {
namespace {

using build::var;

struct Desugarer {
    const EffectTables& tables;
    NameSupply& supply;
    bool strict;

    // Computations lifted out of value positions, in evaluation order.
    using Hoists = std::vector<std::pair<std::string, TermPtr>>;

    TermPtr value(const TermPtr& t, Hoists& hs) {
        switch (t->kind) {
            case TermKind::Var:
            case TermKind::IntLit:
            case TermKind::BoolLit:
            case TermKind::StrLit:
            case TermKind::UnitLit: return t;
            case TermKind::ConstApp: {
                std::vector<TermPtr> args;
                args.reserve(t->args.size());
                for (const TermPtr& a : t->args) args.push_back(value(a, hs));
                return build::const_app(t->name, std::move(args), t->pos);
            }
            case TermKind::Pair:
                return build::pair(value(t->t0, hs), value(t->t1, hs), t->pos);
            case TermKind::Inl: return build::inl(value(t->t0, hs), t->vtype, t->pos);
            case TermKind::Inr: return build::inr(value(t->t0, hs), t->vtype, t->pos);
            case TermKind::Annot: return build::annot(value(t->t0, hs), t->vtype, t->pos);
            case TermKind::Fun: return build::fun(t->name, t->vtype, comp(t->t0), t->pos);
            case TermKind::FunK:
                return build::funk(t->name, t->vtype, t->ground, comp(t->t0), t->pos);
            case TermKind::RunnerLit: {
                std::map<std::string, CoopClause> coops;
                for (const auto& [op, cl] : t->coops)
                    coops.emplace(op, CoopClause{cl.param, comp(cl.body)});
                return build::runner(std::move(coops), t->ground, t->pos);
            }
            default: break;
        }
        // A computation in value position: hoist it into a let just before the
        // enclosing computation.
        if (strict)
            throw Diagnostic(t->pos, "parse", "computation in value position");
        TermPtr c = comp(t);
        std::string h = supply.fresh("h");
        hs.emplace_back(h, c);
        return var(h, t->pos);
    }

    TermPtr comp(const TermPtr& t) {
        Hoists hs;
        TermPtr core = comp_node(t, hs);
        Sort s = sort_of(core->kind);
        for (auto it = hs.rbegin(); it != hs.rend(); ++it) {
            if (sort_of(it->second->kind) != s)
                throw InternalError("hoisted computation has the wrong sort");
            core = s == Sort::User ? build::ulet(it->first, it->second, core, t->pos)
                                   : build::klet(it->first, it->second, core, t->pos);
        }
        return core;
    }

    std::map<std::string, TermPtr> comp_map(const std::map<std::string, TermPtr>& m) {
        std::map<std::string, TermPtr> out;
        for (const auto& [k, v] : m) out.emplace(k, comp(v));
        return out;
    }

    FinallyPtr fin_clauses(const FinallyPtr& f) {
        std::map<std::string, RaiseClause> on_raise;
        for (const auto& [e, cl] : f->on_raise)
            on_raise.emplace(e, RaiseClause{cl.state_var, comp(cl.body)});
        std::map<std::string, TermPtr> on_kill;
        for (const auto& [s, b] : f->on_kill) on_kill.emplace(s, comp(b));
        return make_finally(f->ret_var, f->ret_state, comp(f->ret_body), std::move(on_raise),
                            std::move(on_kill));
    }

    // A generic call expands to an explicit one whose success continuation
    // returns the result and whose exception clauses re-raise.
    TermPtr expand_generic(const TermPtr& t, TermPtr arg) {
        auto it = tables.operations.find(t->name);
        if (it == tables.operations.end())
            throw Diagnostic(t->pos, "parse", "undeclared operation '" + t->name + "'");
        std::string x = supply.fresh("r");
        bool user = t->kind == TermKind::UGenericOp;
        std::map<std::string, TermPtr> handlers;
        for (const std::string& e : it->second.excs)
            handlers.emplace(e, user ? build::uraise(e, nullptr, t->pos)
                                     : build::kraise(e, nullptr, nullptr, t->pos));
        TermPtr succ = user ? build::ureturn(var(x, t->pos), t->pos)
                            : build::kreturn(var(x, t->pos), nullptr, t->pos);
        return user ? build::uop(t->name, arg, x, succ, std::move(handlers), nullptr, t->pos)
                    : build::kop(t->name, arg, x, succ, std::move(handlers), nullptr, nullptr,
                                 t->pos);
    }

    TermPtr comp_node(const TermPtr& t, Hoists& hs) {
        switch (t->kind) {
            case TermKind::UReturn: return build::ureturn(value(t->t0, hs), t->pos);
            case TermKind::KReturn: return build::kreturn(value(t->t0, hs), t->ground, t->pos);
            case TermKind::UApply: {
                TermPtr f = value(t->t0, hs);
                return build::uapply(f, value(t->t1, hs), t->pos);
            }
            case TermKind::KApply: {
                TermPtr f = value(t->t0, hs);
                return build::kapply(f, value(t->t1, hs), t->pos);
            }
            case TermKind::UTry:
                return build::utry(comp(t->t0), t->name, comp(t->t1), comp_map(t->handlers),
                                   t->pos);
            case TermKind::KTry:
                return build::ktry(comp(t->t0), t->name, comp(t->t1), comp_map(t->handlers),
                                   t->pos);
            case TermKind::UMatchPair:
                return build::umatch_pair(value(t->t0, hs), t->name, t->name2, comp(t->t1),
                                          t->pos);
            case TermKind::KMatchPair:
                return build::kmatch_pair(value(t->t0, hs), t->name, t->name2, comp(t->t1),
                                          t->pos);
            case TermKind::UMatchEmpty:
                return build::umatch_empty(value(t->t0, hs), t->vtype, t->pos);
            case TermKind::KMatchEmpty:
                return build::kmatch_empty(value(t->t0, hs), t->vtype, t->ground, t->pos);
            case TermKind::UMatchSum:
                return build::umatch_sum(value(t->t0, hs), t->name, comp(t->t1), t->name2,
                                         comp(t->t2), t->pos);
            case TermKind::KMatchSum:
                return build::kmatch_sum(value(t->t0, hs), t->name, comp(t->t1), t->name2,
                                         comp(t->t2), t->pos);
            case TermKind::UMatchBool:
                return build::umatch_bool(value(t->t0, hs), comp(t->t1), comp(t->t2), t->pos);
            case TermKind::KMatchBool:
                return build::kmatch_bool(value(t->t0, hs), comp(t->t1), comp(t->t2), t->pos);
            case TermKind::UOp:
                return build::uop(t->name, value(t->t0, hs), t->name2, comp(t->t1),
                                  comp_map(t->handlers), t->vtype, t->pos);
            case TermKind::KOp:
                return build::kop(t->name, value(t->t0, hs), t->name2, comp(t->t1),
                                  comp_map(t->handlers), t->vtype, t->ground, t->pos);
            case TermKind::UGenericOp:
            case TermKind::KGenericOp: return expand_generic(t, value(t->t0, hs));
            case TermKind::URaise:
            case TermKind::KRaise:
            case TermKind::KKill: return t;
            case TermKind::URun: {
                TermPtr runner = value(t->t0, hs);
                TermPtr init = value(t->t1, hs);
                return build::urun(runner, init, comp(t->t2), fin_clauses(t->fin), t->pos);
            }
            case TermKind::UKernelSwitch: {
                TermPtr init = value(t->t1, hs);
                return build::ukernel(comp(t->t0), init, fin_clauses(t->fin), t->pos);
            }
            case TermKind::KUserSwitch:
                return build::kuser(comp(t->t0), t->name, comp(t->t1), comp_map(t->handlers),
                                    t->pos);
            case TermKind::KGetenv:
                return build::kgetenv(t->name, comp(t->t0), t->ground, t->pos);
            case TermKind::KSetenv:
                return build::ksetenv(value(t->t0, hs), comp(t->t1), t->pos);
            case TermKind::ULet: return build::ulet(t->name, comp(t->t0), comp(t->t1), t->pos);
            case TermKind::KLet: return build::klet(t->name, comp(t->t0), comp(t->t1), t->pos);
            default: throw InternalError("comp_node called on a value");
        }
    }
};

} // namespace

TermPtr desugar(const TermPtr& term, const EffectTables& tables, NameSupply& supply,
                const DesugarOptions& opts) {
    Desugarer d{tables, supply, opts.strict_values};
    if (sort_of(term->kind) == Sort::Value) {
        Desugarer::Hoists hs;
        TermPtr v = d.value(term, hs);
        if (!hs.empty())
            throw Diagnostic(term->pos, "parse",
                             "computation in value position with no enclosing computation");
        return v;
    }
    return d.comp(term);
}

SourceProgram desugar_program(SourceProgram prog, const DesugarOptions& opts) {
    NameSupply supply{prog.name_counter};
    for (TopLet& l : prog.lets) l.comp = desugar(l.comp, prog.tables, supply, opts);
    prog.main = desugar(prog.main, prog.tables, supply, opts);
    prog.name_counter = supply.next;
    return prog;
}

} // namespace coop
