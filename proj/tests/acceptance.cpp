// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion is independent; failures carry a detail
// line for diagnosis.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coop/container.hpp"
#include "coop/corpus.hpp"
#include "coop/denote.hpp"
#include "coop/desugar.hpp"
#include "coop/diag.hpp"
#include "coop/eqtest.hpp"
#include "coop/eval.hpp"
#include "coop/gen.hpp"
#include "coop/parser.hpp"
#include "coop/tree.hpp"
#include "coop/typecheck.hpp"

using namespace coop;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;
};

Verdict pass() { return {true, {}}; }
Verdict fail(std::string detail) { return {false, std::move(detail)}; }

int g_failures = 0;

template <class Body>
void criterion(int n, const std::string& label, double time_limit_s, Body body) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = fail(std::string("unexpected exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.ok && time_limit_s > 0 && secs > time_limit_s) {
        v = fail("exceeded time limit of " + std::to_string(time_limit_s) + "s");
    }
    std::printf("%s  %d  %-62s %7.2fs\n", v.ok ? "PASS" : "FAIL", n, label.c_str(), secs);
    if (!v.ok) {
        std::printf("        detail: %s\n", v.detail.c_str());
        ++g_failures;
    }
    std::fflush(stdout);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

TypedProgram compile_file(const std::string& path) {
    return check_program(desugar_program(parse_program(slurp(path))));
}

// ------------------------------------------------------------------ 1

Verdict corpus_criterion() {
    CorpusReport r = run_corpus(COOP_CORPUS_DIR);
    if (r.entries.empty()) return fail("no corpus entries found");
    for (const CorpusEntry& e : r.entries)
        if (!e.pass) return fail(e.name + ": " + e.detail);
    return pass();
}

// ------------------------------------------------------------------ 2

Verdict equations_criterion() {
    SuiteConfig cfg;
    cfg.seed = 1;
    cfg.cases = 100;
    cfg.mutation_cases = 5;
    SuiteResult r = run_equation_suite(cfg);
    if (r.schemas.size() < 35)
        return fail("only " + std::to_string(r.schemas.size()) + " schemas");
    if (r.mutations.size() < 10)
        return fail("only " + std::to_string(r.mutations.size()) + " mutations");
    for (const SchemaResult& s : r.schemas) {
        if (s.cases == 0) return fail(s.id + ": no instances survived generation");
        if (s.failures > 0)
            return fail(s.id + ": " + std::to_string(s.failures) + " failures; first: " +
                        s.first_failure);
    }
    for (const SchemaResult& m : r.mutations)
        if (m.failures == 0) return fail("mutation " + m.id + " was not caught");
    return pass();
}

// ------------------------------------------------------------------ 3

Verdict agreement_criterion() {
    EffectTables tables = oracle_tables();
    auto container = make_pure_container();
    int done = 0;
    uint64_t seed = 30000;
    int attempts = 0;
    while (done < 1000) {
        if (++attempts > 20000) return fail("generator rejected too many programs");
        Gen g(seed++, tables, GenConfig{4, true});
        TermPtr prog = g.program(3);
        Checker ck(tables);
        TermPtr elab;
        try {
            elab = ck.synth_user({}, prog).first;
        } catch (const Diagnostic&) {
            continue;
        }
        TreeCtx ctx(tables);
        Denoter d(ctx);
        TreePtr tree = d.denote_user({}, elab);
        if (tree->tag != Tree::Tag::Ret && tree->tag != Tree::Tag::Exc)
            return fail("pure program denoted to a non-leaf tree");

        Evaluator ev(tables);
        Outcome out = run_toplevel(*container, ev, ev.eval_user(nullptr, elab));
        if (tree->tag == Tree::Tag::Ret) {
            if (out.tag != Outcome::Tag::Return)
                return fail("oracle returned but evaluator gave " + show_outcome(out));
            try {
                if (!sem_equal(ctx, rt_to_sem(out.value), tree->value))
                    return fail("payload mismatch: evaluator " + show_value(out.value) +
                                " vs oracle " + show_sem(tree->value));
            } catch (const OracleError&) {
                // Function-valued result: tags agreeing is all we can compare.
            }
        } else {
            if (out.tag != Outcome::Tag::Raise || out.name != tree->name)
                return fail("oracle raised " + tree->name + " but evaluator gave " +
                            show_outcome(out));
        }
        ++done;
    }
    return pass();
}

// ------------------------------------------------------------------ 4

Verdict finalisation_criterion() {
    EffectTables tables = oracle_tables();
    auto container = make_pure_container();

    // Every run that settles fires its finalisation exactly once.
    uint64_t seed = 40000;
    int done = 0, attempts = 0;
    while (done < 200 && attempts < 4000) {
        ++attempts;
        Gen g(seed++, tables, GenConfig{4, true});
        Checker ck(tables);
        TermPtr elab;
        try {
            elab = ck.synth_user({}, g.program(3)).first;
        } catch (const Diagnostic&) {
            continue;
        }
        Evaluator ev(tables);
        run_toplevel(*container, ev, ev.eval_user(nullptr, elab));
        for (const auto& rec : ev.finalisations.records)
            if (rec->count != 1)
                return fail("finalisation ran " + std::to_string(rec->count) +
                            " times at line " + std::to_string(rec->site.line));
        ++done;
    }
    if (done < 200) return fail("generator rejected too many programs");

    // A container kill unwinding through the program never double-fires.
    {
        TypedProgram tp = compile_file(std::string(COOP_CORPUS_DIR) + "/file_io.coop");
        Evaluator ev(tp.tables);
        FsSimContainer c(parse_fs_config(R"({"failAtWrite": 0})"));
        run_toplevel(c, ev, ev.eval_user(nullptr, tp.term));
        for (const auto& rec : ev.finalisations.records)
            if (rec->count > 1) return fail("finalisation fired twice under a kill");
    }

    // Factoring: each logged run denotation equals its finalisation map
    // re-extended over the witness tree.
    int runs_checked = 0;
    seed = 41000;
    attempts = 0;
    while (runs_checked < 20 && attempts < 4000) {
        ++attempts;
        Gen g(seed++, tables, GenConfig{4, true});
        Checker ck(tables);
        TermPtr elab;
        try {
            elab = ck.synth_user({}, g.program(3)).first;
        } catch (const Diagnostic&) {
            continue;
        }
        TreeCtx ctx(tables);
        ctx.node_budget = 100000;
        Denoter d(ctx);
        d.denote_user({}, elab);
        for (const RunDenotation& rd : d.runs) {
            Finalised ref = finalisation_apply(ctx, rd.phi, rd.witness);
            if (!tree_equal(ctx, ref.result, rd.result))
                return fail("finalisation does not factor through its witness");
            ++runs_checked;
        }
    }
    if (runs_checked < 20)
        return fail("only " + std::to_string(runs_checked) + " run denotations logged");
    return pass();
}

// ------------------------------------------------------------------ 5

Verdict runner_morphism_criterion() {
    EffectTables tables = oracle_tables();
    int runners_done = 0;
    uint64_t seed = 50000;
    int attempts = 0;
    while (runners_done < 20) {
        if (++attempts > 2000) return fail("generator rejected too many runners");
        Gen g(seed++, tables);
        GroundPtr state = g.ground(1);
        TermPtr lit = g.runner_lit(state, 2);
        Checker ck(tables);
        TermPtr elab;
        try {
            elab = ck.synth_value({}, lit).first;
        } catch (const Diagnostic&) {
            continue;
        }
        TreeCtx ctx(tables);
        ctx.node_budget = 200000;
        Denoter d(ctx);
        SemPtr sem = d.denote_value({}, elab);
        if (sem->tag != SemValue::Tag::Runner) return fail("runner literal did not denote");
        const RunnerDen& den = *sem->runner;

        std::vector<SemPtr> states = enumerate(ctx, den.state_ty);

        // The morphism restricted to a single probe is the co-operation.
        for (const auto& [op, coop] : den.coops) {
            const OpSig& sig = ctx.sig(op);
            for (const SemPtr& arg : enumerate(ctx, sig.param))
                for (const SemPtr& st : states) {
                    TreePtr via = run_morphism(ctx, den, op_probe(ctx, op, arg), st);
                    if (!tree_equal(ctx, via, coop(arg, st)))
                        return fail("probe of '" + op + "' disagrees with its co-operation");
                }
        }

        // Rebuilding the runner from probes induces the same morphism.
        RunnerDen rebuilt;
        rebuilt.state_ty = den.state_ty;
        for (const auto& [op, coop] : den.coops)
            rebuilt.coops[op] = [&ctx, &den, op](const SemPtr& arg, const SemPtr& st) {
                return run_morphism(ctx, den, op_probe(ctx, op, arg), st);
            };
        int trees_done = 0;
        uint64_t tseed = seed * 977;
        for (int k = 0; k < 12 && trees_done < 3; ++k) {
            Gen tg(tseed++, tables);
            TermPtr body = tg.user(tg.ground_type(1), 2);
            TermPtr telab;
            try {
                telab = ck.synth_user({}, body).first;
            } catch (const Diagnostic&) {
                continue;
            }
            TreePtr tree = d.denote_user({}, telab);
            for (const SemPtr& st : states)
                if (!tree_equal(ctx, run_morphism(ctx, rebuilt, tree, st),
                                run_morphism(ctx, den, tree, st)))
                    return fail("rebuilt runner's morphism disagrees on a program tree");
            ++trees_done;
        }
        if (trees_done < 3) return fail("could not generate probe trees");
        ++runners_done;
    }
    return pass();
}

// ------------------------------------------------------------------ 6

Verdict monad_laws_criterion() {
    EffectTables tables = oracle_tables();
    int trees_checked = 0;
    uint64_t seed = 60000;
    int attempts = 0;
    Checker ck(tables);

    while (trees_checked < 500) {
        if (++attempts > 6000) return fail("generator rejected too many terms");
        TreeCtx ctx(tables);
        ctx.node_budget = 200000;
        Denoter d(ctx);
        Gen g(seed++, tables);

        auto eta = [](const SemPtr& v) { return tree_ret(v); };
        auto rethrow = [](const std::string& e) { return tree_exc(e); };
        auto f = [&ctx](const SemPtr& v) {
            if (v->tag == SemValue::Tag::Int && v->ival % 2 == 0) return tree_exc("E1");
            return op_probe(ctx, "op0", sem_unit());
        };
        auto fexc = [](const std::string& e) {
            return e == "E1" ? tree_ret(sem_unit()) : tree_exc(e);
        };
        auto h = [](const SemPtr& v) { return tree_ret(sem_pair(v, v)); };
        auto hexc = [](const std::string& e) { return tree_exc(e); };

        if (trees_checked % 2 == 0) {
            TermPtr body = g.user(g.ground_type(1), 2);
            TermPtr elab;
            try {
                elab = ck.synth_user({}, body).first;
            } catch (const Diagnostic&) {
                continue;
            }
            TreePtr t = d.denote_user({}, elab);
            if (!tree_equal(ctx, utree_bind(ctx, t, eta, rethrow), t))
                return fail("user right identity failed");
            TreePtr lhs = utree_bind(ctx, utree_bind(ctx, t, f, fexc), h, hexc);
            TreePtr rhs = utree_bind(
                ctx, t, [&](const SemPtr& v) { return utree_bind(ctx, f(v), h, hexc); },
                [&](const std::string& e) { return utree_bind(ctx, fexc(e), h, hexc); });
            if (!tree_equal(ctx, lhs, rhs)) return fail("user associativity failed");
            // Left identity at every leaf value of the tree's own carrier.
            if (t->tag == Tree::Tag::Ret &&
                !tree_equal(ctx, utree_bind(ctx, tree_ret(t->value), f, fexc), f(t->value)))
                return fail("user left identity failed");
        } else {
            auto keta = [](const SemPtr& v, const SemPtr& s) { return tree_kret(v, s); };
            auto krethrow = [](const std::string& e, const SemPtr& s) {
                return tree_kexc(e, s);
            };
            auto kf = [](const SemPtr& v, const SemPtr& s) {
                if (s->tag == SemValue::Tag::Bool && s->bval) return tree_sig("S1");
                return tree_kret(sem_pair(v, v), s);
            };
            auto kfexc = [](const std::string& e, const SemPtr& s) {
                return e == "E2" ? tree_kret(sem_unit(), s) : tree_kexc(e, s);
            };
            auto kh = [](const SemPtr& v, const SemPtr& s) { return tree_kret(s, v); };
            auto khexc = [](const std::string& e, const SemPtr& s) { return tree_kexc(e, s); };

            TermPtr body = g.kernel(g.ground_type(1), ground_bool(), 2);
            TermPtr elab;
            try {
                elab = ck.synth_kernel({}, body, ground_bool()).first;
            } catch (const Diagnostic&) {
                continue;
            }
            for (const SemPtr& st : enumerate(ctx, ground_bool())) {
                TreePtr t = d.denote_kernel({}, elab, st);
                if (!tree_equal(ctx, ktree_bind(ctx, t, keta, krethrow), t))
                    return fail("kernel right identity failed");
                TreePtr lhs = ktree_bind(ctx, ktree_bind(ctx, t, kf, kfexc), kh, khexc);
                TreePtr rhs = ktree_bind(
                    ctx, t,
                    [&](const SemPtr& v, const SemPtr& s) {
                        return ktree_bind(ctx, kf(v, s), kh, khexc);
                    },
                    [&](const std::string& e, const SemPtr& s) {
                        return ktree_bind(ctx, kfexc(e, s), kh, khexc);
                    });
                if (!tree_equal(ctx, lhs, rhs)) return fail("kernel associativity failed");
                if (t->tag == Tree::Tag::KRet &&
                    !tree_equal(ctx, ktree_bind(ctx, tree_kret(t->value, t->state), kf, kfexc),
                                kf(t->value, t->state)))
                    return fail("kernel left identity failed");
            }
        }
        ++trees_checked;
    }
    return pass();
}

// ------------------------------------------------------------------ 7

struct FsModel {
    enum class Kind { Return0, Return1, Kill } kind;
    std::string content;   // what log.txt holds afterwards
};

FsModel fs_model(long long quota, std::optional<long long> fail_at) {
    const std::vector<std::string> writes = {"hello, ", "world"};
    std::string content;
    for (size_t i = 0; i < writes.size(); ++i) {
        if (fail_at && *fail_at == static_cast<long long>(i))
            return {FsModel::Kind::Kill, content};
        if (static_cast<long long>(content.size() + writes[i].size()) > quota)
            return {FsModel::Kind::Return1, content};
        content += writes[i];
    }
    return {FsModel::Kind::Return0, content};
}

Verdict file_io_matrix_criterion() {
    TypedProgram tp = compile_file(std::string(COOP_CORPUS_DIR) + "/file_io.coop");
    const std::vector<std::optional<long long>> fails = {std::nullopt, 0, 1, 2, 3};
    const std::vector<long long> quotas = {0, 3, 6, 7, 8, 11, 12, 13, 100, 1 << 20};

    for (const auto& fail_at : fails)
        for (long long quota : quotas) {
            FsSimConfig cfg;
            cfg.quota = quota;
            cfg.fail_at_write = fail_at;
            FsSimContainer c(cfg);
            Evaluator ev(tp.tables);
            Outcome out = run_toplevel(c, ev, ev.eval_user(nullptr, tp.term));
            FsModel want = fs_model(quota, fail_at);
            std::string at = "quota=" + std::to_string(quota) + " failAtWrite=" +
                             (fail_at ? std::to_string(*fail_at) : "none");

            switch (want.kind) {
            case FsModel::Kind::Return0:
                if (!(out == Outcome::ret(rt_int(0))))
                    return fail(at + ": expected return 0, got " + show_outcome(out));
                break;
            case FsModel::Kind::Return1:
                if (!(out == Outcome::ret(rt_int(1))))
                    return fail(at + ": expected return 1, got " + show_outcome(out));
                break;
            case FsModel::Kind::Kill:
                if (!(out == Outcome::kill("IOError")))
                    return fail(at + ": expected kill IOError, got " + show_outcome(out));
                break;
            }
            auto it = c.files().find("log.txt");
            std::string got = it == c.files().end() ? "<missing>" : it->second.content;
            if (got != want.content)
                return fail(at + ": file holds \"" + got + "\", model says \"" + want.content +
                            "\"");
        }

    // Two fixed programs whose outputs are frozen by hand.
    {
        TypedProgram nest = compile_file(std::string(COOP_CORPUS_DIR) + "/nesting.coop");
        FsSimContainer c(parse_fs_config("{}"));
        Evaluator ev(nest.tables);
        Outcome out = run_toplevel(c, ev, ev.eval_user(nullptr, nest.term));
        if (!(out == Outcome::ret(rt_unit())))
            return fail("nesting: expected return (), got " + show_outcome(out));
        if (c.printed() != "Hello, world.Hello, again.")
            return fail("nesting printed \"" + c.printed() + "\"");
    }
    {
        TypedProgram inst = compile_file(std::string(COOP_CORPUS_DIR) + "/instrumentation.coop");
        FsSimContainer c(parse_fs_config("{}"));
        Evaluator ev(inst.tables);
        Outcome out = run_toplevel(c, ev, ev.eval_user(nullptr, inst.term));
        if (!(out == Outcome::ret(rt_pair(rt_int(7), rt_int(3)))))
            return fail("instrumentation: expected (7, 3), got " + show_outcome(out));
        if (c.printed() != "abc")
            return fail("instrumentation printed \"" + c.printed() + "\"");
    }
    return pass();
}

// ------------------------------------------------------------------ 8

Verdict affinity_criterion() {
    TypedProgram tp = check_program(desugar_program(
        parse_program("operation tick : unit ~> int\ntick ()")));
    Evaluator ev(tp.tables);
    UserStep s = ev.eval_user(nullptr, tp.term);
    if (s.tag != UserStep::Tag::Op || !s.call) return fail("program did not suspend");
    UserStep done = s.call->succ(rt_int(1));
    if (done.tag != UserStep::Tag::Return) return fail("resume did not settle");
    try {
        s.call->succ(rt_int(2));
    } catch (const AffinityViolation&) {
        try {
            s.call->kill("S");
        } catch (const AffinityViolation&) {
            return pass();
        }
        return fail("kill continuation escaped the one-shot guard");
    }
    return fail("second resume was not rejected");
}

} // namespace

int main() {
    criterion(1, "corpus programs and rejections match the manifest", 1.0,
              corpus_criterion);
    criterion(2, "equation schemas hold and mutations are caught", 60.0,
              equations_criterion);
    criterion(3, "evaluator agrees with the oracle on 1000 pure programs", 120.0,
              agreement_criterion);
    criterion(4, "finalisation fires once and factors through its witness", 0,
              finalisation_criterion);
    criterion(5, "runners and their morphisms are interconvertible", 0,
              runner_morphism_criterion);
    criterion(6, "monad laws hold over 500 denoted trees", 0, monad_laws_criterion);
    criterion(7, "file-IO semantics match the independent model", 0,
              file_io_matrix_criterion);
    criterion(8, "continuations are affine", 0, affinity_criterion);
    return g_failures == 0 ? 0 : 1;
}
