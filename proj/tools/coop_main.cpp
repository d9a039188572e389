#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coop/container.hpp"
#include "coop/corpus.hpp"
#include "coop/desugar.hpp"
#include "coop/diag.hpp"
#include "coop/eqtest.hpp"
#include "coop/eval.hpp"
#include "coop/parser.hpp"
#include "coop/print.hpp"
#include "coop/typecheck.hpp"
#include "coop/value.hpp"

namespace {

using nlohmann::json;
using namespace coop;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunOpts {
    std::string file;
    std::string container = "pure";
    std::string fs_config;
    std::string sandbox = "sandbox";
    std::string trace_out;
    bool no_check = false;
    bool strict_values = false;
};

std::unique_ptr<Container> build_container(const RunOpts& o) {
    if (o.container == "pure") return make_pure_container();
    if (o.container == "state") return make_state_container();
    if (o.container == "fs-sim") {
        std::string text = o.fs_config.empty() ? "{}" : slurp(o.fs_config);
        return std::make_unique<FsSimContainer>(parse_fs_config(text));
    }
    if (o.container == "fs-real") return make_fs_real_container(o.sandbox);
    throw std::runtime_error("unknown container '" + o.container +
                             "' (expected pure, state, fs-sim, or fs-real)");
}

int outcome_exit(const Outcome& out) {
    switch (out.tag) {
        case Outcome::Tag::Return: return 0;
        case Outcome::Tag::Raise: return 1;
        case Outcome::Tag::Kill: return 3;
    }
    return 2;
}

int cmd_check(const std::string& file, bool emit_types, bool strict_values) {
    try {
        SourceProgram prog = desugar_program(parse_program(slurp(file)), DesugarOptions{strict_values});
        TypedProgram tp = check_program(prog);
        if (emit_types)
            std::cout << "main : " << show(tp.type) << "\n";
        else
            std::cout << "ok\n";
        return 0;
    } catch (const Diagnostic& d) {
        std::cerr << file << ":" << d.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_run(const RunOpts& o, bool tracing) {
    SourceProgram prog;
    try {
        prog = desugar_program(parse_program(slurp(o.file)), DesugarOptions{o.strict_values});
    } catch (const Diagnostic& d) {
        std::cerr << o.file << ":" << d.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::unique_ptr<Container> cont;
    TermPtr term;
    EffectTables tables;
    try {
        cont = build_container(o);
        if (o.no_check) {
            tables = prog.tables;
            term = prog.main;
            for (auto it = prog.lets.rbegin(); it != prog.lets.rend(); ++it)
                term = build::ulet(it->name, it->comp, term, it->pos);
        } else {
            TypedProgram tp = check_program(prog);
            tables = std::move(tp.tables);
            term = tp.term;
            for (const std::string& op : tp.type->ops)
                if (!cont->supports(op))
                    throw std::runtime_error("container '" + cont->name() +
                                             "' does not support operation '" + op + "'");
        }
    } catch (const Diagnostic& d) {
        std::cerr << o.file << ":" << d.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    Evaluator ev(tables);
    TraceLog log;
    if (tracing) ev.trace = &log;
    Outcome out;
    try {
        out = run_toplevel(*cont, ev, ev.eval_user(nullptr, term));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    auto* sim = dynamic_cast<FsSimContainer*>(cont.get());
    if (!tracing) {
        if (sim && !sim->printed().empty()) {
            std::cout << sim->printed();
            if (sim->printed().back() != '\n') std::cout << "\n";
        }
        std::cout << show_outcome(out) << "\n";
        return outcome_exit(out);
    }

    json doc;
    switch (out.tag) {
        case Outcome::Tag::Return:
            doc["outcome"] = "return";
            doc["value"] = show_value(out.value);
            break;
        case Outcome::Tag::Raise:
            doc["outcome"] = "raise";
            doc["name"] = out.name;
            break;
        case Outcome::Tag::Kill:
            doc["outcome"] = "kill";
            doc["name"] = out.name;
            break;
    }
    json events = json::array();
    for (const TraceEvent& e : log.events) {
        json je;
        je["event"] = e.event;
        if (!e.op.empty()) je["op"] = e.op;
        if (!e.exception.empty()) je["exception"] = e.exception;
        if (!e.signal.empty()) je["signal"] = e.signal;
        je["depth"] = e.run_depth;
        events.push_back(std::move(je));
    }
    doc["events"] = std::move(events);
    json fins = json::array();
    for (const auto& rec : ev.finalisations.records) {
        json jf;
        jf["site"] = std::to_string(rec->site.line) + ":" + std::to_string(rec->site.col);
        jf["count"] = rec->count;
        jf["kind"] = rec->kind;
        fins.push_back(std::move(jf));
    }
    doc["finalisations"] = std::move(fins);
    doc["stats"] = {{"resumes", ev.stats.resumes}, {"opCalls", ev.stats.op_calls}};
    if (sim) doc["printed"] = sim->printed();

    std::string text = doc.dump(2);
    text += "\n";
    if (o.trace_out.empty()) {
        std::cout << text;
    } else {
        std::ofstream outf(o.trace_out, std::ios::binary);
        if (!outf) {
            std::cerr << "error: cannot write " << o.trace_out << "\n";
            return 2;
        }
        outf << text;
    }
    return outcome_exit(out);
}

int cmd_eq_test(const SuiteConfig& cfg, bool list_only) {
    if (list_only) {
        for (const Schema& s : equation_schemas()) std::cout << s.id << "\n";
        for (const Schema& s : mutation_schemas()) std::cout << s.id << "\n";
        return 0;
    }
    SuiteResult res = run_equation_suite(cfg);
    for (const SchemaResult& r : res.schemas) {
        bool ok = r.cases > 0 && r.failures == 0;
        std::cout << (ok ? "ok      " : "FAIL    ") << r.id << "  cases=" << r.cases
                  << " rejected=" << r.rejected;
        if (!ok) std::cout << " failures=" << r.failures << "  " << r.first_failure;
        std::cout << "\n";
    }
    for (const SchemaResult& r : res.mutations) {
        bool caught = r.failures > 0;
        std::cout << (caught ? "caught  " : "MISSED  ") << r.id << "  failures=" << r.failures
                  << "/" << r.cases << "\n";
    }
    std::cout << (res.ok() ? "equation suite: PASS" : "equation suite: FAIL") << " ("
              << res.schemas.size() << " schemas, " << res.mutations.size() << " mutations)\n";
    return res.ok() ? 0 : 1;
}

int cmd_corpus(const std::string& dir) {
    try {
        CorpusReport report = run_corpus(dir);
        for (const CorpusEntry& e : report.entries) {
            if (e.pass)
                std::cout << "pass  " << e.name << "\n";
            else
                std::cout << "FAIL  " << e.name << ": " << e.detail << "\n";
        }
        std::cout << (report.ok ? "corpus: PASS" : "corpus: FAIL") << " ("
                  << report.entries.size() << " entries)\n";
        return report.ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"interpreter for a calculus of runners of algebraic effects"};
    app.require_subcommand(1);

    std::string check_file;
    bool emit_types = false;
    bool check_strict = false;
    CLI::App* check = app.add_subcommand("check", "parse and typecheck a program");
    check->add_option("file", check_file, "program file")->required();
    check->add_flag("--emit-types", emit_types, "print the type of the main computation");
    check->add_flag("--strict-values", check_strict,
                    "reject computations in value positions instead of hoisting them");

    RunOpts run_opts;
    auto add_run_opts = [&](CLI::App* c) {
        c->add_option("file", run_opts.file, "program file")->required();
        c->add_option("--container", run_opts.container,
                      "top-level container: pure, state, fs-sim, fs-real");
        c->add_option("--fs-config", run_opts.fs_config,
                      "JSON configuration file for fs-sim ({quota, failAtWrite, files})");
        c->add_option("--sandbox", run_opts.sandbox, "sandbox directory for fs-real");
        c->add_flag("--no-check", run_opts.no_check, "skip typechecking");
        c->add_flag("--strict-values", run_opts.strict_values,
                    "reject computations in value positions instead of hoisting them");
    };
    CLI::App* run = app.add_subcommand("run", "evaluate a program");
    add_run_opts(run);
    CLI::App* trace = app.add_subcommand("trace", "evaluate and emit a JSON event trace");
    add_run_opts(trace);
    trace->add_option("--out", run_opts.trace_out, "write the trace here instead of stdout");

    SuiteConfig eq_cfg;
    bool eq_list = false;
    CLI::App* eq = app.add_subcommand("eq-test", "run the program-equivalence suite");
    eq->add_option("--seed", eq_cfg.seed, "base seed")->envname("COOP_SEED");
    eq->add_option("--cases", eq_cfg.cases, "cases per schema");
    eq->add_option("--mutations", eq_cfg.mutation_cases, "cases per mutation");
    eq->add_option("--schema", eq_cfg.only_schema, "run one schema by id");
    eq->add_flag("--list", eq_list, "list schema ids and exit");

    std::string corpus_dir = "corpus";
    CLI::App* corpus = app.add_subcommand("corpus", "run the example corpus against its manifest");
    corpus->add_option("dir", corpus_dir, "corpus directory (with manifest.json)");

    CLI11_PARSE(app, argc, argv);

    if (*check) return cmd_check(check_file, emit_types, check_strict);
    if (*run) return cmd_run(run_opts, false);
    if (*trace) return cmd_run(run_opts, true);
    if (*eq) return cmd_eq_test(eq_cfg, eq_list);
    if (*corpus) return cmd_corpus(corpus_dir);
    return 2;
}
