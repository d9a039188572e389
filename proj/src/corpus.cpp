#include "coop/corpus.hpp"

#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "coop/container.hpp"
#include "coop/desugar.hpp"
#include "coop/diag.hpp"
#include "coop/eval.hpp"
#include "coop/parser.hpp"
#include "coop/typecheck.hpp"
#include "coop/value.hpp"

namespace coop {
namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::unique_ptr<Container> build_container(const std::string& kind, const json& fs_config) {
    if (kind == "pure") return make_pure_container();
    if (kind == "state") return make_state_container();
    if (kind == "fs-sim") {
        FsSimConfig cfg = parse_fs_config(fs_config.is_null() ? "{}" : fs_config.dump());
        return std::make_unique<FsSimContainer>(std::move(cfg));
    }
    throw std::runtime_error("unknown container '" + kind + "'");
}

CorpusEntry run_program(const std::string& dir, const json& j) {
    CorpusEntry ent;
    ent.name = j.value("name", j.at("file").get<std::string>());
    try {
        SourceProgram prog = parse_program(slurp(dir + "/" + j.at("file").get<std::string>()));
        prog = desugar_program(std::move(prog));
        TypedProgram tp = check_program(prog);
        auto cont = build_container(j.value("container", "pure"),
                                    j.contains("fsConfig") ? j["fsConfig"] : json());
        for (const auto& op : tp.type->ops)
            if (!cont->supports(op))
                throw std::runtime_error("container '" + cont->name() +
                                         "' does not support operation '" + op + "'");
        Evaluator ev(tp.tables);
        Outcome out = run_toplevel(*cont, ev, ev.eval_user(nullptr, tp.term));

        const json& exp = j.at("expect");
        std::string want = exp.at("outcome").get<std::string>();
        std::string got = out.tag == Outcome::Tag::Return   ? "return"
                          : out.tag == Outcome::Tag::Raise ? "raise"
                                                           : "kill";
        if (got != want) {
            ent.detail = "expected outcome " + want + ", got " + show_outcome(out);
            return ent;
        }
        if (exp.contains("value") && show_value(out.value) != exp["value"].get<std::string>()) {
            ent.detail = "expected value " + exp["value"].get<std::string>() + ", got " +
                         show_value(out.value);
            return ent;
        }
        if (exp.contains("name") && out.name != exp["name"].get<std::string>()) {
            ent.detail = "expected " + want + " " + exp["name"].get<std::string>() + ", got " +
                         out.name;
            return ent;
        }
        if (auto* sim = dynamic_cast<FsSimContainer*>(cont.get())) {
            if (j.contains("printed") && sim->printed() != j["printed"].get<std::string>()) {
                ent.detail = "expected printed \"" + j["printed"].get<std::string>() +
                             "\", got \"" + sim->printed() + "\"";
                return ent;
            }
            if (j.contains("files")) {
                for (const auto& [path, content] : j["files"].items()) {
                    auto it = sim->files().find(path);
                    if (it == sim->files().end()) {
                        ent.detail = "expected file " + path + " to exist";
                        return ent;
                    }
                    if (it->second.content != content.get<std::string>()) {
                        ent.detail = "file " + path + ": expected \"" +
                                     content.get<std::string>() + "\", got \"" +
                                     it->second.content + "\"";
                        return ent;
                    }
                }
            }
        }
        ent.pass = true;
    } catch (const std::exception& e) {
        ent.detail = e.what();
    }
    return ent;
}

CorpusEntry run_negative(const std::string& dir, const json& j) {
    CorpusEntry ent;
    std::string file = j.at("file").get<std::string>();
    std::string rule = j.at("rule").get<std::string>();
    ent.name = file;
    try {
        SourceProgram prog = parse_program(slurp(dir + "/" + file));
        prog = desugar_program(std::move(prog));
        check_program(prog);
        ent.detail = "expected rejection [" + rule + "], but the program checked";
    } catch (const Diagnostic& d) {
        if (d.rule == rule)
            ent.pass = true;
        else
            ent.detail = "expected rule [" + rule + "], got [" + d.rule + "] " + d.detail;
    } catch (const std::exception& e) {
        ent.detail = e.what();
    }
    return ent;
}

} // namespace

CorpusReport run_corpus(const std::string& dir) {
    CorpusReport report;
    json manifest = json::parse(slurp(dir + "/manifest.json"));
    for (const json& j : manifest.at("programs")) report.entries.push_back(run_program(dir, j));
    for (const json& j : manifest.at("negative")) report.entries.push_back(run_negative(dir, j));
    for (const CorpusEntry& e : report.entries)
        if (!e.pass) report.ok = false;
    return report;
}

} // namespace coop
