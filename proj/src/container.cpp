#include "coop/container.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace coop {

bool operator==(const Outcome& a, const Outcome& b) {
    if (a.tag != b.tag) return false;
    switch (a.tag) {
    case Outcome::Tag::Return: return rt_equal(a.value, b.value);
    case Outcome::Tag::Raise:
    case Outcome::Tag::Kill: return a.name == b.name;
    }
    return false;
}

std::string show_outcome(const Outcome& o) {
    switch (o.tag) {
    case Outcome::Tag::Return: return "return " + show_value(o.value);
    case Outcome::Tag::Raise: return "raise " + o.name;
    case Outcome::Tag::Kill: return "kill " + o.name;
    }
    return "?";
}

namespace {

struct PureContainer final : Container {
    std::string name() const override { return "pure"; }
    bool supports(const std::string&) const override { return false; }
    ContainerReply handle(const std::string& op, const RtPtr&) override {
        throw InternalError("pure container asked to handle '" + op + "'");
    }
};

struct StateContainer final : Container {
    RtPtr cell = rt_int(0);
    std::string name() const override { return "state"; }
    bool supports(const std::string& op) const override {
        return op == "load" || op == "store";
    }
    ContainerReply handle(const std::string& op, const RtPtr& arg) override {
        if (op == "load") return ContainerReply::result(cell);
        if (op == "store") {
            cell = arg;
            return ContainerReply::result(rt_unit());
        }
        throw InternalError("state container asked to handle '" + op + "'");
    }
};

} // namespace

std::unique_ptr<Container> make_pure_container() { return std::make_unique<PureContainer>(); }
std::unique_ptr<Container> make_state_container() { return std::make_unique<StateContainer>(); }

FsSimConfig parse_fs_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("bad fs config: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("bad fs config: expected a JSON object");
    FsSimConfig cfg;
    for (auto& [key, val] : j.items()) {
        if (key == "quota") {
            if (!val.is_number_integer() || val.get<long long>() < 0)
                throw std::runtime_error("bad fs config: quota must be a non-negative integer");
            cfg.quota = val.get<long long>();
        } else if (key == "failAtWrite") {
            if (val.is_null()) continue;
            if (!val.is_number_integer() || val.get<long long>() < 0)
                throw std::runtime_error(
                    "bad fs config: failAtWrite must be a non-negative integer");
            cfg.fail_at_write = val.get<long long>();
        } else if (key == "files") {
            if (!val.is_object())
                throw std::runtime_error("bad fs config: files must map paths to strings");
            for (auto& [path, content] : val.items()) {
                if (!content.is_string())
                    throw std::runtime_error("bad fs config: files must map paths to strings");
                cfg.files[path] = content.get<std::string>();
            }
        } else {
            throw std::runtime_error("bad fs config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

FsSimContainer::FsSimContainer(FsSimConfig config) : config_(std::move(config)) {
    for (auto& [path, content] : config_.files) files_[path].content = content;
}

bool FsSimContainer::supports(const std::string& op) const {
    return op == "open" || op == "write" || op == "close" || op == "print";
}

ContainerReply FsSimContainer::handle(const std::string& op, const RtPtr& arg) {
    if (op == "open") {
        if (arg->tag != RtValue::Tag::Str)
            throw EvalError("open expects a string path");
        const std::string& path = arg->sval;
        long long handle = static_cast<long long>(handle_paths_.size());
        handle_paths_.push_back(path);
        FsSimFile& f = files_[path];
        f.content.clear();
        f.open = true;
        f.ever_closed = false;
        return ContainerReply::result(rt_int(handle));
    }
    if (op == "write") {
        long long idx = write_index_++;
        if (config_.fail_at_write && idx == *config_.fail_at_write)
            return ContainerReply::kill("IOError");
        if (arg->tag != RtValue::Tag::Pair || arg->v0->tag != RtValue::Tag::Int ||
            arg->v1->tag != RtValue::Tag::Str)
            throw EvalError("write expects an (int, str) pair");
        long long handle = arg->v0->ival;
        if (handle < 0 || handle >= static_cast<long long>(handle_paths_.size()))
            return ContainerReply::kill("IOError");
        FsSimFile& f = files_[handle_paths_[static_cast<size_t>(handle)]];
        if (!f.open) return ContainerReply::kill("IOError");
        const std::string& data = arg->v1->sval;
        if (static_cast<long long>(f.content.size() + data.size()) > config_.quota)
            return ContainerReply::raise("QuotaExceeded");
        f.content += data;
        return ContainerReply::result(rt_unit());
    }
    if (op == "close") {
        if (arg->tag != RtValue::Tag::Int) throw EvalError("close expects a handle");
        long long handle = arg->ival;
        if (handle < 0 || handle >= static_cast<long long>(handle_paths_.size()))
            return ContainerReply::kill("IOError");
        FsSimFile& f = files_[handle_paths_[static_cast<size_t>(handle)]];
        if (!f.open) return ContainerReply::kill("DoubleClose");
        f.open = false;
        f.ever_closed = true;
        return ContainerReply::result(rt_unit());
    }
    if (op == "print") {
        if (arg->tag != RtValue::Tag::Str) throw EvalError("print expects a string");
        printed_ += arg->sval;
        return ContainerReply::result(rt_unit());
    }
    throw InternalError("fs-sim asked to handle '" + op + "'");
}

namespace {

namespace fs = std::filesystem;

struct FsRealContainer final : Container {
    fs::path root;
    std::vector<std::unique_ptr<std::ofstream>> streams; // handle -> stream (null once closed)

    explicit FsRealContainer(const std::string& sandbox_dir) : root(fs::absolute(sandbox_dir)) {}

    std::string name() const override { return "fs-real"; }
    bool supports(const std::string& op) const override {
        return op == "open" || op == "write" || op == "close" || op == "print";
    }

    // A path escapes when it is absolute or any component walks upward.
    bool escapes(const std::string& p) const {
        fs::path rel(p);
        if (rel.is_absolute()) return true;
        for (const auto& part : rel)
            if (part == "..") return true;
        return false;
    }

    ContainerReply handle(const std::string& op, const RtPtr& arg) override {
        if (op == "open") {
            if (arg->tag != RtValue::Tag::Str) throw EvalError("open expects a string path");
            if (escapes(arg->sval)) return ContainerReply::kill("SandboxViolation");
            fs::path full = root / fs::path(arg->sval);
            std::error_code ec;
            fs::create_directories(full.parent_path(), ec);
            auto out = std::make_unique<std::ofstream>(full, std::ios::trunc | std::ios::binary);
            if (!out->is_open()) return ContainerReply::kill("IOError");
            long long handle = static_cast<long long>(streams.size());
            streams.push_back(std::move(out));
            return ContainerReply::result(rt_int(handle));
        }
        if (op == "write") {
            if (arg->tag != RtValue::Tag::Pair || arg->v0->tag != RtValue::Tag::Int ||
                arg->v1->tag != RtValue::Tag::Str)
                throw EvalError("write expects an (int, str) pair");
            long long handle = arg->v0->ival;
            if (handle < 0 || handle >= static_cast<long long>(streams.size()) ||
                !streams[static_cast<size_t>(handle)])
                return ContainerReply::kill("IOError");
            auto& out = *streams[static_cast<size_t>(handle)];
            out << arg->v1->sval;
            out.flush();
            if (!out) return ContainerReply::kill("IOError");
            return ContainerReply::result(rt_unit());
        }
        if (op == "close") {
            if (arg->tag != RtValue::Tag::Int) throw EvalError("close expects a handle");
            long long handle = arg->ival;
            if (handle < 0 || handle >= static_cast<long long>(streams.size()))
                return ContainerReply::kill("IOError");
            auto& slot = streams[static_cast<size_t>(handle)];
            if (!slot) return ContainerReply::kill("DoubleClose");
            slot->close();
            slot.reset();
            return ContainerReply::result(rt_unit());
        }
        if (op == "print") {
            if (arg->tag != RtValue::Tag::Str) throw EvalError("print expects a string");
            std::cout << arg->sval;
            std::cout.flush();
            return ContainerReply::result(rt_unit());
        }
        throw InternalError("fs-real asked to handle '" + op + "'");
    }
};

} // namespace

std::unique_ptr<Container> make_fs_real_container(const std::string& sandbox_dir) {
    return std::make_unique<FsRealContainer>(sandbox_dir);
}

Outcome run_toplevel(Container& container, Evaluator& ev, UserStep step) {
    for (;;) {
        switch (step.tag) {
        case UserStep::Tag::Return: return Outcome::ret(step.value);
        case UserStep::Tag::Raise: return Outcome::raise(step.name);
        case UserStep::Tag::Killed: return Outcome::kill(step.name);
        case UserStep::Tag::Op: {
            auto call = step.call;
            if (!container.supports(call->op))
                throw EvalError("operation '" + call->op + "' is not supported by container '" +
                                container.name() + "'");
            ContainerReply reply = container.handle(call->op, call->arg);
            const OpSig* sig = nullptr;
            auto it = ev.tables().operations.find(call->op);
            if (it != ev.tables().operations.end()) sig = &it->second;
            switch (reply.tag) {
            case ContainerReply::Tag::Result:
                if (sig && !conforms(reply.value, sig->result))
                    throw EvalError("container reply for '" + call->op +
                                    "' does not match its result type");
                step = call->succ(reply.value);
                break;
            case ContainerReply::Tag::Raise: {
                auto h = call->exc.find(reply.name);
                if (h == call->exc.end())
                    throw EvalError("container raised '" + reply.name + "' which '" + call->op +
                                    "' cannot raise");
                step = h->second();
                break;
            }
            case ContainerReply::Tag::Kill:
                step = call->kill(reply.name);
                break;
            }
            break;
        }
        }
    }
}

} // namespace coop
