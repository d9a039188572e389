#pragma once

// Top-level containers: the host-side runners a whole program executes under.
// The driver pumps the evaluator and forwards each suspended operation call
// to the container; a container reply is a result value, an exception of the
// operation's signature, or a signal that unwinds into the program.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coop/eval.hpp"
#include "coop/value.hpp"

namespace coop {

struct Outcome {
    enum class Tag { Return, Raise, Kill };
    Tag tag = Tag::Return;
    RtPtr value;           // Return
    std::string name;      // Raise / Kill

    static Outcome ret(RtPtr v) { return {Tag::Return, std::move(v), {}}; }
    static Outcome raise(std::string e) { return {Tag::Raise, nullptr, std::move(e)}; }
    static Outcome kill(std::string s) { return {Tag::Kill, nullptr, std::move(s)}; }
};

bool operator==(const Outcome& a, const Outcome& b);
std::string show_outcome(const Outcome& o);

struct ContainerReply {
    enum class Tag { Result, Raise, Kill };
    Tag tag = Tag::Result;
    RtPtr value;
    std::string name;

    static ContainerReply result(RtPtr v) { return {Tag::Result, std::move(v), {}}; }
    static ContainerReply raise(std::string e) { return {Tag::Raise, nullptr, std::move(e)}; }
    static ContainerReply kill(std::string s) { return {Tag::Kill, nullptr, std::move(s)}; }
};

class Container {
public:
    virtual ~Container() = default;
    virtual std::string name() const = 0;
    virtual bool supports(const std::string& op) const = 0;
    virtual ContainerReply handle(const std::string& op, const RtPtr& arg) = 0;
};

// Supports no operations at all.
std::unique_ptr<Container> make_pure_container();

// One mutable cell holding an arbitrary value, initially int 0.
//   load : unit ~> X   returns the cell;  store : X ~> unit  replaces it.
std::unique_ptr<Container> make_state_container();

// ------------------------------------------------------------------ fs-sim

struct FsSimConfig {
    long long quota = 1 << 20;             // bytes per file
    std::optional<long long> fail_at_write; // write index that triggers Kill(IOError)
    std::map<std::string, std::string> files;
};

// Parses the JSON object {quota, failAtWrite, files}; throws std::runtime_error
// with a readable message on malformed input.
FsSimConfig parse_fs_config(const std::string& json_text);

struct FsSimFile {
    std::string content;
    bool open = false;
    bool ever_closed = false;
};

// In-memory filesystem:
//   open  : str ~> int          allocates a handle over an empty buffer
//   write : int * str ~> unit   appends; over quota → Raise QuotaExceeded;
//                               write index == failAtWrite → Kill IOError;
//                               closed or unknown handle → Kill IOError
//   close : int ~> unit         marks closed; closing twice → Kill DoubleClose
//   print : str ~> unit         appends to the captured output stream
class FsSimContainer : public Container {
public:
    explicit FsSimContainer(FsSimConfig config);
    std::string name() const override { return "fs-sim"; }
    bool supports(const std::string& op) const override;
    ContainerReply handle(const std::string& op, const RtPtr& arg) override;

    // Inspection for tests and the corpus runner.
    const std::map<std::string, FsSimFile>& files() const { return files_; }
    const std::string& printed() const { return printed_; }
    long long writes_handled() const { return write_index_; }

private:
    FsSimConfig config_;
    std::map<std::string, FsSimFile> files_;
    std::vector<std::string> handle_paths_;   // handle -> path
    std::string printed_;
    long long write_index_ = 0;
};

// Real files under a sandbox directory; any path that would escape the
// sandbox yields Kill(SandboxViolation), host I/O failures yield
// Kill(IOError). Same operation names as fs-sim; print goes to stdout.
std::unique_ptr<Container> make_fs_real_container(const std::string& sandbox_dir);

// ------------------------------------------------------------------ driver

// Pumps `step`, dispatching operation suspensions to the container. An op the
// container does not support raises EvalError (checked mode rejects such
// programs before evaluation). Container kills are delivered inward through
// the suspended continuation so pending finalisation frames can catch them.
Outcome run_toplevel(Container& container, Evaluator& ev, UserStep step);

} // namespace coop
