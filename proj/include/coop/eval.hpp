#pragma once

// Environment-based big-step evaluator. A computation evaluates to a step:
// either a terminal result or a suspension on an operation call whose
// continuations close over the environment. Run and kernel blocks settle the
// steps of their bodies, wrapping suspended continuations so the remainder of
// the construct travels with them.
//
// Continuations are one-shot: each suspension owns a flag, and invoking any
// of its continuations twice throws AffinityViolation.

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/ast.hpp"
#include "coop/value.hpp"

namespace coop {

struct AffinityViolation : std::logic_error {
    AffinityViolation() : std::logic_error("continuation invoked more than once") {}
};

// Raised when a container or program breaks a dynamic contract (for example a
// reply that does not match the operation's result type).
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UserStep;
struct KernelStep;

// Suspension on an operation call. `succ` delivers a result, `exc` delivers
// one of the operation's declared exceptions, `kill` delivers a signal from
// outside; the kill unwinds inward, giving the innermost pending finalisation
// frame the first chance to catch it.
struct UserOpCall {
    std::string op;
    RtPtr arg;
    std::function<UserStep(const RtPtr&)> succ;
    std::map<std::string, std::function<UserStep()>> exc;
    std::function<UserStep(const std::string&)> kill;
};

struct UserStep {
    enum class Tag { Return, Raise, Op, Killed };
    Tag tag = Tag::Return;
    RtPtr value;           // Return
    std::string name;      // Raise: exception; Killed: signal
    std::shared_ptr<UserOpCall> call;
};

struct KernelOpCall {
    std::string op;
    RtPtr arg;
    std::function<KernelStep(const RtPtr&)> succ;
    std::map<std::string, std::function<KernelStep()>> exc;
    std::function<KernelStep(const std::string&)> kill;
};

struct KernelStep {
    enum class Tag { Return, Raise, Kill, Op };
    Tag tag = Tag::Return;
    RtPtr value;           // Return
    std::string name;      // Raise: exception; Kill: signal
    RtPtr state;           // Return/Raise carry the final state; Kill discards it
    std::shared_ptr<KernelOpCall> call;
};

UserStep user_return(RtPtr v);
UserStep user_raise(std::string e);
UserStep user_killed(std::string s);
KernelStep kernel_return(RtPtr v, RtPtr state);
KernelStep kernel_raise(std::string e, RtPtr state);
KernelStep kernel_kill(std::string s);

// ------------------------------------------------------------------ tracing

struct TraceEvent {
    std::string event;       // "op" | "coop-return" | "coop-raise" | "coop-kill" | "finally"
    std::string op;          // for "op" and coop events
    std::string exception;   // for coop-raise and finally-after-raise
    std::string signal;      // for coop-kill and finally-after-kill
    int run_depth = 0;
};

struct TraceLog {
    std::vector<TraceEvent> events;
};

// One record per dynamic run / kernel-block instance.
struct FinalisationRecord {
    SourcePos site;
    int count = 0;           // clause executions for this instance
    std::string kind;        // last clause fired: "return" | "raise" | "kill"
};

struct FinalisationLog {
    std::vector<std::shared_ptr<FinalisationRecord>> records;
};

struct EvalStats {
    long long resumes = 0;       // continuation invocations
    long long op_calls = 0;      // operation call suspensions created
};

// ------------------------------------------------------------------ evaluator

class Evaluator {
public:
    explicit Evaluator(const EffectTables& tables) : tables_(tables) {}

    RtPtr eval_value(const EnvPtr& env, const TermPtr& t);
    UserStep eval_user(const EnvPtr& env, const TermPtr& t, int run_depth = 0);
    KernelStep eval_kernel(const EnvPtr& env, const TermPtr& t, const RtPtr& state,
                           int run_depth = 0);

    TraceLog* trace = nullptr;             // optional event sink
    FinalisationLog finalisations;
    EvalStats stats;

    const EffectTables& tables() const { return tables_; }

private:
    UserStep drive_run(const RtPtr& runner, const RtPtr& state, UserStep body,
                       const FinallyPtr& fin, const EnvPtr& env, int depth,
                       const std::shared_ptr<FinalisationRecord>& rec);
    UserStep drive_coop(const RtPtr& runner, const std::string& op, KernelStep ks,
                        const std::shared_ptr<UserOpCall>& call, const FinallyPtr& fin,
                        const EnvPtr& env, int depth,
                        const std::shared_ptr<FinalisationRecord>& rec);
    UserStep settle_kernel_block(KernelStep ks, const FinallyPtr& fin, const EnvPtr& env,
                                 int depth, const std::shared_ptr<FinalisationRecord>& rec);
    KernelStep settle_user_block(UserStep us, const std::string& ret_var, const TermPtr& ret_body,
                                 const std::map<std::string, TermPtr>& handlers,
                                 const RtPtr& state, const EnvPtr& env, int depth);
    UserStep finalise(const FinallyPtr& fin, const EnvPtr& env, int depth,
                      const std::shared_ptr<FinalisationRecord>& rec, const char* kind,
                      const std::string& name, const RtPtr& value, const RtPtr& state);

    // Monadic plumbing: terminal cases go to the callbacks, Killed/Kill pass
    // through, suspensions are wrapped so the transform re-applies on resume.
    UserStep transform_user(UserStep s, std::function<UserStep(const RtPtr&)> on_ret,
                            std::function<UserStep(const std::string&)> on_raise);
    KernelStep transform_kernel(KernelStep s,
                                std::function<KernelStep(const RtPtr&, const RtPtr&)> on_ret,
                                std::function<KernelStep(const std::string&, const RtPtr&)>
                                    on_raise);

    // Fresh one-shot suspensions (every wrapper re-guards).
    UserStep make_user_op(std::string op, RtPtr arg, std::function<UserStep(const RtPtr&)> succ,
                          std::map<std::string, std::function<UserStep()>> exc,
                          std::function<UserStep(const std::string&)> kill);
    KernelStep make_kernel_op(std::string op, RtPtr arg,
                              std::function<KernelStep(const RtPtr&)> succ,
                              std::map<std::string, std::function<KernelStep()>> exc,
                              std::function<KernelStep(const std::string&)> kill);

    void emit(TraceEvent ev) {
        if (trace) trace->events.push_back(std::move(ev));
    }
    std::shared_ptr<FinalisationRecord> new_record(SourcePos site) {
        auto rec = std::make_shared<FinalisationRecord>();
        rec->site = site;
        finalisations.records.push_back(rec);
        return rec;
    }

    const EffectTables& tables_;
};

} // namespace coop
