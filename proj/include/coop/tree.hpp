#pragma once

// Finite computation trees: the free-model denotation domain used as an
// independent oracle against the evaluator. Leaves carry monad payloads
// (user: value or exception; kernel: (value or exception) with a final state,
// or a signal); nodes are operation calls whose result continuations are
// total over a finite enumeration of the operation's result type.
//
// Enumeration restricts ground types to unit/bool/products/sums and ints
// confined to [0, int_bound); strings and functions are not enumerable, so
// programs whose operation signatures need them are evaluator-only.

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/ast.hpp"
#include "coop/value.hpp"

namespace coop {

// A denotation stepped outside its domain (unenumerable type, exhausted node
// budget, or a payload no clause covers). For well-typed inputs inside the
// oracle fragment these are unreachable, so reaching one is a hard failure.
struct OracleError : std::logic_error {
    using std::logic_error::logic_error;
};

struct SemValue;
using SemPtr = std::shared_ptr<const SemValue>;
struct Tree;
using TreePtr = std::shared_ptr<const Tree>;
struct RunnerDen;
using RunnerDenPtr = std::shared_ptr<const RunnerDen>;

// Denoted value. Functions are host-level maps between denotations and carry
// their argument type (and state type, for kernel functions) so two functions
// can be compared extensionally over a finite enumeration.
struct SemValue {
    enum class Tag { Int, Bool, Str, Unit, Pair, Inl, Inr, UserFn, KernelFn, Runner };
    Tag tag = Tag::Unit;
    long long ival = 0;
    bool bval = false;
    std::string sval;
    SemPtr v0, v1;                                        // Pair; injections use v0
    std::function<TreePtr(const SemPtr&)> ufn;            // UserFn: arg -> user tree
    std::function<TreePtr(const SemPtr&, const SemPtr&)> kfn; // KernelFn: arg, state -> kernel tree
    ValueTypePtr fn_arg;                                  // UserFn/KernelFn argument type
    GroundPtr fn_state;                                   // KernelFn state type
    RunnerDenPtr runner;
};

SemPtr sem_int(long long v);
SemPtr sem_bool(bool v);
SemPtr sem_str(std::string v);
SemPtr sem_unit();
SemPtr sem_pair(SemPtr a, SemPtr b);
SemPtr sem_inl(SemPtr v);
SemPtr sem_inr(SemPtr v);
SemPtr sem_user_fn(std::function<TreePtr(const SemPtr&)> f, ValueTypePtr arg);
SemPtr sem_kernel_fn(std::function<TreePtr(const SemPtr&, const SemPtr&)> f, ValueTypePtr arg,
                     GroundPtr state);
SemPtr sem_runner(RunnerDenPtr r);

// Per handled operation, a co-operation from argument and state to a kernel
// tree over the external signature.
struct RunnerDen {
    std::map<std::string, std::function<TreePtr(const SemPtr&, const SemPtr&)>> coops;
    GroundPtr state_ty;
};

// One node type covers both monads; Tag picks the payload shape.
struct Tree {
    enum class Tag { Ret, Exc, KRet, KExc, Sig, Op };
    Tag tag = Tag::Ret;
    SemPtr value;                         // Ret / KRet
    SemPtr state;                         // KRet / KExc
    std::string name;                     // Exc/KExc: exception; Sig: signal; Op: op name
    SemPtr arg;                           // Op
    std::vector<TreePtr> children;        // Op: indexed by enumerate(result type)
    std::map<std::string, TreePtr> exc_children; // Op: total over the op's exceptions
};

TreePtr tree_ret(SemPtr v);
TreePtr tree_exc(std::string e);
TreePtr tree_kret(SemPtr v, SemPtr state);
TreePtr tree_kexc(std::string e, SemPtr state);
TreePtr tree_sig(std::string s);

// Shared bounds and the defensive node budget; `charge` is called once per
// constructed op node.
struct TreeCtx {
    const EffectTables& tables;
    long long int_bound = 4;       // ints enumerate over [0, int_bound)
    long long node_budget = 10000;
    long long nodes = 0;

    explicit TreeCtx(const EffectTables& t) : tables(t) {}
    void charge() {
        if (++nodes > node_budget) throw OracleError("computation tree node budget exceeded");
    }
    const OpSig& sig(const std::string& op) const;
};

// Builds an op node; children must line up with enumerate(ctx, sig.result)
// and exc_children must be total over sig.excs.
TreePtr tree_op(TreeCtx& ctx, const std::string& op, SemPtr arg, std::vector<TreePtr> children,
                std::map<std::string, TreePtr> exc_children);

// All values of a type in canonical order; OracleError if not enumerable.
std::vector<SemPtr> enumerate(const TreeCtx& ctx, const GroundPtr& g);
std::vector<SemPtr> enumerate(const TreeCtx& ctx, const ValueTypePtr& t);
bool enumerable(const TreeCtx& ctx, const ValueTypePtr& t);

// Index of `v` in enumerate(ctx, g); OracleError when outside the bound.
size_t enum_index(const TreeCtx& ctx, const GroundPtr& g, const SemPtr& v);

// Structural equality; functions extensionally over their argument (and
// state) enumerations, runners extensionally over each co-operation.
bool sem_equal(const TreeCtx& ctx, const SemPtr& a, const SemPtr& b);
bool tree_equal(const TreeCtx& ctx, const TreePtr& a, const TreePtr& b);

std::string show_sem(const SemPtr& v);
std::string show_tree(const TreePtr& t);

// Conversions for cross-checking against the evaluator (ground data only).
RtPtr sem_to_rt(const SemPtr& v);
SemPtr rt_to_sem(const RtPtr& v);

// Kleisli plumbing. Ret/KRet and Exc/KExc leaves go to the callbacks, Sig
// leaves pass through, op nodes are rebuilt over the transformed children.
TreePtr utree_bind(TreeCtx& ctx, const TreePtr& t,
                   const std::function<TreePtr(const SemPtr&)>& on_ret,
                   const std::function<TreePtr(const std::string&)>& on_exc);
TreePtr ktree_bind(TreeCtx& ctx, const TreePtr& t,
                   const std::function<TreePtr(const SemPtr&, const SemPtr&)>& on_ret,
                   const std::function<TreePtr(const std::string&, const SemPtr&)>& on_exc);

// The unique homomorphism a runner induces: turns a user-payload tree into a
// state-passing kernel-payload tree, replacing each op node by its
// co-operation with the continuation Kleisli-extended. Ops the runner does
// not handle are a hard failure.
TreePtr run_morphism(TreeCtx& ctx, const RunnerDen& r, const TreePtr& user_tree,
                     const SemPtr& state);

// Single op call with identity continuations: op(arg, b. return b) with each
// exception re-raised. Recovers a co-operation from a morphism.
TreePtr op_probe(TreeCtx& ctx, const std::string& op, const SemPtr& arg);

// Finalisation map: total on declared exceptions and signals, anything else
// is out of domain.
struct FinalisationMap {
    std::function<TreePtr(const SemPtr&, const SemPtr&)> on_ret;        // value, state
    std::function<TreePtr(const std::string&, const SemPtr&)> on_exc;   // exception, state
    std::function<TreePtr(const std::string&)> on_sig;
    NameSet excs;
    NameSet sigs;
};

struct Finalised {
    TreePtr result;   // phi Kleisli-extended over the kernel tree
    TreePtr witness;  // the kernel tree the result factors through
};

// Applies phi over every leaf of a kernel-payload tree and keeps the tree as
// the factoring witness: re-extending phi over the witness rebuilds result.
Finalised finalisation_apply(TreeCtx& ctx, const FinalisationMap& phi, const TreePtr& t);

} // namespace coop
