#pragma once

// Bidirectional type-and-effect checking. Values synthesize their types
// (injections need an ascription); computations synthesize the least effect
// rows that cover them. Kernel computations carry an ambient state type that
// flows downward from funK annotations, runner literals, and kernel blocks;
// a computation that neither observes nor constrains the state leaves it
// open (null) until some context pins it.
//
// Checking also elaborates: let nodes become try blocks whose exception
// clauses re-raise, so later passes see only the core language.

#include <map>
#include <utility>

#include "coop/ast.hpp"

namespace coop {

bool subtype(const ValueTypePtr& a, const ValueTypePtr& b);
bool subtype(const UserTypePtr& a, const UserTypePtr& b);
bool subtype(const KernelTypePtr& a, const KernelTypePtr& b);

// Least upper bounds, used to combine branch types. Throw Diagnostic when the
// two sides are incompatible (reported at `pos`).
ValueTypePtr join_value(const ValueTypePtr& a, const ValueTypePtr& b, SourcePos pos);
UserTypePtr join_user(const UserTypePtr& a, const UserTypePtr& b, SourcePos pos);
KernelTypePtr join_kernel(const KernelTypePtr& a, const KernelTypePtr& b, SourcePos pos);

class Checker {
public:
    using Env = std::map<std::string, ValueTypePtr>;

    explicit Checker(const EffectTables& tables) : tables_(tables) {}

    // Synthesis returns the elaborated term alongside its type.
    std::pair<TermPtr, ValueTypePtr> synth_value(const Env& env, const TermPtr& t);
    std::pair<TermPtr, UserTypePtr> synth_user(const Env& env, const TermPtr& t);
    // `state_ctx` is the ambient kernel state type, or null when unknown.
    std::pair<TermPtr, KernelTypePtr> synth_kernel(const Env& env, const TermPtr& t,
                                                   const GroundPtr& state_ctx);

    // Checks a value against an expected type (handles bare injections and
    // pairs structurally, otherwise synthesizes and applies subsumption).
    TermPtr check_value(const Env& env, const TermPtr& t, const ValueTypePtr& expected);

    // Rejects types whose effect rows mention undeclared names.
    void validate_type(const ValueTypePtr& t, SourcePos pos) const;

private:
    std::pair<FinallyPtr, UserTypePtr> check_finally(const Env& env, const FinallyPtr& fin,
                                                     const ValueTypePtr& result,
                                                     const GroundPtr& state, const NameSet& excs,
                                                     const NameSet& sigs, SourcePos pos,
                                                     const char* rule);

    const EffectTables& tables_;
};

struct TypedProgram {
    EffectTables tables;
    TermPtr term;          // top-level lets folded around main, elaborated
    UserTypePtr type;
};

// The program must already be desugared.
TypedProgram check_program(const SourceProgram& prog);

} // namespace coop
