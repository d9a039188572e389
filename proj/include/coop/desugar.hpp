#pragma once

#include "coop/ast.hpp"
#include "coop/subst.hpp"

namespace coop {

struct DesugarOptions {
    // When set, a computation in value position is an error instead of being
    // hoisted into a preceding let.
    bool strict_values = false;
};

// Rewrites surface conveniences into the kernel language:
//   - computations nested in value positions are hoisted into lets that bind
//     a fresh name just before the enclosing computation;
//   - generic operation calls  op V  become explicit calls whose success
//     continuation returns the result and whose exception clauses re-raise.
// Let nodes are left in place; the type checker gives them their meaning.
// The supply must be the one the parser finished with so fresh names stay
// distinct from every binder already in the term.
TermPtr desugar(const TermPtr& term, const EffectTables& tables, NameSupply& supply,
                const DesugarOptions& opts = {});

// Applies desugar to every top-level binding and the main computation.
SourceProgram desugar_program(SourceProgram prog, const DesugarOptions& opts = {});

} // namespace coop
