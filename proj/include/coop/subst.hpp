#pragma once

// Binding utilities: fresh names, free variables, capture-avoiding
// substitution and α-equivalence (via a nameless canonical form).

#include "coop/ast.hpp"

namespace coop {

// Monotone per-session counter. Fresh names use a '$' suffix, which the lexer
// rejects in identifiers, so they can never collide with source names.
struct NameSupply {
    unsigned long long next = 0;
    std::string fresh(const std::string& base);
};

NameSet free_vars(const TermPtr& t);

// Capture-avoiding substitution of a value term for a variable. Binders that
// would capture free variables of `value` are renamed with `supply`.
TermPtr substitute(const TermPtr& t, const std::string& var, const TermPtr& value,
                   NameSupply& supply);
// Convenience overload with a private supply seeded past every '$n' suffix
// already present (deterministic for a given call).
TermPtr substitute(const TermPtr& t, const std::string& var, const TermPtr& value);

// Canonical nameless rendering: bound variables print as %k (binding depth),
// binders print as '%', free variables and all annotations stay. Two terms
// are α-equivalent iff their renderings are equal.
std::string nameless_form(const TermPtr& t);
bool alpha_equal(const TermPtr& a, const TermPtr& b);

// Renames every shadowing binder so all binders in the term are distinct;
// first occurrences keep their names. Used by the parser.
TermPtr uniquify(const TermPtr& t, NameSupply& supply);

} // namespace coop
