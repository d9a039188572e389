#pragma once

#include <string>

#include "coop/ast.hpp"

namespace coop {

struct ParseOptions {
    // Seed for the fresh-name counter used while renaming shadowed binders.
    // Two programs parsed with different seeds never share generated names,
    // which keeps alpha-comparison of independent parses honest.
    unsigned long long name_counter = 0;
};

// Parses a whole program: effect declarations, top-level lets, then the main
// user computation. All binders are made pairwise distinct before returning.
// Throws Diagnostic on malformed input.
SourceProgram parse_program(const std::string& src, const ParseOptions& opts = {});

// Parses a single computation of the given sort against existing declarations.
// Used by tests and by the round-trip property (print then reparse).
TermPtr parse_computation(const std::string& src, const EffectTables& tables, Sort sort,
                          const ParseOptions& opts = {});

// Parses a single value expression (no trailing input allowed).
TermPtr parse_value(const std::string& src, const EffectTables& tables,
                    const ParseOptions& opts = {});

// Parses a value type, e.g. "int * (unit -> bool ! {flip})".
ValueTypePtr parse_value_type(const std::string& src);

} // namespace coop
