#pragma once

// User-facing diagnostics: position, the rule that failed, and a message.
// The CLI prefixes the file name when printing.

#include <stdexcept>
#include <string>

#include "coop/ast.hpp"

namespace coop {

struct Diagnostic : std::runtime_error {
    SourcePos pos;
    std::string rule;    // e.g. "parse", "TyUser-Run", "TyValue-Runner"
    std::string detail;

    Diagnostic(SourcePos p, std::string rule_, std::string detail_)
        : std::runtime_error(std::to_string(p.line) + ":" + std::to_string(p.col) + ": [" +
                             rule_ + "] " + detail_),
          pos(p),
          rule(std::move(rule_)),
          detail(std::move(detail_)) {}
};

} // namespace coop
