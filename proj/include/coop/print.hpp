#pragma once

// Pretty-printing of types and terms. Term output is concrete syntax the
// parser accepts back (round-trip up to α-equivalence).

#include "coop/ast.hpp"

namespace coop {

std::string show(const GroundPtr& g);
std::string show(const ValueTypePtr& t);
std::string show(const UserTypePtr& t);
std::string show(const KernelTypePtr& t);
std::string show(const NameSet& names);

std::string show_term(const TermPtr& t);

} // namespace coop
