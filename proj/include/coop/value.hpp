#pragma once

// Runtime values and environments for the evaluator. Environments are
// persistent association lists shared by closures.

#include <map>
#include <memory>
#include <string>

#include "coop/ast.hpp"

namespace coop {

struct RtValue;
using RtPtr = std::shared_ptr<const RtValue>;

struct EnvNode;
using EnvPtr = std::shared_ptr<const EnvNode>;

struct EnvNode {
    std::string name;
    RtPtr value;
    EnvPtr tail;
};

EnvPtr env_bind(const EnvPtr& env, const std::string& name, const RtPtr& value);
// Null when unbound.
RtPtr env_lookup(const EnvPtr& env, const std::string& name);

struct RtValue {
    enum class Tag { Int, Bool, Str, Unit, Pair, Inl, Inr, Fun, FunK, Runner };

    Tag tag = Tag::Unit;
    long long ival = 0;
    bool bval = false;
    std::string sval;
    RtPtr v0, v1;                          // pair components; injection payload in v0

    // Closures (Fun/FunK) and runners capture their defining environment.
    EnvPtr env;
    std::string param;
    TermPtr body;
    std::map<std::string, CoopClause> coops;   // Runner
    GroundPtr state_ty;                        // Runner: its kernel state type
};

RtPtr rt_int(long long v);
RtPtr rt_bool(bool v);
RtPtr rt_str(std::string v);
RtPtr rt_unit();
RtPtr rt_pair(RtPtr a, RtPtr b);
RtPtr rt_inl(RtPtr v);
RtPtr rt_inr(RtPtr v);
RtPtr rt_fun(EnvPtr env, std::string param, TermPtr body);
RtPtr rt_funk(EnvPtr env, std::string param, TermPtr body);
RtPtr rt_runner(EnvPtr env, std::map<std::string, CoopClause> coops, GroundPtr state_ty);

// Structural equality on data; closures and runners compare by identity.
bool rt_equal(const RtPtr& a, const RtPtr& b);

// Fully parenthesised constructor syntax; stable for golden tests.
//   value ::= int | "true" | "false" | string | "()" | "(" value "," value ")"
//           | "inl " value | "inr " value | "<fun>" | "<funK>" | "<runner>"
std::string show_value(const RtPtr& v);

// True iff the value inhabits the ground type (containers use this to check
// replies against operation signatures).
bool conforms(const RtPtr& v, const GroundPtr& g);

} // namespace coop
