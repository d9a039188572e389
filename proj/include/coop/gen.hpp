#pragma once

// Seeded generator of closed well-typed terms in the oracle fragment: ground
// types built from unit/bool/int/products/sums, integer literals confined to
// [0, int_bound), no arithmetic, and every operation call handler-complete.
// Used by the equation suite and the evaluator/oracle agreement tests.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coop/ast.hpp"

namespace coop {

// The fixed test signature: two exceptions, two signals, and three operations
// whose parameter and result types stay enumerable at small bounds.
//   op0 : unit ~> bool        op1 : int ~> int ! {E1}      op2 : bool ~> unit ! {E1, E2}
EffectTables oracle_tables();

struct GenConfig {
    long long int_bound = 4;   // int literals drawn from [0, int_bound)
    bool pure = false;         // forbid operation calls that would escape to the container
};

class Gen {
public:
    Gen(uint64_t seed, const EffectTables& tables, GenConfig cfg = {});

    uint64_t pick(uint64_t n);                 // uniform in [0, n)
    bool flip(double p = 0.5);

    GroundPtr ground(int depth = 1);           // enumerable ground type
    ValueTypePtr ground_type(int depth = 1);   // same, as a value type

    // Closed well-typed terms (modulo the variables currently in scope).
    TermPtr value(const ValueTypePtr& ty, int depth);
    TermPtr user(const ValueTypePtr& carrier, int depth);
    TermPtr kernel(const ValueTypePtr& carrier, const GroundPtr& state, int depth);
    TermPtr runner_lit(const GroundPtr& state, int depth);   // handles every operation
    FinallyPtr fin_clauses(int depth);         // total over all exceptions and signals

    // Top-level program; with cfg.pure no operation reaches the container.
    TermPtr program(int depth);

    // Open-term support for equation schemas.
    std::string fresh_name();
    size_t scope_mark() const { return scope_.size(); }
    void scope_push(const std::string& name, const ValueTypePtr& ty);
    void scope_reset(size_t mark) { scope_.resize(mark); }

    const EffectTables& tables;
    GenConfig cfg;
    std::mt19937_64 rng;

private:
    TermPtr user_at(const ValueTypePtr& carrier, int depth, bool ops_ok);
    TermPtr kernel_at(const ValueTypePtr& carrier, const GroundPtr& state, int depth, bool ops_ok,
                      const NameSet& excs_ok, const NameSet& sigs_ok);
    TermPtr runner_at(const GroundPtr& state, int depth, bool ops_ok);
    FinallyPtr fin_at(int depth, bool ops_ok);
    TermPtr var_of(const ValueTypePtr& ty);    // in-scope variable or null

    std::vector<std::pair<std::string, ValueTypePtr>> scope_;
    int fresh_ = 0;
};

} // namespace coop
