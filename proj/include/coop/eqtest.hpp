#pragma once

// Program-equivalence test suite: each schema instantiates both sides of one
// program equation with generated metavariables, typechecks them, denotes
// them to computation trees, and compares the trees structurally (kernel
// instances are compared at every enumerable state). When both sides denote
// to leaves the evaluator is cross-checked against the same instance.
//
// The mutation list contains deliberately wrong equations with pinned
// distinguishing instances; the suite passes only if every schema holds on
// all cases and every mutation fails on at least one.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coop/ast.hpp"
#include "coop/gen.hpp"

namespace coop {

struct EqInstance {
    Sort sort = Sort::User;   // User or Kernel
    TermPtr lhs, rhs;
    GroundPtr state_ty;       // Kernel: compared at every value of this type
};

struct Schema {
    std::string id;
    std::function<EqInstance(Gen&)> make;
};

const std::vector<Schema>& equation_schemas();
const std::vector<Schema>& mutation_schemas();

struct CheckOutcome {
    bool ok = false;
    bool rejected = false;   // instance failed to typecheck; not counted
    std::string detail;
};

CheckOutcome check_instance(const EffectTables& tables, const EqInstance& inst,
                            long long int_bound, long long node_budget);

struct SchemaResult {
    std::string id;
    int cases = 0;
    int failures = 0;
    int rejected = 0;
    std::string first_failure;
};

struct SuiteConfig {
    uint64_t seed = 1;
    int cases = 100;
    int mutation_cases = 5;
    long long int_bound = 4;
    long long node_budget = 10000;
    std::string only_schema;       // empty: all
};

struct SuiteResult {
    std::vector<SchemaResult> schemas;
    std::vector<SchemaResult> mutations;
    // Every schema clean and every mutation caught at least once.
    bool ok() const;
};

SuiteResult run_equation_suite(const SuiteConfig& cfg);

} // namespace coop
