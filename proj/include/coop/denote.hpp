#pragma once

// Denotational semantics over finite computation trees, independent of the
// evaluator. Values denote to SemValue (functions as host-level maps), user
// computations to user-payload trees, kernel computations to state-passing
// kernel-payload trees. A run denotes by mapping the body's tree through the
// runner's induced morphism and then through the finalisation map; both
// stages are logged so tests can re-check the factoring.

#include <map>
#include <string>
#include <vector>

#include "coop/ast.hpp"
#include "coop/tree.hpp"

namespace coop {

using SemEnv = std::map<std::string, SemPtr>;

struct RunDenotation {
    TreePtr witness;        // kernel-payload tree the result factors through
    TreePtr result;
    FinalisationMap phi;
    bool is_kernel_block = false;
};

class Denoter {
public:
    explicit Denoter(TreeCtx& ctx) : ctx_(ctx) {}

    SemPtr denote_value(const SemEnv& env, const TermPtr& t);
    TreePtr denote_user(const SemEnv& env, const TermPtr& t);
    TreePtr denote_kernel(const SemEnv& env, const TermPtr& t, const SemPtr& state);

    FinalisationMap make_phi(const SemEnv& env, const FinallyPtr& fin);

    // One entry per run / kernel block denoted, in evaluation order.
    std::vector<RunDenotation> runs;

private:
    TreeCtx& ctx_;
};

} // namespace coop
