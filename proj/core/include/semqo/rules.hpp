#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semqo/plan.hpp"

namespace semqo {

/// Compiles an NL instruction into an expression over `value`, or declines.
using Synthesizer = std::function<std::optional<std::string>(
    OperatorKind kind, const std::string& instruction)>;

/// Pattern-based synthesizer for numeric filter predicates: "higher/lower
/// than X", "between X and Y", "at least/at most X", equality to a numeric
/// literal, and "and" conjunctions of those. Anything else -> nullopt.
std::optional<std::string> builtin_synthesize(OperatorKind kind,
                                              const std::string& instruction);

/// One candidate per filter that can legally move earlier; a filter hops
/// over predecessors whose output column it does not consume, landing as
/// early as legal.
std::vector<LogicalPlan> apply_filter_pushdown(const LogicalPlan& plan);

/// One candidate per maximal run of >=2 adjacent filters on the same input
/// column: a single filter with the conjoined instruction and selectivity
/// 0.5/k for k merged filters.
std::vector<LogicalPlan> apply_operator_fusion(const LogicalPlan& plan);

/// One candidate per semantic operator the synthesizer can compile; the
/// operator becomes the matching compute kind carrying the expression.
std::vector<LogicalPlan> apply_non_llm_replacement(const LogicalPlan& plan,
                                                   const Synthesizer& synthesize);

/// A rewriter yields candidate plans that structurally differ from its
/// input; empty means no rewrite applies.
using RewriterContract =
    std::function<std::vector<LogicalPlan>(const LogicalPlan&)>;

/// The three deterministic rules bundled as a RewriterContract.
RewriterContract rule_based_rewriter(Synthesizer synthesize = builtin_synthesize);

/// Gathers candidates from the rewriter and picks one uniformly; returns
/// the input plan unchanged when no candidate exists.
LogicalPlan rewrite(const LogicalPlan& plan, const RewriterContract& rewriter,
                    std::mt19937_64& rng);
LogicalPlan rewrite(const LogicalPlan& plan, const RewriterContract& rewriter,
                    std::uint64_t seed);

}  // namespace semqo
