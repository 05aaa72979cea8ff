#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semqo/executor.hpp"
#include "semqo/judge.hpp"
#include "semqo/plan.hpp"
#include "semqo/rules.hpp"
#include "semqo/table.hpp"

namespace semqo {

struct OptimizerConfig {
  std::size_t n_max = 3;
  double lambda = 0.2;
  double epsilon = 0.8;
  std::uint64_t seed = 0;
};

/// Sampling weights over candidate costs:
///   Pr(i) = lambda/|P| + (1-lambda) * exp(cost_max - cost_i)
///                        / sum_j exp(cost_max - cost_j)
std::vector<double> candidate_distribution(const std::vector<double>& costs,
                                           double lambda);

/// Draws an index from candidate_distribution(costs, lambda).
std::size_t sample_candidate(const std::vector<double>& costs, double lambda,
                             std::mt19937_64& rng);

/// Scores one candidate: acc in [0,1], cost at full-table scale.
using PlanEvaluator = std::function<PlanStats(const LogicalPlan&)>;

/// One node of the search tree; recorded for `explain`.
struct CandidateRecord {
  std::string id;  // "p0", "p1", ...
  std::optional<std::string> parent_id;
  std::optional<std::string> rule;
  LogicalPlan plan;
  PlanStats stats;
  bool accepted = false;
  std::string note;  // rejection reason, empty when accepted
};

struct LogicalOptimizationResult {
  LogicalPlan best;
  PlanStats best_stats;
  std::vector<CandidateRecord> trace;
};

/// Random-walk search: n_max iterations of sample -> rewrite -> evaluate.
/// A candidate joins the pool iff its acc >= epsilon and its cost does not
/// exceed the sampled parent's. Returns the cheapest pooled plan (the
/// initial plan in the worst case). Deterministic given config.seed.
LogicalOptimizationResult optimize_logical(const LogicalPlan& p0,
                                           const RewriterContract& rewriter,
                                           const PlanEvaluator& evaluate,
                                           const OptimizerConfig& config = {});

/// Candidate tree serialized as JSON for `explain`.
std::string serialize_trace(const std::vector<CandidateRecord>& trace);

struct SampleEvaluatorConfig {
  ExecutorConfig executor;
  double full_rows = 0;  // scale for cost estimates; 0 -> sample row count
};

/// Builds the evaluator used by `optimize_logical` in the real pipeline:
/// the baseline and each candidate run over `sample` with the ladder-top
/// model, the judge compares the two outputs (acc = normalized score), and
/// cost is estimated at full-table scale with prompt sizes taken from the
/// sample's average cell width. Execution failure yields acc 0.
PlanEvaluator make_sample_evaluator(const LogicalPlan& baseline,
                                    const Table& sample,
                                    const ModelLadder& ladder,
                                    const JudgeContract& judge,
                                    const SampleEvaluatorConfig& config = {});

/// Average rendered cell width over a table (plan cost prompt sizing).
double average_cell_chars(const Table& table);

/// Cost of `plan` at `full_rows` scale with every semantic operator priced
/// at `model_id`, prompt sizes from instruction + avg_cell_chars.
double plan_cost_estimate(const LogicalPlan& plan, double full_rows,
                          double avg_cell_chars, const PricingTable& pricing,
                          const std::string& model_id,
                          const CostModelConfig& cost_config = {});

}  // namespace semqo
