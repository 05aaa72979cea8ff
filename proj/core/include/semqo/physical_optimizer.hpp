#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semqo/executor.hpp"
#include "semqo/model_backend.hpp"
#include "semqo/plan.hpp"
#include "semqo/table.hpp"

namespace semqo {

enum class ScoreMode { Exact, Optimized, Approximate };

std::string to_string(ScoreMode mode);
ScoreMode score_mode_from_string(const std::string& s);

/// Improvement scores along a ladder m1..m*, plus invocation accounting.
/// scores[k] is the expected fraction of inputs where switching from m1 to
/// m_{k+2} newly matches m*'s output; the last entry compares m1 to m*
/// directly. For the four-model ladder this is (i12, i13, i1star).
struct ImprovementScores {
  std::vector<double> scores;
  // Invocation deltas attributed to each score, aligned with `scores`.
  std::vector<std::map<std::string, std::uint64_t>> calls_per_score;
  std::map<std::string, std::uint64_t> total_calls;
  std::size_t sample_size = 0;

  double i12() const { return scores.at(0); }
  double i13() const { return scores.at(1); }
  double i1star() const { return scores.back(); }
};

/// One operator's scoring inputs: the instruction plus the rendered cell
/// of every sampled row.
struct ScoringTask {
  OperatorKind kind = OperatorKind::Filter;
  std::string instruction;
  std::vector<std::string> items;
  EqualityConfig equality;
};

/// Brute-force oracle: every model runs on every item.
ImprovementScores scores_exact(const ScoringTask& task,
                               const ModelLadder& ladder);

/// Same values as scores_exact, but the strongest model is consulted only
/// where a score's conditioning event holds, and its responses are reused
/// across scores.
ImprovementScores scores_optimized(const ScoringTask& task,
                                   const ModelLadder& ladder);

/// Nested-capability approximation: each score reduces to disagreement
/// fractions along the ladder; the strongest model runs only where all
/// weaker models agree. Equals scores_exact whenever capability nesting
/// holds; each score's error is bounded by the violation fraction.
ImprovementScores scores_approx(const ScoringTask& task,
                                const ModelLadder& ladder);

ImprovementScores compute_scores(const ScoringTask& task,
                                 const ModelLadder& ladder, ScoreMode mode);

struct SelectionConfig {
  double delta_i_min = 0.20;
  SampleSpec sample;
  ScoreMode mode = ScoreMode::Optimized;
};

/// Walks the ladder from m1 keeping the last accepted score; model k is
/// accepted iff scores[k] - last_accepted >= delta_i_min. Returns the last
/// accepted index (0 when nothing clears the margin).
std::size_t select_model_from_scores(const std::vector<double>& scores,
                                     double delta_i_min);

/// Scores one operator on its sampled inputs and applies the ladder walk.
std::string select_model(const Operator& op,
                         const std::vector<std::string>& items,
                         const ModelLadder& ladder,
                         const SelectionConfig& config);

/// Per-operator record for score reports and `explain`.
struct OperatorSelection {
  std::string operator_id;
  std::string chosen_model;
  ImprovementScores scores;  // empty for compute operators
};

struct PhysicalOptimizationResult {
  PhysicalPlan plan;
  std::vector<OperatorSelection> selections;
};

/// Assigns a model to every semantic operator independently. Operator
/// inputs at each position come from executing the plan prefix over the
/// sample with the strongest model; compute operators are skipped (they
/// cost nothing). An operator with no surviving sample rows falls back to
/// the weakest model.
PhysicalOptimizationResult optimize_physical(const LogicalPlan& plan,
                                             const Table& sample,
                                             const ModelLadder& ladder,
                                             const SelectionConfig& config,
                                             const ExecutorConfig& executor = {},
                                             const EqualityConfig& equality = {});

/// Score report JSON: per-operator scores, mode, invocations, chosen model.
std::string serialize_selections(const std::vector<OperatorSelection>& selections,
                                 ScoreMode mode);

}  // namespace semqo
