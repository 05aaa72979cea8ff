#include "semqo/physical_optimizer.hpp"

#include <optional>
#include <stdexcept>

#include <json.hpp>

namespace semqo {

namespace {

/// Memoized model responses for one scoring task; every backend call goes
/// through here so each (model, item) pair is invoked at most once.
class ResponseCache {
 public:
  ResponseCache(const ScoringTask& task, const ModelLadder& ladder)
      : task_(task),
        ladder_(ladder),
        responses_(ladder.size(),
                   std::vector<std::optional<std::string>>(task.items.size())) {}

  const std::string& get(std::size_t model, std::size_t item) {
    auto& slot = responses_[model][item];
    if (!slot) {
      slot = ladder_.invoke(model, task_.kind, task_.instruction,
                            task_.items[item]);
    }
    return *slot;
  }

  bool equal(std::size_t model_a, std::size_t model_b, std::size_t item) {
    return semantically_equal(get(model_a, item), get(model_b, item),
                              task_kind_for(task_.kind), task_.equality);
  }

 private:
  const ScoringTask& task_;
  const ModelLadder& ladder_;
  std::vector<std::vector<std::optional<std::string>>> responses_;
};

/// Per-stage invocation deltas read off the ladder's counters.
class StageCounter {
 public:
  explicit StageCounter(const ModelLadder& ladder)
      : ladder_(ladder), last_(ladder.call_counts()), first_(last_) {}

  std::map<std::string, std::uint64_t> stage_delta() {
    auto now = ladder_.call_counts();
    std::map<std::string, std::uint64_t> delta;
    for (const auto& [id, count] : now) delta[id] = count - last_.at(id);
    last_ = std::move(now);
    return delta;
  }

  std::map<std::string, std::uint64_t> total_delta() const {
    std::map<std::string, std::uint64_t> delta;
    for (const auto& [id, count] : last_) delta[id] = count - first_.at(id);
    return delta;
  }

 private:
  const ModelLadder& ladder_;
  std::map<std::string, std::uint64_t> last_;
  std::map<std::string, std::uint64_t> first_;
};

void require_scorable(const ScoringTask& task, const ModelLadder& ladder) {
  if (ladder.size() < 2) throw InputError("scoring needs at least two models");
  if (task.items.empty()) throw InputError("scoring sample is empty");
}

}  // namespace

std::string to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::Exact: return "exact";
    case ScoreMode::Optimized: return "optimized";
    case ScoreMode::Approximate: return "approx";
  }
  throw std::logic_error("unreachable");
}

ScoreMode score_mode_from_string(const std::string& s) {
  if (s == "exact") return ScoreMode::Exact;
  if (s == "optimized") return ScoreMode::Optimized;
  if (s == "approx" || s == "approximate") return ScoreMode::Approximate;
  throw InputError("unknown score mode '" + s + "'");
}

ImprovementScores scores_exact(const ScoringTask& task,
                               const ModelLadder& ladder) {
  require_scorable(task, ladder);
  const std::size_t n = task.items.size();
  const std::size_t star = ladder.size() - 1;
  ResponseCache cache(task, ladder);
  StageCounter counter(ladder);

  ImprovementScores out;
  out.sample_size = n;
  for (std::size_t k = 1; k <= star; ++k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (k == star) {
        hits += !cache.equal(0, star, i);
      } else {
        hits += cache.equal(k, star, i) && !cache.equal(0, k, i);
      }
    }
    out.scores.push_back(static_cast<double>(hits) / static_cast<double>(n));
    out.calls_per_score.push_back(counter.stage_delta());
  }
  out.total_calls = counter.total_delta();
  return out;
}

ImprovementScores scores_optimized(const ScoringTask& task,
                                   const ModelLadder& ladder) {
  require_scorable(task, ladder);
  const std::size_t n = task.items.size();
  const std::size_t star = ladder.size() - 1;
  ResponseCache cache(task, ladder);
  StageCounter counter(ladder);

  ImprovementScores out;
  out.sample_size = n;
  for (std::size_t k = 1; k <= star; ++k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (k == star) {
        hits += !cache.equal(0, star, i);
      } else if (!cache.equal(0, k, i)) {
        // The strongest model is consulted only on disagreement; its
        // response is cached, so later scores reuse it.
        hits += cache.equal(k, star, i);
      }
    }
    out.scores.push_back(static_cast<double>(hits) / static_cast<double>(n));
    out.calls_per_score.push_back(counter.stage_delta());
  }
  out.total_calls = counter.total_delta();
  return out;
}

ImprovementScores scores_approx(const ScoringTask& task,
                                const ModelLadder& ladder) {
  require_scorable(task, ladder);
  const std::size_t n = task.items.size();
  const std::size_t star = ladder.size() - 1;
  ResponseCache cache(task, ladder);
  StageCounter counter(ladder);

  ImprovementScores out;
  out.sample_size = n;
  // agree[i]: all models consulted so far answered alike on item i. Each
  // next model runs only on the still-agreeing items, so the strongest
  // model is reached only where the whole chain agrees.
  std::vector<char> agree(n, 1);
  std::size_t broken = 0;
  for (std::size_t k = 1; k <= star; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!agree[i]) continue;
      if (!cache.equal(k - 1, k, i)) {
        agree[i] = 0;
        ++broken;
      }
    }
    out.scores.push_back(static_cast<double>(broken) / static_cast<double>(n));
    out.calls_per_score.push_back(counter.stage_delta());
  }
  out.total_calls = counter.total_delta();
  return out;
}

ImprovementScores compute_scores(const ScoringTask& task,
                                 const ModelLadder& ladder, ScoreMode mode) {
  switch (mode) {
    case ScoreMode::Exact: return scores_exact(task, ladder);
    case ScoreMode::Optimized: return scores_optimized(task, ladder);
    case ScoreMode::Approximate: return scores_approx(task, ladder);
  }
  throw std::logic_error("unreachable");
}

std::size_t select_model_from_scores(const std::vector<double>& scores,
                                     double delta_i_min) {
  std::size_t chosen = 0;
  double last_accepted = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k] - last_accepted >= delta_i_min) {
      chosen = k + 1;
      last_accepted = scores[k];
    }
  }
  return chosen;
}

std::string select_model(const Operator& op,
                         const std::vector<std::string>& items,
                         const ModelLadder& ladder,
                         const SelectionConfig& config) {
  if (ladder.size() == 1) return ladder.weakest().id;
  ScoringTask task;
  task.kind = op.kind;
  task.instruction = op.instruction;
  task.items = items;
  ImprovementScores scores = compute_scores(task, ladder, config.mode);
  return ladder.at(select_model_from_scores(scores.scores, config.delta_i_min))
      .id;
}

PhysicalOptimizationResult optimize_physical(const LogicalPlan& plan,
                                             const Table& sample,
                                             const ModelLadder& ladder,
                                             const SelectionConfig& config,
                                             const ExecutorConfig& executor,
                                             const EqualityConfig& equality) {
  check_plan(plan, &sample.schema());
  PhysicalOptimizationResult result;
  result.plan.logical = plan;

  Table current = sample;
  const std::size_t top = ladder.size() - 1;
  for (const auto& op : plan.operators) {
    if (is_semantic(op.kind)) {
      std::vector<std::string> items;
      items.reserve(current.row_count());
      for (std::size_t i = 0; i < current.row_count(); ++i) {
        const Cell& cell = current.cell(i, op.input_column);
        items.push_back(cell ? *cell : "");
      }
      OperatorSelection selection;
      selection.operator_id = op.id;
      if (items.empty() || ladder.size() == 1) {
        selection.chosen_model = ladder.weakest().id;
      } else {
        ScoringTask task;
        task.kind = op.kind;
        task.instruction = op.instruction;
        task.items = std::move(items);
        task.equality = equality;
        selection.scores = compute_scores(task, ladder, config.mode);
        selection.chosen_model =
            ladder
                .at(select_model_from_scores(selection.scores.scores,
                                             config.delta_i_min))
                .id;
      }
      result.plan.assignment[op.id] = selection.chosen_model;
      result.selections.push_back(std::move(selection));
    }
    // Advance the prefix with the strongest model so the next operator
    // scores against realistic intermediate inputs.
    LogicalPlan step;
    step.operators.push_back(op);
    current = execute_sample(step, current, ladder, top, executor);
  }
  return result;
}

std::string serialize_selections(const std::vector<OperatorSelection>& selections,
                                 ScoreMode mode) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& sel : selections) {
    nlohmann::ordered_json j;
    j["operator"] = sel.operator_id;
    j["mode"] = to_string(mode);
    if (sel.scores.scores.size() == 3) {
      j["i12"] = sel.scores.scores[0];
      j["i13"] = sel.scores.scores[1];
      j["i1star"] = sel.scores.scores[2];
    } else if (!sel.scores.scores.empty()) {
      j["scores"] = sel.scores.scores;
    }
    if (!sel.scores.total_calls.empty()) {
      nlohmann::ordered_json calls;
      for (const auto& [id, count] : sel.scores.total_calls) calls[id] = count;
      j["invocations_per_model"] = std::move(calls);
    }
    j["chosen_model"] = sel.chosen_model;
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

}  // namespace semqo
