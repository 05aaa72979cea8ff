#include "semqo/logical_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

namespace semqo {

std::vector<double> candidate_distribution(const std::vector<double>& costs,
                                           double lambda) {
  if (costs.empty()) throw InputError("candidate set is empty");
  const double cost_max = *std::max_element(costs.begin(), costs.end());
  const double cost_min = *std::min_element(costs.begin(), costs.end());
  // exp(cost_max - cost_i) rescaled by its own max so wide cost spreads
  // cannot overflow; the normalized ratio is unchanged.
  double total = 0.0;
  std::vector<double> weights(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    weights[i] = std::exp((cost_max - costs[i]) - (cost_max - cost_min));
    total += weights[i];
  }
  const double uniform = lambda / static_cast<double>(costs.size());
  for (double& w : weights) w = uniform + (1.0 - lambda) * (w / total);
  return weights;
}

std::size_t sample_candidate(const std::vector<double>& costs, double lambda,
                             std::mt19937_64& rng) {
  std::vector<double> probs = candidate_distribution(costs, lambda);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  return pick(rng);
}

LogicalOptimizationResult optimize_logical(const LogicalPlan& p0,
                                           const RewriterContract& rewriter,
                                           const PlanEvaluator& evaluate,
                                           const OptimizerConfig& config) {
  if (config.n_max < 1) throw InputError("n_max must be >= 1");
  std::mt19937_64 sample_rng(config.seed);
  std::mt19937_64 rewrite_rng(config.seed ^ 0x9E3779B97F4A7C15ull);

  LogicalOptimizationResult result;
  std::map<std::string, PlanStats> score_cache;  // keyed by serialized plan

  auto record = [&](LogicalPlan plan, std::optional<std::string> parent,
                    PlanStats stats, bool accepted, std::string note) {
    CandidateRecord node;
    node.id = "p" + std::to_string(result.trace.size());
    node.parent_id = std::move(parent);
    node.rule = plan.rule_applied;
    node.stats = stats;
    node.accepted = accepted;
    node.note = std::move(note);
    node.plan = std::move(plan);
    result.trace.push_back(std::move(node));
  };

  PlanStats p0_stats = evaluate(p0);
  p0_stats.acc = 1.0;  // the seed plan defines correctness
  score_cache[serialize_plan(p0)] = p0_stats;
  record(p0, std::nullopt, p0_stats, true, "");

  std::vector<std::size_t> pool{0};  // indices into the trace

  for (std::size_t iter = 0; iter < config.n_max; ++iter) {
    std::vector<double> costs;
    costs.reserve(pool.size());
    for (std::size_t idx : pool) costs.push_back(result.trace[idx].stats.cost);
    const std::size_t parent_idx = pool[sample_candidate(costs, config.lambda,
                                                         sample_rng)];
    // Copies: record() below may reallocate the trace.
    const std::string parent_id = result.trace[parent_idx].id;
    const double parent_cost = result.trace[parent_idx].stats.cost;

    LogicalPlan candidate =
        rewrite(result.trace[parent_idx].plan, rewriter, rewrite_rng);
    if (plans_structurally_equal(candidate, result.trace[parent_idx].plan)) {
      continue;  // no rewrite applies at this node
    }
    candidate.parent_plan_id = parent_id;

    bool duplicate = false;
    for (std::size_t idx : pool) {
      if (plans_structurally_equal(candidate, result.trace[idx].plan)) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      record(std::move(candidate), parent_id, PlanStats{}, false,
             "structural duplicate");
      continue;
    }

    const std::string key = serialize_plan(candidate);
    PlanStats stats;
    if (auto hit = score_cache.find(key); hit != score_cache.end()) {
      stats = hit->second;
    } else {
      stats = evaluate(candidate);
      score_cache[key] = stats;
    }

    std::string note;
    bool accepted = true;
    if (stats.acc < config.epsilon) {
      accepted = false;
      note = "accuracy below threshold";
    } else if (stats.cost > parent_cost) {
      accepted = false;
      note = "cost exceeds parent";
    }
    record(std::move(candidate), parent_id, stats, accepted, note);
    if (accepted) pool.push_back(result.trace.size() - 1);
  }

  std::size_t best = pool[0];
  for (std::size_t idx : pool) {
    if (result.trace[idx].stats.cost < result.trace[best].stats.cost) {
      best = idx;
    }
  }
  result.best = result.trace[best].plan;
  result.best_stats = result.trace[best].stats;
  return result;
}

std::string serialize_trace(const std::vector<CandidateRecord>& trace) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& node : trace) {
    nlohmann::ordered_json j;
    j["id"] = node.id;
    if (node.parent_id) j["parent"] = *node.parent_id;
    if (node.rule) j["rule"] = *node.rule;
    j["acc"] = node.stats.acc;
    j["cost"] = node.stats.cost;
    j["accepted"] = node.accepted;
    if (!node.note.empty()) j["note"] = node.note;
    j["plan"] = nlohmann::ordered_json::parse(serialize_plan(node.plan));
    nodes.push_back(std::move(j));
  }
  return nodes.dump(2);
}

double average_cell_chars(const Table& table) {
  std::size_t chars = 0;
  std::size_t cells = 0;
  for (const auto& row : table.rows()) {
    for (const auto& cell : row.cells) {
      chars += cell ? cell->size() : 0;
      ++cells;
    }
  }
  return cells == 0 ? 0.0 : static_cast<double>(chars) / cells;
}

double plan_cost_estimate(const LogicalPlan& plan, double full_rows,
                          double avg_cell_chars, const PricingTable& pricing,
                          const std::string& model_id,
                          const CostModelConfig& cost_config) {
  std::unordered_map<std::string, double> prompt_tokens;
  for (const auto& op : plan.operators) {
    if (!is_semantic(op.kind)) continue;
    prompt_tokens[op.id] =
        estimate_prompt_tokens(op.instruction, avg_cell_chars, cost_config);
  }
  return estimate_cost(plan, full_rows, prompt_tokens, pricing, model_id,
                       nullptr, cost_config);
}

PlanEvaluator make_sample_evaluator(const LogicalPlan& baseline,
                                    const Table& sample,
                                    const ModelLadder& ladder,
                                    const JudgeContract& judge,
                                    const SampleEvaluatorConfig& config) {
  if (sample.row_count() == 0) throw InputError("evaluation sample is empty");
  const std::size_t top = ladder.size() - 1;
  auto baseline_out = std::make_shared<Table>(
      execute_sample(baseline, sample, ladder, top, config.executor));
  const double full_rows = config.full_rows > 0
                               ? config.full_rows
                               : static_cast<double>(sample.row_count());
  const double avg_chars = average_cell_chars(sample);
  const PricingTable pricing = ladder.pricing();
  const std::string top_id = ladder.strongest().id;
  const ExecutorConfig exec = config.executor;

  return [=, &ladder](const LogicalPlan& plan) {
    PlanStats stats;
    stats.cost = plan_cost_estimate(plan, full_rows, avg_chars, pricing,
                                    top_id, exec.cost);
    try {
      Table out = execute_sample(plan, sample, ladder, top, exec);
      stats.acc = judge(out, *baseline_out).normalized;
    } catch (const std::exception&) {
      stats.acc = 0.0;
    }
    return stats;
  };
}

}  // namespace semqo
