#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semqo/table.hpp"

namespace semqo {

enum class OperatorKind {
  Map,
  Filter,
  Reduce,
  Rank,
  ComputeMap,
  ComputeFilter,
  ComputeReduce,
};

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& s);

bool is_semantic(OperatorKind kind);
bool is_compute(OperatorKind kind);
/// Default selectivity: filter 0.5, reduce 0.0, everything else 1.0.
double default_selectivity(OperatorKind kind);

struct Operator {
  std::string id;
  OperatorKind kind = OperatorKind::Map;
  // NL instruction for semantic kinds, expression text for compute kinds.
  std::string instruction;
  std::string input_column;
  std::optional<std::string> output_column;  // map / compute-map only
  double selectivity = 1.0;
};

/// Linear chain of operators; each consumes its predecessor's table.
struct LogicalPlan {
  std::vector<Operator> operators;
  // Search provenance, filled by the logical optimizer.
  std::optional<std::string> parent_plan_id;
  std::optional<std::string> rule_applied;
};

struct PlanStats {
  double acc = 1.0;
  double cost = 0.0;
};

struct ModelPrice {
  double input_per_token = 0.0;
  double output_per_token = 0.0;
};

struct PricingTable {
  std::map<std::string, ModelPrice> per_model;
  const ModelPrice& price_of(const std::string& model_id) const;
};

struct PhysicalPlan {
  LogicalPlan logical;
  std::unordered_map<std::string, std::string> assignment;  // op id -> model id
};

struct CostModelConfig {
  double chars_per_token = 4.0;
  double output_tokens_per_response = 16.0;
};

/// Parses the JSON plan-file schema:
///   { "operators": [ { "kind", "instruction", "input_column",
///                      "output_column"?, "selectivity"? } ] }
/// Applies kind defaults, assigns stable ids, and runs the static
/// column-reference check.
LogicalPlan parse_plan(const std::string& document);
LogicalPlan parse_plan_file(const std::string& path);

/// Canonical serialization; parse(serialize(p)) is structurally equal to p.
std::string serialize_plan(const LogicalPlan& plan);

/// Throws InputError naming the offending operator on any violation:
/// unknown column, reference-before-definition, reduce not last,
/// missing/forbidden output column.
void check_plan(const LogicalPlan& plan,
                const std::vector<ColumnSpec>* base_schema = nullptr);
bool plan_is_valid(const LogicalPlan& plan,
                   const std::vector<ColumnSpec>* base_schema = nullptr);

/// count[0] = input_rows; count[i] = count[i-1] * selectivity[i-1].
std::vector<double> propagate_selectivity(const LogicalPlan& plan,
                                          double input_rows);

/// Expected cost: sum over semantic operators of
///   expected_inputs * (prompt_tokens * input_price +
///                      output_tokens_per_response * output_price).
/// Compute kinds cost nothing. `assignment` maps operator id -> model id;
/// operators without an entry are priced at `default_model`.
double estimate_cost(const LogicalPlan& plan, double input_rows,
                     const std::unordered_map<std::string, double>& prompt_tokens,
                     const PricingTable& pricing,
                     const std::string& default_model,
                     const std::unordered_map<std::string, std::string>* assignment = nullptr,
                     const CostModelConfig& cost_config = {});

/// Prompt size estimate for one call: instruction plus a rendered cell,
/// divided by the chars-per-token rule.
double estimate_prompt_tokens(const std::string& instruction,
                              double avg_cell_chars,
                              const CostModelConfig& cost_config = {});

bool plans_structurally_equal(const LogicalPlan& a, const LogicalPlan& b);

}  // namespace semqo
