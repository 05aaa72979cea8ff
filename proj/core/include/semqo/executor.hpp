#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "semqo/model_backend.hpp"
#include "semqo/plan.hpp"
#include "semqo/table.hpp"

namespace semqo {

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConcurrencyPolicy {
  std::size_t max_in_flight = 16;  // >= 1
};

struct ExecutorConfig {
  ConcurrencyPolicy policy;
  CostModelConfig cost;
  double reduce_context_budget_tokens = 2000;  // chunk reduce prompts past this
};

struct ExecutionReport {
  Table result;
  std::map<std::string, std::uint64_t> calls_per_model;
  std::map<std::string, std::uint64_t> input_tokens_per_model;
  std::map<std::string, std::uint64_t> output_tokens_per_model;
  double cost = 0.0;             // currency; tokens priced per the ladder
  std::uint64_t row_errors = 0;  // rows excluded by expression failures
  std::uint64_t parse_anomalies = 0;  // filter replies not true/false
  double wall_time_seconds = 0.0;     // excluded from serialized reports
};

/// Runs a physical plan over a table. Operators apply in order with
/// bounded-parallel fan-out over rows; results assemble by row index, so
/// output is independent of the parallelism level.
ExecutionReport execute(const PhysicalPlan& plan, const Table& table,
                        const ModelLadder& ladder,
                        const ExecutorConfig& config = {});

/// Runs a logical plan (prefix) with one model for every semantic
/// operator; used by plan evaluation and physical optimization.
Table execute_sample(const LogicalPlan& prefix, const Table& sample,
                     const ModelLadder& ladder, std::size_t model_index,
                     const ExecutorConfig& config = {});

}  // namespace semqo
