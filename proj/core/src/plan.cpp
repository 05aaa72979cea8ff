#include "semqo/plan.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace semqo {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Map: return "map";
    case OperatorKind::Filter: return "filter";
    case OperatorKind::Reduce: return "reduce";
    case OperatorKind::Rank: return "rank";
    case OperatorKind::ComputeMap: return "compute-map";
    case OperatorKind::ComputeFilter: return "compute-filter";
    case OperatorKind::ComputeReduce: return "compute-reduce";
  }
  return "map";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "map") return OperatorKind::Map;
  if (s == "filter") return OperatorKind::Filter;
  if (s == "reduce") return OperatorKind::Reduce;
  if (s == "rank") return OperatorKind::Rank;
  if (s == "compute-map") return OperatorKind::ComputeMap;
  if (s == "compute-filter") return OperatorKind::ComputeFilter;
  if (s == "compute-reduce") return OperatorKind::ComputeReduce;
  throw InputError("unknown operator kind: " + s);
}

bool is_semantic(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Map:
    case OperatorKind::Filter:
    case OperatorKind::Reduce:
    case OperatorKind::Rank:
      return true;
    default:
      return false;
  }
}

bool is_compute(OperatorKind kind) { return !is_semantic(kind); }

double default_selectivity(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Filter:
    case OperatorKind::ComputeFilter:
      return 0.5;
    case OperatorKind::Reduce:
    case OperatorKind::ComputeReduce:
      return 0.0;
    default:
      return 1.0;
  }
}

const ModelPrice& PricingTable::price_of(const std::string& model_id) const {
  auto it = per_model.find(model_id);
  if (it == per_model.end()) {
    throw InputError("no pricing entry for model: " + model_id);
  }
  return it->second;
}

namespace {

bool produces_output_column(OperatorKind kind) {
  return kind == OperatorKind::Map || kind == OperatorKind::ComputeMap;
}

}  // namespace

void check_plan(const LogicalPlan& plan,
                const std::vector<ColumnSpec>* base_schema) {
  std::unordered_set<std::string> known;
  if (base_schema) {
    for (const auto& col : *base_schema) known.insert(col.name);
  }
  std::unordered_set<std::string> ids;
  bool saw_reduce = false;
  for (std::size_t i = 0; i < plan.operators.size(); ++i) {
    const auto& op = plan.operators[i];
    std::string where = "operator " + std::to_string(i) + " (" + op.id + ")";
    if (!ids.insert(op.id).second) {
      throw InputError(where + ": duplicate operator id");
    }
    if (saw_reduce) {
      throw InputError(where + ": operators after a reduce are not allowed");
    }
    if (op.instruction.empty()) {
      throw InputError(where + ": missing instruction");
    }
    if (produces_output_column(op.kind)) {
      if (!op.output_column || op.output_column->empty()) {
        throw InputError(where + ": map operators must set output_column");
      }
    } else if (op.output_column) {
      throw InputError(where + ": only map operators may set output_column");
    }
    if (op.selectivity < 0.0 || op.selectivity > 1.0) {
      throw InputError(where + ": selectivity must be in [0, 1]");
    }
    // If no base schema is given, the first reference to a name introduces
    // it as a base column; later references must still respect production
    // order relative to map outputs.
    if (base_schema) {
      if (!known.count(op.input_column)) {
        throw InputError(where + ": input column '" + op.input_column +
                         "' is neither a base column nor produced earlier");
      }
    } else {
      known.insert(op.input_column);
    }
    if (produces_output_column(op.kind)) known.insert(*op.output_column);
    if (op.kind == OperatorKind::Reduce || op.kind == OperatorKind::ComputeReduce) {
      saw_reduce = true;
    }
  }
  // Without a base schema, re-check ordering: a column produced by a map
  // must not be consumed before that map runs.
  if (!base_schema) {
    std::unordered_set<std::string> produced_later;
    for (std::size_t i = plan.operators.size(); i-- > 0;) {
      const auto& op = plan.operators[i];
      if (produced_later.count(op.input_column)) {
        // Only an error if no earlier producer and not plausibly a base
        // column; a column is "plausibly base" unless some operator
        // produces it. Find the earliest producer.
        std::size_t first_producer = plan.operators.size();
        for (std::size_t j = 0; j < plan.operators.size(); ++j) {
          if (produces_output_column(plan.operators[j].kind) &&
              plan.operators[j].output_column == op.input_column) {
            first_producer = j;
            break;
          }
        }
        if (first_producer > i) {
          throw InputError("operator " + std::to_string(i) + " (" + op.id +
                           "): input column '" + op.input_column +
                           "' is produced only by a later operator");
        }
      }
      if (produces_output_column(op.kind)) {
        produced_later.insert(*op.output_column);
      }
    }
  }
}

bool plan_is_valid(const LogicalPlan& plan,
                   const std::vector<ColumnSpec>* base_schema) {
  try {
    check_plan(plan, base_schema);
    return true;
  } catch (const InputError&) {
    return false;
  }
}

LogicalPlan parse_plan(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed plan file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("operators") ||
      !doc["operators"].is_array()) {
    throw InputError("plan file must be an object with an 'operators' array");
  }
  LogicalPlan plan;
  std::size_t i = 0;
  for (const auto& entry : doc["operators"]) {
    std::string where = "operator " + std::to_string(i);
    if (!entry.is_object()) throw InputError(where + ": not an object");
    Operator op;
    if (!entry.contains("kind") || !entry["kind"].is_string()) {
      throw InputError(where + ": missing kind");
    }
    op.kind = operator_kind_from_string(entry["kind"].get<std::string>());
    if (!entry.contains("instruction") || !entry["instruction"].is_string()) {
      throw InputError(where + ": missing instruction");
    }
    op.instruction = entry["instruction"].get<std::string>();
    if (!entry.contains("input_column") || !entry["input_column"].is_string()) {
      throw InputError(where + ": missing input_column");
    }
    op.input_column = entry["input_column"].get<std::string>();
    if (entry.contains("output_column") && !entry["output_column"].is_null()) {
      op.output_column = entry["output_column"].get<std::string>();
    }
    op.selectivity = default_selectivity(op.kind);
    if (entry.contains("selectivity")) {
      op.selectivity = entry["selectivity"].get<double>();
    }
    op.id = "op" + std::to_string(i);
    plan.operators.push_back(std::move(op));
    ++i;
  }
  check_plan(plan);
  return plan;
}

LogicalPlan parse_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open plan file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

std::string serialize_plan(const LogicalPlan& plan) {
  // Canonical key order: kind, instruction, input_column, output_column.
  nlohmann::ordered_json doc;
  doc["operators"] = nlohmann::ordered_json::array();
  for (const auto& op : plan.operators) {
    nlohmann::ordered_json entry;
    entry["kind"] = to_string(op.kind);
    entry["instruction"] = op.instruction;
    entry["input_column"] = op.input_column;
    if (op.output_column) entry["output_column"] = *op.output_column;
    if (op.selectivity != default_selectivity(op.kind)) {
      entry["selectivity"] = op.selectivity;
    }
    doc["operators"].push_back(std::move(entry));
  }
  return doc.dump(2);
}

std::vector<double> propagate_selectivity(const LogicalPlan& plan,
                                          double input_rows) {
  std::vector<double> counts;
  counts.reserve(plan.operators.size());
  double current = input_rows;
  for (const auto& op : plan.operators) {
    counts.push_back(current);
    current *= op.selectivity;
  }
  return counts;
}

double estimate_cost(const LogicalPlan& plan, double input_rows,
                     const std::unordered_map<std::string, double>& prompt_tokens,
                     const PricingTable& pricing,
                     const std::string& default_model,
                     const std::unordered_map<std::string, std::string>* assignment,
                     const CostModelConfig& cost_config) {
  auto counts = propagate_selectivity(plan, input_rows);
  double total = 0.0;
  for (std::size_t i = 0; i < plan.operators.size(); ++i) {
    const auto& op = plan.operators[i];
    if (!is_semantic(op.kind)) continue;
    auto it = prompt_tokens.find(op.id);
    if (it == prompt_tokens.end()) {
      throw InputError("no prompt length for semantic operator " + op.id);
    }
    const std::string* model = &default_model;
    if (assignment) {
      auto a = assignment->find(op.id);
      if (a != assignment->end()) model = &a->second;
    }
    const ModelPrice& price = pricing.price_of(*model);
    // Reduce makes a single call over the survivors rather than one call
    // per row, but its expected input count still scales the prompt.
    double calls = counts[i];
    if (op.kind == OperatorKind::Reduce) calls = counts[i] > 0.0 ? 1.0 : 0.0;
    double per_call = it->second * price.input_per_token +
                      cost_config.output_tokens_per_response * price.output_per_token;
    if (op.kind == OperatorKind::Reduce) {
      // One aggregate call whose prompt covers every surviving row.
      total += (counts[i] * it->second) * price.input_per_token +
               calls * cost_config.output_tokens_per_response * price.output_per_token;
    } else {
      total += calls * per_call;
    }
  }
  return total;
}

double estimate_prompt_tokens(const std::string& instruction,
                              double avg_cell_chars,
                              const CostModelConfig& cost_config) {
  double chars = static_cast<double>(instruction.size()) + avg_cell_chars;
  return std::ceil(chars / cost_config.chars_per_token);
}

bool plans_structurally_equal(const LogicalPlan& a, const LogicalPlan& b) {
  if (a.operators.size() != b.operators.size()) return false;
  for (std::size_t i = 0; i < a.operators.size(); ++i) {
    const auto& x = a.operators[i];
    const auto& y = b.operators[i];
    if (x.kind != y.kind || x.instruction != y.instruction ||
        x.input_column != y.input_column || x.output_column != y.output_column) {
      return false;
    }
  }
  return true;
}

}  // namespace semqo
