#include "semqo/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "semqo/expr.hpp"

namespace semqo {

namespace {

void parallel_for(std::size_t n, std::size_t max_in_flight,
                  const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  std::size_t workers = std::min(max_in_flight, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= n || failed.load(std::memory_order_relaxed)) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t token_count(std::size_t chars, double chars_per_token) {
  return static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(chars) / chars_per_token));
}

struct Accounting {
  std::map<std::string, std::atomic<std::uint64_t>> calls, input_tokens,
      output_tokens;
  std::atomic<std::uint64_t> row_errors{0};
  std::atomic<std::uint64_t> parse_anomalies{0};

  void ensure(const std::string& model_id) {
    calls[model_id];
    input_tokens[model_id];
    output_tokens[model_id];
  }
};

class PlanRunner {
 public:
  PlanRunner(const ModelLadder& ladder, const ExecutorConfig& config)
      : ladder_(ladder), config_(config) {}

  std::string call_model(std::size_t model_index, OperatorKind kind,
                         const std::string& instruction,
                         const std::string& input) {
    const std::string& id = ladder_.at(model_index).id;
    std::string response = ladder_.invoke(model_index, kind, instruction, input);
    accounting_.calls.at(id).fetch_add(1, std::memory_order_relaxed);
    accounting_.input_tokens.at(id).fetch_add(
        token_count(instruction.size() + 1 + input.size(),
                    config_.cost.chars_per_token),
        std::memory_order_relaxed);
    accounting_.output_tokens.at(id).fetch_add(
        token_count(response.size(), config_.cost.chars_per_token),
        std::memory_order_relaxed);
    return response;
  }

  Table run(const LogicalPlan& plan, const Table& table,
            const std::function<std::size_t(const Operator&)>& model_for) {
    for (std::size_t i = 0; i < ladder_.size(); ++i) {
      accounting_.ensure(ladder_.at(i).id);
    }
    Table current = table;
    for (const auto& op : plan.operators) {
      current = apply(op, current, model_for(op));
    }
    return current;
  }

  ExecutionReport finalize(Table result, double wall_seconds) const {
    ExecutionReport report;
    report.result = std::move(result);
    PricingTable pricing = ladder_.pricing();
    for (const auto& [id, calls] : accounting_.calls) {
      std::uint64_t in = accounting_.input_tokens.at(id).load();
      std::uint64_t out = accounting_.output_tokens.at(id).load();
      report.calls_per_model[id] = calls.load();
      report.input_tokens_per_model[id] = in;
      report.output_tokens_per_model[id] = out;
      const ModelPrice& price = pricing.price_of(id);
      report.cost += static_cast<double>(in) * price.input_per_token +
                     static_cast<double>(out) * price.output_per_token;
    }
    report.row_errors = accounting_.row_errors.load();
    report.parse_anomalies = accounting_.parse_anomalies.load();
    report.wall_time_seconds = wall_seconds;
    return report;
  }

 private:
  std::string cell_text(const Table& table, std::size_t row,
                        const std::string& column) const {
    const Cell& cell = table.cell(row, column);
    return cell ? *cell : "";  // nulls pass through as empty strings
  }

  Table apply(const Operator& op, const Table& input, std::size_t model_index) {
    if (input.column_index(op.input_column) == Table::npos) {
      throw ExecutionError("operator " + op.id + ": unknown input column '" +
                           op.input_column + "'");
    }
    switch (op.kind) {
      case OperatorKind::Map:
      case OperatorKind::ComputeMap:
        return apply_map(op, input, model_index);
      case OperatorKind::Filter:
      case OperatorKind::ComputeFilter:
        return apply_filter(op, input, model_index);
      case OperatorKind::Reduce:
      case OperatorKind::ComputeReduce:
        return apply_reduce(op, input, model_index);
      case OperatorKind::Rank:
        return apply_rank(op, input, model_index);
    }
    throw ExecutionError("operator " + op.id + ": unsupported kind");
  }

  Table apply_map(const Operator& op, const Table& input,
                  std::size_t model_index) {
    const std::size_t n = input.row_count();
    std::vector<Cell> outputs(n);
    std::vector<char> keep(n, 1);
    if (op.kind == OperatorKind::ComputeMap) {
      Expr expr = Expr::parse(op.instruction);
      for (std::size_t i = 0; i < n; ++i) {
        try {
          ExprValue v = expr.evaluate(cell_text(input, i, op.input_column));
          if (std::holds_alternative<std::string>(v)) {
            outputs[i] = std::get<std::string>(v);
          } else if (std::holds_alternative<bool>(v)) {
            outputs[i] = std::get<bool>(v) ? "true" : "false";
          } else {
            double d = std::get<double>(v);
            outputs[i] = (d == std::floor(d) && std::abs(d) < 1e15)
                             ? std::to_string(static_cast<long long>(d))
                             : std::to_string(d);
          }
        } catch (const EvalError&) {
          keep[i] = 0;
          accounting_.row_errors.fetch_add(1);
        }
      }
    } else {
      parallel_for(n, config_.policy.max_in_flight, [&](std::size_t i) {
        outputs[i] = call_model(model_index, op.kind, op.instruction,
                                cell_text(input, i, op.input_column));
      });
    }
    Table out(std::vector<ColumnSpec>(input.schema()));
    out.add_column({*op.output_column, ColumnKind::Text});
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      Row row = input.rows()[i];
      row.cells.push_back(outputs[i]);
      out.append_row(std::move(row));
    }
    return out;
  }

  Table apply_filter(const Operator& op, const Table& input,
                     std::size_t model_index) {
    const std::size_t n = input.row_count();
    std::vector<char> keep(n, 0);
    if (op.kind == OperatorKind::ComputeFilter) {
      Expr expr = Expr::parse(op.instruction);
      for (std::size_t i = 0; i < n; ++i) {
        try {
          keep[i] = expr.evaluate_predicate(cell_text(input, i, op.input_column));
        } catch (const EvalError&) {
          accounting_.row_errors.fetch_add(1);
        }
      }
    } else {
      parallel_for(n, config_.policy.max_in_flight, [&](std::size_t i) {
        std::string reply = call_model(model_index, op.kind, op.instruction,
                                       cell_text(input, i, op.input_column));
        auto label = parse_binary_label(reply);
        if (!label) {
          accounting_.parse_anomalies.fetch_add(1);
          keep[i] = 0;  // anything unreadable counts as false
        } else {
          keep[i] = *label;
        }
      });
    }
    Table out(std::vector<ColumnSpec>(input.schema()));
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) out.append_row(input.rows()[i]);
    }
    return out;
  }

  Table apply_reduce(const Operator& op, const Table& input,
                     std::size_t model_index) {
    std::vector<std::string> values;
    values.reserve(input.row_count());
    for (std::size_t i = 0; i < input.row_count(); ++i) {
      values.push_back(cell_text(input, i, op.input_column));
    }
    std::string aggregate;
    if (op.kind == OperatorKind::ComputeReduce) {
      std::string joined;
      for (const auto& v : values) {
        if (!joined.empty()) joined += "\n";
        joined += v;
      }
      try {
        Expr expr = Expr::parse(op.instruction);
        ExprValue v = expr.evaluate(joined);
        aggregate = std::holds_alternative<std::string>(v)
                        ? std::get<std::string>(v)
                        : (std::holds_alternative<bool>(v)
                               ? std::string(std::get<bool>(v) ? "true" : "false")
                               : std::to_string(std::get<double>(v)));
      } catch (const EvalError& e) {
        throw ExecutionError("operator " + op.id + ": " + e.what());
      }
    } else {
      aggregate = reduce_chunked(op, values, model_index);
    }
    Table out;
    out.add_column({op.output_column ? *op.output_column : op.input_column,
                    ColumnKind::Text});
    Row row;
    row.index = 0;
    row.cells.emplace_back(aggregate);
    out.append_row(std::move(row));
    return out;
  }

  // Chunk survivor serializations that overflow the context budget, reduce
  // each chunk, then reduce the partials once more.
  std::string reduce_chunked(const Operator& op,
                             const std::vector<std::string>& values,
                             std::size_t model_index) {
    const double budget_chars =
        config_.reduce_context_budget_tokens * config_.cost.chars_per_token;
    std::vector<std::string> chunks;
    std::string current;
    for (const auto& v : values) {
      if (!current.empty() &&
          static_cast<double>(current.size() + v.size() + 1) > budget_chars) {
        chunks.push_back(std::move(current));
        current.clear();
      }
      if (!current.empty()) current += "\n";
      current += v;
    }
    chunks.push_back(std::move(current));
    if (chunks.size() == 1) {
      return call_model(model_index, op.kind, op.instruction, chunks[0]);
    }
    std::vector<std::string> partials(chunks.size());
    parallel_for(chunks.size(), config_.policy.max_in_flight, [&](std::size_t i) {
      partials[i] = call_model(model_index, op.kind, op.instruction, chunks[i]);
    });
    std::string joined;
    for (const auto& p : partials) {
      if (!joined.empty()) joined += "\n";
      joined += p;
    }
    return call_model(model_index, op.kind, op.instruction, joined);
  }

  Table apply_rank(const Operator& op, const Table& input,
                   std::size_t model_index) {
    const std::size_t n = input.row_count();
    std::vector<double> scores(n, 0.0);
    parallel_for(n, config_.policy.max_in_flight, [&](std::size_t i) {
      std::string reply = call_model(model_index, op.kind, op.instruction,
                                     cell_text(input, i, op.input_column));
      double value;
      if (try_parse_number(reply, value)) {
        scores[i] = value;
      } else {
        accounting_.parse_anomalies.fetch_add(1);
      }
    });
    // Model-scored keys, stable sort, ranks re-attached in row order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];
    });
    std::vector<std::size_t> rank(n);
    for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;

    Table out(std::vector<ColumnSpec>(input.schema()));
    out.add_column({"rank", ColumnKind::Number});
    for (std::size_t i = 0; i < n; ++i) {
      Row row = input.rows()[i];
      row.cells.emplace_back(std::to_string(rank[i]));
      out.append_row(std::move(row));
    }
    return out;
  }

  const ModelLadder& ladder_;
  const ExecutorConfig& config_;
  Accounting accounting_;
};

}  // namespace

ExecutionReport execute(const PhysicalPlan& plan, const Table& table,
                        const ModelLadder& ladder,
                        const ExecutorConfig& config) {
  check_plan(plan.logical, &table.schema());
  for (const auto& op : plan.logical.operators) {
    if (!is_semantic(op.kind)) continue;
    if (!plan.assignment.count(op.id)) {
      throw ExecutionError("operator " + op.id + " has no assigned model");
    }
  }
  auto start = std::chrono::steady_clock::now();
  PlanRunner runner(ladder, config);
  Table result = runner.run(plan.logical, table, [&](const Operator& op) {
    if (!is_semantic(op.kind)) return std::size_t{0};
    return ladder.index_of(plan.assignment.at(op.id));
  });
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  return runner.finalize(std::move(result), wall);
}

Table execute_sample(const LogicalPlan& prefix, const Table& sample,
                     const ModelLadder& ladder, std::size_t model_index,
                     const ExecutorConfig& config) {
  PlanRunner runner(ladder, config);
  return runner.run(prefix, sample,
                    [model_index](const Operator&) { return model_index; });
}

}  // namespace semqo
