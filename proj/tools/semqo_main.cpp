// Command-line driver: explain / run / simulate over plan files and tables.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semqo/executor.hpp"
#include "semqo/judge.hpp"
#include "semqo/llm_client.hpp"
#include "semqo/logical_optimizer.hpp"
#include "semqo/model_backend.hpp"
#include "semqo/physical_optimizer.hpp"
#include "semqo/plan.hpp"
#include "semqo/rules.hpp"
#include "semqo/table.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;
constexpr int kExitInternal = 4;

struct Options {
  std::string plan_path;
  std::string table_path;
  std::string format = "csv";
  std::string ladder_path;
  std::uint64_t seed = 0;
  double lambda = 0.2;
  double epsilon = 0.8;
  std::size_t n_max = 3;
  double delta_i_min = 0.2;
  double sample_ratio = 0.05;
  std::string mode = "optimized";
  std::size_t max_in_flight = 16;
  std::string out_path;
  std::string report_path;
  bool no_logical_opt = false;
  bool no_physical_opt = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw semqo::InputError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw semqo::InputError("cannot write '" + path + "'");
  out << content;
}

semqo::TableFormat parse_format(const std::string& format) {
  if (format == "csv") return semqo::TableFormat::Csv;
  if (format == "jsonl") return semqo::TableFormat::Jsonl;
  throw semqo::InputError("unknown table format '" + format + "'");
}

struct LoadedLadder {
  semqo::ModelLadder ladder;
  bool is_mock = false;
};

LoadedLadder load_ladder(const std::string& path, std::uint64_t seed) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw semqo::InputError(std::string("bad ladder config: ") + e.what());
  }
  LoadedLadder loaded;
  if (doc.value("type", "mock") == "remote") {
    if (!doc.contains("models") || !doc.contains("pricing")) {
      throw semqo::InputError("remote ladder config needs models + pricing");
    }
    auto client = std::make_shared<semqo::LlmClient>(
        semqo::client_config_from_env());
    loaded.ladder = semqo::build_remote_ladder(
        doc["models"].get<std::vector<std::string>>(),
        semqo::pricing_from_json(doc["pricing"].dump()), client);
    return loaded;
  }
  semqo::MockEnsembleSpec spec = semqo::mock_spec_from_json(doc.dump());
  if (!doc.contains("seed")) spec.seed = seed;
  loaded.ladder = semqo::build_mock_ladder(spec).ladder;
  loaded.is_mock = true;
  return loaded;
}

nlohmann::ordered_json report_json(const semqo::ExecutionReport& report) {
  nlohmann::ordered_json j;
  j["calls_per_model"] = report.calls_per_model;
  j["input_tokens_per_model"] = report.input_tokens_per_model;
  j["output_tokens_per_model"] = report.output_tokens_per_model;
  j["cost"] = report.cost;
  j["row_errors"] = report.row_errors;
  j["parse_anomalies"] = report.parse_anomalies;
  return j;
}

struct PipelineResult {
  semqo::LogicalOptimizationResult logical;
  semqo::PhysicalOptimizationResult physical;
  double initial_cost = 0.0;
};

PipelineResult optimize_pipeline(const semqo::LogicalPlan& p0,
                                 const semqo::Table& table,
                                 const semqo::ModelLadder& ladder,
                                 const Options& opts) {
  semqo::SampleSpec sample_spec;
  sample_spec.ratio = opts.sample_ratio;
  sample_spec.seed = opts.seed;
  semqo::Table sample = semqo::sample_records(table, sample_spec);

  semqo::ExecutorConfig exec;
  exec.policy.max_in_flight = opts.max_in_flight;

  PipelineResult result;
  semqo::SampleEvaluatorConfig eval_config;
  eval_config.executor = exec;
  eval_config.full_rows = static_cast<double>(table.row_count());
  auto evaluate = semqo::make_sample_evaluator(p0, sample, ladder,
                                               semqo::exact_judge, eval_config);
  result.initial_cost = evaluate(p0).cost;

  if (opts.no_logical_opt) {
    semqo::CandidateRecord root;
    root.id = "p0";
    root.plan = p0;
    root.stats = {1.0, result.initial_cost};
    root.accepted = true;
    result.logical.best = p0;
    result.logical.best_stats = root.stats;
    result.logical.trace.push_back(std::move(root));
  } else {
    semqo::OptimizerConfig config;
    config.n_max = opts.n_max;
    config.lambda = opts.lambda;
    config.epsilon = opts.epsilon;
    config.seed = opts.seed;
    result.logical = semqo::optimize_logical(p0, semqo::rule_based_rewriter(),
                                             evaluate, config);
  }

  if (opts.no_physical_opt) {
    result.physical.plan.logical = result.logical.best;
    for (const auto& op : result.logical.best.operators) {
      if (semqo::is_semantic(op.kind)) {
        result.physical.plan.assignment[op.id] = ladder.strongest().id;
      }
    }
  } else {
    semqo::SelectionConfig selection;
    selection.delta_i_min = opts.delta_i_min;
    selection.sample = sample_spec;
    selection.mode = semqo::score_mode_from_string(opts.mode);
    result.physical = semqo::optimize_physical(result.logical.best, sample,
                                               ladder, selection, exec);
  }
  return result;
}

int cmd_explain(const Options& opts) {
  semqo::LogicalPlan p0 = semqo::parse_plan_file(opts.plan_path);
  semqo::Table table = semqo::load_table_file(opts.table_path,
                                              parse_format(opts.format));
  semqo::check_plan(p0, &table.schema());  // bad references are input errors
  LoadedLadder loaded = load_ladder(opts.ladder_path, opts.seed);
  PipelineResult result = optimize_pipeline(p0, table, loaded.ladder, opts);

  nlohmann::ordered_json out;
  out["initial_plan"] = nlohmann::ordered_json::parse(semqo::serialize_plan(p0));
  out["initial_cost"] = result.initial_cost;
  out["candidates"] = nlohmann::ordered_json::parse(
      semqo::serialize_trace(result.logical.trace));
  out["chosen_plan"] = nlohmann::ordered_json::parse(
      semqo::serialize_plan(result.logical.best));
  out["chosen_cost"] = result.logical.best_stats.cost;
  out["assignment"] = result.physical.plan.assignment;
  out["selections"] = nlohmann::ordered_json::parse(semqo::serialize_selections(
      result.physical.selections, semqo::score_mode_from_string(opts.mode)));
  const std::string text = out.dump(2) + "\n";
  if (!opts.report_path.empty()) write_file(opts.report_path, text);
  std::cout << text;
  return kExitOk;
}

int cmd_run(const Options& opts) {
  semqo::LogicalPlan p0 = semqo::parse_plan_file(opts.plan_path);
  semqo::Table table = semqo::load_table_file(opts.table_path,
                                              parse_format(opts.format));
  semqo::check_plan(p0, &table.schema());  // bad references are input errors
  LoadedLadder loaded = load_ladder(opts.ladder_path, opts.seed);
  PipelineResult result = optimize_pipeline(p0, table, loaded.ladder, opts);

  semqo::ExecutorConfig exec;
  exec.policy.max_in_flight = opts.max_in_flight;
  semqo::ExecutionReport report =
      semqo::execute(result.physical.plan, table, loaded.ladder, exec);

  const std::string rendered = opts.format == "jsonl"
                                   ? semqo::serialize_table_jsonl(report.result)
                                   : semqo::serialize_table_csv(report.result);
  if (!opts.out_path.empty()) write_file(opts.out_path, rendered);

  nlohmann::ordered_json j;
  j["plan"] = nlohmann::ordered_json::parse(
      semqo::serialize_plan(result.physical.plan.logical));
  j["assignment"] = result.physical.plan.assignment;
  j["initial_cost_estimate"] = result.initial_cost;
  j["optimized_cost_estimate"] = result.logical.best_stats.cost;
  j["execution"] = report_json(report);
  const std::string report_text = j.dump(2) + "\n";
  if (!opts.report_path.empty()) write_file(opts.report_path, report_text);

  std::cout << "rows_out=" << report.result.row_count()
            << " cost=" << report.cost << "\n";
  if (opts.out_path.empty()) std::cout << rendered;
  return kExitOk;
}

struct SimulateOptions {
  std::string ladder_path;
  std::uint64_t seed = 0;
  std::size_t items = 1000;
  std::vector<double> sweep{0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::string out_path;
};

int cmd_simulate(const SimulateOptions& opts) {
  semqo::MockEnsembleSpec base;
  if (!opts.ladder_path.empty()) {
    base = semqo::mock_spec_from_json(read_file(opts.ladder_path));
  }
  base.seed = opts.seed;

  std::vector<semqo::ScriptedItem> items;
  items.reserve(opts.items);
  for (std::size_t i = 0; i < opts.items; ++i) {
    items.push_back({"record-" + std::to_string(i),
                     (semqo::stable_hash64(opts.seed, std::to_string(i)) & 1)
                         ? "true"
                         : "false"});
  }
  std::vector<std::string> inputs;
  inputs.reserve(items.size());
  for (const auto& item : items) inputs.push_back(item.input);

  std::ostringstream csv;
  csv << "violation_rate";
  for (const char* mode : {"exact", "optimized", "approx"}) {
    csv << ',' << mode << "_i12," << mode << "_i13," << mode << "_i1star,"
        << mode << "_mstar_calls";
  }
  csv << ",approx_err_i12,approx_err_i13,approx_err_i1star\n";

  for (double v : opts.sweep) {
    semqo::MockEnsembleSpec spec = base;
    spec.violation_rate = v;
    semqo::MockLadder mock =
        semqo::build_mock_ladder(spec, items, semqo::TaskKind::Binary);
    semqo::ScoringTask task;
    task.kind = semqo::OperatorKind::Filter;
    task.instruction = "scripted";
    task.items = inputs;

    csv << v;
    std::vector<semqo::ImprovementScores> all;
    for (auto mode : {semqo::ScoreMode::Exact, semqo::ScoreMode::Optimized,
                      semqo::ScoreMode::Approximate}) {
      semqo::ImprovementScores scores =
          semqo::compute_scores(task, mock.ladder, mode);
      csv << ',' << scores.scores.at(0) << ',' << scores.scores.at(1) << ','
          << scores.scores.at(2) << ',' << scores.total_calls.at("m*");
      all.push_back(std::move(scores));
    }
    for (std::size_t k = 0; k < 3; ++k) {
      csv << ',' << std::abs(all[2].scores.at(k) - all[0].scores.at(k));
    }
    csv << '\n';
  }

  if (!opts.out_path.empty()) {
    write_file(opts.out_path, csv.str());
  } else {
    std::cout << csv.str();
  }
  return kExitOk;
}

void add_common_flags(CLI::App* cmd, Options& opts, bool needs_out) {
  cmd->add_option("--plan", opts.plan_path, "Plan file (JSON)")->required();
  cmd->add_option("--table", opts.table_path, "Input table")->required();
  cmd->add_option("--format", opts.format, "Table format: csv|jsonl");
  cmd->add_option("--ladder", opts.ladder_path, "Ladder config (JSON)")
      ->required();
  cmd->add_option("--seed", opts.seed, "Master seed");
  cmd->add_option("--lambda", opts.lambda, "Plan-sampling mixing weight");
  cmd->add_option("--epsilon", opts.epsilon, "Accuracy acceptance threshold");
  cmd->add_option("--n-max", opts.n_max, "Search iterations");
  cmd->add_option("--delta-i-min", opts.delta_i_min,
                  "Model-switch improvement margin");
  cmd->add_option("--sample-ratio", opts.sample_ratio, "Sampling ratio");
  cmd->add_option("--mode", opts.mode,
                  "Scoring mode: exact|optimized|approx");
  cmd->add_option("--max-in-flight", opts.max_in_flight,
                  "Concurrent model calls cap");
  cmd->add_option("--report", opts.report_path, "Report output path");
  cmd->add_flag("--no-logical-opt", opts.no_logical_opt,
                "Skip plan rewriting (ablation)");
  cmd->add_flag("--no-physical-opt", opts.no_physical_opt,
                "Assign the strongest model everywhere (ablation)");
  if (needs_out) {
    cmd->add_option("--out", opts.out_path, "Result table output path");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic query plan optimizer"};
  app.require_subcommand(1);

  Options explain_opts;
  CLI::App* explain = app.add_subcommand(
      "explain", "Optimize on a sample and print the plan report");
  add_common_flags(explain, explain_opts, false);

  Options run_opts;
  CLI::App* run = app.add_subcommand(
      "run", "Optimize, execute the full table, and write results");
  add_common_flags(run, run_opts, true);

  SimulateOptions sim_opts;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Sweep mock violation rates and compare scoring modes");
  simulate->add_option("--ladder", sim_opts.ladder_path,
                       "Mock ensemble spec (JSON), optional");
  simulate->add_option("--seed", sim_opts.seed, "Master seed");
  simulate->add_option("--items", sim_opts.items, "Items per sweep point");
  simulate->add_option("--sweep", sim_opts.sweep,
                       "Violation rates to sweep");
  simulate->add_option("--out", sim_opts.out_path, "CSV output path");

  try {
    app.parse(argc, argv);
    if (*explain) return cmd_explain(explain_opts);
    if (*run) return cmd_run(run_opts);
    if (*simulate) return cmd_simulate(sim_opts);
    return kExitInternal;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  } catch (const semqo::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const semqo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitInput;
  } catch (const semqo::TransportError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const semqo::ExecutionError& e) {
    std::cerr << "execution error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const semqo::JudgeError& e) {
    std::cerr << "judge error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
