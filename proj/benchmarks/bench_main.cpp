// Microbenchmarks: scoring-mode cost on the reference mock ensemble and
// executor throughput at different fan-out caps.

#include <benchmark/benchmark.h>

#include "semqo/executor.hpp"
#include "semqo/physical_optimizer.hpp"
#include "test_helpers.hpp"

using namespace semqo;
using namespace testsupport;

namespace {

ScoringTask reference_task(std::size_t items) {
  ScoringTask task;
  task.kind = OperatorKind::Filter;
  task.instruction = "judge the record";
  task.items = scripted_inputs(items);
  return task;
}

void BM_ScoreMode(benchmark::State& state, ScoreMode mode) {
  const auto items = static_cast<std::size_t>(state.range(0));
  MockLadder mock = make_reference_ladder(0.0, 1, items);
  ScoringTask task = reference_task(items);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_scores(task, mock.ladder, mode));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ExecuteFanout(benchmark::State& state) {
  Table table = make_movie_table(256);
  MockLadder mock = make_perfect_ladder();
  PhysicalPlan plan;
  plan.logical = make_benchmark_plan();
  for (const auto& op : plan.logical.operators) {
    if (is_semantic(op.kind)) plan.assignment[op.id] = "m1";
  }
  ExecutorConfig config;
  config.policy.max_in_flight = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(execute(plan, table, mock.ladder, config));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_ScoreMode, exact, ScoreMode::Exact)->Arg(1000);
BENCHMARK_CAPTURE(BM_ScoreMode, optimized, ScoreMode::Optimized)->Arg(1000);
BENCHMARK_CAPTURE(BM_ScoreMode, approx, ScoreMode::Approximate)->Arg(1000);
BENCHMARK(BM_ExecuteFanout)->Arg(1)->Arg(4)->Arg(16);

BENCHMARK_MAIN();
