#include <doctest.h>

#include <random>

#include "semqo/expr.hpp"
#include "semqo/rules.hpp"
#include "test_helpers.hpp"

using namespace semqo;
using testsupport::make_op;

TEST_CASE("builtin synthesizer compiles common numeric predicates") {
  auto synth = [](const std::string& text) {
    return builtin_synthesize(OperatorKind::Filter, text);
  };
  REQUIRE(synth("the rating is higher than 7"));
  CHECK(*synth("the rating is higher than 7") == "value > 7");
  CHECK(*synth("score lower than 2.5") == "value < 2.5");
  CHECK(*synth("at least 10 reviews") == "value >= 10");
  CHECK(*synth("at most 3") == "value <= 3");
  CHECK(*synth("the year equals 1999") == "value == 1999");
  CHECK(*synth("rating between 8.5 and 9") == "8.5 <= value <= 9");
  CHECK(*synth("higher than 7 and lower than 9") == "value > 7 and value < 9");
  // "between" binds its own "and" before conjunction splitting.
  CHECK(*synth("between 1 and 5 and higher than 0") ==
        "1 <= value <= 5 and value > 0");

  CHECK_FALSE(synth("is a gripping crime movie"));
  CHECK_FALSE(synth("higher than seven"));
  // Partial conjunctions must not compile: every clause or nothing.
  CHECK_FALSE(synth("higher than 7 and looks artistic"));
  // Only filters are synthesized.
  CHECK_FALSE(builtin_synthesize(OperatorKind::Map, "higher than 7"));
}

TEST_CASE("synthesized expressions always parse") {
  for (const char* text :
       {"the rating is higher than 7", "between 2 and 8",
        "at least 1 and at most 9", "equals 4"}) {
    auto expr = builtin_synthesize(OperatorKind::Filter, text);
    REQUIRE(expr);
    CHECK_NOTHROW(Expr::parse(*expr));
  }
}

TEST_CASE("filter pushdown hops over independent predecessors") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  auto candidates = apply_filter_pushdown(plan);
  // The rating filters move before the map; the genre filter depends on the
  // map but can still hop over the rating filters to sit right behind it.
  REQUIRE(candidates.size() == 3);
  for (const auto& c : candidates) {
    CHECK(c.rule_applied == "filter-pushdown");
    CHECK(c.operators.size() == plan.operators.size());
  }
  CHECK(candidates[0].operators[0].id == "op1");
  CHECK(candidates[1].operators[0].id == "op2");
  CHECK(candidates[2].operators[0].id == "op0");
  CHECK(candidates[2].operators[1].id == "op3");  // lands right after the map
  // Relative order of the untouched operators is preserved.
  CHECK(candidates[0].operators[1].id == "op0");
}

TEST_CASE("pushdown never moves a filter past its producer") {
  LogicalPlan plan;
  plan.operators.push_back(make_op("m", OperatorKind::Map, "extract genre",
                                   "description", "genre"));
  plan.operators.push_back(make_op("f", OperatorKind::Filter,
                                   "the movie is a crime movie", "genre"));
  CHECK(apply_filter_pushdown(plan).empty());
}

TEST_CASE("fusion merges maximal adjacent same-column filter runs") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  auto candidates = apply_operator_fusion(plan);
  REQUIRE(candidates.size() == 1);
  const LogicalPlan& fused = candidates[0];
  CHECK(fused.rule_applied == "operator-fusion");
  REQUIRE(fused.operators.size() == 4);
  CHECK(fused.operators[1].instruction ==
        "the rating is higher than 7 and the rating is lower than 9");
  CHECK(fused.operators[1].selectivity == doctest::Approx(0.5 / 2.0));

  // A three-filter run fuses as one operator with selectivity 0.5/3.
  LogicalPlan triple;
  for (int i = 0; i < 3; ++i) {
    triple.operators.push_back(make_op("f" + std::to_string(i),
                                       OperatorKind::Filter,
                                       "clause " + std::to_string(i), "col"));
  }
  auto c3 = apply_operator_fusion(triple);
  REQUIRE(c3.size() == 1);
  REQUIRE(c3[0].operators.size() == 1);
  CHECK(c3[0].operators[0].selectivity == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("fusion skips non-adjacent and cross-column filters") {
  LogicalPlan plan;
  plan.operators.push_back(make_op("f0", OperatorKind::Filter, "a", "x"));
  plan.operators.push_back(make_op("f1", OperatorKind::Filter, "b", "y"));
  CHECK(apply_operator_fusion(plan).empty());

  plan.operators.insert(plan.operators.begin() + 1,
                        make_op("m", OperatorKind::Map, "mk", "x", "z"));
  plan.operators.push_back(make_op("f2", OperatorKind::Filter, "c", "y"));
  // x-filter | map | y-filter | y-filter: only the y-run fuses.
  auto candidates = apply_operator_fusion(plan);
  REQUIRE(candidates.size() == 1);
  CHECK(candidates[0].operators.size() == 3);
}

TEST_CASE("non-LLM replacement compiles synthesizable operators") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  auto candidates = apply_non_llm_replacement(plan, builtin_synthesize);
  REQUIRE(candidates.size() == 2);  // the two rating filters
  CHECK(candidates[0].operators[1].kind == OperatorKind::ComputeFilter);
  CHECK(candidates[0].operators[1].instruction == "value > 7");
  CHECK(candidates[1].operators[2].kind == OperatorKind::ComputeFilter);
  CHECK(candidates[1].operators[2].instruction == "value < 9");
  // Everything else is untouched.
  CHECK(candidates[0].operators[2].kind == OperatorKind::Filter);
}

TEST_CASE("non-LLM replacement rejects synthesizer output that fails to parse") {
  LogicalPlan plan;
  plan.operators.push_back(make_op("f", OperatorKind::Filter, "whatever", "x"));
  Synthesizer broken = [](OperatorKind, const std::string&) {
    return std::optional<std::string>{"((("};
  };
  CHECK(apply_non_llm_replacement(plan, broken).empty());
}

TEST_CASE("builtin replacement matches a hand-written oracle on 1000 rows") {
  struct Case {
    const char* instruction;
    bool (*oracle)(double);
  };
  const Case cases[] = {
      {"the rating is higher than 6.5", [](double v) { return v > 6.5; }},
      {"the rating is lower than 3", [](double v) { return v < 3.0; }},
      {"the rating is at least 5", [](double v) { return v >= 5.0; }},
      {"the rating is at most 7.5", [](double v) { return v <= 7.5; }},
      {"rating between 2 and 8", [](double v) { return 2.0 <= v && v <= 8.0; }},
      {"higher than 2 and lower than 9",
       [](double v) { return v > 2.0 && v < 9.0; }},
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (const auto& c : cases) {
    auto expr_text = builtin_synthesize(OperatorKind::Filter, c.instruction);
    REQUIRE(expr_text);
    Expr expr = Expr::parse(*expr_text);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      double v = dist(rng);
      char cell[32];
      std::snprintf(cell, sizeof(cell), "%.6f", v);
      double parsed = std::strtod(cell, nullptr);  // judge what the row stores
      if (expr.evaluate_predicate(cell) != c.oracle(parsed)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("rewrite picks uniformly among candidates and is seed-stable") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  auto rewriter = rule_based_rewriter();
  // 3 pushdowns + 1 fusion + 2 replacements = 6 candidates.
  CHECK(rewriter(plan).size() == 6);

  LogicalPlan a = rewrite(plan, rewriter, std::uint64_t{17});
  LogicalPlan b = rewrite(plan, rewriter, std::uint64_t{17});
  CHECK(plans_structurally_equal(a, b));
  CHECK_FALSE(plans_structurally_equal(a, plan));

  // Across many seeds every candidate shows up.
  std::size_t distinct = 0;
  std::vector<LogicalPlan> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    LogicalPlan c = rewrite(plan, rewriter, seed);
    bool is_new = true;
    for (const auto& s : seen) {
      if (plans_structurally_equal(s, c)) is_new = false;
    }
    if (is_new) {
      seen.push_back(c);
      ++distinct;
    }
  }
  CHECK(distinct == 6);
}

TEST_CASE("rewrite is the identity when no rule applies") {
  LogicalPlan plan;
  plan.operators.push_back(make_op("f", OperatorKind::Filter,
                                   "looks compelling", "title"));
  LogicalPlan out = rewrite(plan, rule_based_rewriter(), std::uint64_t{3});
  CHECK(plans_structurally_equal(out, plan));
}
