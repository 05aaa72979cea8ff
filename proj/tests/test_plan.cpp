#include <doctest.h>

#include <random>

#include "semqo/plan.hpp"
#include "test_helpers.hpp"

using namespace semqo;

TEST_CASE("plan parsing applies kind defaults and assigns stable ids") {
  LogicalPlan plan = parse_plan(R"({
    "operators": [
      {"kind": "map", "instruction": "extract genre",
       "input_column": "description", "output_column": "genre"},
      {"kind": "filter", "instruction": "rating is higher than 7",
       "input_column": "rating"},
      {"kind": "reduce", "instruction": "summarize",
       "input_column": "title"}
    ]
  })");
  REQUIRE(plan.operators.size() == 3);
  CHECK(plan.operators[0].id == "op0");
  CHECK(plan.operators[0].selectivity == 1.0);
  CHECK(plan.operators[1].selectivity == 0.5);
  CHECK(plan.operators[2].selectivity == 0.0);
  CHECK(*plan.operators[0].output_column == "genre");
}

TEST_CASE("plan serialization round-trips structurally") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  plan.operators[1].selectivity = 0.25;  // non-default survives the trip
  LogicalPlan back = parse_plan(serialize_plan(plan));
  CHECK(plans_structurally_equal(plan, back));
  CHECK(back.operators[1].selectivity == doctest::Approx(0.25));
  CHECK(back.operators[2].selectivity == doctest::Approx(0.5));
}

TEST_CASE("static checks name the offending operator") {
  auto expect_error = [](const char* doc, const char* fragment) {
    try {
      parse_plan(doc);
      FAIL_CHECK("expected InputError for: " << fragment);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error(R"({"operators":[
    {"kind":"filter","instruction":"x","input_column":"a"},
    {"kind":"reduce","instruction":"x","input_column":"a"},
    {"kind":"filter","instruction":"x","input_column":"a"}]})",
               "after a reduce");
  expect_error(R"({"operators":[
    {"kind":"map","instruction":"x","input_column":"a"}]})",
               "output_column");
  expect_error(R"({"operators":[
    {"kind":"filter","instruction":"x","input_column":"a",
     "output_column":"b"}]})",
               "only map operators");
  expect_error(R"({"operators":[
    {"kind":"filter","instruction":"x","input_column":"a",
     "selectivity": 1.5}]})",
               "selectivity");
  expect_error(R"({"operators":[
    {"kind":"filter","instruction":"x","input_column":"g"},
    {"kind":"map","instruction":"x","input_column":"a","output_column":"g"}]})",
               "produced only by a later operator");
}

TEST_CASE("check_plan against a base schema rejects unknown columns") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  std::vector<ColumnSpec> schema = {{"title", ColumnKind::Text},
                                    {"description", ColumnKind::Text},
                                    {"rating", ColumnKind::Number}};
  CHECK_NOTHROW(check_plan(plan, &schema));

  plan.operators[1].input_column = "score";
  CHECK_THROWS_AS(check_plan(plan, &schema), InputError);
  CHECK(plan_is_valid(testsupport::make_benchmark_plan(), &schema));
}

TEST_CASE("selectivity propagation is a running product") {
  LogicalPlan plan = testsupport::make_benchmark_plan();
  auto counts = propagate_selectivity(plan, 1000.0);
  REQUIRE(counts.size() == 5);
  CHECK(counts[0] == doctest::Approx(1000.0));  // map, sel 1.0
  CHECK(counts[1] == doctest::Approx(1000.0));
  CHECK(counts[2] == doctest::Approx(500.0));
  CHECK(counts[3] == doctest::Approx(250.0));
  CHECK(counts[4] == doctest::Approx(125.0));

  // Property: count[i] = rows * prod(sel[0..i-1]) for random selectivities.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> sel(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto& op : plan.operators) op.selectivity = sel(rng);
    auto c = propagate_selectivity(plan, 320.0);
    double expected = 320.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i] == doctest::Approx(expected));
      expected *= plan.operators[i].selectivity;
    }
  }
}

TEST_CASE("cost model prices expected calls per operator") {
  LogicalPlan plan;
  plan.operators.push_back(testsupport::make_op(
      "op0", OperatorKind::Filter, "keep good rows", "rating"));
  plan.operators.push_back(testsupport::make_op(
      "op1", OperatorKind::Map, "describe", "rating", "text"));

  PricingTable pricing;
  pricing.per_model["m"] = {2e-6, 8e-6};
  std::unordered_map<std::string, double> tokens{{"op0", 100.0}, {"op1", 50.0}};

  // filter: 1000 calls * (100 tok * 2e-6 + 16 tok * 8e-6)
  // map: 500 calls * (50 tok * 2e-6 + 16 tok * 8e-6)
  double expected = 1000.0 * (100.0 * 2e-6 + 16.0 * 8e-6) +
                    500.0 * (50.0 * 2e-6 + 16.0 * 8e-6);
  CHECK(estimate_cost(plan, 1000.0, tokens, pricing, "m") ==
        doctest::Approx(expected));
}

TEST_CASE("reduce is priced as one call over all surviving rows") {
  LogicalPlan plan;
  plan.operators.push_back(testsupport::make_op(
      "op0", OperatorKind::Reduce, "summarize", "title"));
  PricingTable pricing;
  pricing.per_model["m"] = {1e-6, 3e-6};
  std::unordered_map<std::string, double> tokens{{"op0", 20.0}};
  // 400 rows * 20 tokens of input, one response of 16 tokens.
  double expected = 400.0 * 20.0 * 1e-6 + 1.0 * 16.0 * 3e-6;
  CHECK(estimate_cost(plan, 400.0, tokens, pricing, "m") ==
        doctest::Approx(expected));
}

TEST_CASE("compute operators cost nothing") {
  LogicalPlan plan;
  plan.operators.push_back(testsupport::make_op(
      "op0", OperatorKind::ComputeFilter, "value > 7", "rating"));
  PricingTable pricing;
  pricing.per_model["m"] = {1e-6, 1e-6};
  CHECK(estimate_cost(plan, 1000.0, {}, pricing, "m") == doctest::Approx(0.0));
}

TEST_CASE("per-operator assignments override the default model") {
  LogicalPlan plan;
  plan.operators.push_back(testsupport::make_op(
      "op0", OperatorKind::Filter, "keep", "rating"));
  PricingTable pricing;
  pricing.per_model["cheap"] = {1e-7, 4e-7};
  pricing.per_model["dear"] = {1e-5, 4e-5};
  std::unordered_map<std::string, double> tokens{{"op0", 10.0}};
  std::unordered_map<std::string, std::string> assignment{{"op0", "cheap"}};
  double dear = estimate_cost(plan, 100.0, tokens, pricing, "dear");
  double cheap = estimate_cost(plan, 100.0, tokens, pricing, "dear", &assignment);
  CHECK(cheap == doctest::Approx(dear / 100.0));
}

TEST_CASE("missing prompt length for a semantic operator is an error") {
  LogicalPlan plan;
  plan.operators.push_back(testsupport::make_op(
      "op0", OperatorKind::Filter, "keep", "rating"));
  PricingTable pricing;
  pricing.per_model["m"] = {1e-6, 1e-6};
  CHECK_THROWS_AS(estimate_cost(plan, 10.0, {}, pricing, "m"), InputError);
}

TEST_CASE("prompt token estimate follows the chars-per-token rule") {
  CHECK(estimate_prompt_tokens("abcdefgh", 8.0) == doctest::Approx(4.0));
  CHECK(estimate_prompt_tokens("abc", 0.0) == doctest::Approx(1.0));  // ceil
}

TEST_CASE("structural equality ignores provenance but not order") {
  LogicalPlan a = testsupport::make_benchmark_plan();
  LogicalPlan b = a;
  b.rule_applied = "operator-fusion";
  b.parent_plan_id = "p0";
  CHECK(plans_structurally_equal(a, b));
  std::swap(b.operators[1], b.operators[2]);
  CHECK_FALSE(plans_structurally_equal(a, b));
}
