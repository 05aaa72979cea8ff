#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "semqo/model_backend.hpp"
#include "test_helpers.hpp"

using namespace semqo;

TEST_CASE("binary labels parse flexibly") {
  CHECK(*parse_binary_label("true"));
  CHECK(*parse_binary_label(" TRUE "));
  CHECK(*parse_binary_label("Yes"));
  CHECK(*parse_binary_label("1"));
  CHECK_FALSE(*parse_binary_label("false"));
  CHECK_FALSE(*parse_binary_label("No"));
  CHECK_FALSE(*parse_binary_label("0"));
  CHECK_FALSE(parse_binary_label("maybe").has_value());
  CHECK_FALSE(parse_binary_label("").has_value());
}

TEST_CASE("semantic equality by task kind") {
  CHECK(semantically_equal("true", "YES", TaskKind::Binary));
  CHECK(semantically_equal("0", "no", TaskKind::Binary));
  CHECK_FALSE(semantically_equal("true", "false", TaskKind::Binary));
  CHECK(semantically_equal("Crime Story", "crime  story", TaskKind::Freeform));
  CHECK_FALSE(semantically_equal("crime", "drama", TaskKind::Freeform));

  // Embedder-backed equality uses cosine similarity.
  EqualityConfig eq;
  eq.embedder = [](const std::string& s) {
    return s.find("crime") != std::string::npos
               ? std::vector<double>{1.0, 0.0}
               : std::vector<double>{0.0, 1.0};
  };
  CHECK(semantically_equal("a crime tale", "crime", TaskKind::Freeform, eq));
  CHECK_FALSE(semantically_equal("a crime tale", "comedy", TaskKind::Freeform, eq));
}

TEST_CASE("task kinds for operators") {
  CHECK(task_kind_for(OperatorKind::Filter) == TaskKind::Binary);
  CHECK(task_kind_for(OperatorKind::ComputeFilter) == TaskKind::Binary);
  CHECK(task_kind_for(OperatorKind::Map) == TaskKind::Freeform);
  CHECK(task_kind_for(OperatorKind::Reduce) == TaskKind::Freeform);
  CHECK(task_kind_for(OperatorKind::Rank) == TaskKind::Freeform);
}

TEST_CASE("stable hash is deterministic and seed-sensitive") {
  CHECK(stable_hash64(7, "abc") == stable_hash64(7, "abc"));
  CHECK(stable_hash64(7, "abc") != stable_hash64(8, "abc"));
  CHECK(stable_hash64(7, "abc") != stable_hash64(7, "abd"));
}

TEST_CASE("ladder rejects non-increasing prices and counts calls") {
  std::vector<LadderModel> bad(2);
  bad[0].id = "a";
  bad[0].price = {2e-7, 8e-7};
  bad[1].id = "b";
  bad[1].price = {1e-7, 4e-7};
  CHECK_THROWS_AS(ModelLadder(std::move(bad)), InputError);

  MockLadder mock = testsupport::make_perfect_ladder(3);
  CHECK(mock.ladder.size() == 3);
  CHECK(mock.ladder.weakest().id == "m1");
  CHECK(mock.ladder.strongest().id == "m*");
  CHECK(mock.ladder.index_of("m2") == 1);
  CHECK_THROWS_AS(mock.ladder.index_of("absent"), InputError);

  mock.ladder.invoke(0, OperatorKind::Filter, "the rating is higher than 7",
                     "8.0");
  mock.ladder.invoke(0, OperatorKind::Filter, "the rating is higher than 7",
                     "2.0");
  mock.ladder.invoke(2, OperatorKind::Filter, "the rating is higher than 7",
                     "8.0");
  CHECK(mock.ladder.calls(0) == 2);
  CHECK(mock.ladder.calls(1) == 0);
  CHECK(mock.ladder.calls(2) == 1);
  auto counts = mock.ladder.call_counts();
  CHECK(counts.at("m1") == 2);
  CHECK(counts.at("m*") == 1);
  mock.ladder.reset_counters();
  CHECK(mock.ladder.calls(0) == 0);
}

TEST_CASE("default ladder prices rise ~100x weakest to strongest") {
  MockLadder mock = testsupport::make_perfect_ladder(4);
  double lo = mock.ladder.weakest().price.input_per_token;
  double hi = mock.ladder.strongest().price.input_per_token;
  CHECK(hi / lo == doctest::Approx(100.0));
  for (std::size_t i = 1; i < mock.ladder.size(); ++i) {
    CHECK(mock.ladder.at(i).price.input_per_token >
          mock.ladder.at(i - 1).price.input_per_token);
  }
}

TEST_CASE("spec validation") {
  MockEnsembleSpec spec;
  spec.accuracies = {0.9, 0.5};  // decreasing
  CHECK_THROWS_AS(build_mock_ladder(spec), InputError);

  MockEnsembleSpec mismatch;
  mismatch.accuracies = {0.5, 1.0};
  CHECK_THROWS_AS(MockEnsemble(mismatch, 3), InputError);

  MockEnsembleSpec nopool;
  nopool.distractor_pool = 0;
  CHECK_THROWS_AS(build_mock_ladder(nopool), InputError);
}

TEST_CASE("spec parses from JSON") {
  MockEnsembleSpec spec = mock_spec_from_json(
      R"({"accuracies":[0.6,1.0],"violation_rate":0.1,"seed":42,
          "vocabulary":["crime"],
          "prices":[{"input":1e-7,"output":4e-7},{"input":1e-5,"output":4e-5}]})");
  CHECK(spec.accuracies == std::vector<double>{0.6, 1.0});
  CHECK(spec.violation_rate == doctest::Approx(0.1));
  CHECK(spec.seed == 42);
  CHECK(spec.vocabulary == std::vector<std::string>{"crime"});
  REQUIRE(spec.prices.size() == 2);
  CHECK(spec.prices[1].input_per_token == doctest::Approx(1e-5));
  CHECK_THROWS_AS(mock_spec_from_json("{not json"), InputError);
}

TEST_CASE("scripted correct sets have exact sizes and are nested without violations") {
  for (std::uint64_t seed : {0ull, 11ull, 202ull}) {
    MockLadder mock = testsupport::make_reference_ladder(0.0, seed, 1000);
    const MockEnsemble& ens = *mock.ensemble;
    REQUIRE(ens.scripted_size() == 1000);
    for (std::size_t k = 0; k < 4; ++k) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < 1000; ++i) correct += ens.scripted_correct(k, i);
      auto expected = static_cast<std::size_t>(
          std::llround(ens.spec().accuracies[k] * 1000.0));
      CHECK(correct == expected);
    }
    // Nesting: whenever a weaker model is right, every stronger one is too.
    for (std::size_t i = 0; i < 1000; ++i) {
      for (std::size_t k = 1; k < 4; ++k) {
        if (ens.scripted_correct(k - 1, i)) CHECK(ens.scripted_correct(k, i));
      }
    }
  }
}

TEST_CASE("violations break nesting on the configured fraction") {
  MockLadder mock = testsupport::make_reference_ladder(0.2, 5, 1000);
  const MockEnsemble& ens = *mock.ensemble;
  std::size_t broken = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    bool nested = true;
    for (std::size_t k = 1; k < 4; ++k) {
      if (ens.scripted_correct(k - 1, i) && !ens.scripted_correct(k, i)) {
        nested = false;
      }
    }
    if (!nested) ++broken;
  }
  CHECK(broken == 200);
}

TEST_CASE("responses are deterministic and honor scripted correctness") {
  MockLadder mock = testsupport::make_reference_ladder(0.0, 3, 50);
  const MockEnsemble& ens = *mock.ensemble;
  auto items = testsupport::scripted_inputs(50);
  for (std::size_t i = 0; i < 50; ++i) {
    std::string truth = ens.truth_for(OperatorKind::Filter, "judge", items[i]);
    for (std::size_t k = 0; k < 4; ++k) {
      std::string r1 = ens.respond(k, OperatorKind::Filter, "judge", items[i]);
      std::string r2 = ens.respond(k, OperatorKind::Filter, "judge", items[i]);
      CHECK(r1 == r2);
      bool is_right = semantically_equal(r1, truth, TaskKind::Binary);
      CHECK(is_right == ens.scripted_correct(k, i));
      if (!is_right) {
        // Binary wrong answers are the flipped label.
        CHECK(*parse_binary_label(r1) == !*parse_binary_label(truth));
      }
    }
  }
}

TEST_CASE("pattern oracle answers numeric, keyword, rank, and reduce queries") {
  MockEnsembleSpec spec;
  spec.accuracies = {1.0};
  spec.vocabulary = testsupport::genre_vocabulary();
  MockEnsemble ens(spec, 1);

  CHECK(ens.truth_for(OperatorKind::Filter, "the rating is higher than 7",
                      "8.2") == "true");
  CHECK(ens.truth_for(OperatorKind::Filter, "the rating is higher than 7",
                      "6.9") == "false");
  CHECK(ens.truth_for(OperatorKind::Filter, "rating between 2 and 8", "5") ==
        "true");
  CHECK(ens.truth_for(OperatorKind::Filter, "the movie is a crime movie",
                      "crime") == "true");
  CHECK(ens.truth_for(OperatorKind::Filter, "the movie is a crime movie",
                      "comedy") == "false");
  CHECK(ens.truth_for(OperatorKind::Map, "identify the genre",
                      "A horror story, entry 3") == "horror");
  CHECK(ens.truth_for(OperatorKind::Map, "identify the genre",
                      "no known word") == "unknown");
  CHECK(ens.truth_for(OperatorKind::Rank, "score it", "7.5") ==
        std::to_string(7.5));
  // Non-numeric rank inputs and reduces are deterministic hashes.
  CHECK(ens.truth_for(OperatorKind::Rank, "score it", "abc") ==
        ens.truth_for(OperatorKind::Rank, "score it", "abc"));
  std::string agg = ens.truth_for(OperatorKind::Reduce, "summarize", "a\nb");
  CHECK(agg.rfind("aggregate:", 0) == 0);
  CHECK(agg == ens.truth_for(OperatorKind::Reduce, "summarize", "a\nb"));
}

TEST_CASE("unscripted correctness stays nested across the ladder") {
  MockEnsembleSpec spec;
  spec.accuracies = {0.5, 0.8, 0.9, 1.0};
  spec.seed = 9;
  spec.vocabulary = testsupport::genre_vocabulary();
  MockLadder mock = build_mock_ladder(spec);
  // For each input, collect which models answer correctly; with zero
  // violations the correct set along the ladder must be upward closed.
  for (int i = 0; i < 200; ++i) {
    std::string input = (i % 2) ? "crime" : "comedy";
    input += " sample " + std::to_string(i);
    std::string truth = mock.ensemble->truth_for(
        OperatorKind::Filter, "the movie is a crime movie", input);
    bool weaker_right = false;
    for (std::size_t k = 0; k < 4; ++k) {
      std::string reply = mock.ladder.invoke(
          k, OperatorKind::Filter, "the movie is a crime movie", input);
      bool right = semantically_equal(reply, truth, TaskKind::Binary);
      if (weaker_right) CHECK(right);
      weaker_right = weaker_right || right;
    }
  }
  // Top model with accuracy 1.0 is always right.
  std::string reply = mock.ladder.invoke(3, OperatorKind::Filter,
                                         "the movie is a crime movie", "crime");
  CHECK(reply == "true");
}

TEST_CASE("freeform wrong answers come from a distractor pool") {
  MockEnsembleSpec spec;
  spec.accuracies = {0.0, 1.0};
  spec.seed = 4;
  spec.distractor_pool = 3;
  MockLadder mock = build_mock_ladder(spec);
  std::set<std::string> wrong;
  for (int i = 0; i < 60; ++i) {
    std::string input = "item " + std::to_string(i);
    std::string reply =
        mock.ladder.invoke(0, OperatorKind::Map, "derive a label", input);
    std::string truth =
        mock.ensemble->truth_for(OperatorKind::Map, "derive a label", input);
    CHECK(reply != truth);
    CHECK(reply.rfind("distractor:", 0) == 0);
    wrong.insert(reply.substr(0, reply.find(':', 11)));
  }
  CHECK(wrong.size() <= 3);
  CHECK(wrong.size() >= 2);  // pool of 3 should surface more than one bucket
}
