#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "semqo/table.hpp"
#include "test_helpers.hpp"

#ifndef SEMQO_CLI_PATH
#error "SEMQO_CLI_PATH must point at the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

struct CliFixture {
  fs::path dir;

  CliFixture() {
    dir = fs::temp_directory_path() /
          ("semqo-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    write("plan.json", R"({
      "operators": [
        {"kind": "map", "instruction": "identify the movie genre from the description",
         "input_column": "description", "output_column": "genre"},
        {"kind": "filter", "instruction": "the rating is higher than 7",
         "input_column": "rating"},
        {"kind": "filter", "instruction": "the movie is a crime movie",
         "input_column": "genre"}
      ]
    })");
    write("table.csv",
          semqo::serialize_table_csv(testsupport::make_movie_table(60)));
    write("ladder.json", R"({
      "accuracies": [1.0, 1.0, 1.0, 1.0],
      "vocabulary": ["crime", "comedy", "drama", "horror", "romance"]
    })");
  }

  ~CliFixture() {
    std::error_code ignored;
    fs::remove_all(dir, ignored);
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << content;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir / name, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  std::string path(const std::string& name) const {
    return (dir / name).string();
  }

  int run(const std::string& args) const {
    std::string command = std::string(SEMQO_CLI_PATH) + " " + args + " > " +
                          path("stdout.txt") + " 2> " + path("stderr.txt");
    int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string common_args() const {
    return "--plan " + path("plan.json") + " --table " + path("table.csv") +
           " --ladder " + path("ladder.json") + " --seed 3";
  }
};

}  // namespace

TEST_CASE("explain emits a parsable optimization report") {
  CliFixture fix;
  int code = fix.run("explain " + fix.common_args() + " --report " +
                     fix.path("explain.json"));
  REQUIRE(code == 0);
  nlohmann::json doc = nlohmann::json::parse(fix.read("explain.json"));
  CHECK(doc.contains("initial_plan"));
  CHECK(doc["initial_cost"].get<double>() > 0.0);
  REQUIRE(doc["candidates"].is_array());
  CHECK(doc["candidates"][0]["id"] == "p0");
  CHECK(doc.contains("chosen_plan"));
  CHECK(doc["chosen_cost"].get<double>() <= doc["initial_cost"].get<double>());
  CHECK(doc["selections"].is_array());
  // Every semantic operator of the chosen plan has an assigned model.
  std::size_t semantic_ops = 0;
  for (const auto& op : doc["chosen_plan"]["operators"]) {
    std::string kind = op["kind"].get<std::string>();
    if (kind.rfind("compute-", 0) != 0) ++semantic_ops;
  }
  CHECK(doc["assignment"].size() == semantic_ops);
  for (const auto& [op_id, model] : doc["assignment"].items()) {
    CHECK(model.get<std::string>().rfind("m", 0) == 0);
  }
}

TEST_CASE("run writes the result table and execution report") {
  CliFixture fix;
  int code = fix.run("run " + fix.common_args() + " --out " +
                     fix.path("result.csv") + " --report " +
                     fix.path("report.json"));
  REQUIRE(code == 0);

  semqo::Table result =
      semqo::load_table_file(fix.path("result.csv"), semqo::TableFormat::Csv);
  REQUIRE(result.has_column("genre"));
  for (std::size_t i = 0; i < result.row_count(); ++i) {
    CHECK(*result.cell(i, "genre") == "crime");
    double rating = 0;
    std::istringstream(std::string(*result.cell(i, "rating"))) >> rating;
    CHECK(rating > 7.0);
  }

  nlohmann::json report = nlohmann::json::parse(fix.read("report.json"));
  CHECK(report.contains("plan"));
  CHECK(report.contains("assignment"));
  CHECK(report["execution"].contains("calls_per_model"));
  CHECK(report["execution"]["cost"].get<double>() >= 0.0);
  CHECK(report["execution"]["row_errors"] == 0);
  // Wall time is environment noise and stays out of serialized reports.
  CHECK_FALSE(report["execution"].contains("wall_time_seconds"));
}

TEST_CASE("reruns with the same seed are byte-identical") {
  CliFixture fix;
  std::string args = "run " + fix.common_args() + " --out " +
                     fix.path("result.csv") + " --report " +
                     fix.path("report.json");
  REQUIRE(fix.run(args) == 0);
  std::string result_a = fix.read("result.csv");
  std::string report_a = fix.read("report.json");
  REQUIRE(fix.run(args) == 0);
  CHECK(fix.read("result.csv") == result_a);
  CHECK(fix.read("report.json") == report_a);

  // Parallelism must not change the artifacts either.
  REQUIRE(fix.run(args + " --max-in-flight 1") == 0);
  CHECK(fix.read("result.csv") == result_a);
}

TEST_CASE("disabling physical optimization assigns the strongest model") {
  CliFixture fix;
  int code = fix.run("explain " + fix.common_args() +
                     " --no-physical-opt --no-logical-opt --report " +
                     fix.path("explain.json"));
  REQUIRE(code == 0);
  nlohmann::json doc = nlohmann::json::parse(fix.read("explain.json"));
  REQUIRE(!doc["assignment"].empty());
  for (const auto& [op, model] : doc["assignment"].items()) {
    CHECK(model.get<std::string>() == "m*");
  }
  // With the search disabled the trace is just the seed plan.
  CHECK(doc["candidates"].size() == 1);
}

TEST_CASE("bad inputs exit with the input-error code") {
  CliFixture fix;
  fix.write("broken.json", "{ not json");
  CHECK(fix.run("explain --plan " + fix.path("broken.json") + " --table " +
                fix.path("table.csv") + " --ladder " +
                fix.path("ladder.json")) == 2);

  // Plan referencing a column the table lacks.
  fix.write("badcol.json", R"({"operators": [{"kind": "filter",
    "instruction": "keep", "input_column": "missing"}]})");
  CHECK(fix.run("explain --plan " + fix.path("badcol.json") + " --table " +
                fix.path("table.csv") + " --ladder " +
                fix.path("ladder.json")) == 2);

  // Unknown flags and missing required options are usage errors.
  CHECK(fix.run("explain --definitely-not-a-flag") == 2);
  CHECK(fix.run("run --plan " + fix.path("plan.json")) == 2);
}

TEST_CASE("simulate sweeps violation rates into a CSV") {
  CliFixture fix;
  int code = fix.run("simulate --seed 1 --items 400 --out " +
                     fix.path("sweep.csv"));
  REQUIRE(code == 0);
  std::istringstream csv(fix.read("sweep.csv"));
  std::string header;
  REQUIRE(std::getline(csv, header));
  CHECK(header.find("exact_i12") != std::string::npos);
  CHECK(header.find("approx_mstar_calls") != std::string::npos);
  CHECK(header.find("approx_err_i1star") != std::string::npos);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(csv, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  CHECK(lines.size() == 7);  // default sweep points
  // The first line is violation rate 0: approximation error is zero.
  std::istringstream first(lines[0]);
  std::vector<std::string> fields;
  std::string field;
  while (std::getline(first, field, ',')) fields.push_back(field);
  REQUIRE(fields.size() == 16);
  CHECK(std::stod(fields[0]) == doctest::Approx(0.0));
  CHECK(std::stod(fields[13]) == doctest::Approx(0.0));  // approx_err_i12
  CHECK(std::stod(fields[14]) == doctest::Approx(0.0));
  CHECK(std::stod(fields[15]) == doctest::Approx(0.0));
}
