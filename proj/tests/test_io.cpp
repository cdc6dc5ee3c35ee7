#include "doctest.h"

#include "drc/io.hpp"
#include "drc/solve.hpp"

#include <json.hpp>

#include <fstream>
#include <regex>
#include <sstream>

using namespace drc;
using Eigen::Vector3d;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

std::string without_timing(const std::string& machine) {
  return std::regex_replace(machine, std::regex("\"per_iteration_seconds\": [^,\n]*"), "");
}

void check_same(const SolveReport& a, const SolveReport& b) {
  CHECK(a.method == b.method);
  CHECK(a.status == b.status);
  CHECK(a.cycle_period == b.cycle_period);
  CHECK(a.cycle_controls == b.cycle_controls);
  CHECK(a.u_star == b.u_star);
  CHECK(a.value == b.value);
  CHECK(a.certified == b.certified);
  CHECK(a.iterations == b.iterations);
  CHECK(a.per_iteration_seconds == b.per_iteration_seconds);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].iteration == b.history[k].iteration);
    CHECK(a.history[k].objective == b.history[k].objective);
    const double x = a.history[k].measure, y = b.history[k].measure;
    CHECK((x == y || (std::isnan(x) && std::isnan(y))));
  }
  CHECK(a.seed == b.seed);
  CHECK(a.params == b.params);
}

SolveReport cycling_report() {
  SolveReport r;
  r.method = Method::BestResponse;
  r.status = SolveStatus::Cycling;
  r.cycle_period = 2;
  r.cycle_controls = {Vector3d(0, 0, 1), Vector3d(1, 0, 0)};
  r.u_star = Vector3d(1, 0, 0);
  r.value = 0.05;
  r.iterations = 4;
  r.per_iteration_seconds = 0.125;
  r.history = {{1, 0.3, std::numeric_limits<double>::infinity()},
               {2, -0.1, 1.0},
               {3, 0.3, 1.0},
               {4, -0.1, std::numeric_limits<double>::quiet_NaN()}};
  r.seed = 9;
  r.params.method = Method::BestResponse;
  r.params.seed = 9;
  return r;
}

}  // namespace

TEST_CASE("problem files") {
  SUBCASE("the shipped portfolio file matches the built-in scenario") {
    const ProblemSpec spec = read_problem_file(DRC_DATA_DIR "/portfolio_0.4_0.2_0.1.json");
    CHECK(spec == portfolio_problem(Vector3d(0.4, 0.2, 0.1)));
  }
  SUBCASE("missing loss matrix names the field") {
    std::string text = serialize_problem(portfolio_problem(Vector3d(0.4, 0.2, 0.1)));
    auto doc = nlohmann::json::parse(text);
    doc["loss"].erase("A");
    text = doc.dump();
    try {
      parse_problem(text);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
      CHECK(std::string(e.what()).find("loss.A") != std::string::npos);
    }
  }
  SUBCASE("empty and malformed text") {
    CHECK(code_of([] { parse_problem(""); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_problem("{\"dim_u\": 3,\n  oops}"); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_problem("[1, 2]"); }) == ErrorCode::SchemaError);
  }
  SUBCASE("unknown fields are rejected") {
    std::string text = serialize_problem(volatility_problem());
    text.insert(text.find('{') + 1, "\"colour\": 1,");
    CHECK(code_of([&] { parse_problem(text); }) == ErrorCode::SchemaError);
  }
  SUBCASE("round trips") {
    for (const ProblemSpec& spec : {portfolio_problem(Vector3d(0.2, 0.2, 0.1)), volatility_problem(),
                                    trajectory_problem(12, Eigen::Vector2d(0.1, -0.2))}) {
      const ProblemSpec back = parse_problem(serialize_problem(spec));
      CHECK(back == spec);
      CHECK(serialize_problem(back) == serialize_problem(spec));
    }
  }
}

TEST_CASE("reports") {
  SUBCASE("machine round trip, including non-finite history entries") {
    const SolveReport r = cycling_report();
    check_same(parse_report(write_report(r, ReportFormat::Machine)), r);
  }
  SUBCASE("machine round trip of a solved problem") {
    RunConfig config;
    config.method = Method::BestResponse;
    config.n_samples = 20;
    const SolveReport r = solve(validate_problem(portfolio_problem(Vector3d(0.4, 0.2, 0.1))), config);
    check_same(parse_report(write_report(r, ReportFormat::Machine)), r);
  }
  SUBCASE("human output for a cycle shows both endpoints") {
    const std::string text = write_report(cycling_report(), ReportFormat::Human);
    CHECK(text.find("cycle") != std::string::npos);
    CHECK(text.find("(0, 0, 1)") != std::string::npos);
    CHECK(text.find("(1, 0, 0)") != std::string::npos);
    for (const char* key : {"method", "status", "u*", "value", "iterations", "per-iteration seconds"})
      CHECK(text.find(key) != std::string::npos);
  }
  SUBCASE("converged portfolio value") {
    const SolveReport r = solve(validate_problem(parse_problem(read_text(DRC_DATA_DIR "/portfolio_0.4_0.2_0.1.json"))),
                                RunConfig{});
    CHECK(r.status == SolveStatus::Converged);
    CHECK(std::abs(r.value + 0.1) <= 1e-4);
  }
  SUBCASE("identical configurations give identical reports apart from timing") {
    const ValidatedProblem problem = validate_problem(volatility_problem());
    for (Method m : {Method::BestResponse, Method::CuttingSet}) {
      RunConfig config;
      config.method = m;
      config.seed = 4;
      config.n_samples = 20;
      const std::string a = write_report(solve(problem, config), ReportFormat::Machine);
      const std::string b = write_report(solve(problem, config), ReportFormat::Machine);
      CHECK(without_timing(a) == without_timing(b));
    }
  }
  SUBCASE("invalid configurations are rejected") {
    RunConfig config;
    config.n_samples = 0;
    CHECK(code_of([&] { solve(validate_problem(volatility_problem()), config); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("trajectory csv") {
  const int T = 50, draws = 20;
  const auto paths = monte_carlo_trajectories(default_system(T), Vector::Zero(T), draws, 0);
  std::istringstream in(trajectory_csv(paths));
  std::string line;
  std::getline(in, line);
  CHECK(line == "draw,t,x1,x2");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    int fields = 0;
    while (std::getline(row, field, ',')) {
      std::size_t used = 0;
      CHECK(std::isfinite(std::stod(field, &used)));
      CHECK(used == field.size());
      ++fields;
    }
    CHECK(fields == 4);
    ++rows;
  }
  CHECK(rows == draws * (T + 1));
}
