#include "drc/cli.hpp"

#include "drc/io.hpp"
#include "drc/scenarios.hpp"
#include "drc/solve.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace drc {

namespace {

constexpr int kSolverFailure = 1;
constexpr int kUsage = 2;

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text << std::flush;
  } else {
    write_file(path, text);
  }
}

std::uint64_t default_seed() {
  const char* env = std::getenv("DRC_SEED");
  if (!env || !*env) return 0;
  std::size_t used = 0;
  unsigned long long seed = 0;
  try {
    seed = std::stoull(env, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used > 0 && env[used] == '\0' && env[0] != '-', ErrorCode::InvalidArgument,
          std::string("DRC_SEED is not a nonnegative integer: '") + env + "'");
  return seed;
}

Method method_from_flag(const std::string& name) {
  return name == "best-response" ? Method::BestResponse : Method::CuttingSet;
}

Vector control_from_flag(const std::string& spec, int T) {
  if (spec == "zero") return Vector::Zero(T);
  if (std::filesystem::is_regular_file(spec)) {
    std::ifstream in(spec, std::ios::binary);
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_report(content).u_star;
  }
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == item.size(), ErrorCode::InvalidArgument,
            "--control must be 'zero', a report file or comma-separated numbers");
    values.push_back(v);
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

std::string cell(const std::string& s, int width) {
  std::ostringstream os;
  os << std::left << std::setw(width) << s;
  return os.str();
}

std::string short_vector(const Vector& v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << "(";
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << (std::abs(v[i]) < 5e-4 ? 0.0 : v[i]);
  os << ")";
  return os.str();
}

std::string short_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

struct TableColumn {
  std::string label;
  ProblemSpec spec;
  std::optional<double> oracle;
};

std::vector<TableColumn> table1_columns() {
  std::vector<TableColumn> out;
  for (const Vector& eps : {Vector(Eigen::Vector3d(0.4, 0.2, 0.1)), Vector(Eigen::Vector3d(1e-3, 1e-3, 1e-3)),
                            Vector(Eigen::Vector3d(0.2, 0.2, 0.1)), Vector(Eigen::Vector3d(2, 2, 2))}) {
    std::ostringstream label;
    label << "eps=(" << eps[0] << "," << eps[1] << "," << eps[2] << ")";
    out.push_back({label.str(), portfolio_problem(eps), portfolio_lp_oracle(eps).drc_value()});
  }
  out.push_back({"volatility", volatility_problem(), std::nullopt});
  return out;
}

std::string table1(const RunConfig& base) {
  std::ostringstream os;
  os << cell("column", 24) << cell("method", 15) << cell("status", 12) << cell("u*", 52) << cell("value", 12)
     << cell("oracle", 12) << cell("iters", 7) << "s/iter\n";
  for (const auto& column : table1_columns()) {
    const ValidatedProblem problem = validate_problem(column.spec);
    for (Method m : {Method::BestResponse, Method::CuttingSet}) {
      RunConfig config = base;
      config.method = m;
      const SolveReport r = solve(problem, config);
      std::string u = short_vector(r.u_star);
      if (r.status == SolveStatus::Cycling && r.cycle_controls.size() == 2)
        u = short_vector(r.cycle_controls[0]) + " <-> " + short_vector(r.cycle_controls[1]);
      std::string status = to_string(r.status);
      if (r.cycle_period) status += "(" + std::to_string(*r.cycle_period) + ")";
      os << cell(column.label, 24) << cell(to_string(m), 15) << cell(status, 12) << cell(u, 52)
         << cell(short_number(r.value), 12) << cell(column.oracle ? short_number(*column.oracle) : "-", 12)
         << cell(std::to_string(r.iterations), 7) << short_number(r.per_iteration_seconds) << "\n";
    }
  }
  return os.str();
}

}  // namespace

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Infeasible:
    case ErrorCode::MaxIters:
    case ErrorCode::SlackResidual:
    case ErrorCode::InfeasibleSamplePlacement:
    case ErrorCode::MissingPairing:
    case ErrorCode::EmptyCutSet:
    case ErrorCode::UnsupportedGFun:
      return kSolverFailure;
    default:
      return kUsage;
  }
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributionally robust control with projection-moment ambiguity sets", "drc"};
  app.require_subcommand(1, 1);

  RunConfig config;
  std::string method = "cutting-set", problem_path = "-", out_path, format = "human";
  std::optional<std::uint64_t> seed;

  auto* solve_cmd = app.add_subcommand("solve", "solve a problem file and write a report");
  solve_cmd->add_option("--problem", problem_path, "problem file ('-' reads stdin)");
  solve_cmd->add_option("--method", method, "best-response or cutting-set")
      ->check(CLI::IsMember({"best-response", "cutting-set"}));
  solve_cmd->add_option("--seed", seed, "seed for the initial samples (default: $DRC_SEED or 0)");
  solve_cmd->add_option("--max-iters", config.max_iters, "best-response iteration budget");
  solve_cmd->add_option("--max-cuts", config.max_cuts, "cutting-set iteration budget");
  solve_cmd->add_option("--n-samples", config.n_samples, "initial samples (atoms or cuts)");
  solve_cmd->add_option("--dccp-restarts", config.dccp_restarts, "restarts for non-convex pessimization");
  solve_cmd->add_option("--feas-tol", config.feas_tol, "cutting-set violation tolerance");
  solve_cmd->add_option("--u-tol", config.u_tol, "best-response convergence tolerance");
  solve_cmd->add_option("--cycle-tol", config.cycle_tol, "best-response cycle tolerance");
  solve_cmd->add_option("--out", out_path, "report file (default stdout)");
  solve_cmd->add_option("--format", format, "human or machine")->check(CLI::IsMember({"human", "machine"}));

  std::string scenario;
  std::vector<double> eps = {0.4, 0.2, 0.1}, goal = {0.0, 0.0};
  int horizon = 50;
  auto* scenario_cmd = app.add_subcommand("scenario", "write a built-in problem file");
  scenario_cmd->add_option("name", scenario, "portfolio, volatility or trajectory")
      ->required()
      ->check(CLI::IsMember({"portfolio", "volatility", "trajectory"}));
  scenario_cmd->add_option("--eps", eps, "portfolio radii, e.g. 0.4,0.2,0.1")->delimiter(',')->expected(3);
  scenario_cmd->add_option("--T", horizon, "trajectory horizon")->check(CLI::PositiveNumber);
  scenario_cmd->add_option("--goal", goal, "trajectory goal state, e.g. 0,0")->delimiter(',')->expected(2);
  scenario_cmd->add_option("--out", out_path, "problem file (default stdout)");

  std::string control = "zero";
  int draws = 20;
  auto* rollout_cmd = app.add_subcommand("rollout", "simulate the linear system and write a CSV");
  rollout_cmd->add_option("--T", horizon, "horizon")->check(CLI::PositiveNumber);
  rollout_cmd->add_option("--goal", goal, "goal state (unused by the dynamics, kept for symmetry)")
      ->delimiter(',')
      ->expected(2);
  rollout_cmd->add_option("--control", control, "'zero', a machine report file, or comma-separated inputs");
  rollout_cmd->add_option("--draws", draws, "number of initial states")->check(CLI::PositiveNumber);
  rollout_cmd->add_option("--seed", seed, "seed for the initial states (default: $DRC_SEED or 0)");
  rollout_cmd->add_option("--out", out_path, "CSV file (default stdout)");

  auto* table_cmd = app.add_subcommand("reproduce-table1", "run both methods on the five portfolio columns");
  table_cmd->add_option("--seed", seed, "seed (default: $DRC_SEED or 0)");
  table_cmd->add_option("--n-samples", config.n_samples, "initial samples");
  table_cmd->add_option("--out", out_path, "table file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    config.seed = seed ? *seed : default_seed();
    if (*solve_cmd) {
      config.method = method_from_flag(method);
      validate_config(config);
      const ValidatedProblem problem = validate_problem(read_problem_file(problem_path));
      const SolveReport report = solve(problem, config);
      emit(out, out_path, write_report(report, format == "machine" ? ReportFormat::Machine : ReportFormat::Human));
      if (report.status == SolveStatus::Infeasible) {
        err << "drc: the ambiguity set admits no distribution\n";
        return kSolverFailure;
      }
    } else if (*scenario_cmd) {
      ProblemSpec spec;
      if (scenario == "portfolio") {
        spec = portfolio_problem(Eigen::Map<const Vector>(eps.data(), 3));
      } else if (scenario == "volatility") {
        spec = volatility_problem();
      } else {
        spec = trajectory_problem(horizon, Eigen::Vector2d(goal[0], goal[1]));
      }
      validate_problem(spec);
      emit(out, out_path, serialize_problem(spec));
    } else if (*rollout_cmd) {
      const Vector u = control_from_flag(control, horizon);
      require(u.size() == horizon, ErrorCode::LengthMismatch,
              "control has " + std::to_string(u.size()) + " entries, horizon is " + std::to_string(horizon));
      const auto paths = monte_carlo_trajectories(default_system(horizon, Eigen::Vector2d(goal[0], goal[1])), u,
                                                  draws, config.seed);
      emit(out, out_path, trajectory_csv(paths));
    } else if (*table_cmd) {
      validate_config(config);
      emit(out, out_path, table1(config));
    }
  } catch (const Error& e) {
    err << "drc: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "drc: " << e.what() << "\n";
    return kSolverFailure;
  }
  return 0;
}

}  // namespace drc
