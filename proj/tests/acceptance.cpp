// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails that is not listed with --known-failure.

#include "drc/best_response.hpp"
#include "drc/cutting_set.hpp"
#include "drc/scenarios.hpp"
#include "drc/solve.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace drc;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const Vector& v) {
  std::ostringstream os;
  os.precision(4);
  os << "(";
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << (std::abs(v[i]) < 1e-9 ? 0.0 : v[i]);
  os << ")";
  return os.str();
}

RunConfig config(Method m) {
  RunConfig c;
  c.method = m;
  return c;
}

ValidatedProblem portfolio(double e1, double e2, double e3) {
  return validate_problem(portfolio_problem(Vector3d(e1, e2, e3)));
}

void reference_controls(Outcome& o) {
  const std::vector<std::tuple<std::string, ValidatedProblem, Vector>> cases = {
      {"eps=(0.4,0.2,0.1)", portfolio(0.4, 0.2, 0.1), Vector3d(0, 0, 1)},
      {"eps=(1e-3,1e-3,1e-3)", portfolio(1e-3, 1e-3, 1e-3), Vector3d(1, 0, 0)},
      {"volatility", validate_problem(volatility_problem()), Vector3d(0, 0, 1)}};
  for (const auto& [label, problem, expected] : cases) {
    const auto t0 = Clock::now();
    const SolveReport r = solve(problem, config(Method::CuttingSet));
    const double elapsed = seconds_since(t0);
    const double err = (r.u_star - expected).cwiseAbs().maxCoeff();
    o.detail << label << ": u*=" << fmt(r.u_star) << " in " << elapsed << " s; ";
    o.check(err <= 1e-3, label + " u* off by " + std::to_string(err));
    o.check(elapsed < 30.0, label + " took too long");
  }
}

void tie_case(Outcome& o) {
  const auto problem = portfolio(0.2, 0.2, 0.1);
  const double oracle = portfolio_lp_oracle(Vector3d(0.2, 0.2, 0.1)).drc_value();
  for (Method m : {Method::BestResponse, Method::CuttingSet}) {
    const SolveReport r = solve(problem, config(m));
    const double worst = worst_case_value(problem, r.u_star);
    o.detail << to_string(m) << ": " << to_string(r.status) << " u=" << fmt(r.u_star) << " worst=" << worst << "; ";
    o.check(r.u_star[1] <= 1e-3, std::string(to_string(m)) + " u2 > 1e-3");
    o.check(std::abs(worst - oracle) <= 1e-4, std::string(to_string(m)) + " worst case differs from oracle");
  }
  o.detail << "oracle=" << oracle;
}

void unconstrained_case(Outcome& o) {
  const auto problem = portfolio(2, 2, 2);
  for (Method m : {Method::BestResponse, Method::CuttingSet}) {
    const SolveReport r = solve(problem, config(m));
    o.detail << to_string(m) << ": u=" << fmt(r.u_star) << " value=" << r.value << "; ";
    o.check(std::abs(r.value - 1.0) <= 1e-3, std::string(to_string(m)) + " value not 1");
  }
}

void cycle_mechanism(Outcome& o) {
  const Vector u = min_step(portfolio(0.4, 0.2, 0.1), {{Vector3d(0.2, 0.1, 0.1)}});
  o.detail << "min_step=" << fmt(u) << "; ";
  o.check((u - Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() <= 1e-6, "min_step is not (1,0,0)");
  const Vector a = Vector3d(0, 0, 1), b = Vector3d(1, 0, 0);
  const CycleInfo cycle = detect_cycle({a, b, a, b}, 1e-4);
  o.detail << "period=" << (cycle.period ? std::to_string(*cycle.period) : "none");
  o.check(cycle.period == 2, "no period-2 cycle");
}

void weak_duality(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto t0 = Clock::now();
  double worst_gap = 0.0, lowest = std::numeric_limits<double>::infinity();
  int converged = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector3d eps(unit(rng), unit(rng), unit(rng));
    const double oracle = portfolio_lp_oracle(eps).drc_value();
    const SolveReport r = solve(validate_problem(portfolio_problem(eps)), config(Method::CuttingSet));
    converged += r.status == SolveStatus::Converged;
    worst_gap = std::max(worst_gap, std::abs(r.value - oracle));
    lowest = std::min(lowest, r.value - oracle);
  }
  const double elapsed = seconds_since(t0);
  o.detail << "max |t*-oracle|=" << worst_gap << " min t*-oracle=" << lowest << " converged=" << converged
           << "/100 in " << elapsed << " s";
  o.check(lowest >= -1e-6, "t* below oracle");
  o.check(worst_gap <= 1e-4, "t* too far from oracle");
  o.check(elapsed < 300.0, "too slow");
}

void trajectory_50(Outcome& o) {
  const int T = 50;
  const SolveReport r = solve(validate_problem(trajectory_problem(T, Vector2d::Zero())), config(Method::CuttingSet));
  const double u_norm = r.u_star.cwiseAbs().maxCoeff();
  double end = 0.0;
  for (const auto& path : monte_carlo_trajectories(default_system(T), r.u_star, 20, 0))
    end = std::max(end, path.back().norm());
  o.detail << to_string(r.status) << " |u*|_inf=" << u_norm << " max |x50|=" << end;
  o.check(u_norm <= 1e-2, "control too large");
  o.check(end <= 1e-2, "final state too far from goal");
}

void trajectory_10(Outcome& o) {
  const auto problem = validate_problem(trajectory_problem(10, Vector2d::Zero()));
  const SolveReport r = solve(problem, config(Method::CuttingSet));
  const double u_norm = r.u_star.cwiseAbs().maxCoeff();
  const double worst = worst_case_value(problem, r.u_star);
  const double zero = worst_case_value(problem, Vector::Zero(10));
  o.detail << to_string(r.status) << " |u*|_inf=" << u_norm << " worst(u*)=" << worst << " worst(0)=" << zero;
  o.check(u_norm > 1e-3, "control is zero");
  o.check(worst <= zero + 1e-6, "worse than zero control");
}

void timing(Outcome& o) {
  // Both horizons used by the trajectory scenario are timed.
  for (int T : {10, 50}) {
    const auto problem = validate_problem(trajectory_problem(T, Vector2d::Zero()));
    double cs = 0.0, br = 0.0;
    const int seeds = 3;
    for (int seed = 0; seed < seeds; ++seed) {
      RunConfig c = config(Method::CuttingSet);
      c.seed = static_cast<std::uint64_t>(seed);
      cs += solve(problem, c).per_iteration_seconds / seeds;
      c.method = Method::BestResponse;
      c.n_samples = 50;
      br += solve(problem, c).per_iteration_seconds / seeds;
    }
    o.detail << "T=" << T << ": cutting-set " << cs << " s/iter, best-response " << br << " s/iter; ";
    o.check(cs < br, "cutting-set iterations are slower at T=" + std::to_string(T));
  }
  o.detail << "(means over 3 seeds)";
}

int run_binary(const std::string& path, const std::string& filter) {
  const std::string cmd = "\"" + path + "\" -tc=\"" + filter + "\" > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void property_suites(Outcome& o) {
  const std::vector<std::tuple<std::string, std::string, std::string>> suites = {
      {"master monotonicity", DRC_TEST_CUTTING_SET, "master value is monotone*"},
      {"alpha/beta bijection", DRC_TEST_CUTTING_SET, "alpha/beta*"},
      {"rollout vs closed form", DRC_TEST_SCENARIOS, "rollout and closed form agree"},
      {"CCP majorization", DRC_TEST_DCCP, "majorization on a grid,monotone surrogate*"},
      {"convex-core oracles", DRC_TEST_CONVEX, "random LPs*,random box QPs*"},
      {"two-sided expansion", DRC_TEST_PROBLEM, "two-sided expansion is equivalent*"}};
  for (const auto& [label, binary, filter] : suites) {
    const bool ok = run_binary(binary, filter) == 0;
    o.detail << label << (ok ? " ok; " : " FAILED; ");
    o.check(ok, label);
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known_failures;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) == "--known-failure") known_failures.insert(std::atoi(argv[i + 1]));
  }

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"cutting-set portfolio and volatility controls", reference_controls},
      {"tie case lies on the optimal face", tie_case},
      {"unconstrained case value 1", unconstrained_case},
      {"cycle mechanism", cycle_mechanism},
      {"weak duality on 100 portfolios", weak_duality},
      {"trajectory T=50 stays at the goal", trajectory_50},
      {"trajectory T=10 control is nonzero", trajectory_10},
      {"cutting-set iterations are cheaper", timing},
      {"property suites", property_suites}};

  int unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    Outcome o;
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const bool known = known_failures.count(id) > 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[k].first << ": " << o.detail.str()
              << (known && !o.pass ? " (known failure)" : "") << std::endl;
    if (!o.pass && !known) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
