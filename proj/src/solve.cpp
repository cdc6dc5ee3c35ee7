#include "drc/solve.hpp"

#include "drc/best_response.hpp"
#include "drc/cutting_set.hpp"

namespace drc {

SolveReport solve(const ValidatedProblem& problem, const RunConfig& config) {
  validate_config(config);
  const DiscreteDistribution init = uniform_distribution(problem.spec().support, config.n_samples, config.seed);
  SolveReport report;
  if (config.method == Method::BestResponse) {
    BestResponseParams params;
    params.max_iters = config.max_iters;
    params.u_tol = config.u_tol;
    params.cycle_tol = config.cycle_tol;
    params.seed = config.seed;
    report = run_best_response(problem, init, params);
  } else {
    CuttingSetParams params;
    params.feas_tol = config.feas_tol;
    params.max_cuts = config.max_cuts;
    params.dccp_restarts = config.dccp_restarts;
    params.seed = config.seed;
    report = run_cutting_set(problem, init.points, params);
  }
  report.params = config;
  return report;
}

}  // namespace drc
