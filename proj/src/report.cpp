#include "drc/report.hpp"

namespace drc {

const char* to_string(Method m) {
  switch (m) {
    case Method::BestResponse: return "best_response";
    case Method::CuttingSet: return "cutting_set";
  }
  return "unknown";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::Cycling: return "Cycling";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

void validate_config(const RunConfig& c) {
  require(c.feas_tol > 0.0 && c.u_tol > 0.0 && c.cycle_tol > 0.0, ErrorCode::InvalidArgument,
          "tolerances must be positive");
  require(c.max_cuts >= 1 && c.max_iters >= 1 && c.n_samples >= 1 && c.dccp_restarts >= 1,
          ErrorCode::InvalidArgument, "budgets must be at least 1");
}

}  // namespace drc
