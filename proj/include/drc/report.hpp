#pragma once

#include "drc/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drc {

enum class Method { BestResponse, CuttingSet };
enum class SolveStatus { Converged, Cycling, MaxIters, Infeasible };

const char* to_string(Method m);
const char* to_string(SolveStatus s);

/// One main-loop iteration. `measure` is the step ||u_k - u_{k-1}||_inf for
/// best response and the cut violation for the cutting-set method.
struct HistoryRow {
  int iteration = 0;
  double objective = 0.0;
  double measure = 0.0;
  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct RunConfig {
  Method method = Method::CuttingSet;
  std::uint64_t seed = 0;
  double feas_tol = 1e-6;
  double u_tol = 1e-5;
  double cycle_tol = 1e-4;
  int max_cuts = 200;
  int max_iters = 100;
  int n_samples = 50;
  int dccp_restarts = 8;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void validate_config(const RunConfig& config);

struct SolveReport {
  Method method = Method::CuttingSet;
  SolveStatus status = SolveStatus::MaxIters;
  std::optional<int> cycle_period;
  std::vector<Vector> cycle_controls;  // one full period, oldest first
  Vector u_star;
  double value = 0.0;
  bool certified = false;
  int iterations = 0;
  double per_iteration_seconds = 0.0;
  std::vector<HistoryRow> history;
  std::uint64_t seed = 0;
  RunConfig params;

  // Not part of the machine report.
  std::vector<Vector> u_history;
  std::vector<Vector> points;          // final distribution or cut set
  Vector duals;                        // lambda, or (alpha, beta, lambda) blocks
  double final_violation = 0.0;
};

}  // namespace drc
