#pragma once

#include "drc/problem.hpp"
#include "drc/report.hpp"

namespace drc {

/// Runs the configured method. Both methods start from `n_samples` points
/// drawn uniformly from the support with `seed`; the config is echoed into
/// the report.
SolveReport solve(const ValidatedProblem& problem, const RunConfig& config);

}  // namespace drc
