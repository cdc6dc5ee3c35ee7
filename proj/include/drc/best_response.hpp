#pragma once

#include "drc/dccp.hpp"
#include "drc/problem.hpp"
#include "drc/report.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace drc {

/// n equiprobable atoms.
struct DiscreteDistribution {
  std::vector<Vector> points;

  Index size() const { return static_cast<Index>(points.size()); }
  Vector flatten() const;
  static DiscreteDistribution unflatten(const Vector& w, Index dim);
};

/// n points uniform in the support box.
DiscreteDistribution uniform_distribution(const SupportSet& support, int n, std::uint64_t seed);

void validate_distribution(const DiscreteDistribution& dist, const SupportSet& support,
                           double tol = 1e-9);

double sample_average_loss(const ProblemSpec& spec, const Vector& u, const DiscreteDistribution& dist);

/// Averaged sign * g(q'x) - level of every expanded constraint.
Vector averaged_constraints(const ProblemSpec& spec, const DiscreteDistribution& dist);

/// Minimizes the sample-average loss over the input set.
Vector min_step(const ValidatedProblem& problem, const DiscreteDistribution& dist);

struct MaxStepResult {
  DiscreteDistribution dist;
  double objective = 0.0;
  bool certified = false;  // solved as a convex program
};

/// Places n atoms in the support to maximize the sample-average loss under
/// the averaged projection constraints. `init` seeds the DCCP path.
MaxStepResult max_step(const ValidatedProblem& problem, const Vector& u, int n,
                       const DiscreteDistribution& init, const DccpParams& params = {});

struct CycleInfo {
  std::optional<int> period;
};

/// Smallest p <= len/2 with history[L-2p+i] ~ history[L-p+i] (inf-norm <= tol).
CycleInfo detect_cycle(const std::vector<Vector>& history, double tol);

struct BestResponseParams {
  int max_iters = 100;
  double u_tol = 1e-5;
  double cycle_tol = 1e-4;
  std::uint64_t seed = 0;  // echoed into the report
};

struct BestResponseSteps {
  std::function<Vector(const DiscreteDistribution&)> min;
  std::function<MaxStepResult(const Vector&, const DiscreteDistribution&)> max;
};

SolveReport run_best_response(const ValidatedProblem& problem, const DiscreteDistribution& init,
                              const BestResponseParams& params = {});

/// Same loop with caller-supplied steps.
SolveReport run_best_response(const ValidatedProblem& problem, const DiscreteDistribution& init,
                              const BestResponseParams& params, const BestResponseSteps& steps);

/// Input set as constraints of a ConvexProgram over variables [offset, offset + dim_u).
void add_input_set(ConvexProgram& prog, const InputSet& set, Index offset = 0);

}  // namespace drc
