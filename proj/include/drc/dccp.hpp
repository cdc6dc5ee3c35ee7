#pragma once

#include "drc/convex.hpp"
#include "drc/problem.hpp"

#include <cstdint>
#include <vector>

namespace drc {

/// convex(w) - concave(w). Both parts are convex functions; the concave
/// slot holds the term being subtracted.
struct DcFunction {
  ConvexFunction convex;
  ConvexFunction concave;

  double value(const Vector& w) const { return convex.value(w) - concave.value(w); }
  bool is_convex() const { return concave.is_affine(); }
  void resize(Index n_vars);
  DcFunction& operator+=(const DcFunction& other);
};

struct DcConstraint {
  DcFunction f;
  double rhs = 0.0;  // f(w) <= rhs
};

/// minimize objective(w) subject to DC constraints, linear rows and a finite box.
struct DcProgram {
  DcProgram() = default;
  explicit DcProgram(Index n);

  Index n_vars = 0;
  DcFunction objective;
  std::vector<DcConstraint> constraints;
  Matrix eq_A;
  Vector eq_b;
  Vector lower;
  Vector upper;
};

void validate_dc_program(const DcProgram& prog);

enum class Sense { Minimize, Maximize };
enum class FixedArgument { U, X };

/// Minimization-form DC split of scale * l(u, x) (negated for Maximize) over
/// the free argument, which occupies variables [offset, offset + dim).
DcFunction dc_split(const LossForm& loss, FixedArgument fixed, const Vector& fixed_value,
                    Sense sense, Index n_vars, Index offset = 0, double scale = 1.0);

/// scale * g(q' w[offset : offset + dim(q)]) split into convex minus convex.
DcFunction dc_split_g(const GFun& g, const Vector& q, double scale, Index n_vars,
                      Index offset = 0);

/// Standalone form: the loss over the free argument boxed by `box`.
DcProgram dc_split(const LossForm& loss, FixedArgument fixed, const Vector& fixed_value,
                   Sense sense, const BoxSet& box);

/// Linearize every concave part at `anchor`.
ConvexFunction linearize(const DcFunction& f, const Vector& anchor);
ConvexProgram convexify(const DcProgram& prog, const Vector& anchor);

struct DccpParams {
  int max_iters = 100;
  double stall_tol = 1e-7;
  double tau0 = 0.5;
  double tau_growth = 2.0;
  double tau_max = 1e4;
  double inner_tol = 1e-9;
  double slack_tol = 1e-6;
};

struct DccpStep {
  double surrogate = 0.0;  // penalized subproblem optimum
  /// Previous iterate scored by this iteration's penalty weight. The
  /// surrogate never exceeds it.
  double previous = 0.0;
  double objective = 0.0;  // true DC objective at the new iterate
  double max_slack = 0.0;
  double tau = 0.0;
};

struct DccpResult : ConvexSolution {
  std::vector<DccpStep> trace;
  double max_slack = 0.0;
  int restarts = 1;
};

DccpResult solve_dccp(const DcProgram& prog, const Vector& init, const DccpParams& params = {});

/// `restarts` runs: the first from `init`, the rest from seeded uniform
/// points in the box. Lowest objective among runs that end without slack
/// residual wins.
DccpResult solve_dccp(const DcProgram& prog, const Vector& init, const DccpParams& params,
                      int restarts, std::uint64_t seed);

}  // namespace drc
