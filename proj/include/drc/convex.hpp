#pragma once

#include "drc/core.hpp"

#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace drc {

/// Default smoothing for norm terms.
inline constexpr double kNormSmoothing = 1e-8;

// ---------------------------------------------------------------------------
// Convex terms. Each term reads only the variables listed in `vars`.
// ---------------------------------------------------------------------------

/// w_S' Q w_S with Q symmetric PSD.
struct QuadraticTerm {
  std::vector<Index> vars;
  Matrix Q;
};

/// sqrt(||M w_S + v||^2 + delta^2), a smooth upper bound on the norm.
struct SmoothedNormTerm {
  std::vector<Index> vars;
  Matrix M;
  Vector v;
  double delta = kNormSmoothing;
};

/// weight * phi(a' w_S + offset), phi(z) = z^p for even p, max(z, 0)^p when
/// `positive_part` is set. Requires p >= 2 and weight >= 0.
struct RidgePowerTerm {
  std::vector<Index> vars;
  Vector a;
  double offset = 0.0;
  int exponent = 2;
  bool positive_part = false;
  double weight = 1.0;
};

using ConvexTerm = std::variant<QuadraticTerm, SmoothedNormTerm, RidgePowerTerm>;

/// linear'w + constant + sum of convex terms.
struct ConvexFunction {
  Vector linear;  // empty means zero
  double constant = 0.0;
  std::vector<ConvexTerm> terms;

  double value(const Vector& w) const;
  /// g += scale * grad f(w)
  void add_gradient(const Vector& w, double scale, Eigen::Ref<Vector> g) const;
  /// H += scale * hess f(w)
  void add_hessian(const Vector& w, double scale, Eigen::Ref<Matrix> H) const;
  Vector gradient(const Vector& w) const;

  bool is_affine() const { return terms.empty(); }
  void add_linear(Index n_vars, Index var, double coef);
  /// Grow the linear part to n_vars (new coefficients are zero).
  void resize(Index n_vars);
};

struct ConvexConstraint {
  ConvexFunction f;
  double rhs = 0.0;  // f(w) <= rhs
};

struct IndexRange {
  Index start = 0;
  Index size = 0;
};

struct ConvexProgram {
  ConvexProgram() = default;
  explicit ConvexProgram(Index n);

  Index n_vars = 0;
  ConvexFunction objective;
  Matrix eq_A;  // eq_A w == eq_b
  Vector eq_b;
  Matrix ineq_A;  // ineq_A w <= ineq_b
  Vector ineq_b;
  std::vector<ConvexConstraint> nonlinear;
  Vector lower;  // +-infinity entries allowed
  Vector upper;
  std::vector<IndexRange> simplex_blocks;

  void add_equality(const Vector& row, double rhs);
  void add_inequality(const Vector& row, double rhs);
  void set_bounds(Index var, double lo, double hi);
  void add_simplex(Index start, Index size);
};

/// Checks dimensions, smoothing and PSD-ness. Throws Error.
void validate_program(const ConvexProgram& prog);

enum class ConvexStatus { Optimal, Infeasible, MaxIters };

const char* to_string(ConvexStatus status);

struct ConvexSolution {
  Vector w_star;
  double value = std::numeric_limits<double>::quiet_NaN();
  ConvexStatus status = ConvexStatus::MaxIters;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;  // Newton steps, phase I included
  /// Objective after each outer barrier iteration.
  std::vector<double> barrier_trace;
};

struct ConvexOptions {
  double tol = 1e-8;
  double barrier_growth = 50.0;
  int max_newton = 200;  // per centering step
  double t_initial = 1.0;
  double t_max = 1e15;
};

/// Log-barrier interior-point solver with damped Newton steps. Holds its
/// workspaces; run one solve per instance at a time.
class BarrierSolver {
 public:
  explicit BarrierSolver(ConvexOptions options = {}) : options_(options) {}

  ConvexSolution solve(const ConvexProgram& prog, const std::optional<Vector>& start = {});
  Vector interior_point(const ConvexProgram& prog, const std::optional<Vector>& start = {});

  const ConvexOptions& options() const { return options_; }

 private:
  ConvexOptions options_;
  Matrix hessian_;
  Vector gradient_;
};

/// Point strictly inside all inequalities (slack >= 1e-8) and on the
/// equalities (to 1e-10). Throws Error(Infeasible).
Vector find_interior_point(const ConvexProgram& prog);

ConvexSolution solve_convex(const ConvexProgram& prog, double tol = 1e-8);
ConvexSolution solve_convex(const ConvexProgram& prog, const ConvexOptions& options,
                            const std::optional<Vector>& start = {});

struct KktReport {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  Vector multipliers;  // inequality multipliers: rows, lower, upper, nonlinear
  double max() const { return std::max({stationarity, primal, complementarity}); }
};

/// KKT residuals at w with multipliers recovered by nonnegative least squares
/// over the constraints whose slack is at most `active_tol`.
KktReport check_kkt(const ConvexProgram& prog, const Vector& w, double active_tol = 1e-6);

}  // namespace drc
