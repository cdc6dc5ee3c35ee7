#include "drc/best_response.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace drc {

Vector DiscreteDistribution::flatten() const {
  if (points.empty()) return Vector(0);
  const Index d = points.front().size();
  Vector w(d * size());
  for (Index k = 0; k < size(); ++k) w.segment(k * d, d) = points[static_cast<std::size_t>(k)];
  return w;
}

DiscreteDistribution DiscreteDistribution::unflatten(const Vector& w, Index dim) {
  require(dim > 0 && w.size() % dim == 0, ErrorCode::DimensionMismatch,
          "flattened distribution length is not a multiple of dim");
  DiscreteDistribution out;
  for (Index k = 0; k < w.size() / dim; ++k) out.points.push_back(w.segment(k * dim, dim));
  return out;
}

DiscreteDistribution uniform_distribution(const SupportSet& support, int n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DiscreteDistribution out;
  out.points.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vector x(support.size());
    for (Index j = 0; j < x.size(); ++j)
      x[j] = support.lower[j] + unit(rng) * (support.upper[j] - support.lower[j]);
    out.points.push_back(std::move(x));
  }
  return out;
}

void validate_distribution(const DiscreteDistribution& dist, const SupportSet& support, double tol) {
  require(dist.size() >= 1, ErrorCode::InvalidArgument, "distribution needs at least one point");
  for (const auto& x : dist.points) {
    require(x.size() == support.size(), ErrorCode::DimensionMismatch, "sample has wrong dimension");
    require(support.contains(x, tol), ErrorCode::InvalidArgument, "sample lies outside the support");
  }
}

double sample_average_loss(const ProblemSpec& spec, const Vector& u, const DiscreteDistribution& dist) {
  double total = 0.0;
  for (const auto& x : dist.points) total += evaluate_loss(spec.loss, u, x);
  return total / static_cast<double>(dist.size());
}

Vector averaged_constraints(const ProblemSpec& spec, const DiscreteDistribution& dist) {
  const ProblemSpec expanded = expand_two_sided(spec);
  Vector out = Vector::Zero(static_cast<Index>(expanded.constraints.size()));
  for (std::size_t i = 0; i < expanded.constraints.size(); ++i) {
    for (const auto& x : dist.points) out[static_cast<Index>(i)] += upper_bound_function(expanded.constraints[i], x);
    out[static_cast<Index>(i)] /= static_cast<double>(dist.size());
  }
  return out;
}

void add_input_set(ConvexProgram& prog, const InputSet& set, Index offset) {
  for (const auto& [start, block] : input_blocks(set)) {
    if (const auto* box = std::get_if<BoxSet>(&block)) {
      for (Index j = 0; j < box->size(); ++j) prog.set_bounds(offset + start + j, box->lower[j], box->upper[j]);
    } else {
      prog.add_simplex(offset + start, std::get<SimplexSet>(block).dim);
    }
  }
}

Vector min_step(const ValidatedProblem& problem, const DiscreteDistribution& dist) {
  const ProblemSpec& spec = problem.spec();
  validate_distribution(dist, spec.support);
  const Index m = spec.dim_u;
  const double inv_n = 1.0 / static_cast<double>(dist.size());

  ConvexProgram prog(m);
  for (const auto& x : dist.points) {
    const DcFunction f = dc_split(spec.loss, FixedArgument::X, x, Sense::Minimize, m, 0, inv_n);
    prog.objective.linear += f.convex.linear;
    prog.objective.constant += f.convex.constant;
    prog.objective.terms.insert(prog.objective.terms.end(), f.convex.terms.begin(), f.convex.terms.end());
  }
  add_input_set(prog, spec.input_set);

  ConvexOptions options;
  options.tol = 1e-9;
  const ConvexSolution sol = solve_convex(prog, options);
  require(sol.status != ConvexStatus::Infeasible, ErrorCode::Infeasible, "input set is empty");
  return sol.w_star;
}

namespace {

/// The sample-placement program over n * dim_x variables.
DcProgram placement_program(const ProblemSpec& spec, const Vector& u, int n) {
  const Index d = spec.dim_x;
  const Index N = d * n;
  const double inv_n = 1.0 / n;
  DcProgram prog(N);
  for (int k = 0; k < n; ++k) {
    prog.objective += dc_split(spec.loss, FixedArgument::U, u, Sense::Maximize, N, k * d, inv_n);
    prog.lower.segment(k * d, d) = spec.support.lower;
    prog.upper.segment(k * d, d) = spec.support.upper;
  }

  for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
    const auto& c = spec.constraints[i];
    const auto* ts = std::get_if<TwoSided>(&c.kind);
    if (ts && ts->radius == 0.0 && is_affine(c.g)) {
      // mean pinned exactly: an equality has no interior to expand into
      Vector row = Vector::Zero(N);
      for (int k = 0; k < n; ++k) row.segment(k * d, d) = inv_n * c.q;
      prog.eq_A.conservativeResize(prog.eq_A.rows() + 1, N);
      prog.eq_A.row(prog.eq_A.rows() - 1) = row.transpose();
      prog.eq_b.conservativeResize(prog.eq_b.size() + 1);
      prog.eq_b[prog.eq_b.size() - 1] = ts->center;
      continue;
    }
    ProblemSpec single;
    single.constraints = {c};
    for (const auto& e : expand_two_sided(single).constraints) {
      const auto& ub = std::get<UpperBound>(e.kind);
      DcConstraint dc;
      dc.f.resize(N);
      const double sign = ub.negated ? -1.0 : 1.0;
      for (int k = 0; k < n; ++k) dc.f += dc_split_g(e.g, e.q, sign * inv_n, N, k * d);
      dc.rhs = ub.level;
      prog.constraints.push_back(std::move(dc));
    }
  }
  return prog;
}

bool dc_convex(const DcProgram& prog) {
  if (!prog.objective.is_convex()) return false;
  for (const auto& c : prog.constraints)
    if (!c.f.is_convex()) return false;
  return true;
}

}  // namespace

MaxStepResult max_step(const ValidatedProblem& problem, const Vector& u, int n,
                       const DiscreteDistribution& init, const DccpParams& params) {
  const ProblemSpec& spec = problem.spec();
  require_solver_supported(spec);
  require(u.size() == spec.dim_u, ErrorCode::DimensionMismatch, "u has wrong length");
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one sample");
  require(init.size() == n, ErrorCode::DimensionMismatch, "init must hold n points");
  validate_distribution(init, spec.support);

  const DcProgram prog = placement_program(spec, u, n);
  const Vector start = init.flatten();
  MaxStepResult out;
  Vector w;
  if (dc_convex(prog)) {
    ConvexOptions options;
    options.tol = 1e-9;
    const ConvexSolution sol = solve_convex(convexify(prog, start), options);
    if (sol.status == ConvexStatus::Infeasible)
      throw Error(ErrorCode::InfeasibleSamplePlacement,
                  "no placement of " + std::to_string(n) + " points meets the averaged constraints");
    w = sol.w_star;
    out.certified = true;
  } else {
    try {
      w = solve_dccp(prog, start, params).w_star;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SlackResidual && e.code() != ErrorCode::Infeasible) throw;
      throw Error(ErrorCode::InfeasibleSamplePlacement,
                  "no placement of " + std::to_string(n) + " points found: " + e.what());
    }
  }
  out.dist = DiscreteDistribution::unflatten(w, spec.dim_x);
  for (auto& x : out.dist.points) x = spec.support.clamp(x);
  out.objective = sample_average_loss(spec, u, out.dist);
  return out;
}

CycleInfo detect_cycle(const std::vector<Vector>& history, double tol) {
  const std::size_t len = history.size();
  for (std::size_t p = 1; 2 * p <= len; ++p) {
    bool repeats = true;
    for (std::size_t i = 0; i < p && repeats; ++i) {
      const Vector& a = history[len - 2 * p + i];
      const Vector& b = history[len - p + i];
      repeats = a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() <= tol;
    }
    if (repeats) return {static_cast<int>(p)};
  }
  return {};
}

SolveReport run_best_response(const ValidatedProblem& problem, const DiscreteDistribution& init,
                              const BestResponseParams& params, const BestResponseSteps& steps) {
  require(params.max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
  require(params.u_tol > 0.0 && params.cycle_tol > 0.0, ErrorCode::InvalidArgument,
          "tolerances must be positive");
  validate_distribution(init, problem.spec().support);

  SolveReport report;
  report.method = Method::BestResponse;
  report.seed = params.seed;
  report.certified = true;

  const auto start = std::chrono::steady_clock::now();
  DiscreteDistribution dist = init;
  for (int k = 1; k <= params.max_iters; ++k) {
    const Vector u = steps.min(dist);
    MaxStepResult worst = steps.max(u, dist);
    report.certified = report.certified && worst.certified;
    dist = std::move(worst.dist);

    const double step = report.u_history.empty()
                            ? std::numeric_limits<double>::infinity()
                            : (u - report.u_history.back()).cwiseAbs().maxCoeff();
    report.history.push_back({k, worst.objective, step});
    report.u_history.push_back(u);
    report.u_star = u;
    report.value = worst.objective;
    report.iterations = k;

    if (step <= params.u_tol) {
      report.status = SolveStatus::Converged;
      break;
    }
    const CycleInfo cycle = detect_cycle(report.u_history, params.cycle_tol);
    if (cycle.period && *cycle.period >= 2) {
      report.status = SolveStatus::Cycling;
      report.cycle_period = cycle.period;
      report.cycle_controls.assign(report.u_history.end() - *cycle.period, report.u_history.end());
      break;
    }
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.per_iteration_seconds = elapsed.count() / report.iterations;
  report.points = dist.points;
  return report;
}

SolveReport run_best_response(const ValidatedProblem& problem, const DiscreteDistribution& init,
                              const BestResponseParams& params) {
  require_solver_supported(problem.spec());
  const int n = static_cast<int>(init.size());
  BestResponseSteps steps;
  steps.min = [&problem](const DiscreteDistribution& d) { return min_step(problem, d); };
  steps.max = [&problem, n](const Vector& u, const DiscreteDistribution& d) {
    return max_step(problem, u, n, d);
  };
  return run_best_response(problem, init, params, steps);
}

}  // namespace drc
