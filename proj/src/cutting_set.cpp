#include "drc/cutting_set.hpp"

#include "drc/best_response.hpp"

#include <chrono>
#include <map>
#include <random>

namespace drc {

DualLayout alpha_beta_transform(const ProblemSpec& expanded) {
  DualLayout layout;
  struct Seen {
    const ProjectionConstraint* upper = nullptr;
    const ProjectionConstraint* lower = nullptr;
  };
  std::map<std::size_t, Seen> groups;
  std::vector<std::size_t> order;
  for (const auto& c : expanded.constraints) {
    const auto* ub = std::get_if<UpperBound>(&c.kind);
    require(ub != nullptr, ErrorCode::InvalidArgument, "problem has unexpanded two-sided constraints");
    if (!ub->origin) {
      layout.singles.push_back({c.q, c.g, ub->level, ub->negated});
      continue;
    }
    auto [it, inserted] = groups.try_emplace(ub->origin->pair);
    if (inserted) order.push_back(ub->origin->pair);
    (ub->negated ? it->second.lower : it->second.upper) = &c;
  }
  for (std::size_t key : order) {
    const Seen& s = groups[key];
    require(s.upper && s.lower, ErrorCode::MissingPairing,
            "two-sided constraint " + std::to_string(key) + " lost one of its bounds");
    const auto& origin = *std::get<UpperBound>(s.upper->kind).origin;
    layout.pairs.push_back({s.upper->q, s.upper->g, origin.center, origin.radius});
  }
  return layout;
}

std::pair<double, double> lambda_to_alpha_beta(double l1, double l2) { return {l1 + l2, l1 - l2}; }

std::pair<double, double> alpha_beta_to_lambda(double alpha, double beta) {
  return {0.5 * (alpha + beta), 0.5 * (alpha - beta)};
}

double cut_function(const ProblemSpec& expanded, const Vector& lambda, const Vector& u,
                    const Vector& x, double t) {
  require(lambda.size() == static_cast<Index>(expanded.constraints.size()), ErrorCode::DimensionMismatch,
          "one multiplier per expanded constraint");
  double out = evaluate_loss(expanded.loss, u, x) - t;
  for (std::size_t j = 0; j < expanded.constraints.size(); ++j)
    out -= lambda[static_cast<Index>(j)] * upper_bound_function(expanded.constraints[j], x);
  return out;
}

double cut_function(const LossForm& loss, const DualLayout& layout, const MasterDuals& duals,
                    const Vector& u, const Vector& x, double t) {
  double out = evaluate_loss(loss, u, x) - t;
  for (std::size_t i = 0; i < layout.pairs.size(); ++i) {
    const auto& p = layout.pairs[i];
    const Index k = static_cast<Index>(i);
    out += -duals.beta[k] * (evaluate_g(p.g, p.q.dot(x)) - p.center) + duals.alpha[k] * p.radius;
  }
  for (std::size_t j = 0; j < layout.singles.size(); ++j) {
    const auto& s = layout.singles[j];
    const double gz = evaluate_g(s.g, s.q.dot(x));
    out -= duals.lambda[static_cast<Index>(j)] * ((s.negated ? -gz : gz) - s.level);
  }
  return out;
}

MasterProgram build_master(const ValidatedProblem& problem, const std::vector<Vector>& cuts,
                           double dual_cap) {
  const ProblemSpec& spec = problem.spec();
  require_solver_supported(spec);
  require(!cuts.empty(), ErrorCode::EmptyCutSet, "master needs at least one cut point");
  require(dual_cap > 0.0, ErrorCode::InvalidArgument, "dual cap must be positive");

  MasterProgram out;
  out.layout = alpha_beta_transform(expand_two_sided(spec));
  const Index np = static_cast<Index>(out.layout.pairs.size());
  const Index ns = static_cast<Index>(out.layout.singles.size());
  out.alpha_offset = spec.dim_u;
  out.beta_offset = out.alpha_offset + np;
  out.lambda_offset = out.beta_offset + np;
  out.t_index = out.lambda_offset + ns;
  const Index n = out.t_index + 1;

  ConvexProgram& prog = out.prog;
  prog = ConvexProgram(n);
  prog.objective.linear[out.t_index] = 1.0;
  add_input_set(prog, spec.input_set);
  for (Index i = 0; i < np; ++i) {
    const Index a = out.alpha_offset + i, b = out.beta_offset + i;
    prog.set_bounds(a, 0.0, dual_cap);
    prog.set_bounds(b, -dual_cap, dual_cap);
    // alpha >= |beta|: both lambda^(1) and lambda^(2) stay nonnegative
    Vector row = Vector::Zero(n);
    row[a] = -1.0;
    row[b] = 1.0;
    prog.add_inequality(row, 0.0);
    row[b] = -1.0;
    prog.add_inequality(row, 0.0);
  }
  for (Index j = 0; j < ns; ++j) prog.set_bounds(out.lambda_offset + j, 0.0, dual_cap);

  for (const auto& x : cuts) {
    require(x.size() == spec.dim_x, ErrorCode::DimensionMismatch, "cut point has wrong dimension");
    require(spec.support.contains(x, 1e-9), ErrorCode::InvalidArgument, "cut point outside the support");
    // everything except l(u, x) is affine in the master variables
    Vector row = Vector::Zero(n);
    for (Index i = 0; i < np; ++i) {
      const auto& p = out.layout.pairs[static_cast<std::size_t>(i)];
      row[out.alpha_offset + i] = p.radius;
      row[out.beta_offset + i] = -(evaluate_g(p.g, p.q.dot(x)) - p.center);
    }
    for (Index j = 0; j < ns; ++j) {
      const auto& s = out.layout.singles[static_cast<std::size_t>(j)];
      const double gz = evaluate_g(s.g, s.q.dot(x));
      row[out.lambda_offset + j] = -((s.negated ? -gz : gz) - s.level);
    }
    row[out.t_index] = -1.0;

    const DcFunction loss = dc_split(spec.loss, FixedArgument::X, x, Sense::Minimize, n);
    ConvexConstraint c;
    c.f = loss.convex;
    c.f.linear += row;
    if (c.f.is_affine()) {
      prog.add_inequality(c.f.linear, -c.f.constant);
    } else {
      c.rhs = -c.f.constant;
      c.f.constant = 0.0;
      prog.nonlinear.push_back(std::move(c));
    }
  }
  return out;
}

MasterState solve_master(const ValidatedProblem& problem, const std::vector<Vector>& cuts, double dual_cap) {
  const MasterProgram master = build_master(problem, cuts, dual_cap);
  const Index np = static_cast<Index>(master.layout.pairs.size());
  const Index ns = static_cast<Index>(master.layout.singles.size());

  // Strictly feasible by construction, so phase I is skipped: unit duals sit
  // inside [0, cap] with alpha > |beta| = 0, and t clears every cut.
  MasterDuals unit{Vector::Ones(np), Vector::Zero(np), Vector::Ones(ns)};
  const Vector u0 = input_center(problem.spec().input_set);
  double t0 = -std::numeric_limits<double>::infinity();
  for (const auto& x : cuts) t0 = std::max(t0, cut_function(problem.spec().loss, master.layout, unit, u0, x, 0.0));
  Vector start(master.prog.n_vars);
  start << u0, unit.alpha, unit.beta, unit.lambda, t0 + 1.0 + std::abs(t0);

  ConvexOptions options;
  options.tol = 1e-10;
  const ConvexSolution sol = dual_cap > 1.0 ? solve_convex(master.prog, options, start)
                                            : solve_convex(master.prog, options);
  require(sol.status != ConvexStatus::Infeasible, ErrorCode::Infeasible, "master problem is infeasible");
  require(std::isfinite(sol.value), ErrorCode::MaxIters, "master solve produced no iterate");

  MasterState state;
  state.cut_points = cuts;
  state.u = sol.w_star.head(problem.dim_u());
  state.duals.alpha = sol.w_star.segment(master.alpha_offset, np);
  state.duals.beta = sol.w_star.segment(master.beta_offset, np);
  state.duals.lambda = sol.w_star.segment(master.lambda_offset, ns);
  state.t = sol.w_star[master.t_index];
  state.master_value = state.t;
  return state;
}

CutReport pessimize(const ValidatedProblem& problem, const Vector& u, const MasterDuals& duals, double t,
                    const PessimizeOptions& options) {
  const ProblemSpec& spec = problem.spec();
  require_solver_supported(spec);
  require(u.size() == spec.dim_u, ErrorCode::DimensionMismatch, "u has wrong length");
  const DualLayout layout = alpha_beta_transform(expand_two_sided(spec));
  require(duals.alpha.size() == static_cast<Index>(layout.pairs.size()) &&
              duals.beta.size() == duals.alpha.size() &&
              duals.lambda.size() == static_cast<Index>(layout.singles.size()),
          ErrorCode::DimensionMismatch, "dual vector sizes do not match the constraints");

  // minimize the negated cut function over the support box
  const Index d = spec.dim_x;
  DcProgram prog(d);
  prog.lower = spec.support.lower;
  prog.upper = spec.support.upper;
  prog.objective = dc_split(spec.loss, FixedArgument::U, u, Sense::Maximize, d);
  double constant = t;
  for (std::size_t i = 0; i < layout.pairs.size(); ++i) {
    const auto& p = layout.pairs[i];
    const Index k = static_cast<Index>(i);
    prog.objective += dc_split_g(p.g, p.q, duals.beta[k], d);
    constant -= duals.beta[k] * p.center + duals.alpha[k] * p.radius;
  }
  for (std::size_t j = 0; j < layout.singles.size(); ++j) {
    const auto& s = layout.singles[j];
    const double lam = duals.lambda[static_cast<Index>(j)];
    prog.objective += dc_split_g(s.g, s.q, s.negated ? -lam : lam, d);
    constant -= lam * s.level;
  }
  prog.objective.convex.constant += constant;

  CutReport out;
  Vector x;
  const Vector center = 0.5 * (spec.support.lower + spec.support.upper);
  if (prog.objective.is_convex()) {
    ConvexOptions inner;
    inner.tol = 1e-10;
    const ConvexSolution sol = solve_convex(convexify(prog, center), inner);
    require(sol.status != ConvexStatus::Infeasible, ErrorCode::Infeasible, "support box is empty");
    x = sol.w_star;
    out.certified = true;
  } else {
    const Vector start = options.hint ? spec.support.clamp(*options.hint) : center;
    x = solve_dccp(prog, start, options.dccp, options.restarts, options.seed).w_star;
  }
  out.x_star = spec.support.clamp(x);
  out.violation = cut_function(spec.loss, layout, duals, u, out.x_star, t);
  return out;
}

SolveReport run_cutting_set(const ValidatedProblem& problem, const std::vector<Vector>& init_cuts,
                            const CuttingSetParams& params) {
  require(params.feas_tol > 0.0, ErrorCode::InvalidArgument, "feas_tol must be positive");
  require(params.max_cuts >= 1 && params.dccp_restarts >= 1, ErrorCode::InvalidArgument,
          "budgets must be at least 1");
  require_solver_supported(problem.spec());
  require(!init_cuts.empty(), ErrorCode::EmptyCutSet, "initial cut set is empty");
  const LossForm& loss = problem.spec().loss;

  SolveReport report;
  report.method = Method::CuttingSet;
  report.seed = params.seed;
  report.certified = true;

  std::vector<Vector> cuts = init_cuts;
  const auto start = std::chrono::steady_clock::now();
  for (int k = 1; k <= params.max_cuts; ++k) {
    const MasterState master = solve_master(problem, cuts, params.dual_cap);

    PessimizeOptions opts;
    opts.restarts = params.dccp_restarts;
    opts.seed = params.seed + static_cast<std::uint64_t>(k);
    // start from the cut that binds hardest in the current master
    const DualLayout layout = alpha_beta_transform(expand_two_sided(problem.spec()));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& x : cuts) {
      const double v = cut_function(loss, layout, master.duals, master.u, x, master.t);
      if (v > best) {
        best = v;
        opts.hint = x;
      }
    }
    const CutReport cut = pessimize(problem, master.u, master.duals, master.t, opts);
    report.certified = report.certified && cut.certified;

    report.history.push_back({k, master.t, cut.violation});
    report.u_history.push_back(master.u);
    report.u_star = master.u;
    report.value = master.t;
    report.iterations = k;
    report.final_violation = cut.violation;
    report.duals.resize(master.duals.alpha.size() + master.duals.beta.size() + master.duals.lambda.size());
    report.duals << master.duals.alpha, master.duals.beta, master.duals.lambda;

    if (cut.violation <= params.feas_tol) {
      // a multiplier pinned at the cap means the dual is unbounded, i.e. no
      // distribution meets the moment constraints
      const bool saturated = report.duals.size() > 0 && report.duals.cwiseAbs().maxCoeff() >= 0.999 * params.dual_cap;
      report.status = saturated ? SolveStatus::Infeasible : SolveStatus::Converged;
      break;
    }
    cuts.push_back(cut.x_star);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.per_iteration_seconds = elapsed.count() / report.iterations;
  report.points = std::move(cuts);
  return report;
}

double worst_case_value(const ValidatedProblem& problem, const Vector& u, const CuttingSetParams& params,
                        int n_init) {
  require(u.size() == problem.dim_u(), ErrorCode::DimensionMismatch, "u has wrong length");
  ProblemSpec fixed = problem.spec();
  fixed.input_set = BoxSet{u, u};
  const ValidatedProblem p = validate_problem(std::move(fixed));
  const auto init = uniform_distribution(p.spec().support, n_init, params.seed);
  const SolveReport r = run_cutting_set(p, init.points, params);
  require(r.status == SolveStatus::Converged, ErrorCode::MaxIters, "worst-case evaluation did not converge");
  return r.value;
}

}  // namespace drc
