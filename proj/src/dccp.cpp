#include "drc/dccp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void append_function(ConvexFunction& dst, const ConvexFunction& src, Index n_vars) {
  dst.resize(n_vars);
  if (src.linear.size() > 0) dst.linear.head(src.linear.size()) += src.linear;
  dst.constant += src.constant;
  dst.terms.insert(dst.terms.end(), src.terms.begin(), src.terms.end());
}

void negate_affine(ConvexFunction& f) {
  f.linear = -f.linear;
  f.constant = -f.constant;
}

std::vector<Index> block_vars(Index offset, Index dim) {
  std::vector<Index> vars(static_cast<std::size_t>(dim));
  for (Index k = 0; k < dim; ++k) vars[static_cast<std::size_t>(k)] = offset + k;
  return vars;
}

}  // namespace

void DcFunction::resize(Index n_vars) {
  convex.resize(n_vars);
  concave.resize(n_vars);
}

DcFunction& DcFunction::operator+=(const DcFunction& other) {
  const Index n = std::max({convex.linear.size(), concave.linear.size(),
                            other.convex.linear.size(), other.concave.linear.size()});
  append_function(convex, other.convex, n);
  append_function(concave, other.concave, n);
  return *this;
}

DcProgram::DcProgram(Index n)
    : n_vars(n), eq_A(0, n), eq_b(0), lower(Vector::Constant(n, -kInf)), upper(Vector::Constant(n, kInf)) {
  objective.resize(n);
}

void validate_dc_program(const DcProgram& prog) {
  const Index n = prog.n_vars;
  require(prog.lower.size() == n && prog.upper.size() == n, ErrorCode::DimensionMismatch,
          "DC program box must have n_vars entries");
  require(prog.lower.allFinite() && prog.upper.allFinite(), ErrorCode::InvalidArgument,
          "DC program box must be finite");
  require((prog.lower.array() <= prog.upper.array()).all(), ErrorCode::InvalidArgument,
          "DC program box has lower > upper");
  require(prog.eq_A.cols() == n && prog.eq_A.rows() == prog.eq_b.size(),
          ErrorCode::DimensionMismatch, "equality rows do not match n_vars");
  auto check = [n](const DcFunction& f) {
    ConvexProgram probe(n);
    probe.objective = f.convex;
    validate_program(probe);
    probe.objective = f.concave;
    validate_program(probe);
  };
  check(prog.objective);
  for (const auto& c : prog.constraints) check(c.f);
}

DcFunction dc_split(const LossForm& loss, FixedArgument fixed, const Vector& fixed_value,
                    Sense sense, Index n_vars, Index offset, double scale) {
  require(scale >= 0.0, ErrorCode::InvalidArgument, "loss scale must be nonnegative");
  DcFunction out;
  out.resize(n_vars);

  if (const auto* bl = std::get_if<Bilinear>(&loss)) {
    Vector coef;
    double constant = 0.0;
    if (fixed == FixedArgument::U) {
      require(fixed_value.size() == bl->A.rows(), ErrorCode::DimensionMismatch, "u has wrong length");
      coef = bl->A.transpose() * fixed_value + bl->c;
      constant = bl->b.dot(fixed_value) + bl->d;
    } else {
      require(fixed_value.size() == bl->A.cols(), ErrorCode::DimensionMismatch, "x has wrong length");
      coef = bl->A * fixed_value + bl->b;
      constant = bl->c.dot(fixed_value) + bl->d;
    }
    require(offset + coef.size() <= n_vars, ErrorCode::IndexOutOfRange, "loss block exceeds n_vars");
    out.convex.linear.segment(offset, coef.size()) = scale * coef;
    out.convex.constant = scale * constant;
    if (sense == Sense::Maximize) negate_affine(out.convex);
    return out;
  }

  const auto* na = std::get_if<NormAffine>(&loss);
  require(na != nullptr, ErrorCode::UnsupportedLoss, "unknown loss form");
  Matrix M;
  Vector v;
  if (fixed == FixedArgument::U) {
    require(fixed_value.size() == na->F.cols(), ErrorCode::DimensionMismatch, "u has wrong length");
    M = scale * na->G;
    v = scale * (na->F * fixed_value + na->h);
  } else {
    require(fixed_value.size() == na->G.cols(), ErrorCode::DimensionMismatch, "x has wrong length");
    M = scale * na->F;
    v = scale * (na->G * fixed_value + na->h);
  }
  require(offset + M.cols() <= n_vars, ErrorCode::IndexOutOfRange, "loss block exceeds n_vars");
  if (M.cols() == 0) {
    // nothing free: the norm is a constant
    out.convex.constant = (sense == Sense::Maximize ? -1.0 : 1.0) * v.norm();
    return out;
  }
  SmoothedNormTerm term{block_vars(offset, M.cols()), std::move(M), std::move(v), kNormSmoothing};
  (sense == Sense::Minimize ? out.convex : out.concave).terms.push_back(std::move(term));
  return out;
}

DcFunction dc_split_g(const GFun& g, const Vector& q, double scale, Index n_vars, Index offset) {
  require(!std::holds_alternative<IndicatorGeq>(g), ErrorCode::UnsupportedGFun,
          "indicator g has no difference-of-convex form");
  require(offset + q.size() <= n_vars, ErrorCode::IndexOutOfRange, "projection block exceeds n_vars");
  DcFunction out;
  out.resize(n_vars);
  if (scale == 0.0) return out;
  if (is_affine(g)) {
    out.convex.linear.segment(offset, q.size()) = scale * q;
    return out;
  }
  const int p = std::get<Power>(g).exponent;
  const auto vars = block_vars(offset, q.size());
  ConvexFunction& pos = scale > 0.0 ? out.convex : out.concave;
  ConvexFunction& neg = scale > 0.0 ? out.concave : out.convex;
  const double w = std::abs(scale);
  if (p % 2 == 0) {
    pos.terms.push_back(RidgePowerTerm{vars, q, 0.0, p, false, w});
  } else {
    // z^p = max(z,0)^p - max(-z,0)^p
    pos.terms.push_back(RidgePowerTerm{vars, q, 0.0, p, true, w});
    neg.terms.push_back(RidgePowerTerm{vars, -q, 0.0, p, true, w});
  }
  return out;
}

DcProgram dc_split(const LossForm& loss, FixedArgument fixed, const Vector& fixed_value,
                   Sense sense, const BoxSet& box) {
  DcProgram prog(box.size());
  prog.objective = dc_split(loss, fixed, fixed_value, sense, box.size());
  prog.lower = box.lower;
  prog.upper = box.upper;
  return prog;
}

ConvexFunction linearize(const DcFunction& f, const Vector& anchor) {
  ConvexFunction out = f.convex;
  out.resize(anchor.size());
  if (f.concave.is_affine()) {
    if (f.concave.linear.size() > 0) out.linear.head(f.concave.linear.size()) -= f.concave.linear;
    out.constant -= f.concave.constant;
    return out;
  }
  const Vector g = f.concave.gradient(anchor);
  out.linear -= g;
  out.constant -= f.concave.value(anchor) - g.dot(anchor);
  return out;
}

namespace {

void add_constraint(ConvexProgram& prog, ConvexFunction f, double rhs) {
  f.resize(prog.n_vars);
  if (f.is_affine()) {
    prog.add_inequality(f.linear, rhs - f.constant);
  } else {
    prog.nonlinear.push_back({std::move(f), rhs});
  }
}

}  // namespace

ConvexProgram convexify(const DcProgram& prog, const Vector& anchor) {
  require(anchor.size() == prog.n_vars, ErrorCode::DimensionMismatch, "anchor has wrong length");
  ConvexProgram out(prog.n_vars);
  out.objective = linearize(prog.objective, anchor);
  out.eq_A = prog.eq_A;
  out.eq_b = prog.eq_b;
  out.lower = prog.lower;
  out.upper = prog.upper;
  for (const auto& c : prog.constraints) add_constraint(out, linearize(c.f, anchor), c.rhs);
  return out;
}

namespace {

double max_violation(const DcProgram& prog, const Vector& w) {
  double worst = 0.0;
  for (const auto& c : prog.constraints) worst = std::max(worst, c.f.value(w) - c.rhs);
  if (prog.eq_A.rows() > 0) worst = std::max(worst, (prog.eq_A * w - prog.eq_b).cwiseAbs().maxCoeff());
  return worst;
}

bool is_dc_program_convex(const DcProgram& prog) {
  if (!prog.objective.is_convex()) return false;
  return std::all_of(prog.constraints.begin(), prog.constraints.end(),
                     [](const DcConstraint& c) { return c.f.is_convex(); });
}

// Penalized surrogate at `anchor`: variables (w, s) with one slack per
// constraint that has a concave part.
ConvexProgram penalized(const DcProgram& prog, const Vector& anchor, double tau,
                        const std::vector<std::size_t>& slacked) {
  const Index n = prog.n_vars;
  const Index ns = static_cast<Index>(slacked.size());
  ConvexProgram out(n + ns);
  out.objective = linearize(prog.objective, anchor);
  out.objective.resize(n + ns);
  out.objective.linear.tail(ns).setConstant(tau);
  out.eq_A = Matrix::Zero(prog.eq_A.rows(), n + ns);
  out.eq_A.leftCols(n) = prog.eq_A;
  out.eq_b = prog.eq_b;
  out.lower.head(n) = prog.lower;
  out.upper.head(n) = prog.upper;
  out.lower.tail(ns).setZero();

  std::size_t next = 0;
  for (std::size_t i = 0; i < prog.constraints.size(); ++i) {
    ConvexFunction f = linearize(prog.constraints[i].f, anchor);
    f.resize(n + ns);
    if (next < slacked.size() && slacked[next] == i) {
      f.linear[n + static_cast<Index>(next)] = -1.0;
      ++next;
    }
    add_constraint(out, std::move(f), prog.constraints[i].rhs);
  }
  return out;
}

}  // namespace

DccpResult solve_dccp(const DcProgram& prog, const Vector& init, const DccpParams& params) {
  validate_dc_program(prog);
  require(params.tau0 > 0.0 && params.tau_growth > 1.0 && params.tau_max >= params.tau0,
          ErrorCode::InvalidArgument, "DCCP penalty parameters out of range");
  require(params.max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
  require(init.size() == prog.n_vars, ErrorCode::DimensionMismatch, "init has wrong length");
  require(((init - prog.lower).array() >= -1e-9).all() && ((prog.upper - init).array() >= -1e-9).all(),
          ErrorCode::InvalidArgument, "init lies outside the box");

  const Index n = prog.n_vars;
  ConvexOptions options;
  options.tol = params.inner_tol;
  BarrierSolver solver(options);
  DccpResult out;

  auto finish = [&](const Vector& w, ConvexStatus status) {
    out.w_star = w;
    out.value = prog.objective.value(w);
    out.max_slack = max_violation(prog, w);
    out.kkt_residual = check_kkt(convexify(prog, w), w).max();
    out.status = status;
  };

  if (is_dc_program_convex(prog)) {
    const ConvexSolution sol = solver.solve(convexify(prog, init));
    require(sol.status != ConvexStatus::Infeasible, ErrorCode::Infeasible,
            "convex part of the DC program is infeasible");
    out.iterations = 1;
    out.trace.push_back({sol.value, kInf, sol.value, 0.0, 0.0});
    finish(sol.w_star, sol.status);
    out.kkt_residual = sol.kkt_residual;
    return out;
  }

  std::vector<std::size_t> slacked;
  for (std::size_t i = 0; i < prog.constraints.size(); ++i)
    if (!prog.constraints[i].f.is_convex()) slacked.push_back(i);
  const Index ns = static_cast<Index>(slacked.size());

  auto penalty_at = [&](const Vector& w) {
    double total = 0.0;
    for (std::size_t i : slacked)
      total += std::max(0.0, prog.constraints[i].f.value(w) - prog.constraints[i].rhs);
    return total;
  };

  Vector w = init.cwiseMax(prog.lower).cwiseMin(prog.upper);
  double tau = params.tau0;
  double last_surrogate = kInf;
  Vector best = w;
  double best_value = kInf;

  for (int k = 0; k < params.max_iters; ++k) {
    const ConvexProgram sub = penalized(prog, w, tau, slacked);
    Vector start(n + ns);
    start.head(n) = w;
    for (Index j = 0; j < ns; ++j) {
      const auto& c = prog.constraints[slacked[static_cast<std::size_t>(j)]];
      start[n + j] = std::max(0.0, c.f.value(w) - c.rhs) + 1.0;
    }
    const ConvexSolution sol = solver.solve(sub, start);
    require(sol.status != ConvexStatus::Infeasible, ErrorCode::Infeasible,
            "convex part of the DC program is infeasible");
    ++out.iterations;

    const Vector next = sol.w_star.head(n);
    DccpStep step;
    step.surrogate = sol.value;
    step.previous = prog.objective.value(w) + tau * penalty_at(w);
    step.objective = prog.objective.value(next);
    step.max_slack = max_violation(prog, next);
    step.tau = tau;
    out.trace.push_back(step);

    const double move = (next - w).cwiseAbs().maxCoeff();
    const bool flat = std::abs(sol.value - last_surrogate) <= 1e-12 * (1.0 + std::abs(sol.value));
    last_surrogate = sol.value;
    w = next;
    if (step.max_slack <= params.slack_tol && step.objective < best_value) {
      best = w;
      best_value = step.objective;
    }

    if (move < params.stall_tol || flat) {
      if (step.max_slack <= params.slack_tol) {
        finish(w, ConvexStatus::Optimal);
        return out;
      }
      if (tau >= params.tau_max)
        throw Error(ErrorCode::SlackResidual,
                    "DCCP stalled with constraint slack " + std::to_string(step.max_slack));
    }
    tau = std::min(tau * params.tau_growth, params.tau_max);
  }

  finish(best_value < kInf ? best : w, ConvexStatus::MaxIters);
  return out;
}

DccpResult solve_dccp(const DcProgram& prog, const Vector& init, const DccpParams& params,
                      int restarts, std::uint64_t seed) {
  require(restarts >= 1, ErrorCode::InvalidArgument, "restarts must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::optional<DccpResult> best;
  std::optional<Error> last_error;
  for (int r = 0; r < restarts; ++r) {
    Vector start = init;
    if (r > 0) {
      start.resize(prog.n_vars);
      for (Index j = 0; j < prog.n_vars; ++j)
        start[j] = prog.lower[j] + unit(rng) * (prog.upper[j] - prog.lower[j]);
    }
    try {
      DccpResult run = solve_dccp(prog, start, params);
      const bool better = !best || (run.status == ConvexStatus::Optimal) > (best->status == ConvexStatus::Optimal) ||
                          ((run.status == ConvexStatus::Optimal) == (best->status == ConvexStatus::Optimal) &&
                           run.value < best->value);
      if (better) best = std::move(run);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SlackResidual) throw;
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  best->restarts = restarts;
  return *best;
}

}  // namespace drc
