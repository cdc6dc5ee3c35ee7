#include "drc/convex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drc {

const char* to_string(ConvexStatus status) {
  switch (status) {
    case ConvexStatus::Optimal: return "Optimal";
    case ConvexStatus::Infeasible: return "Infeasible";
    case ConvexStatus::MaxIters: return "MaxIters";
  }
  return "Unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector gather(const Vector& w, const std::vector<Index>& vars) {
  Vector out(static_cast<Index>(vars.size()));
  for (std::size_t k = 0; k < vars.size(); ++k) out[static_cast<Index>(k)] = w[vars[k]];
  return out;
}

struct RidgeEval {
  double value, d1, d2;
};

RidgeEval ridge_phi(double z, int p, bool positive_part) {
  if (positive_part && z <= 0.0) return {0.0, 0.0, 0.0};
  const double zp2 = p >= 2 ? std::pow(z, p - 2) : 0.0;
  return {zp2 * z * z, p * zp2 * z, static_cast<double>(p) * (p - 1) * zp2};
}

struct TermValue {
  const Vector& w;
  double operator()(const QuadraticTerm& t) const {
    const Vector ws = gather(w, t.vars);
    return ws.dot(t.Q * ws);
  }
  double operator()(const SmoothedNormTerm& t) const {
    const Vector r = t.M * gather(w, t.vars) + t.v;
    return std::sqrt(r.squaredNorm() + t.delta * t.delta);
  }
  double operator()(const RidgePowerTerm& t) const {
    const double z = t.a.dot(gather(w, t.vars)) + t.offset;
    return t.weight * ridge_phi(z, t.exponent, t.positive_part).value;
  }
};

struct TermGradient {
  const Vector& w;
  double scale;
  Eigen::Ref<Vector> g;
  void scatter(const std::vector<Index>& vars, const Vector& local) {
    for (std::size_t k = 0; k < vars.size(); ++k) g[vars[k]] += scale * local[static_cast<Index>(k)];
  }
  void operator()(const QuadraticTerm& t) { scatter(t.vars, 2.0 * (t.Q * gather(w, t.vars))); }
  void operator()(const SmoothedNormTerm& t) {
    const Vector r = t.M * gather(w, t.vars) + t.v;
    const double f = std::sqrt(r.squaredNorm() + t.delta * t.delta);
    scatter(t.vars, t.M.transpose() * (r / f));
  }
  void operator()(const RidgePowerTerm& t) {
    const double z = t.a.dot(gather(w, t.vars)) + t.offset;
    scatter(t.vars, (t.weight * ridge_phi(z, t.exponent, t.positive_part).d1) * t.a);
  }
};

/// Accumulates H += R R' column by column so that many small rank-one or
/// rank-two contributions land in one matrix product.
class LowRank {
 public:
  explicit LowRank(Index n) : n_(n) {}
  Eigen::Ref<Vector> add() {
    if (used_ == R_.cols()) R_.conservativeResize(n_, std::max<Index>(16, 2 * R_.cols()));
    R_.col(used_).setZero();
    return R_.col(used_++);
  }
  void flush(Eigen::Ref<Matrix> H) {
    if (used_ == 0) return;
    H.selfadjointView<Eigen::Lower>().rankUpdate(R_.leftCols(used_));
    H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
    used_ = 0;
  }

 private:
  Index n_;
  Matrix R_;
  Index used_ = 0;
};

struct TermHessian {
  const Vector& w;
  double scale;
  Eigen::Ref<Matrix> H;
  LowRank* sink = nullptr;  // used when scale >= 0
  static bool contiguous(const std::vector<Index>& vars) {
    for (std::size_t k = 1; k < vars.size(); ++k)
      if (vars[k] != vars[0] + static_cast<Index>(k)) return false;
    return true;
  }
  void scatter(const std::vector<Index>& vars, const Matrix& local) {
    if (!vars.empty() && contiguous(vars)) {
      const Index n = static_cast<Index>(vars.size());
      H.block(vars[0], vars[0], n, n) += scale * local;
      return;
    }
    for (std::size_t i = 0; i < vars.size(); ++i)
      for (std::size_t j = 0; j < vars.size(); ++j)
        H(vars[i], vars[j]) += scale * local(static_cast<Index>(i), static_cast<Index>(j));
  }
  void operator()(const QuadraticTerm& t) { scatter(t.vars, 2.0 * t.Q); }
  void emit(const std::vector<Index>& vars, const Vector& row) {
    Eigen::Ref<Vector> col = sink->add();
    for (std::size_t k = 0; k < vars.size(); ++k) col[vars[k]] = row[static_cast<Index>(k)];
  }
  void operator()(const SmoothedNormTerm& t) {
    const Vector r = t.M * gather(w, t.vars) + t.v;
    const double f = std::sqrt(r.squaredNorm() + t.delta * t.delta);
    if (sink && scale >= 0.0) {
      // I/f - rr'/f^3 = L'L with L = (I - c rr'/|r|^2)/sqrt(f), c = 1 - delta/f
      Matrix L = Matrix::Identity(r.size(), r.size());
      const double r2 = r.squaredNorm();
      if (r2 > 0.0) L -= ((1.0 - t.delta / f) / r2) * (r * r.transpose());
      const Matrix B = (std::sqrt(scale / f) * L) * t.M;
      for (Index i = 0; i < B.rows(); ++i) emit(t.vars, B.row(i).transpose());
      return;
    }
    Matrix inner = -(r * r.transpose()) / (f * f * f);
    inner.diagonal().array() += 1.0 / f;
    scatter(t.vars, t.M.transpose() * inner * t.M);
  }
  void operator()(const RidgePowerTerm& t) {
    const double z = t.a.dot(gather(w, t.vars)) + t.offset;
    const double d2 = t.weight * ridge_phi(z, t.exponent, t.positive_part).d2;
    if (d2 == 0.0) return;
    if (sink && scale >= 0.0 && d2 > 0.0) {
      emit(t.vars, std::sqrt(scale * d2) * t.a);
      return;
    }
    scatter(t.vars, d2 * (t.a * t.a.transpose()));
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// ConvexFunction
// ---------------------------------------------------------------------------

double ConvexFunction::value(const Vector& w) const {
  double out = constant;
  if (linear.size() > 0) out += linear.dot(w.head(linear.size()));
  for (const auto& term : terms) out += std::visit(TermValue{w}, term);
  return out;
}

void ConvexFunction::add_gradient(const Vector& w, double scale, Eigen::Ref<Vector> g) const {
  if (linear.size() > 0) g.head(linear.size()) += scale * linear;
  for (const auto& term : terms) std::visit(TermGradient{w, scale, g}, term);
}

void ConvexFunction::add_hessian(const Vector& w, double scale, Eigen::Ref<Matrix> H) const {
  for (const auto& term : terms) std::visit(TermHessian{w, scale, H}, term);
}

Vector ConvexFunction::gradient(const Vector& w) const {
  Vector g = Vector::Zero(w.size());
  add_gradient(w, 1.0, g);
  return g;
}

void ConvexFunction::resize(Index n_vars) {
  const Index old = linear.size();
  if (old >= n_vars) return;
  linear.conservativeResize(n_vars);
  linear.tail(n_vars - old).setZero();
}

void ConvexFunction::add_linear(Index n_vars, Index var, double coef) {
  resize(n_vars);
  linear[var] += coef;
}

// ---------------------------------------------------------------------------
// ConvexProgram
// ---------------------------------------------------------------------------

ConvexProgram::ConvexProgram(Index n)
    : n_vars(n),
      eq_A(0, n),
      eq_b(0),
      ineq_A(0, n),
      ineq_b(0),
      lower(Vector::Constant(n, -kInf)),
      upper(Vector::Constant(n, kInf)) {
  objective.linear = Vector::Zero(n);
}

namespace {

void append_row(Matrix& A, Vector& b, const Vector& row, double rhs) {
  const Index r = A.rows();
  A.conservativeResize(r + 1, row.size());
  A.row(r) = row.transpose();
  b.conservativeResize(r + 1);
  b[r] = rhs;
}

}  // namespace

void ConvexProgram::add_equality(const Vector& row, double rhs) {
  require(row.size() == n_vars, ErrorCode::DimensionMismatch, "equality row length");
  append_row(eq_A, eq_b, row, rhs);
}

void ConvexProgram::add_inequality(const Vector& row, double rhs) {
  require(row.size() == n_vars, ErrorCode::DimensionMismatch, "inequality row length");
  append_row(ineq_A, ineq_b, row, rhs);
}

void ConvexProgram::set_bounds(Index var, double lo, double hi) {
  require(var >= 0 && var < n_vars, ErrorCode::IndexOutOfRange, "bound index");
  if (lower.size() != n_vars) lower = Vector::Constant(n_vars, -kInf);
  if (upper.size() != n_vars) upper = Vector::Constant(n_vars, kInf);
  lower[var] = lo;
  upper[var] = hi;
}

void ConvexProgram::add_simplex(Index start, Index size) {
  require(start >= 0 && size >= 1 && start + size <= n_vars, ErrorCode::IndexOutOfRange,
          "simplex block out of range");
  simplex_blocks.push_back({start, size});
}

namespace {

void validate_function(const ConvexFunction& f, Index n, const std::string& what) {
  require(f.linear.size() <= n, ErrorCode::DimensionMismatch, what + ": linear part too long");
  for (const auto& term : f.terms) {
    std::visit(
        [&](const auto& t) {
          for (Index v : t.vars)
            require(v >= 0 && v < n, ErrorCode::IndexOutOfRange, what + ": term variable");
          using T = std::decay_t<decltype(t)>;
          const Index k = static_cast<Index>(t.vars.size());
          if constexpr (std::is_same_v<T, QuadraticTerm>) {
            require(t.Q.rows() == k && t.Q.cols() == k, ErrorCode::DimensionMismatch,
                    what + ": quadratic size");
            require((t.Q - t.Q.transpose()).cwiseAbs().maxCoeff() <=
                        1e-12 * (1.0 + t.Q.cwiseAbs().maxCoeff()),
                    ErrorCode::InvalidArgument, what + ": quadratic not symmetric");
            Eigen::LDLT<Matrix> ldlt(t.Q);
            const double scale = 1.0 + t.Q.cwiseAbs().maxCoeff();
            require(ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -1e-10 * scale,
                    ErrorCode::InvalidArgument, what + ": quadratic not PSD");
          } else if constexpr (std::is_same_v<T, SmoothedNormTerm>) {
            require(t.M.cols() == k && t.M.rows() == t.v.size(), ErrorCode::DimensionMismatch,
                    what + ": norm term size");
            require(t.delta > 0.0, ErrorCode::InvalidArgument, what + ": smoothing must be > 0");
          } else {
            require(t.a.size() == k, ErrorCode::DimensionMismatch, what + ": ridge term size");
            require(t.exponent >= 2 && (t.positive_part || t.exponent % 2 == 0),
                    ErrorCode::InvalidArgument, what + ": ridge power is not convex");
            require(t.weight >= 0.0, ErrorCode::InvalidArgument, what + ": negative ridge weight");
          }
        },
        term);
  }
}

}  // namespace

void validate_program(const ConvexProgram& prog) {
  const Index n = prog.n_vars;
  require(n >= 1, ErrorCode::DimensionMismatch, "program needs at least one variable");
  validate_function(prog.objective, n, "objective");
  require(prog.eq_A.rows() == prog.eq_b.size() && (prog.eq_A.rows() == 0 || prog.eq_A.cols() == n),
          ErrorCode::DimensionMismatch, "equality block");
  require(prog.ineq_A.rows() == prog.ineq_b.size() &&
              (prog.ineq_A.rows() == 0 || prog.ineq_A.cols() == n),
          ErrorCode::DimensionMismatch, "inequality block");
  for (const auto& c : prog.nonlinear) validate_function(c.f, n, "constraint");
  require(prog.lower.size() == n && prog.upper.size() == n, ErrorCode::DimensionMismatch,
          "bounds length");
  require((prog.lower.array() <= prog.upper.array()).all(), ErrorCode::Infeasible,
          "lower bound exceeds upper bound");
  for (const auto& block : prog.simplex_blocks)
    require(block.start >= 0 && block.size >= 1 && block.start + block.size <= n,
            ErrorCode::IndexOutOfRange, "simplex block");
}

// ---------------------------------------------------------------------------
// Barrier machinery
// ---------------------------------------------------------------------------

namespace {

/// Program in barrier-ready form. In phase I an extra variable s (index n)
/// relaxes every inequality and s >= -1 keeps the auxiliary problem bounded.
struct Normalized {
  Index n = 0;
  bool phase1 = false;
  const ConvexFunction* objective = nullptr;
  Matrix A;  // dim() columns
  Vector b;
  Matrix G;  // n columns
  Vector h;
  std::vector<Index> lo_idx, up_idx;
  Vector lo_val, up_val;
  std::vector<const ConvexConstraint*> nl;
  Matrix Z;  // null-space basis of A (empty when A has no rows)

  Index dim() const { return phase1 ? n + 1 : n; }
  Index num_ineq() const {
    return G.rows() + static_cast<Index>(lo_idx.size() + up_idx.size() + nl.size()) +
           (phase1 ? 1 : 0);
  }
};

void compute_nullspace(Normalized& P) {
  if (P.A.rows() == 0) {
    P.Z.resize(0, 0);
    return;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(P.A.transpose());
  qr.setThreshold(1e-12);
  const Index r = qr.rank();
  Matrix Q = qr.householderQ();
  P.Z = Q.rightCols(P.dim() - r);
}

Normalized normalize(const ConvexProgram& prog) {
  Normalized P;
  P.n = prog.n_vars;
  P.objective = &prog.objective;

  Vector lower = prog.lower;
  for (const auto& block : prog.simplex_blocks)
    for (Index j = block.start; j < block.start + block.size; ++j)
      lower[j] = std::max(lower[j], 0.0);

  std::vector<std::pair<Vector, double>> eqs;
  for (Index r = 0; r < prog.eq_A.rows(); ++r) eqs.emplace_back(prog.eq_A.row(r).transpose(), prog.eq_b[r]);
  for (const auto& block : prog.simplex_blocks) {
    Vector row = Vector::Zero(P.n);
    row.segment(block.start, block.size).setOnes();
    eqs.emplace_back(row, 1.0);
  }
  for (Index j = 0; j < P.n; ++j) {
    if (std::isfinite(lower[j]) && lower[j] == prog.upper[j]) {
      Vector row = Vector::Zero(P.n);
      row[j] = 1.0;
      eqs.emplace_back(row, lower[j]);
      continue;
    }
    if (std::isfinite(lower[j])) {
      P.lo_idx.push_back(j);
    }
    if (std::isfinite(prog.upper[j])) {
      P.up_idx.push_back(j);
    }
  }
  P.lo_val.resize(static_cast<Index>(P.lo_idx.size()));
  for (std::size_t k = 0; k < P.lo_idx.size(); ++k) P.lo_val[static_cast<Index>(k)] = lower[P.lo_idx[k]];
  P.up_val.resize(static_cast<Index>(P.up_idx.size()));
  for (std::size_t k = 0; k < P.up_idx.size(); ++k) P.up_val[static_cast<Index>(k)] = prog.upper[P.up_idx[k]];

  P.A = Matrix::Zero(static_cast<Index>(eqs.size()), P.n);
  P.b.resize(static_cast<Index>(eqs.size()));
  for (std::size_t r = 0; r < eqs.size(); ++r) {
    P.A.row(static_cast<Index>(r)) = eqs[r].first.transpose();
    P.b[static_cast<Index>(r)] = eqs[r].second;
  }
  P.G = prog.ineq_A.rows() > 0 ? prog.ineq_A : Matrix(0, P.n);
  P.h = prog.ineq_b;
  for (const auto& c : prog.nonlinear) P.nl.push_back(&c);
  compute_nullspace(P);
  return P;
}

// Phase I is unbounded along variables with a missing bound, so those get a
// wide artificial box around the start point.
Normalized make_phase1(const Normalized& base, const Vector& w0) {
  Normalized P = base;
  P.phase1 = true;
  P.objective = nullptr;
  const double radius = 1e4 * (1.0 + w0.cwiseAbs().maxCoeff());
  std::vector<bool> has_lo(static_cast<std::size_t>(P.n), false), has_up(static_cast<std::size_t>(P.n), false);
  for (Index j : P.lo_idx) has_lo[static_cast<std::size_t>(j)] = true;
  for (Index j : P.up_idx) has_up[static_cast<std::size_t>(j)] = true;
  for (Index j = 0; j < P.n; ++j) {
    if (!has_lo[static_cast<std::size_t>(j)]) {
      P.lo_idx.push_back(j);
      P.lo_val.conservativeResize(P.lo_val.size() + 1);
      P.lo_val[P.lo_val.size() - 1] = w0[j] - radius;
    }
    if (!has_up[static_cast<std::size_t>(j)]) {
      P.up_idx.push_back(j);
      P.up_val.conservativeResize(P.up_val.size() + 1);
      P.up_val[P.up_val.size() - 1] = w0[j] + radius;
    }
  }
  P.A.conservativeResize(P.A.rows(), P.n + 1);
  P.A.col(P.n).setZero();
  compute_nullspace(P);
  return P;
}

/// Slack of every inequality at z, in the order rows, lower, upper,
/// nonlinear, (phase I floor). Returns false if any slack is not positive.
bool compute_slacks(const Normalized& P, const Vector& z, Vector& s) {
  const Vector w = z.head(P.n);
  const double relax = P.phase1 ? z[P.n] : 0.0;
  s.resize(P.num_ineq());
  Index k = 0;
  if (P.G.rows() > 0) {
    s.segment(k, P.G.rows()) = (P.h - P.G * w).array() + relax;
    k += P.G.rows();
  }
  for (std::size_t i = 0; i < P.lo_idx.size(); ++i) s[k++] = w[P.lo_idx[i]] - P.lo_val[static_cast<Index>(i)] + relax;
  for (std::size_t i = 0; i < P.up_idx.size(); ++i) s[k++] = P.up_val[static_cast<Index>(i)] - w[P.up_idx[i]] + relax;
  for (const auto* c : P.nl) s[k++] = c->rhs - c->f.value(w) + relax;
  if (P.phase1) s[k++] = z[P.n] + 1.0;
  return (s.array() > 0.0).all() && s.allFinite();
}

double objective_value(const Normalized& P, const Vector& z) {
  return P.phase1 ? z[P.n] : P.objective->value(z.head(P.n));
}

double barrier_value(const Normalized& P, const Vector& z, double t) {
  Vector s;
  if (!compute_slacks(P, z, s)) return kInf;
  return t * objective_value(P, z) - s.array().log().sum();
}

/// Gradient of every slack w.r.t. z; only nonlinear constraints need it
/// explicitly, the rest is structural.
std::vector<Vector> nonlinear_gradients(const Normalized& P, const Vector& z) {
  std::vector<Vector> grads;
  grads.reserve(P.nl.size());
  const Vector w = z.head(P.n);
  for (const auto* c : P.nl) grads.push_back(c->f.gradient(w));
  return grads;
}

/// Assemble gradient and Hessian of t*f0 - sum(log s).
void assemble(const Normalized& P, const Vector& z, double t, const Vector& s,
              const std::vector<Vector>& nl_grads, Vector& g, Matrix& H) {
  const Index d = P.dim();
  const Index n = P.n;
  g.setZero(d);
  H.setZero(d, d);
  const Vector w = z.head(n);
  LowRank low_rank(n);
  auto add_hessian = [&](const ConvexFunction& f, double scale) {
    for (const auto& term : f.terms) std::visit(TermHessian{w, scale, H.topLeftCorner(n, n), &low_rank}, term);
  };
  if (P.phase1) {
    g[n] = t;
  } else {
    P.objective->add_gradient(w, t, g.head(n));
    add_hessian(*P.objective, t);
  }
  Index k = 0;
  // d slack / d w = -G for rows, +e_j lower, -e_j upper, -grad f nonlinear;
  // d slack / d s = +1 for all in phase I.
  if (P.G.rows() > 0) {
    const Index m = P.G.rows();
    const Vector inv = s.segment(k, m).cwiseInverse();
    const Vector inv2 = inv.cwiseAbs2();
    g.head(n) += P.G.transpose() * inv;
    H.topLeftCorner(n, n).noalias() += P.G.transpose() * inv2.asDiagonal() * P.G;
    if (P.phase1) {
      g[n] -= inv.sum();
      H(n, n) += inv2.sum();
      const Vector cross = -(P.G.transpose() * inv2);
      H.col(n).head(n) += cross;
      H.row(n).head(n) += cross.transpose();
    }
    k += m;
  }
  auto bound = [&](Index j, double sign, double sk) {
    // slack = sign * w_j + const + relax
    const double inv = 1.0 / sk;
    g[j] -= sign * inv;
    H(j, j) += inv * inv;
    if (P.phase1) {
      g[n] -= inv;
      H(n, n) += inv * inv;
      H(j, n) += sign * inv * inv;
      H(n, j) += sign * inv * inv;
    }
  };
  for (Index j : P.lo_idx) bound(j, 1.0, s[k++]);
  for (Index j : P.up_idx) bound(j, -1.0, s[k++]);
  for (std::size_t i = 0; i < P.nl.size(); ++i) {
    const double sk = s[k++];
    const double inv = 1.0 / sk;
    // slack = rhs - f(w) + relax
    g.head(n) += inv * nl_grads[i];
    add_hessian(P.nl[i]->f, inv);
    low_rank.add() = inv * nl_grads[i];
    if (P.phase1) {
      g[n] -= inv;
      H(n, n) += inv * inv;
      const Vector cross = -(inv * inv) * nl_grads[i];
      H.col(n).head(n) += cross;
      H.row(n).head(n) += cross.transpose();
    }
  }
  low_rank.flush(H.topLeftCorner(n, n));
  if (P.phase1) {
    const double inv = 1.0 / s[k++];
    g[n] -= inv;
    H(n, n) += inv * inv;
  }
}

/// Directional change of every slack along d (exact for affine slacks,
/// first order for nonlinear ones).
Vector slack_directional(const Normalized& P, const Vector& d, const std::vector<Vector>& nl_grads) {
  const Index n = P.n;
  const double ds = P.phase1 ? d[n] : 0.0;
  Vector out(P.num_ineq());
  Index k = 0;
  if (P.G.rows() > 0) {
    out.segment(k, P.G.rows()) = (-(P.G * d.head(n))).array() + ds;
    k += P.G.rows();
  }
  for (Index j : P.lo_idx) out[k++] = d[j] + ds;
  for (Index j : P.up_idx) out[k++] = -d[j] + ds;
  for (std::size_t i = 0; i < P.nl.size(); ++i) out[k++] = -nl_grads[i].dot(d.head(n)) + ds;
  if (P.phase1) out[k++] = ds;
  return out;
}

struct NewtonDirection {
  Vector d;
  double decrement2 = 0.0;
  bool ok = false;
};

NewtonDirection newton_direction(const Normalized& P, const Vector& g, Matrix& H) {
  NewtonDirection out;
  const bool reduced = P.A.rows() > 0;
  Matrix Hr = reduced ? Matrix(P.Z.transpose() * H * P.Z) : H;
  Vector gr = reduced ? Vector(P.Z.transpose() * g) : g;
  if (Hr.rows() == 0) {
    out.d = Vector::Zero(g.size());
    out.ok = true;
    return out;
  }
  const double scale = std::max(1.0, Hr.diagonal().cwiseAbs().maxCoeff());
  double reg = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Matrix Hreg = Hr;
    if (reg > 0.0) Hreg.diagonal().array() += reg;
    Eigen::LDLT<Matrix> ldlt(Hreg);
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 1e-300 &&
        ldlt.isPositive()) {
      Vector dz = ldlt.solve(-gr);
      if (dz.allFinite()) {
        out.d = reduced ? Vector(P.Z * dz) : dz;
        out.decrement2 = -g.dot(out.d);
        out.ok = true;
        return out;
      }
    }
    reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
  }
  return out;
}

struct CenteringResult {
  int iterations = 0;
  bool converged = false;
  Vector last_d;
  std::vector<Vector> nl_grads;
  Vector slacks;
};

CenteringResult center(const Normalized& P, Vector& z, double t, int max_newton, Vector& g,
                       Matrix& H) {
  constexpr double kNewtonTol = 1e-10;
  constexpr double kArmijo = 0.01;
  CenteringResult out;
  bool stalled = false;
  for (int it = 0; it < max_newton; ++it) {
    compute_slacks(P, z, out.slacks);
    out.nl_grads = nonlinear_gradients(P, z);
    assemble(P, z, t, out.slacks, out.nl_grads, g, H);
    NewtonDirection nd = newton_direction(P, g, H);
    if (!nd.ok) return out;
    out.last_d = nd.d;
    if (nd.decrement2 <= 2.0 * kNewtonTol || nd.decrement2 < 0.0) {
      out.converged = true;
      return out;
    }
    ++out.iterations;

    // Largest step keeping affine slacks positive, then backtracking.
    const Vector dslack = slack_directional(P, nd.d, out.nl_grads);
    double step = 1.0;
    for (Index i = 0; i < dslack.size(); ++i)
      if (dslack[i] < 0.0) step = std::min(step, -0.99 * out.slacks[i] / dslack[i]);

    const double psi0 = barrier_value(P, z, t);
    const double slope = g.dot(nd.d);
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      const Vector trial = z + step * nd.d;
      const double psi = barrier_value(P, trial, t);
      if (std::isfinite(psi)) {
        const bool armijo = psi <= psi0 + kArmijo * step * slope;
        // Near the center the decrease drops below rounding of psi itself.
        const bool small = nd.decrement2 < 0.25 && step == 1.0 &&
                           psi <= psi0 + 1e-12 * (1.0 + std::abs(psi0));
        if (armijo || small) {
          z = trial;
          accepted = true;
          // psi is at its rounding floor; further steps only chase noise
          stalled = !armijo;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable progress; treat as centered if the decrement is tiny.
      out.converged = nd.decrement2 < 1e-6;
      return out;
    }
    if (stalled) break;
  }
  compute_slacks(P, z, out.slacks);
  out.nl_grads = nonlinear_gradients(P, z);
  assemble(P, z, t, out.slacks, out.nl_grads, g, H);
  NewtonDirection nd = newton_direction(P, g, H);
  out.last_d = nd.ok ? nd.d : Vector::Zero(z.size());
  out.converged = nd.ok && (nd.decrement2 <= 2.0 * kNewtonTol || (stalled && nd.decrement2 < 1e-6));
  return out;
}

/// KKT residual from the barrier dual estimates refined by the last Newton
/// direction.
double barrier_kkt(const Normalized& P, const Vector& z, double t, const CenteringResult& c) {
  const Index n = P.n;
  const Vector& s = c.slacks;
  const Vector dslack = slack_directional(P, c.last_d, c.nl_grads);
  Vector lambda = (s.cwiseInverse() / t).array() * (1.0 - dslack.array() / s.array());

  // r = grad f0 - sum lambda_i grad slack_i
  Vector r = Vector::Zero(n);
  P.objective->add_gradient(z, 1.0, r);
  Index k = 0;
  if (P.G.rows() > 0) {
    r += P.G.transpose() * lambda.segment(k, P.G.rows());
    k += P.G.rows();
  }
  for (Index j : P.lo_idx) r[j] -= lambda[k++];
  for (Index j : P.up_idx) r[j] += lambda[k++];
  for (std::size_t i = 0; i < P.nl.size(); ++i) r += lambda[k++] * c.nl_grads[i];

  const Vector projected = P.A.rows() > 0 ? Vector(P.Z * (P.Z.transpose() * r)) : r;
  const double stationarity = projected.size() ? projected.cwiseAbs().maxCoeff() : 0.0;
  double complementarity = 0.0, dual_infeasibility = 0.0;
  if (lambda.size() > 0) {
    complementarity = (lambda.array() * s.array()).abs().maxCoeff();
    dual_infeasibility = std::max(0.0, -lambda.minCoeff());
  }
  const double primal = P.A.rows() > 0 ? (P.A * z - P.b).cwiseAbs().maxCoeff() : 0.0;
  return std::max({stationarity, complementarity, dual_infeasibility, primal});
}

Vector default_start(const ConvexProgram& prog) {
  Vector w = Vector::Zero(prog.n_vars);
  for (Index j = 0; j < prog.n_vars; ++j) {
    const double lo = prog.lower[j], hi = prog.upper[j];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      w[j] = 0.5 * (lo + hi);
    } else if (std::isfinite(lo)) {
      w[j] = std::max(lo + 1.0, 0.0);
    } else if (std::isfinite(hi)) {
      w[j] = std::min(hi - 1.0, 0.0);
    }
  }
  for (const auto& block : prog.simplex_blocks)
    w.segment(block.start, block.size).setConstant(1.0 / static_cast<double>(block.size));
  return w;
}

/// Move w onto {A w = b} by the least-norm correction.
bool project_equalities(const Normalized& P, Vector& w) {
  if (P.A.rows() == 0) return true;
  const Matrix A = P.A.leftCols(P.n);
  const Vector residual = P.b - A * w;
  if (residual.cwiseAbs().maxCoeff() <= 1e-13) return true;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  w += cod.solve(residual);
  return (A * w - P.b).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + P.b.cwiseAbs().maxCoeff());
}

}  // namespace

// ---------------------------------------------------------------------------
// BarrierSolver
// ---------------------------------------------------------------------------

namespace {

constexpr double kInteriorSlack = 1e-8;
constexpr double kInfeasibleSlack = 1e-10;

struct PhaseOneResult {
  Vector w;
  int iterations = 0;
};

PhaseOneResult phase_one(const Normalized& base, const ConvexProgram& prog,
                         const std::optional<Vector>& start, const ConvexOptions& options,
                         Vector& g, Matrix& H) {
  PhaseOneResult out;
  Vector w = start ? *start : default_start(prog);
  require(w.size() == prog.n_vars, ErrorCode::DimensionMismatch, "start point length");
  if (!project_equalities(base, w)) throw Error(ErrorCode::Infeasible, "equality constraints are inconsistent");

  Vector s;
  compute_slacks(base, w, s);
  const double min_slack = s.size() ? s.minCoeff() : kInf;
  if (min_slack >= kInteriorSlack && std::isfinite(base.objective->value(w))) {
    out.w = w;
    return out;
  }

  const Normalized P = make_phase1(base, w);
  Vector z(P.dim());
  z.head(P.n) = w;
  z[P.n] = std::max(0.0, -min_slack) + 1.0;
  const double m = static_cast<double>(P.num_ineq());

  double t = 1.0;
  while (true) {
    CenteringResult c = center(P, z, t, options.max_newton, g, H);
    out.iterations += c.iterations;
    const double relax = z[P.n];
    const double gap = m / t;
    if (relax < -kInfeasibleSlack && gap <= 0.1 * std::abs(relax)) break;
    if (relax - gap > -kInfeasibleSlack) break;  // dual bound proves infeasibility
    if (t > options.t_max) break;
    t *= options.barrier_growth;
  }
  if (!(z[P.n] < -kInfeasibleSlack))
    throw Error(ErrorCode::Infeasible, "no strictly feasible point (phase I optimum " +
                                           std::to_string(z[P.n]) + ")");
  out.w = z.head(P.n);
  return out;
}

}  // namespace

Vector BarrierSolver::interior_point(const ConvexProgram& prog, const std::optional<Vector>& start) {
  validate_program(prog);
  const Normalized P = normalize(prog);
  return phase_one(P, prog, start, options_, gradient_, hessian_).w;
}

ConvexSolution BarrierSolver::solve(const ConvexProgram& prog, const std::optional<Vector>& start) {
  validate_program(prog);
  const Normalized P = normalize(prog);
  ConvexSolution out;

  Vector z;
  try {
    PhaseOneResult p1 = phase_one(P, prog, start, options_, gradient_, hessian_);
    z = std::move(p1.w);
    out.iterations += p1.iterations;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    out.status = ConvexStatus::Infeasible;
    return out;
  }

  const double m = static_cast<double>(P.num_ineq());
  double t = m > 0 ? options_.t_initial : 1.0;
  double kkt = kInf;
  while (true) {
    CenteringResult c = center(P, z, t, options_.max_newton, gradient_, hessian_);
    out.iterations += c.iterations;
    out.barrier_trace.push_back(P.objective->value(z));
    const double gap = m / t;
    if (gap <= options_.tol) {
      kkt = barrier_kkt(P, z, t, c);
      if (kkt <= options_.tol) break;
    }
    if (m == 0 || t > options_.t_max) {
      kkt = barrier_kkt(P, z, t, c);
      break;
    }
    t *= options_.barrier_growth;
  }

  out.w_star = z;
  out.value = P.objective->value(z);
  out.kkt_residual = kkt;
  out.status = kkt <= options_.tol ? ConvexStatus::Optimal : ConvexStatus::MaxIters;
  return out;
}

Vector find_interior_point(const ConvexProgram& prog) { return BarrierSolver().interior_point(prog); }

ConvexSolution solve_convex(const ConvexProgram& prog, double tol) {
  require(tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  ConvexOptions options;
  options.tol = tol;
  return BarrierSolver(options).solve(prog);
}

ConvexSolution solve_convex(const ConvexProgram& prog, const ConvexOptions& options,
                            const std::optional<Vector>& start) {
  require(options.tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  return BarrierSolver(options).solve(prog, start);
}

// ---------------------------------------------------------------------------
// KKT check
// ---------------------------------------------------------------------------

namespace {

/// Lawson-Hanson nonnegative least squares: min ||A x - b||, x >= 0.
Vector nnls(const Matrix& A, const Vector& b) {
  const Index k = A.cols();
  Vector x = Vector::Zero(k);
  if (k == 0) return x;
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  const double tol = 1e-14 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Vector& s) {
    std::vector<Index> idx;
    for (Index j = 0; j < k; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Matrix Ap(A.rows(), static_cast<Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Index>(c)) = A.col(idx[c]);
    const Vector sp = Ap.completeOrthogonalDecomposition().solve(b);
    s.setZero(k);
    for (std::size_t c = 0; c < idx.size(); ++c) s[idx[c]] = sp[static_cast<Index>(c)];
  };

  for (int outer = 0; outer < 3 * k + 10; ++outer) {
    const Vector grad = A.transpose() * (b - A * x);
    Index best = -1;
    double best_val = tol;
    for (Index j = 0; j < k; ++j)
      if (!passive[static_cast<std::size_t>(j)] && grad[j] > best_val) {
        best_val = grad[j];
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * k + 10; ++inner) {
      Vector s;
      solve_passive(s);
      bool all_positive = true;
      for (Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) all_positive = false;
      if (all_positive) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0)
          alpha = std::min(alpha, x[j] / (x[j] - s[j]));
      x += alpha * (s - x);
      for (Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
    }
  }
  return x;
}

}  // namespace

KktReport check_kkt(const ConvexProgram& prog, const Vector& w, double active_tol) {
  require(w.size() == prog.n_vars, ErrorCode::DimensionMismatch, "point length != n_vars");
  validate_program(prog);
  const Normalized P = normalize(prog);
  const Index n = P.n;

  Vector s;
  compute_slacks(P, w, s);  // may contain non-positive entries
  const std::vector<Vector> nl_grads = nonlinear_gradients(P, w);

  // Columns: gradient of each inequality c_i = -slack_i.
  const Index m = P.num_ineq();
  Matrix J = Matrix::Zero(n, m);
  Index k = 0;
  for (Index r = 0; r < P.G.rows(); ++r) J.col(k++) = P.G.row(r).transpose();
  for (Index j : P.lo_idx) J(j, k++) = -1.0;
  for (Index j : P.up_idx) J(j, k++) = 1.0;
  for (std::size_t i = 0; i < P.nl.size(); ++i) J.col(k++) = nl_grads[i];

  std::vector<Index> active;
  for (Index i = 0; i < m; ++i)
    if (s[i] <= active_tol) active.push_back(i);

  const Vector grad0 = P.objective->gradient(w);
  const Matrix proj =
      P.A.rows() > 0 ? Matrix(P.Z * P.Z.transpose()) : Matrix(Matrix::Identity(n, n));
  Matrix Ja(n, static_cast<Index>(active.size()));
  for (std::size_t c = 0; c < active.size(); ++c) Ja.col(static_cast<Index>(c)) = J.col(active[c]);
  const Vector lambda_active = nnls(proj * Ja, -(proj * grad0));

  KktReport report;
  report.multipliers = Vector::Zero(m);
  for (std::size_t c = 0; c < active.size(); ++c)
    report.multipliers[active[c]] = lambda_active[static_cast<Index>(c)];

  const Vector residual = proj * (grad0 + J * report.multipliers);
  report.stationarity = residual.size() ? residual.cwiseAbs().maxCoeff() : 0.0;
  double primal = m > 0 ? std::max(0.0, -s.minCoeff()) : 0.0;
  if (P.A.rows() > 0) primal = std::max(primal, (P.A * w - P.b).cwiseAbs().maxCoeff());
  report.primal = primal;
  report.complementarity =
      m > 0 ? (report.multipliers.array() * s.array()).abs().maxCoeff() : 0.0;
  return report;
}

}  // namespace drc
