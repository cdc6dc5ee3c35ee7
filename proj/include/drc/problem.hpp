#pragma once

#include "drc/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace drc {

// ---------------------------------------------------------------------------
// Projection functions g(z)
// ---------------------------------------------------------------------------

struct Identity {
  friend bool operator==(const Identity&, const Identity&) = default;
};

/// Raw moment z^p of the projection (not centered).
struct Power {
  int exponent = 1;
  friend bool operator==(const Power&, const Power&) = default;
};

struct IndicatorGeq {
  double threshold = 0.0;
  friend bool operator==(const IndicatorGeq&, const IndicatorGeq&) = default;
};

using GFun = std::variant<Identity, Power, IndicatorGeq>;

template <typename Scalar>
Scalar evaluate_g(const GFun& g, Scalar z) {
  if (std::holds_alternative<Identity>(g)) return z;
  if (const auto* p = std::get_if<Power>(&g)) {
    Scalar out(1);
    for (int k = 0; k < p->exponent; ++k) out *= z;
    return out;
  }
  return z >= std::get<IndicatorGeq>(g).threshold ? Scalar(1) : Scalar(0);
}

/// True when g is affine in z (Identity or Power(1)).
bool is_affine(const GFun& g);

// ---------------------------------------------------------------------------
// Projection constraints
// ---------------------------------------------------------------------------

/// |E[g(q'x)] - center| <= radius
struct TwoSided {
  double center = 0.0;
  double radius = 0.0;
  friend bool operator==(const TwoSided&, const TwoSided&) = default;
};

/// Records which two-sided constraint an expanded bound came from.
struct PairOrigin {
  std::size_t pair = 0;  // index of the originating TwoSided constraint
  double center = 0.0;
  double radius = 0.0;
  friend bool operator==(const PairOrigin&, const PairOrigin&) = default;
};

/// sign * E[g(q'x)] <= level, sign = -1 when `negated`.
struct UpperBound {
  double level = 0.0;
  bool negated = false;
  std::optional<PairOrigin> origin;
  friend bool operator==(const UpperBound&, const UpperBound&) = default;
};

using ConstraintKind = std::variant<TwoSided, UpperBound>;

struct ProjectionConstraint {
  Vector q;
  GFun g;
  ConstraintKind kind;
};

bool operator==(const ProjectionConstraint& a, const ProjectionConstraint& b);

// ---------------------------------------------------------------------------
// Loss forms
// ---------------------------------------------------------------------------

/// l(u, x) = u'Ax + b'u + c'x + d
struct Bilinear {
  Matrix A;
  Vector b;
  Vector c;
  double d = 0.0;
};

/// l(u, x) = ||F u + G x + h||_2
struct NormAffine {
  Matrix F;
  Matrix G;
  Vector h;
};

using LossForm = std::variant<Bilinear, NormAffine>;

bool operator==(const Bilinear& a, const Bilinear& b);
bool operator==(const NormAffine& a, const NormAffine& b);

template <typename DerivedU, typename DerivedX>
typename DerivedU::Scalar evaluate_loss(const LossForm& loss, const Eigen::MatrixBase<DerivedU>& u,
                                        const Eigen::MatrixBase<DerivedX>& x) {
  using Scalar = typename DerivedU::Scalar;
  if (const auto* bl = std::get_if<Bilinear>(&loss)) {
    require(bl->A.rows() == u.size() && bl->A.cols() == x.size() && bl->b.size() == u.size() &&
                bl->c.size() == x.size(),
            ErrorCode::DimensionMismatch, "bilinear loss does not match (u, x)");
    return Scalar(u.dot(bl->A * x) + bl->b.dot(u) + bl->c.dot(x) + bl->d);
  }
  const auto& na = std::get<NormAffine>(loss);
  require(na.F.cols() == u.size() && na.G.cols() == x.size() && na.F.rows() == na.h.size() &&
              na.G.rows() == na.h.size(),
          ErrorCode::DimensionMismatch, "norm-affine loss does not match (u, x)");
  return Scalar((na.F * u + na.G * x + na.h).norm());
}

// ---------------------------------------------------------------------------
// Input and support sets
// ---------------------------------------------------------------------------

struct BoxSet {
  Vector lower;
  Vector upper;
  Index size() const { return lower.size(); }
};

/// Probability simplex {u >= 0, sum(u) = 1}.
struct SimplexSet {
  Index dim = 0;
};

using InputBlock = std::variant<BoxSet, SimplexSet>;

struct ProductSet {
  std::vector<InputBlock> blocks;
};

using InputSet = std::variant<BoxSet, SimplexSet, ProductSet>;

bool operator==(const BoxSet& a, const BoxSet& b);
bool operator==(const SimplexSet& a, const SimplexSet& b);
bool operator==(const ProductSet& a, const ProductSet& b);

Index input_dim(const InputSet& set);

/// Flattened view of the input set: blocks in order with their offsets.
std::vector<std::pair<Index, InputBlock>> input_blocks(const InputSet& set);

/// A point strictly inside the input set (uniform on simplices, box midpoint).
Vector input_center(const InputSet& set);

/// Support of x. Boxes only.
struct SupportSet {
  Vector lower;
  Vector upper;
  Index size() const { return lower.size(); }
  bool contains(const Vector& x, double tol = 1e-9) const;
  Vector clamp(const Vector& x) const;
};

bool operator==(const SupportSet& a, const SupportSet& b);

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

struct ProblemSpec {
  Index dim_u = 0;
  Index dim_x = 0;
  LossForm loss;
  InputSet input_set;
  SupportSet support;
  std::vector<ProjectionConstraint> constraints;
  std::string name;
};

bool operator==(const ProblemSpec& a, const ProblemSpec& b);

/// A ProblemSpec that passed validate_problem. Immutable.
class ValidatedProblem {
 public:
  const ProblemSpec& spec() const { return spec_; }
  Index dim_u() const { return spec_.dim_u; }
  Index dim_x() const { return spec_.dim_x; }
  std::size_t num_constraints() const { return spec_.constraints.size(); }

 private:
  friend ValidatedProblem validate_problem(ProblemSpec spec);
  explicit ValidatedProblem(ProblemSpec spec) : spec_(std::move(spec)) {}
  ProblemSpec spec_;
};

ValidatedProblem validate_problem(ProblemSpec spec);

/// Replace every TwoSided constraint by
///   E[g] <= center + radius   and   -E[g] <= radius - center,
/// tagging both with the same PairOrigin. UpperBound constraints pass through.
ProblemSpec expand_two_sided(const ProblemSpec& spec);

/// Value of sign * g(q'x) - level for an expanded (UpperBound) constraint.
double upper_bound_function(const ProjectionConstraint& c, const Vector& x);

/// Rejects IndicatorGeq, which the solvers cannot handle.
void require_solver_supported(const ProblemSpec& spec);

}  // namespace drc
