#include "drc/problem.hpp"

#include <limits>

namespace drc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NegativeRadius: return "NegativeRadius";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::MaxIters: return "MaxIters";
    case ErrorCode::UnsupportedGFun: return "UnsupportedGFun";
    case ErrorCode::UnsupportedLoss: return "UnsupportedLoss";
    case ErrorCode::SlackResidual: return "SlackResidual";
    case ErrorCode::InfeasibleSamplePlacement: return "InfeasibleSamplePlacement";
    case ErrorCode::MissingPairing: return "MissingPairing";
    case ErrorCode::EmptyCutSet: return "EmptyCutSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

bool is_affine(const GFun& g) {
  if (std::holds_alternative<Identity>(g)) return true;
  if (const auto* p = std::get_if<Power>(&g)) return p->exponent == 1;
  return false;
}

namespace {

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

}  // namespace

bool operator==(const ProjectionConstraint& a, const ProjectionConstraint& b) {
  return same_vector(a.q, b.q) && a.g == b.g && a.kind == b.kind;
}

bool operator==(const Bilinear& a, const Bilinear& b) {
  return same_matrix(a.A, b.A) && same_vector(a.b, b.b) && same_vector(a.c, b.c) && a.d == b.d;
}

bool operator==(const NormAffine& a, const NormAffine& b) {
  return same_matrix(a.F, b.F) && same_matrix(a.G, b.G) && same_vector(a.h, b.h);
}

bool operator==(const BoxSet& a, const BoxSet& b) {
  return same_vector(a.lower, b.lower) && same_vector(a.upper, b.upper);
}

bool operator==(const SimplexSet& a, const SimplexSet& b) { return a.dim == b.dim; }

bool operator==(const ProductSet& a, const ProductSet& b) { return a.blocks == b.blocks; }

bool operator==(const SupportSet& a, const SupportSet& b) {
  return same_vector(a.lower, b.lower) && same_vector(a.upper, b.upper);
}

bool operator==(const ProblemSpec& a, const ProblemSpec& b) {
  return a.dim_u == b.dim_u && a.dim_x == b.dim_x && a.loss == b.loss &&
         a.input_set == b.input_set && a.support == b.support &&
         a.constraints == b.constraints && a.name == b.name;
}

namespace {

Index block_dim(const InputBlock& block) {
  if (const auto* box = std::get_if<BoxSet>(&block)) return box->size();
  return std::get<SimplexSet>(block).dim;
}

}  // namespace

std::vector<std::pair<Index, InputBlock>> input_blocks(const InputSet& set) {
  std::vector<std::pair<Index, InputBlock>> out;
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    out.emplace_back(0, *box);
  } else if (const auto* simplex = std::get_if<SimplexSet>(&set)) {
    out.emplace_back(0, *simplex);
  } else {
    Index offset = 0;
    for (const auto& block : std::get<ProductSet>(set).blocks) {
      out.emplace_back(offset, block);
      offset += block_dim(block);
    }
  }
  return out;
}

Index input_dim(const InputSet& set) {
  Index n = 0;
  for (const auto& [offset, block] : input_blocks(set)) n = offset + block_dim(block);
  return n;
}

Vector input_center(const InputSet& set) {
  Vector out(input_dim(set));
  for (const auto& [offset, block] : input_blocks(set)) {
    if (const auto* box = std::get_if<BoxSet>(&block)) {
      out.segment(offset, box->size()) = 0.5 * (box->lower + box->upper);
    } else {
      const Index dim = std::get<SimplexSet>(block).dim;
      out.segment(offset, dim).setConstant(1.0 / static_cast<double>(dim));
    }
  }
  return out;
}

bool SupportSet::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
}

Vector SupportSet::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

namespace {

void check_box(const BoxSet& box, const std::string& what) {
  require(box.lower.size() == box.upper.size(), ErrorCode::DimensionMismatch,
          what + ": lower/upper length differ");
  require((box.lower.array() <= box.upper.array()).all(), ErrorCode::InvalidArgument,
          what + ": lower exceeds upper");
}

void check_input_set(const InputSet& set, Index dim_u) {
  for (const auto& [offset, block] : input_blocks(set)) {
    if (const auto* box = std::get_if<BoxSet>(&block)) {
      check_box(*box, "input box");
    } else {
      require(std::get<SimplexSet>(block).dim >= 1, ErrorCode::DimensionMismatch,
              "simplex block must have positive dimension");
    }
  }
  require(input_dim(set) == dim_u, ErrorCode::DimensionMismatch,
          "input set dimension " + std::to_string(input_dim(set)) + " != dim_u " +
              std::to_string(dim_u));
}

void check_loss(const LossForm& loss, Index dim_u, Index dim_x) {
  if (const auto* bl = std::get_if<Bilinear>(&loss)) {
    require(bl->A.rows() == dim_u && bl->A.cols() == dim_x, ErrorCode::DimensionMismatch,
            "bilinear A must be dim_u x dim_x");
    require(bl->b.size() == dim_u, ErrorCode::DimensionMismatch, "bilinear b must have dim_u");
    require(bl->c.size() == dim_x, ErrorCode::DimensionMismatch, "bilinear c must have dim_x");
    return;
  }
  const auto& na = std::get<NormAffine>(loss);
  require(na.F.cols() == dim_u, ErrorCode::DimensionMismatch, "F must have dim_u columns");
  require(na.G.cols() == dim_x, ErrorCode::DimensionMismatch, "G must have dim_x columns");
  require(na.F.rows() == na.h.size() && na.G.rows() == na.h.size(), ErrorCode::DimensionMismatch,
          "F, G and h must have matching rows");
}

}  // namespace

ValidatedProblem validate_problem(ProblemSpec spec) {
  require(spec.dim_u >= 1 && spec.dim_x >= 1, ErrorCode::DimensionMismatch,
          "dimensions must be positive");
  check_loss(spec.loss, spec.dim_u, spec.dim_x);
  check_input_set(spec.input_set, spec.dim_u);

  require(spec.support.lower.size() == spec.dim_x && spec.support.upper.size() == spec.dim_x,
          ErrorCode::DimensionMismatch, "support box must have dim_x coordinates");
  for (Index j = 0; j < spec.dim_x; ++j) {
    require(spec.support.lower[j] < spec.support.upper[j], ErrorCode::EmptySupport,
            "support coordinate " + std::to_string(j) + " has lower >= upper");
  }

  for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
    const auto& c = spec.constraints[i];
    const std::string tag = "constraint " + std::to_string(i);
    require(c.q.size() == spec.dim_x, ErrorCode::DimensionMismatch,
            tag + ": q has length " + std::to_string(c.q.size()) + ", expected " +
                std::to_string(spec.dim_x));
    if (const auto* p = std::get_if<Power>(&c.g)) {
      require(p->exponent >= 1, ErrorCode::InvalidArgument, tag + ": power exponent must be >= 1");
    }
    if (const auto* ts = std::get_if<TwoSided>(&c.kind)) {
      require(ts->radius >= 0.0, ErrorCode::NegativeRadius, tag + ": negative radius");
    }
  }
  return ValidatedProblem(std::move(spec));
}

ProblemSpec expand_two_sided(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  out.constraints.clear();
  for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
    const auto& c = spec.constraints[i];
    const auto* ts = std::get_if<TwoSided>(&c.kind);
    if (!ts) {
      out.constraints.push_back(c);
      continue;
    }
    const PairOrigin origin{i, ts->center, ts->radius};
    out.constraints.push_back({c.q, c.g, UpperBound{ts->center + ts->radius, false, origin}});
    out.constraints.push_back({c.q, c.g, UpperBound{ts->radius - ts->center, true, origin}});
  }
  return out;
}

double upper_bound_function(const ProjectionConstraint& c, const Vector& x) {
  const auto* ub = std::get_if<UpperBound>(&c.kind);
  require(ub != nullptr, ErrorCode::InvalidArgument, "constraint is not expanded");
  const double gz = evaluate_g(c.g, c.q.dot(x));
  return (ub->negated ? -gz : gz) - ub->level;
}

void require_solver_supported(const ProblemSpec& spec) {
  for (const auto& c : spec.constraints) {
    require(!std::holds_alternative<IndicatorGeq>(c.g), ErrorCode::UnsupportedGFun,
            "indicator constraints make the pessimization mixed-integer");
  }
}

}  // namespace drc
