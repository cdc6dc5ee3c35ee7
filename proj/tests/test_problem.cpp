#include "doctest.h"

#include "drc/problem.hpp"
#include "drc/scenarios.hpp"

#include <random>

using namespace drc;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

ProblemSpec small_spec() {
  ProblemSpec spec;
  spec.dim_u = 3;
  spec.dim_x = 3;
  spec.loss = Bilinear{-Matrix::Identity(3, 3), Vector::Zero(3), Vector::Zero(3), 0.0};
  spec.input_set = SimplexSet{3};
  spec.support = {Vector::Constant(3, -1.0), Vector::Constant(3, 1.0)};
  spec.constraints.push_back({Vector::Unit(3, 0), Identity{}, TwoSided{0.3, 0.4}});
  return spec;
}

}  // namespace

TEST_CASE("validate_problem accepts the three-asset portfolio") {
  const ValidatedProblem p = validate_problem(portfolio_problem(Vector3d(0.4, 0.2, 0.1)));
  CHECK(p.dim_u() == 3);
  CHECK(p.dim_x() == 3);
  CHECK(p.num_constraints() == 3);
}

TEST_CASE("validate_problem error paths") {
  SUBCASE("projection of the wrong length") {
    ProblemSpec spec = small_spec();
    spec.constraints[0].q = Vector::Ones(2);
    CHECK_THROWS_AS(validate_problem(spec), Error);
    try {
      validate_problem(spec);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }
  SUBCASE("negative radius") {
    ProblemSpec spec = small_spec();
    spec.constraints[0].kind = TwoSided{0.3, -0.1};
    try {
      validate_problem(spec);
      FAIL("expected NegativeRadius");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NegativeRadius);
    }
  }
  SUBCASE("empty support") {
    ProblemSpec spec = small_spec();
    spec.support.upper[1] = -1.0;
    try {
      validate_problem(spec);
      FAIL("expected EmptySupport");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptySupport);
    }
  }
  SUBCASE("loss of the wrong shape") {
    ProblemSpec spec = small_spec();
    std::get<Bilinear>(spec.loss).A = Matrix::Zero(2, 3);
    try {
      validate_problem(spec);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }
  SUBCASE("zero constraints are legal") {
    ProblemSpec spec = small_spec();
    spec.constraints.clear();
    CHECK(validate_problem(spec).num_constraints() == 0);
  }
}

TEST_CASE("evaluate_loss") {
  const LossForm portfolio = Bilinear{-Matrix::Identity(3, 3), Vector::Zero(3), Vector::Zero(3), 0.0};
  CHECK(evaluate_loss(portfolio, Vector3d(0, 0, 1), Vector3d(0.2, 0.1, 0.1)) ==
        doctest::Approx(-0.1).epsilon(1e-15));

  const LossForm norm = NormAffine{Matrix::Zero(2, 0), Matrix::Identity(2, 2), Vector::Zero(2)};
  CHECK(evaluate_loss(norm, Vector(0), Vector2d(3, 4)) == doctest::Approx(5.0));

  const LossForm zero = Bilinear{Matrix::Zero(2, 3), Vector::Zero(2), Vector::Zero(3), 0.0};
  CHECK(evaluate_loss(zero, Vector2d(0.3, -2), Vector3d(1, 2, 3)) == 0.0);

  CHECK_THROWS_AS(evaluate_loss(portfolio, Vector2d(0, 1), Vector3d(0, 0, 0)), Error);
}

TEST_CASE("evaluate_g") {
  CHECK(evaluate_g(GFun{Power{2}}, 0.5) == 0.25);
  CHECK(evaluate_g(GFun{IndicatorGeq{0.0}}, -0.3) == 0.0);
  CHECK(evaluate_g(GFun{IndicatorGeq{0.0}}, 0.0) == 1.0);
  CHECK(evaluate_g(GFun{Identity{}}, 1.7) == 1.7);
}

TEST_CASE("expand_two_sided") {
  const ProblemSpec spec = small_spec();
  const ProblemSpec expanded = expand_two_sided(spec);
  REQUIRE(expanded.constraints.size() == 2);
  const auto& hi = std::get<UpperBound>(expanded.constraints[0].kind);
  const auto& lo = std::get<UpperBound>(expanded.constraints[1].kind);
  CHECK(!hi.negated);
  CHECK(hi.level == doctest::Approx(0.7));
  CHECK(lo.negated);
  CHECK(lo.level == doctest::Approx(0.1));
  REQUIRE(hi.origin.has_value());
  REQUIRE(lo.origin.has_value());
  CHECK(hi.origin->pair == lo.origin->pair);
  CHECK(hi.origin->center == 0.3);
  CHECK(hi.origin->radius == 0.4);

  ProblemSpec none = small_spec();
  none.constraints.clear();
  CHECK(expand_two_sided(none) == none);

  ProblemSpec one = small_spec();
  one.constraints[0].kind = UpperBound{0.5};
  const ProblemSpec same = expand_two_sided(one);
  CHECK(same == one);
  CHECK(!std::get<UpperBound>(same.constraints[0].kind).origin.has_value());
}

TEST_CASE("two-sided expansion is equivalent on sampled distributions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    ProblemSpec spec = small_spec();
    const Vector q = Vector3d(unit(rng), unit(rng), unit(rng));
    const GFun g = trial % 2 ? GFun{Power{2}} : GFun{Identity{}};
    const double center = unit(rng), radius = 0.5 * (unit(rng) + 1.0);
    spec.constraints = {{q, g, TwoSided{center, radius}}};
    const ProblemSpec expanded = expand_two_sided(spec);

    const int n = count(rng);
    std::vector<Vector> points;
    for (int k = 0; k < n; ++k) points.push_back(Vector3d(unit(rng), unit(rng), unit(rng)));

    double mean_g = 0.0;
    for (const auto& x : points) mean_g += evaluate_g(g, q.dot(x)) / n;
    const bool original = std::abs(mean_g - center) <= radius;

    bool both = true;
    for (const auto& c : expanded.constraints) {
      double avg = 0.0;
      for (const auto& x : points) avg += upper_bound_function(c, x) / n;
      both = both && avg <= 0.0;
    }
    // Boundary cases differ only by rounding; skip them.
    if (std::abs(std::abs(mean_g - center) - radius) > 1e-12) CHECK(original == both);
  }
}

TEST_CASE("g and loss properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  const Bilinear bl{Matrix::Random(2, 3), Vector::Random(2), Vector::Random(3), 0.7};
  const NormAffine na{Matrix::Random(2, 2), Matrix::Random(2, 3), Vector::Random(2)};
  for (int i = 0; i < 200; ++i) {
    const double z = unit(rng);
    CHECK(evaluate_g(GFun{Power{1}}, z) == evaluate_g(GFun{Identity{}}, z));

    const Vector u1 = Vector2d(unit(rng), unit(rng));
    const Vector u2 = Vector2d(unit(rng), unit(rng));
    const Vector x = Vector3d(unit(rng), unit(rng), unit(rng));
    const double lhs = evaluate_loss(LossForm{bl}, u1, x) + evaluate_loss(LossForm{bl}, u2, x);
    const double rhs = evaluate_loss(LossForm{bl}, Vector(u1 + u2), x) +
                       evaluate_loss(LossForm{bl}, Vector(Vector::Zero(2)), x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(evaluate_loss(LossForm{na}, u1, x) >= 0.0);
  }
}

TEST_CASE("input set helpers") {
  ProductSet product;
  product.blocks.push_back(SimplexSet{2});
  product.blocks.push_back(BoxSet{Vector::Constant(2, -1.0), Vector::Constant(2, 3.0)});
  const InputSet set = product;
  CHECK(input_dim(set) == 4);
  const Vector c = input_center(set);
  CHECK(c[0] == 0.5);
  CHECK(c[1] == 0.5);
  CHECK(c[2] == 1.0);
  CHECK(c[3] == 1.0);
}
