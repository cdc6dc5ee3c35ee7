#include "doctest.h"

#include "drc/best_response.hpp"
#include "drc/scenarios.hpp"

#include <random>

using namespace drc;
using Eigen::Vector3d;

namespace {

ValidatedProblem portfolio(double e1, double e2, double e3) {
  return validate_problem(portfolio_problem(Vector3d(e1, e2, e3)));
}

DiscreteDistribution single(const Vector& x) { return {{x}}; }

Vector mean(const DiscreteDistribution& d) {
  Vector m = Vector::Zero(d.points.front().size());
  for (const auto& x : d.points) m += x;
  return m / static_cast<double>(d.size());
}

Vector random_simplex(std::mt19937_64& rng, Index n) {
  std::exponential_distribution<double> e(1.0);
  Vector u(n);
  for (Index i = 0; i < n; ++i) u[i] = e(rng);
  return u / u.sum();
}

}  // namespace

TEST_CASE("uniform_distribution") {
  const auto p = portfolio(0.4, 0.2, 0.1);
  const SupportSet& support = p.spec().support;
  const auto a = uniform_distribution(support, 20, 7);
  const auto b = uniform_distribution(support, 20, 7);
  REQUIRE(a.size() == 20);
  for (Index k = 0; k < a.size(); ++k) {
    CHECK(support.contains(a.points[k], 0.0));
    CHECK(a.points[k] == b.points[k]);
  }
  const auto round_trip = DiscreteDistribution::unflatten(a.flatten(), 3);
  CHECK(round_trip.points == a.points);
  CHECK_THROWS_AS(uniform_distribution(support, 0, 0), Error);
}

TEST_CASE("min_step examples") {
  SUBCASE("single sample picks the best asset") {
    const auto p = portfolio(0.4, 0.2, 0.1);
    const Vector u = min_step(p, single(Vector3d(0.2, 0.1, 0.1)));
    CHECK((u - Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("identical assets give objective 1 for any weights") {
    const auto p = portfolio(0.4, 0.2, 0.1);
    const auto dist = single(Vector3d(-1, -1, -1));
    const Vector u = min_step(p, dist);
    CHECK(u.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sample_average_loss(p.spec(), u, dist) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("trajectory from the origin needs no control") {
    const auto p = validate_problem(trajectory_problem(50, Eigen::Vector2d::Zero()));
    const auto dist = single(Eigen::Vector2d::Zero());
    const Vector u = min_step(p, dist);
    CHECK(u.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(sample_average_loss(p.spec(), u, dist) <= 1e-6);
  }
  SUBCASE("samples outside the support are rejected") {
    CHECK_THROWS_AS(min_step(portfolio(0.4, 0.2, 0.1), single(Vector3d(2, 0, 0))), Error);
  }
}

TEST_CASE("max_step examples") {
  SUBCASE("worst case pins the mean of the held asset") {
    const auto p = portfolio(0.4, 0.2, 0.1);
    const auto init = uniform_distribution(p.spec().support, 50, 0);
    const auto r = max_step(p, Vector3d(0, 0, 1), 50, init);
    CHECK(r.certified);
    CHECK(r.objective == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(mean(r.dist)[2] == doctest::Approx(0.1).epsilon(1e-6));
  }
  SUBCASE("without constraints every point moves to the low corner") {
    const auto p = portfolio(2, 2, 2);
    const auto init = uniform_distribution(p.spec().support, 10, 1);
    const auto r = max_step(p, Vector3d(0.2, 0.3, 0.5), 10, init);
    for (const auto& x : r.dist.points) CHECK((x - Vector3d(-1, -1, -1)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("a pinned mean fixes a single point") {
    const auto p = portfolio(0, 2, 2);
    const auto r = max_step(p, Vector3d(1, 0, 0), 1, single(Vector3d(0, 0, 0)));
    CHECK(r.dist.points[0][0] == doctest::Approx(0.3).epsilon(1e-9));
  }
  SUBCASE("contradictory averages cannot be placed") {
    ProblemSpec spec = portfolio_problem(Vector3d(0, 2, 2));
    spec.constraints.push_back({Vector3d(1, 0, 0), Identity{}, UpperBound{0.1, false, std::nullopt}});
    const auto p = validate_problem(spec);
    try {
      max_step(p, Vector3d(1, 0, 0), 4, uniform_distribution(p.spec().support, 4, 0));
      FAIL("expected InfeasibleSamplePlacement");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InfeasibleSamplePlacement);
    }
  }
  SUBCASE("init must match n") {
    const auto p = portfolio(0.4, 0.2, 0.1);
    CHECK_THROWS_AS(max_step(p, Vector3d(0, 0, 1), 3, uniform_distribution(p.spec().support, 2, 0)), Error);
  }
}

TEST_CASE("detect_cycle") {
  const Vector a = Vector3d(0, 0, 1), b = Vector3d(1, 0, 0);
  CHECK(detect_cycle({a, b, a, b}, 1e-4).period == 2);
  CHECK(detect_cycle({b, a, b, a, b}, 1e-4).period == 2);
  CHECK(detect_cycle({a, a, a}, 1e-4).period == 1);
  const Vector c = Vector3d(0, 1, 0);
  CHECK(detect_cycle({a, b, c, a, b, c}, 1e-4).period == 3);
  std::vector<Vector> monotone;
  for (int k = 0; k < 6; ++k) monotone.push_back(Vector::Constant(1, k));
  CHECK_FALSE(detect_cycle(monotone, 1e-4).period.has_value());
  CHECK_FALSE(detect_cycle({a}, 1e-4).period.has_value());
}

TEST_CASE("run_best_response") {
  SUBCASE("alternating stub steps are reported as a cycle") {
    const auto p = portfolio(0.4, 0.2, 0.1);
    const auto init = uniform_distribution(p.spec().support, 5, 0);
    int calls = 0;
    BestResponseSteps steps;
    steps.min = [&calls](const DiscreteDistribution&) {
      return Vector(++calls % 2 ? Vector3d(0, 0, 1) : Vector3d(1, 0, 0));
    };
    steps.max = [](const Vector&, const DiscreteDistribution& d) { return MaxStepResult{d, 0.0, true}; };
    const SolveReport r = run_best_response(p, init, {}, steps);
    CHECK(r.status == SolveStatus::Cycling);
    CHECK(r.cycle_period == 2);
    CHECK(r.iterations == 4);
    REQUIRE(r.cycle_controls.size() == 2);
    CHECK(r.cycle_controls[0] == Vector(Vector3d(0, 0, 1)));
  }
  SUBCASE("small radii converge to the best mean") {
    const auto p = portfolio(1e-3, 1e-3, 1e-3);
    const SolveReport r = run_best_response(p, uniform_distribution(p.spec().support, 50, 0));
    CHECK(r.status == SolveStatus::Converged);
    CHECK((r.u_star - Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(r.value == doctest::Approx(-0.299).epsilon(1e-6));
    CHECK(r.method == Method::BestResponse);
    CHECK(r.history.size() == static_cast<std::size_t>(r.iterations));
  }
  SUBCASE("budget exhaustion") {
    const auto p = portfolio(0.4, 0.2, 0.1);
    BestResponseParams params;
    params.max_iters = 1;
    const SolveReport r = run_best_response(p, uniform_distribution(p.spec().support, 10, 0), params);
    CHECK(r.status == SolveStatus::MaxIters);
    CHECK(r.iterations == 1);
  }
}

TEST_CASE("max_step placements satisfy the averaged constraints") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> radius(0.02, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const auto p = portfolio(radius(rng), radius(rng), radius(rng));
    const auto init = uniform_distribution(p.spec().support, 20, trial);
    const auto r = max_step(p, random_simplex(rng, 3), 20, init);
    CHECK(averaged_constraints(p.spec(), r.dist).maxCoeff() <= 1e-6);
    for (const auto& x : r.dist.points) CHECK(p.spec().support.contains(x, 1e-9));
  }
  SUBCASE("trajectory placements through DCCP") {
    const auto p = validate_problem(trajectory_problem(10, Eigen::Vector2d::Zero()));
    for (int trial = 0; trial < 3; ++trial) {
      const Vector u = Vector::Constant(10, 0.02 * trial);
      const auto r = max_step(p, u, 20, uniform_distribution(p.spec().support, 20, trial));
      CHECK_FALSE(r.certified);
      CHECK(averaged_constraints(p.spec(), r.dist).maxCoeff() <= 1e-6);
      for (const auto& x : r.dist.points) CHECK(p.spec().support.contains(x, 1e-9));
    }
  }
}

TEST_CASE("min_step beats every simplex vertex") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = portfolio(0.4, 0.2, 0.1);
    const auto dist = uniform_distribution(p.spec().support, 10, 100 + trial);
    const double best = sample_average_loss(p.spec(), min_step(p, dist), dist);
    for (Index i = 0; i < 3; ++i)
      CHECK(best <= sample_average_loss(p.spec(), Vector::Unit(3, i), dist) + 1e-7);
  }
}

TEST_CASE("best-response value chain") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> radius(0.05, 0.6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = portfolio(radius(rng), radius(rng), radius(rng));
    const int n = 15;
    const Vector u0 = random_simplex(rng, 3);
    const auto dist1 = max_step(p, u0, n, uniform_distribution(p.spec().support, n, trial)).dist;
    const Vector u1 = min_step(p, dist1);
    CHECK(sample_average_loss(p.spec(), u1, dist1) <= sample_average_loss(p.spec(), u0, dist1) + 1e-8);
    const auto r = max_step(p, u1, n, dist1);
    CHECK(r.objective >= sample_average_loss(p.spec(), u1, dist1) - 1e-7);
  }
}

TEST_CASE("best response is deterministic") {
  const auto p = portfolio(2, 2, 2);
  const auto init = uniform_distribution(p.spec().support, 30, 3);
  const SolveReport a = run_best_response(p, init);
  const SolveReport b = run_best_response(p, init);
  REQUIRE(a.u_history.size() == b.u_history.size());
  for (std::size_t k = 0; k < a.u_history.size(); ++k) CHECK(a.u_history[k] == b.u_history[k]);
}
