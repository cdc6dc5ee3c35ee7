#include "drc/scenarios.hpp"

#include <random>

namespace drc {

Vector portfolio_centers() { return Eigen::Vector3d(0.3, -0.1, 0.2); }

ProblemSpec portfolio_problem(const Vector& eps) {
  require(eps.size() == 3, ErrorCode::DimensionMismatch, "portfolio needs three radii");
  ProblemSpec spec;
  spec.name = "portfolio";
  spec.dim_u = 3;
  spec.dim_x = 3;
  spec.loss = Bilinear{-Matrix::Identity(3, 3), Vector::Zero(3), Vector::Zero(3), 0.0};
  spec.input_set = SimplexSet{3};
  spec.support = {Vector::Constant(3, -1.0), Vector::Constant(3, 1.0)};
  const Vector centers = portfolio_centers();
  for (Index i = 0; i < 3; ++i)
    spec.constraints.push_back({Vector::Unit(3, i), Identity{}, TwoSided{centers[i], eps[i]}});
  return validate_problem(std::move(spec)).spec();
}

bool PortfolioOracle::on_optimal_face(const Vector& u, double tol) const {
  if (u.size() != coefficients.size()) return false;
  if (std::abs(u.sum() - 1.0) > tol || u.minCoeff() < -tol) return false;
  for (Index j = 0; j < u.size(); ++j) {
    const bool on_face = std::any_of(vertices.begin(), vertices.end(),
                                     [j](const Vector& v) { return v[j] == 1.0; });
    if (!on_face && u[j] > tol) return false;
  }
  return true;
}

PortfolioOracle portfolio_lp_oracle(const Vector& eps) {
  require(eps.size() == 3, ErrorCode::DimensionMismatch, "portfolio needs three radii");
  require((eps.array() >= 0.0).all(), ErrorCode::NegativeRadius, "radii must be nonnegative");
  PortfolioOracle out;
  // the worst-case mean of x_i cannot leave the support [-1, 1]
  out.coefficients = (portfolio_centers() - eps).cwiseMax(-1.0);
  out.value = out.coefficients.maxCoeff();
  for (Index j = 0; j < 3; ++j)
    if (out.coefficients[j] >= out.value - 1e-12) out.vertices.push_back(Vector::Unit(3, j));
  out.u_star = out.vertices.front();
  return out;
}

ProblemSpec volatility_problem() {
  ProblemSpec spec = portfolio_problem(Eigen::Vector3d(0.4, 0.2, 0.1));
  spec.name = "volatility";
  const Vector second = Eigen::Vector3d(0.34, 0.26, 0.10);
  for (Index i = 0; i < 3; ++i)
    spec.constraints.push_back({Vector::Unit(3, i), Power{2}, TwoSided{second[i], 0.05}});
  return spec;
}

LinearSystem<double> default_system(int T, const Eigen::Vector2d& goal) {
  require(T >= 1, ErrorCode::InvalidArgument, "horizon must be >= 1");
  LinearSystem<double> sys;
  sys.A << 0.4, 1.5, 0.0, 0.9;
  sys.B << 0.0, 1.0;
  sys.T = T;
  sys.goal = goal;
  return sys;
}

BoxSet initial_state_box() { return {Vector::Constant(2, -0.3), Vector::Constant(2, 0.3)}; }

ProblemSpec trajectory_problem(int T, const Eigen::Vector2d& goal) {
  const LinearSystem<double> sys = default_system(T, goal);
  Matrix F(2, T);
  Eigen::Matrix2d power = Eigen::Matrix2d::Identity();
  for (int tau = T - 1; tau >= 0; --tau) {
    F.col(tau) = power * sys.B;
    power = power * sys.A;
  }

  ProblemSpec spec;
  spec.name = "trajectory";
  spec.dim_u = T;
  spec.dim_x = 2;
  spec.loss = NormAffine{F, power, -goal};
  spec.input_set = BoxSet{Vector::Constant(T, -0.1), Vector::Constant(T, 0.1)};
  const BoxSet box = initial_state_box();
  spec.support = {box.lower, box.upper};
  spec.constraints.push_back({Vector::Unit(2, 0), Identity{}, TwoSided{0.1, 0.1}});
  spec.constraints.push_back({Vector::Unit(2, 1), Identity{}, TwoSided{-0.1, 0.2}});
  return validate_problem(std::move(spec)).spec();
}

std::vector<StatePath> monte_carlo_trajectories(const LinearSystem<double>& sys, const Vector& u_seq,
                                                int n_draws, std::uint64_t seed,
                                                const BoxSet& support) {
  require(n_draws >= 1, ErrorCode::InvalidArgument, "need at least one draw");
  require(support.size() == 2, ErrorCode::DimensionMismatch, "initial-state support must be 2-D");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<StatePath> paths;
  paths.reserve(static_cast<std::size_t>(n_draws));
  for (int d = 0; d < n_draws; ++d) {
    Eigen::Vector2d x0;
    for (Index j = 0; j < 2; ++j)
      x0[j] = support.lower[j] + unit(rng) * (support.upper[j] - support.lower[j]);
    paths.push_back(rollout<double>(sys, x0, u_seq));
  }
  return paths;
}

}  // namespace drc
