#pragma once

#include "drc/problem.hpp"

#include <cstdint>
#include <vector>

namespace drc {

// ---------------------------------------------------------------------------
// Portfolio scenarios
// ---------------------------------------------------------------------------

/// Three assets, loss -u'x, u on the simplex, x in [-1, 1]^3 and
/// |E[x_i] - c_i| <= eps_i with c = (0.3, -0.1, 0.2).
ProblemSpec portfolio_problem(const Vector& eps);

Vector portfolio_centers();

struct PortfolioOracle {
  Vector coefficients;             // max(c_i - eps_i, -1)
  std::vector<Vector> vertices;    // simplex vertices spanning the optimal face
  Vector u_star;                   // first optimal vertex
  double value = 0.0;              // worst-case expected return
  double drc_value() const { return -value; }
  /// Distance-free membership test: u on the simplex, zero weight off the face.
  bool on_optimal_face(const Vector& u, double tol) const;
};

/// Closed form of the worst-case portfolio problem: maximize
/// max(c - eps, -1)'u over the simplex, the lower clip being the support edge.
/// Coefficients within 1e-12 of the maximum count as ties.
PortfolioOracle portfolio_lp_oracle(const Vector& eps);

/// portfolio_problem((0.4, 0.2, 0.1)) plus |E[x_i^2] - v_i| <= 0.05 with
/// v = (0.34, 0.26, 0.10).
ProblemSpec volatility_problem();

// ---------------------------------------------------------------------------
// Linear dynamics
// ---------------------------------------------------------------------------

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

/// x_{t+1} = A x_t + B u_t over a horizon T.
template <typename Scalar = double>
struct LinearSystem {
  Mat2<Scalar> A;
  Vec2<Scalar> B;
  int T = 1;
  Vec2<Scalar> goal = Vec2<Scalar>::Zero();
};

LinearSystem<double> default_system(int T, const Eigen::Vector2d& goal = Eigen::Vector2d::Zero());

/// Support of the initial state, [-0.3, 0.3]^2.
BoxSet initial_state_box();

template <typename Scalar>
std::vector<Vec2<Scalar>> rollout(const LinearSystem<Scalar>& sys, const Vec2<Scalar>& x0,
                                  const VectorX<Scalar>& u_seq) {
  require(u_seq.size() == sys.T, ErrorCode::LengthMismatch,
          "control sequence has " + std::to_string(u_seq.size()) + " entries, horizon is " +
              std::to_string(sys.T));
  std::vector<Vec2<Scalar>> states;
  states.reserve(static_cast<std::size_t>(sys.T) + 1);
  states.push_back(x0);
  for (int t = 0; t < sys.T; ++t) states.push_back(sys.A * states.back() + sys.B * u_seq[t]);
  return states;
}

/// A^t x0 + sum_{tau < t} A^{t-1-tau} B u_tau
template <typename Scalar>
Vec2<Scalar> closed_form_state(const LinearSystem<Scalar>& sys, const Vec2<Scalar>& x0,
                               const VectorX<Scalar>& u_seq, int t) {
  require(u_seq.size() == sys.T, ErrorCode::LengthMismatch, "control sequence length != horizon");
  require(t >= 0 && t <= sys.T, ErrorCode::IndexOutOfRange, "time index outside [0, T]");
  Mat2<Scalar> power = Mat2<Scalar>::Identity();  // A^{t-1-tau}, built from tau = t-1 down
  Vec2<Scalar> forced = Vec2<Scalar>::Zero();
  for (int tau = t - 1; tau >= 0; --tau) {
    forced += power * sys.B * u_seq[tau];
    power = power * sys.A;
  }
  return power * x0 + forced;  // power == A^t here
}

/// Matrix power by repeated multiplication.
template <typename Scalar>
Mat2<Scalar> matrix_power(const Mat2<Scalar>& A, int k) {
  Mat2<Scalar> out = Mat2<Scalar>::Identity();
  for (int i = 0; i < k; ++i) out = out * A;
  return out;
}

/// Norm-affine loss ||A^T x0 + F u - goal|| with x0 uncertain in [-0.3, 0.3]^2,
/// u in [-0.1, 0.1]^T and |E[x0_1] - 0.1| <= 0.1, |E[x0_2] + 0.1| <= 0.2.
ProblemSpec trajectory_problem(int T, const Eigen::Vector2d& goal);

using StatePath = std::vector<Eigen::Vector2d>;

/// Rollouts from x0 drawn uniformly in `support` (default [-0.3, 0.3]^2).
std::vector<StatePath> monte_carlo_trajectories(const LinearSystem<double>& sys, const Vector& u_seq,
                                                int n_draws, std::uint64_t seed,
                                                const BoxSet& support = initial_state_box());

}  // namespace drc
