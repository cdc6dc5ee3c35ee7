#pragma once

#include "drc/dccp.hpp"
#include "drc/problem.hpp"
#include "drc/report.hpp"

#include <cstdint>
#include <optional>

namespace drc {

/// Dual slots of the master problem. Each two-sided pair gets (alpha, beta)
/// with alpha >= |beta|; every remaining one-sided bound keeps lambda >= 0.
struct DualLayout {
  struct Pair {
    Vector q;
    GFun g;
    double center = 0.0;
    double radius = 0.0;
  };
  struct Single {
    Vector q;
    GFun g;
    double level = 0.0;
    bool negated = false;
  };
  std::vector<Pair> pairs;
  std::vector<Single> singles;
};

struct MasterDuals {
  Vector alpha;
  Vector beta;
  Vector lambda;
};

/// Reads the pairing metadata of an expanded problem. Throws MissingPairing
/// when a tagged bound lacks its partner.
DualLayout alpha_beta_transform(const ProblemSpec& expanded);

/// alpha = l1 + l2, beta = l1 - l2
std::pair<double, double> lambda_to_alpha_beta(double l1, double l2);
/// l1 = (alpha + beta) / 2, l2 = (alpha - beta) / 2
std::pair<double, double> alpha_beta_to_lambda(double alpha, double beta);

/// l(u,x) - sum_j lambda_j (sign_j g_j(q_j'x) - level_j) - t over the
/// constraints of an expanded problem.
double cut_function(const ProblemSpec& expanded, const Vector& lambda, const Vector& u,
                    const Vector& x, double t);

/// l(u,x) - sum beta_i (g_i - p_i) + sum alpha_i eps_i - sum lambda_j (...) - t
double cut_function(const LossForm& loss, const DualLayout& layout, const MasterDuals& duals,
                    const Vector& u, const Vector& x, double t);

struct MasterProgram {
  ConvexProgram prog;
  DualLayout layout;
  Index alpha_offset = 0;
  Index beta_offset = 0;
  Index lambda_offset = 0;
  Index t_index = 0;
};

inline constexpr double kDualCap = 1e4;

/// Minimize t over (u, alpha, beta, lambda, t) with one cut per point.
MasterProgram build_master(const ValidatedProblem& problem, const std::vector<Vector>& cuts,
                           double dual_cap = kDualCap);

struct MasterState {
  std::vector<Vector> cut_points;
  Vector u;
  MasterDuals duals;
  double t = 0.0;
  double master_value = 0.0;
};

MasterState solve_master(const ValidatedProblem& problem, const std::vector<Vector>& cuts,
                         double dual_cap = kDualCap);

struct CutReport {
  double violation = 0.0;
  Vector x_star;
  bool certified = false;
};

struct PessimizeOptions {
  int restarts = 8;
  std::uint64_t seed = 0;
  std::optional<Vector> hint;  // first DCCP start
  DccpParams dccp;
};

CutReport pessimize(const ValidatedProblem& problem, const Vector& u, const MasterDuals& duals, double t,
                    const PessimizeOptions& options = {});

struct CuttingSetParams {
  double feas_tol = 1e-6;
  int max_cuts = 200;
  int dccp_restarts = 8;
  double dual_cap = kDualCap;
  std::uint64_t seed = 0;
};

SolveReport run_cutting_set(const ValidatedProblem& problem, const std::vector<Vector>& init_cuts,
                            const CuttingSetParams& params = {});

/// Worst-case expected loss of a fixed control: the cutting-set method with
/// the input set collapsed to {u}.
double worst_case_value(const ValidatedProblem& problem, const Vector& u,
                        const CuttingSetParams& params = {}, int n_init = 50);

}  // namespace drc
