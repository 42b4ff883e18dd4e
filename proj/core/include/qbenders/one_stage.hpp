#pragma once

#include <Eigen/Dense>
#include <optional>

#include "qbenders/conic.hpp"
#include "qbenders/qfunction.hpp"

namespace qbenders {

struct DualTriple {
  Eigen::VectorXd nu;            // dynamics equality multipliers
  Eigen::VectorXd lambda_c;      // state-input constraint multipliers, >= 0
  Eigen::VectorXd lambda_alpha;  // epigraph multipliers, >= 0, sum = gamma
};

/// Solution of the one-stage problem at (x_hat, u_hat): value is the Bellman
/// backup of the current Q-function, successor/next_input/alpha the primal
/// optimum, and the duals parameterize the next cut.
struct OneStageSolution {
  double value = 0.0;          // l(x_hat, u_hat) + gamma * alpha
  Eigen::VectorXd successor;   // x'
  Eigen::VectorXd next_input;  // u'
  double alpha = 0.0;
  DualTriple duals;
  bool feasible = false;
  double dual_sum_gap = 0.0;       // |1'lambda_alpha - gamma|
  double min_dual_preclamp = 0.0;  // from the underlying solve
  int solver_iterations = 0;
};

/// Epigraph program over z = (x', u', alpha):
///   minimize    gamma * alpha
///   subject to  x' = A x_hat + B u_hat
///               D x' + E u' <= hbar
///               q_i(x', u') <= alpha          for every cut i
/// The constant l(x_hat, u_hat) is added back by apply_bellman, not encoded
/// in the program.
ConvexQcqp build_one_stage(const PwmQFunction& q, const Eigen::VectorXd& x_hat,
                           const Eigen::VectorXd& u_hat);

/// Solves the one-stage problem. Infeasible solves return feasible = false
/// with no other fields valid; numeric failures throw NumericFailure with
/// the point in the message so the driver can apply its skip policy.
OneStageSolution apply_bellman(const PwmQFunction& q, const Eigen::VectorXd& x_hat,
                               const Eigen::VectorXd& u_hat, double tol);

/// Builds the next cut from a feasible one-stage solution:
///   nu = duals.nu,   xi = gamma * alpha - nu' (A x_hat + B u_hat).
/// The xi recovery uses the solved optimal value rather than evaluating the
/// dual inner infimum directly, which is delicate for rank-deficient
/// weighted Hessians; see xi_direct for the cross-check.
BendersCut extract_cut(const OneStageSolution& sol, const PwmQFunction& q,
                       const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u_hat);

/// T_Q Q(x,u) - Q(x,u). The true value is nonnegative for functions built
/// by this library; results in [-tol_neg, 0) are clamped to 0 and anything
/// below -tol_neg throws InvariantViolation. Throws InfeasiblePoint when the
/// one-stage problem is infeasible at (x, u).
double bellman_error(const PwmQFunction& q, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     double tol, double tol_neg = 1e-6);

/// Debug evaluation of the dual offset as the inner infimum over (x', u')
/// of  -nu'x' + lambda_c'(Dx' + Eu' - hbar) + sum_i lambda_alpha_i q_i(x',u').
/// Only defined when the weighted cost Hessian is positive definite; returns
/// nullopt otherwise.
std::optional<double> xi_direct(const PwmQFunction& q, const DualTriple& duals);

}  // namespace qbenders
