#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qbenders/algorithm.hpp"
#include "qbenders/problem.hpp"
#include "qbenders/qfunction.hpp"

namespace qbenders {

struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  int count = 2;

  double step() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
};

/// Dense value function on a rectangular state grid, produced by value
/// iteration. Desk-scale ground truth (n_x <= 2) for verifying the cut
/// machinery; not part of the learning path.
struct GridValueFunction {
  std::vector<AxisSpec> axes;
  Eigen::VectorXd values;  // row-major over the product grid
  int sweeps = 0;
  double residual = 0.0;           // sup-norm Bellman residual at convergence
  std::string interpolation = "multilinear";
  int clamped_states = 0;          // states whose optimal successor left the grid
  double interp_error_bound = 0.0; // C*h^2 style bound from measured curvature
  double input_grid_bound = 0.0;   // discretization error of the inner minimization
  double residual_bound = 0.0;     // remaining value-iteration tail

  /// Multilinear interpolation, clamped to the grid box.
  double value_at(const Eigen::VectorXd& x) const;

  /// Conservative margin for comparisons against interpolated values.
  double tol_oracle() const { return interp_error_bound + input_grid_bound + residual_bound; }
};

/// Grid value iteration with multilinear interpolation of off-grid
/// successors (clamped at the boundary and flagged). Supports n_x <= 2.
/// Throws on non-convergence within max_sweeps, with the recent residual
/// history in the message.
GridValueFunction value_iteration(const CLQRInstance& inst, const std::vector<AxisSpec>& grid,
                                  const std::vector<AxisSpec>& u_grid, double vi_tol,
                                  int max_sweeps);

/// Q*(x,u) = l(x,u) + gamma * V(Ax + Bu). Throws when the successor lands
/// more than one cell outside the grid.
double q_star_from_v(const GridValueFunction& vf, const CLQRInstance& inst,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& u);

struct RiccatiResult {
  Eigen::MatrixXd P;  // value matrix, V(x) = 1/2 x'Px
  Eigen::MatrixXd K;  // gain, u = -K x
};

/// Discounted discrete-time Riccati fixed point
///   P = Q + gamma A'PA - gamma^2 A'PB (R + gamma B'PB)^{-1} B'PA
/// iterated to 1e-12 residual. Requires R positive definite.
RiccatiResult riccati_gain(const CLQRInstance& inst);

/// Componentwise clamp of -Kx onto the box encoded by E, hbar (requires
/// D = 0 and box-structured input constraints).
Eigen::VectorXd clipped_lqr_policy(const CLQRInstance& inst, const Eigen::MatrixXd& K,
                                   const Eigen::VectorXd& x);

struct NuBoundReport {
  bool applicable = false;
  double bound = 0.0;
  double max_nu_norm = 0.0;
  bool pass = false;
  std::string note;
};

/// Checks max_i ||nu_i|| against the bound gamma * X * ||Q|| / (1 - gamma ||A||),
/// valid for instances with D = 0 and gamma ||A|| < 1. X and U are
/// caller-supplied bounds on visited successor-state and input norms (see
/// measure_visited_bounds). Inapplicable cases are reported, not errors.
NuBoundReport nu_bound_diagnostic(const PwmQFunction& q, const CLQRInstance& inst, double X,
                                  double U);

/// Brute-force Bellman backup for n_u = 1: minimizes max_i q_i(x', u') over
/// a dense u'-grid with `u_steps` points, honoring E u' <= hbar - D x'.
/// Independent of the conic solve path; used to cross-check it.
double grid_bellman(const PwmQFunction& q, const Eigen::VectorXd& x_hat,
                    const Eigen::VectorXd& u_hat, int u_steps);

/// Brute-force greedy input for n_u = 1 over a dense u-grid.
double grid_greedy_value(const PwmQFunction& q, const Eigen::VectorXd& x, int u_steps);

}  // namespace qbenders
