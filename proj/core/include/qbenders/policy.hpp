#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qbenders/qfunction.hpp"

namespace qbenders {

struct GreedyResult {
  Eigen::VectorXd u;
  double value = 0.0;  // Q(x, u) at the minimizer
};

/// Greedy input argmin_{u : Eu <= hbar - Dx} Q(x, u), solved as the epigraph
/// program  min beta  s.t.  q_i(x, u) <= beta for all i. Throws
/// InfeasiblePoint when x admits no feasible input.
GreedyResult greedy_input(const PwmQFunction& q, const Eigen::VectorXd& x, double tol);

struct TrajectoryRecord {
  std::vector<Eigen::VectorXd> states;  // x_0 ... x_T
  std::vector<Eigen::VectorXd> inputs;  // u_0 ... u_{T-1}
  std::vector<double> stage_costs;
  double total_cost = 0.0;  // sum gamma^t * stage_costs[t]
  int horizon_used = 0;
  /// Geometric extrapolation of the remaining cost (reported, never added
  /// to total_cost).
  double tail_bound = 0.0;
};

using PolicyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Rolls the policy forward from x0 until the stage cost drops below
/// tail_tol or horizon_cap is reached. A policy failure mid-trajectory
/// throws with the offending state and step in the message.
TrajectoryRecord simulate(const CLQRInstance& inst, const PolicyFn& policy,
                          const Eigen::VectorXd& x0, int horizon_cap = 1000,
                          double tail_tol = 1e-12);

/// Policy adapter for a learned Q-function.
PolicyFn greedy_policy(const PwmQFunction& q, double tol);

}  // namespace qbenders
