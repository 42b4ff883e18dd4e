#include "qbenders/policy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qbenders/conic.hpp"
#include "qbenders/errors.hpp"

namespace qbenders {

GreedyResult greedy_input(const PwmQFunction& q, const Eigen::VectorXd& x, double tol) {
  const CLQRInstance& inst = q.instance();
  if (x.size() != inst.nx())
    throw DimensionError("greedy_input: state dimension does not match the instance");

  const int nu = inst.nu();
  const int n = nu + 1;  // z = (u, beta)
  const int beta_col = nu;

  // min beta  s.t.  E u <= hbar - D x,  q_i(x, u) <= beta for all i.
  // With x fixed, q_i(x, u) = 1/2 u'Ru + (B'nu_i)'u + [l_x + nu_i'Ax + xi_i].
  ConvexQcqp prob;
  prob.n = n;
  prob.objective = Eigen::VectorXd::Zero(n);
  prob.objective(beta_col) = 1.0;
  prob.eq_mat.resize(0, n);
  prob.eq_rhs.resize(0);
  prob.ineq_mat = Eigen::MatrixXd::Zero(inst.nc(), n);
  prob.ineq_mat.leftCols(nu) = inst.E;
  prob.ineq_rhs = inst.hbar - inst.D * x;

  auto P = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(n, n));
  P->topLeftCorner(nu, nu) = inst.Rmat;
  const double x_cost = 0.5 * x.dot(inst.Qmat * x);
  const Eigen::VectorXd Ax = inst.A * x;
  for (const BendersCut& cut : q.cuts()) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p.head(nu) = inst.B.transpose() * cut.nu;
    prob.quads.emplace_back(P, std::move(p), x_cost + cut.nu.dot(Ax) + cut.xi, beta_col);
  }

  const SolveOutcome out = solve_with_duals(prob, tol);
  if (out.status == SolveStatus::Infeasible) {
    std::ostringstream os;
    os << "greedy_input: no feasible input at x = [" << x.transpose() << "]";
    throw InfeasiblePoint(os.str());
  }
  if (out.status != SolveStatus::Optimal) {
    std::ostringstream os;
    os << "greedy_input: solve returned " << to_string(out.status) << " at x = ["
       << x.transpose() << "]";
    throw NumericFailure(os.str());
  }

  GreedyResult res;
  res.u = out.primal.head(nu);
  res.value = out.primal(beta_col);
  return res;
}

PolicyFn greedy_policy(const PwmQFunction& q, double tol) {
  return [q, tol](const Eigen::VectorXd& x) { return greedy_input(q, x, tol).u; };
}

TrajectoryRecord simulate(const CLQRInstance& inst, const PolicyFn& policy,
                          const Eigen::VectorXd& x0, int horizon_cap, double tail_tol) {
  if (horizon_cap < 1) throw std::invalid_argument("simulate: horizon_cap must be >= 1");
  if (x0.size() != inst.nx())
    throw DimensionError("simulate: start state dimension does not match the instance");

  TrajectoryRecord traj;
  traj.states.push_back(x0);
  Eigen::VectorXd x = x0;
  double discount = 1.0;
  for (int t = 0; t < horizon_cap; ++t) {
    Eigen::VectorXd u;
    try {
      u = policy(x);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "simulate: policy failed at step " << t << ", state [" << x.transpose()
         << "]: " << e.what();
      throw InfeasiblePoint(os.str());
    }
    const double cost = inst.stage_cost(x, u);
    traj.inputs.push_back(u);
    traj.stage_costs.push_back(cost);
    traj.total_cost += discount * cost;
    discount *= inst.gamma;
    x = inst.dynamics(x, u);
    traj.states.push_back(x);
    if (cost < tail_tol) break;
  }
  traj.horizon_used = static_cast<int>(traj.stage_costs.size());

  // Geometric tail estimate from the contraction measured over the last 10
  // steps: remaining cost ~ gamma^T * c_T * rho / (1 - gamma * rho).
  const int T = traj.horizon_used;
  if (T >= 1 && traj.stage_costs.back() > 0.0) {
    double rho = 0.0;
    const int lookback = std::min(10, T - 1);
    if (lookback >= 1) {
      const double newest = traj.stage_costs[static_cast<std::size_t>(T - 1)];
      const double oldest = traj.stage_costs[static_cast<std::size_t>(T - 1 - lookback)];
      if (oldest > 0.0 && newest < oldest)
        rho = std::pow(newest / oldest, 1.0 / lookback);
    }
    const double g_rho = inst.gamma * rho;
    if (g_rho < 1.0 && rho > 0.0) {
      traj.tail_bound = std::pow(inst.gamma, T) * traj.stage_costs.back() * g_rho / (1.0 - g_rho);
    } else {
      traj.tail_bound = std::numeric_limits<double>::infinity();
    }
  }
  return traj;
}

}  // namespace qbenders
