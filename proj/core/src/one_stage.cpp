#include "qbenders/one_stage.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "qbenders/errors.hpp"

namespace qbenders {

namespace {

std::string point_to_string(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  std::ostringstream os;
  os << "x = [" << x.transpose() << "], u = [" << u.transpose() << "]";
  return os.str();
}

}  // namespace

ConvexQcqp build_one_stage(const PwmQFunction& q, const Eigen::VectorXd& x_hat,
                           const Eigen::VectorXd& u_hat) {
  const CLQRInstance& inst = q.instance();
  if (x_hat.size() != inst.nx() || u_hat.size() != inst.nu())
    throw DimensionError("build_one_stage: point dimension does not match the instance");

  const int nx = inst.nx();
  const int nu = inst.nu();
  const int n = nx + nu + 1;  // z = (x', u', alpha)
  const int alpha_col = nx + nu;

  ConvexQcqp prob;
  prob.n = n;
  prob.objective = Eigen::VectorXd::Zero(n);
  prob.objective(alpha_col) = inst.gamma;

  prob.eq_mat = Eigen::MatrixXd::Zero(nx, n);
  prob.eq_mat.leftCols(nx) = Eigen::MatrixXd::Identity(nx, nx);
  prob.eq_rhs = inst.dynamics(x_hat, u_hat);

  prob.ineq_mat = Eigen::MatrixXd::Zero(inst.nc(), n);
  prob.ineq_mat.leftCols(nx) = inst.D;
  prob.ineq_mat.middleCols(nx, nu) = inst.E;
  prob.ineq_rhs = inst.hbar;

  // All cuts share the stage-cost Hessian blkdiag(Q, R, 0); only the affine
  // part nu_i'(Ax' + Bu') + xi_i varies.
  auto P = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(n, n));
  P->topLeftCorner(nx, nx) = inst.Qmat;
  P->block(nx, nx, nu, nu) = inst.Rmat;

  prob.quads.reserve(static_cast<std::size_t>(q.cut_count()));
  for (const BendersCut& cut : q.cuts()) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p.head(nx) = inst.A.transpose() * cut.nu;
    p.segment(nx, nu) = inst.B.transpose() * cut.nu;
    prob.quads.emplace_back(P, std::move(p), cut.xi, alpha_col);
  }
  return prob;
}

OneStageSolution apply_bellman(const PwmQFunction& q, const Eigen::VectorXd& x_hat,
                               const Eigen::VectorXd& u_hat, double tol) {
  const CLQRInstance& inst = q.instance();
  const ConvexQcqp prob = build_one_stage(q, x_hat, u_hat);
  const SolveOutcome out = solve_with_duals(prob, tol);

  OneStageSolution sol;
  if (out.status == SolveStatus::Infeasible) {
    sol.feasible = false;
    return sol;
  }
  if (out.status != SolveStatus::Optimal) {
    throw NumericFailure(std::string("one-stage solve returned ") + to_string(out.status) +
                         " at " + point_to_string(x_hat, u_hat));
  }

  const int nx = inst.nx();
  const int nu = inst.nu();
  sol.feasible = true;
  sol.successor = out.primal.head(nx);
  sol.next_input = out.primal.segment(nx, nu);
  sol.alpha = out.primal(nx + nu);
  sol.value = inst.stage_cost(x_hat, u_hat) + inst.gamma * sol.alpha;
  sol.duals.nu = out.eq_duals;
  sol.duals.lambda_c = out.ineq_duals;
  sol.duals.lambda_alpha = out.quad_duals;
  sol.dual_sum_gap = std::abs(out.quad_duals.sum() - inst.gamma);
  sol.min_dual_preclamp = out.min_dual_preclamp;
  sol.solver_iterations = out.iterations;
  return sol;
}

BendersCut extract_cut(const OneStageSolution& sol, const PwmQFunction& q,
                       const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u_hat) {
  if (!sol.feasible || sol.duals.nu.size() == 0)
    throw std::invalid_argument("extract_cut: solution has no dual certificate");
  const CLQRInstance& inst = q.instance();
  BendersCut cut;
  cut.nu = sol.duals.nu;
  // Value recovery: with the dynamics equality satisfied, the dual offset is
  // the optimal value minus the terms the cut reproduces at (x_hat, u_hat).
  cut.xi = inst.gamma * sol.alpha - cut.nu.dot(inst.dynamics(x_hat, u_hat));
  cut.index = q.cut_count();
  return cut;
}

double bellman_error(const PwmQFunction& q, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     double tol, double tol_neg) {
  const OneStageSolution sol = apply_bellman(q, x, u, tol);
  if (!sol.feasible) {
    throw InfeasiblePoint("bellman_error: one-stage problem infeasible at " +
                          point_to_string(x, u));
  }
  const double err = sol.value - q.eval(x, u).value;
  if (err >= 0.0) return err;
  if (err >= -tol_neg) return 0.0;
  std::ostringstream os;
  os << "bellman_error: negative error " << err << " below -" << tol_neg << " at "
     << point_to_string(x, u);
  throw InvariantViolation(os.str());
}

std::optional<double> xi_direct(const PwmQFunction& q, const DualTriple& duals) {
  const CLQRInstance& inst = q.instance();
  const int nx = inst.nx();
  const double s = duals.lambda_alpha.sum();

  // Inner infimum over (x', u') of
  //   -nu'x' + lambda_c'(Dx' + Eu' - hbar) + sum_i lambda_alpha_i q_i(x', u')
  // which is an unconstrained convex quadratic with Hessian s*blkdiag(Q, R).
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nx);  // sum lambda_alpha_i nu_i
  double xi_sum = 0.0;
  for (int i = 0; i < q.cut_count(); ++i) {
    w += duals.lambda_alpha(i) * q.cut(i).nu;
    xi_sum += duals.lambda_alpha(i) * q.cut(i).xi;
  }
  Eigen::VectorXd hx = -duals.nu + inst.D.transpose() * duals.lambda_c + inst.A.transpose() * w;
  Eigen::VectorXd hu = inst.E.transpose() * duals.lambda_c + inst.B.transpose() * w;

  Eigen::LLT<Eigen::MatrixXd> lltQ(s * inst.Qmat);
  Eigen::LLT<Eigen::MatrixXd> lltR(s * inst.Rmat);
  if (lltQ.info() != Eigen::Success || lltR.info() != Eigen::Success) return std::nullopt;

  const Eigen::VectorXd x_star = -lltQ.solve(hx);
  const Eigen::VectorXd u_star = -lltR.solve(hu);
  double value = 0.5 * s * (x_star.dot(inst.Qmat * x_star) + u_star.dot(inst.Rmat * u_star));
  value += hx.dot(x_star) + hu.dot(u_star);
  value += -duals.lambda_c.dot(inst.hbar) + xi_sum;
  return value;
}

}  // namespace qbenders
