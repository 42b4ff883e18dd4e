#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace qbenders {

/// One convex quadratic constraint  1/2 z'Pz + p'z + c <= z[epigraph_col].
/// P is held by shared_ptr so that many constraints differing only in their
/// affine part (the common case here) share one matrix; the solver exploits
/// that when assembling Hessians.
struct QuadConstraint {
  std::shared_ptr<const Eigen::MatrixXd> P;
  Eigen::VectorXd p;
  double c = 0.0;
  int epigraph_col = 0;

  QuadConstraint() = default;
  QuadConstraint(std::shared_ptr<const Eigen::MatrixXd> P_, Eigen::VectorXd p_, double c_,
                 int epigraph_col_)
      : P(std::move(P_)), p(std::move(p_)), c(c_), epigraph_col(epigraph_col_) {}
  QuadConstraint(const Eigen::MatrixXd& P_, Eigen::VectorXd p_, double c_, int epigraph_col_)
      : P(std::make_shared<Eigen::MatrixXd>(P_)), p(std::move(p_)), c(c_),
        epigraph_col(epigraph_col_) {}
};

/// minimize    objective' z
/// subject to  eq_mat z = eq_rhs
///             ineq_mat z <= ineq_rhs
///             1/2 z'P_k z + p_k'z + c_k <= z[alpha]   for each quad k
///
/// All quadratic constraints must designate the same epigraph column and
/// every P_k must be symmetric PSD (eigenvalue floor -1e-9); callers are
/// responsible for the PSD part (verify() checks it explicitly, it is too
/// expensive for the solve hot path).
struct ConvexQcqp {
  int n = 0;
  Eigen::VectorXd objective;
  Eigen::MatrixXd eq_mat;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_mat;
  Eigen::VectorXd ineq_rhs;
  std::vector<QuadConstraint> quads;

  int num_eq() const { return static_cast<int>(eq_mat.rows()); }
  int num_ineq() const { return static_cast<int>(ineq_mat.rows()); }
  int num_quad() const { return static_cast<int>(quads.size()); }

  /// Cheap shape checks (dimensions, shared epigraph column). Throws.
  void check_shape() const;
  /// Full invariant check including PSD floors. Throws.
  void verify() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericFailure };

const char* to_string(SolveStatus s);

struct KktResiduals {
  double primal = 0.0;          // max equality/inequality violation
  double dual = 0.0;            // stationarity residual, inf-norm
  double complementarity = 0.0; // max_i s_i * lambda_i
  double gap = 0.0;             // s'lambda (primal-dual objective gap)
};

/// Multiplier conventions (fixed so downstream cut formulas can use the
/// duals as returned):
///   equality rows carry the Lagrangian term  nu'(eq_rhs - eq_mat z)
///   inequality rows carry                    lambda_c'(ineq_mat z - ineq_rhs)
///   quadratic rows carry                     lambda_q_k * (q_k(z) - z[alpha])
/// with lambda_c, lambda_q >= 0.
struct SolveOutcome {
  SolveStatus status = SolveStatus::NumericFailure;
  Eigen::VectorXd primal;
  double objective = 0.0;
  Eigen::VectorXd eq_duals;    // nu
  Eigen::VectorXd ineq_duals;  // lambda_c (clamped to >= 0)
  Eigen::VectorXd quad_duals;  // lambda_q (clamped to >= 0)
  KktResiduals kkt;
  double min_dual_preclamp = 0.0;  // most negative multiplier before clamping
  int iterations = 0;
};

/// Primal-dual interior-point solve returning Lagrange multipliers.
/// On Optimal the duality gap satisfies gap <= tol * (1 + |objective|) and
/// multipliers are nonnegative up to -1e-9 pre-clamp (clamped on return).
/// On Infeasible/Unbounded the primal/dual fields are empty. tol must lie
/// in [1e-12, 1e-4].
SolveOutcome solve_with_duals(const ConvexQcqp& prob, double tol = 1e-8);

/// Lagrangian dual value at the given multipliers: inf_z L(z; nu, lambda).
/// Returns -infinity when the infimum is unbounded below. Intended for
/// weak-duality cross-checks in tests.
double dual_objective(const ConvexQcqp& prob, const Eigen::VectorXd& eq_duals,
                      const Eigen::VectorXd& ineq_duals, const Eigen::VectorXd& quad_duals);

}  // namespace qbenders
