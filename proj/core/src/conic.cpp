#include "qbenders/conic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "qbenders/errors.hpp"

namespace qbenders {

namespace {

constexpr double kClampFloor = -1e-9;
constexpr int kMaxIterations = 120;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Internal reformulation. Quadratic constraints sharing one Hessian (the
// dominant case here: every cut reuses the stage-cost matrix) are split per
// group g as
//     1/2 z'P_g z + t_g <= 0                (one curved row per group)
//     p_i'z + c_i - z[alpha] <= t_g         (one linear row per member)
// with a fresh variable t_g. The linear-row multipliers coincide with the
// original quadratic-constraint multipliers (eliminating t_g from the KKT
// system reproduces the original stationarity and complementarity exactly),
// so the mapping back is the identity. The payoff is conditioning: stacked
// near-parallel cuts become plain LP degeneracy instead of a pile of
// z-dependent Jacobian rows, and curvature lives in G well-behaved rows
// whose multipliers sum to the epigraph weight.
struct FoldedProblem {
  int n = 0;    // internal variable count: n_z + one t per group
  int n_z = 0;  // original variable count
  Eigen::VectorXd c;
  Eigen::MatrixXd Ae;
  Eigen::VectorXd be;
  Eigen::MatrixXd Ai;  // original affine rows, then one linear row per quad
  Eigen::VectorXd bi;
  int m_aff_orig = 0;                          // original affine row count
  int m_quad_orig = 0;                         // original quad count
  std::vector<const Eigen::MatrixXd*> group_P; // one per group, n_z x n_z
  int m_aff() const { return static_cast<int>(Ai.rows()); }
  int num_groups() const { return static_cast<int>(group_P.size()); }
  int m() const { return m_aff() + num_groups(); }
};

FoldedProblem fold(const ConvexQcqp& prob) {
  FoldedProblem f;
  f.n_z = prob.n;
  f.m_aff_orig = prob.num_ineq();
  f.m_quad_orig = prob.num_quad();

  std::vector<int> group_of(prob.quads.size());
  for (std::size_t k = 0; k < prob.quads.size(); ++k) {
    const Eigen::MatrixXd* P = prob.quads[k].P.get();
    int g = -1;
    for (std::size_t j = 0; j < f.group_P.size(); ++j) {
      if (f.group_P[j] == P) {
        g = static_cast<int>(j);
        break;
      }
    }
    if (g < 0) {
      g = f.num_groups();
      f.group_P.push_back(P);
    }
    group_of[k] = g;
  }

  const int G = f.num_groups();
  f.n = prob.n + G;
  f.c = Eigen::VectorXd::Zero(f.n);
  f.c.head(prob.n) = prob.objective;
  f.Ae = Eigen::MatrixXd::Zero(prob.num_eq(), f.n);
  if (prob.num_eq() > 0) f.Ae.leftCols(prob.n) = prob.eq_mat;
  f.be = prob.eq_rhs;

  f.Ai = Eigen::MatrixXd::Zero(f.m_aff_orig + f.m_quad_orig, f.n);
  f.bi = Eigen::VectorXd::Zero(f.m_aff_orig + f.m_quad_orig);
  if (f.m_aff_orig > 0) {
    f.Ai.topLeftCorner(f.m_aff_orig, prob.n) = prob.ineq_mat;
    f.bi.head(f.m_aff_orig) = prob.ineq_rhs;
  }
  for (int k = 0; k < f.m_quad_orig; ++k) {
    const auto& qc = prob.quads[static_cast<std::size_t>(k)];
    const int row = f.m_aff_orig + k;
    f.Ai.row(row).head(prob.n) = qc.p.transpose();
    f.Ai(row, qc.epigraph_col) -= 1.0;
    f.Ai(row, prob.n + group_of[static_cast<std::size_t>(k)]) = -1.0;
    f.bi(row) = -qc.c;
  }
  return f;
}

// Constraint values and gradients at the current point. Affine rows are
// fixed; only the G curved rows depend on z.
struct Evaluation {
  Eigen::VectorXd g;  // m
  Eigen::MatrixXd J;  // m x n
};

Evaluation evaluate(const FoldedProblem& f, const Eigen::VectorXd& z) {
  Evaluation ev;
  const int m_aff = f.m_aff();
  ev.g.resize(f.m());
  ev.J.resize(f.m(), f.n);
  if (m_aff > 0) {
    ev.g.head(m_aff) = f.Ai * z - f.bi;
    ev.J.topRows(m_aff) = f.Ai;
  }
  for (int g = 0; g < f.num_groups(); ++g) {
    const int row = m_aff + g;
    const Eigen::VectorXd Pz = (*f.group_P[static_cast<std::size_t>(g)]) * z.head(f.n_z);
    ev.g(row) = 0.5 * z.head(f.n_z).dot(Pz) + z(f.n_z + g);
    ev.J.row(row).setZero();
    ev.J.row(row).head(f.n_z) = Pz.transpose();
    ev.J(row, f.n_z + g) = 1.0;
  }
  return ev;
}

Eigen::MatrixXd weighted_curvature(const FoldedProblem& f, const Eigen::VectorXd& lambda) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(f.n, f.n);
  for (int g = 0; g < f.num_groups(); ++g) {
    const double w = lambda(f.m_aff() + g);
    if (w != 0.0)
      H.topLeftCorner(f.n_z, f.n_z) += w * (*f.group_P[static_cast<std::size_t>(g)]);
  }
  return H;
}

double step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

struct Iterate {
  Eigen::VectorXd z, nu, lambda, s;
};

struct Residuals {
  Eigen::VectorXd r_dual;  // c - Ae'nu + J'lambda
  Eigen::VectorXd r_eq;    // Ae z - be
  Eigen::VectorXd r_in;    // g(z) + s
  double primal_inf = 0.0; // max(||r_eq||_inf, max g_+)
  double dual_inf = 0.0;
  double mu = 0.0;
  double gap = 0.0;
};

Residuals compute_residuals(const FoldedProblem& f, const Iterate& it, const Evaluation& ev) {
  Residuals r;
  r.r_dual = f.c;
  if (f.be.size() > 0) r.r_dual -= f.Ae.transpose() * it.nu;
  if (f.m() > 0) r.r_dual += ev.J.transpose() * it.lambda;
  r.r_eq = f.be.size() > 0 ? Eigen::VectorXd(f.Ae * it.z - f.be) : Eigen::VectorXd();
  r.r_in = f.m() > 0 ? Eigen::VectorXd(ev.g + it.s) : Eigen::VectorXd();
  r.dual_inf = r.r_dual.size() > 0 ? r.r_dual.lpNorm<Eigen::Infinity>() : 0.0;
  double p = 0.0;
  if (r.r_eq.size() > 0) p = r.r_eq.lpNorm<Eigen::Infinity>();
  if (ev.g.size() > 0) p = std::max(p, ev.g.maxCoeff());
  r.primal_inf = std::max(p, 0.0);
  if (f.m() > 0) {
    r.gap = it.s.dot(it.lambda);
    r.mu = r.gap / f.m();
  }
  return r;
}

struct IpmResult {
  bool converged = false;
  Iterate it;
  Residuals res;
  int iterations = 0;
  bool diverged_unbounded = false;  // feasible iterates with objective -> -inf
};

double merit(const Residuals& r, double rhs_scale, double dual_scale, double obj) {
  return std::max({r.primal_inf / rhs_scale, r.dual_inf / dual_scale,
                   r.gap / (1.0 + std::abs(obj))});
}

// Mehrotra predictor-corrector on the perturbed KKT system (Nocedal &
// Wright, ch. 14/16, plus an exact curvature correction for the curved
// rows). The Newton system is reduced to the (z, nu) block
//   [H + J'diag(lambda/s)J   -Ae'] [dz ]   [rhs]
//   [Ae                        0 ] [dnu] = [-r_eq]
// and solved by full-pivot LU; the problems here have tens of variables
// while m can reach thousands, so assembly dominates and the factorization
// is noise.
IpmResult run_ipm(const FoldedProblem& f, double tol, int max_iter) {
  IpmResult out;
  const int n = f.n;
  const int me = static_cast<int>(f.be.size());
  const int m = f.m();

  Iterate it;
  // Least-norm start on the equality manifold keeps the initial primal
  // residual zero whenever the equalities are consistent.
  if (me > 0) {
    it.z = f.Ae.completeOrthogonalDecomposition().solve(f.be);
  } else {
    it.z = Eigen::VectorXd::Zero(n);
  }
  it.nu = Eigen::VectorXd::Zero(me);
  Evaluation ev = evaluate(f, it.z);
  it.s.resize(m);
  it.lambda.resize(m);
  for (int i = 0; i < m; ++i) {
    it.s(i) = std::max(1.0, std::abs(ev.g(i)) * 1.5);
    it.lambda(i) = 1.0;
  }

  const double obj_scale = 1.0 + f.c.lpNorm<Eigen::Infinity>();
  const double rhs_scale = 1.0 + std::max(me > 0 ? f.be.lpNorm<Eigen::Infinity>() : 0.0,
                                          m > 0 ? f.bi.lpNorm<Eigen::Infinity>() : 0.0);
  int stalls = 0;

  Iterate best_it = it;
  Residuals best_res;
  double best_merit = std::numeric_limits<double>::infinity();
  int no_progress = 0;

  const bool trace = std::getenv("QBENDERS_IPM_TRACE") != nullptr;

  for (int iter = 0; iter <= max_iter; ++iter) {
    out.iterations = iter;
    Residuals res = compute_residuals(f, it, ev);
    const double obj = f.c.dot(it.z);
    if (trace) {
      std::fprintf(stderr,
                   "ipm %3d mu=%9.2e gap=%9.2e pinf=%9.2e dinf=%9.2e obj=%12.5e smin=%9.2e "
                   "lmin=%9.2e\n",
                   iter, res.mu, res.gap, res.primal_inf, res.dual_inf, obj,
                   m > 0 ? it.s.minCoeff() : 0.0, m > 0 ? it.lambda.minCoeff() : 0.0);
    }

    const double dual_scale = obj_scale + (m > 0 ? it.lambda.lpNorm<Eigen::Infinity>() : 0.0);
    const double m_now = merit(res, rhs_scale, dual_scale, obj);
    if (m_now < best_merit) {
      if (m_now < 0.9 * best_merit) no_progress = 0;
      best_merit = m_now;
      best_it = it;
      best_res = res;
    }
    if (m_now >= 0.9 * best_merit && ++no_progress >= 12) {
      break;  // stalled; fall through to the best-iterate acceptance
    }

    const bool primal_ok = res.primal_inf <= tol * rhs_scale;
    const bool dual_ok = res.dual_inf <= tol * dual_scale;
    const bool gap_ok = res.gap <= tol * (1.0 + std::abs(obj));
    if (primal_ok && dual_ok && gap_ok) {
      out.converged = true;
      out.it = it;
      out.res = res;
      return out;
    }
    if (res.primal_inf <= 1e-6 * rhs_scale && obj < -1e12 * obj_scale) {
      out.diverged_unbounded = true;
      out.it = it;
      out.res = res;
      return out;
    }
    if (iter == max_iter) break;

    // Newton matrix for the reduced system.
    Eigen::VectorXd d = (m > 0) ? Eigen::VectorXd(it.lambda.cwiseQuotient(it.s))
                                : Eigen::VectorXd();
    Eigen::MatrixXd M = weighted_curvature(f, it.lambda);
    // Static regularization keeps the factorization defined when M is
    // singular on the equality null space. Scaled by the physical curvature
    // only; the barrier term can reach 1e12 near convergence and must not
    // inflate the perturbation.
    const double reg = 1e-12 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
    if (m > 0) M.noalias() += ev.J.transpose() * d.asDiagonal() * ev.J;
    M.diagonal().array() += reg;

    Eigen::MatrixXd K(n + me, n + me);
    K.setZero();
    K.topLeftCorner(n, n) = M;
    if (me > 0) {
      K.topRightCorner(n, me) = -f.Ae.transpose();
      K.bottomLeftCorner(me, n) = f.Ae;
      K.bottomRightCorner(me, me).diagonal().array() -= reg;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);

    auto solve_direction = [&](const Eigen::VectorXd& r_comp, const Eigen::VectorXd& r_in_eff) {
      // r_comp is the complementarity target residual S*lambda - sigma*mu*1
      // (plus the Mehrotra correction); r_in_eff is r_in plus any
      // second-order constraint correction.
      Eigen::VectorXd rhs(n + me);
      Eigen::VectorXd top = -res.r_dual;
      if (m > 0) {
        const Eigen::VectorXd w = d.cwiseProduct(r_in_eff) - r_comp.cwiseQuotient(it.s);
        top.noalias() -= ev.J.transpose() * w;
      }
      rhs.head(n) = top;
      if (me > 0) rhs.tail(me) = -res.r_eq;
      Eigen::VectorXd sol = lu.solve(rhs);
      // Iterative refinement: the barrier makes K's conditioning grow like
      // 1/mu, and one pass is not enough for 1e-8 duals near convergence.
      const double rhs_norm = 1.0 + rhs.lpNorm<Eigen::Infinity>();
      for (int pass = 0; pass < 4; ++pass) {
        const Eigen::VectorXd resid = rhs - K * sol;
        if (resid.lpNorm<Eigen::Infinity>() <= 1e-14 * rhs_norm) break;
        sol += lu.solve(resid);
      }

      struct Dir {
        Eigen::VectorXd dz, dnu, ds, dlambda;
      } dir;
      dir.dz = sol.head(n);
      dir.dnu = me > 0 ? Eigen::VectorXd(sol.tail(me)) : Eigen::VectorXd();
      if (m > 0) {
        dir.ds = -r_in_eff - ev.J * dir.dz;
        dir.dlambda = d.cwiseProduct(r_in_eff + ev.J * dir.dz) - r_comp.cwiseQuotient(it.s);
      }
      return dir;
    };

    // Second-order residual of the curved rows along a step: the Newton
    // model drops the 1/2 dz'P dz term, which otherwise keeps regenerating
    // primal infeasibility near a nonsmooth optimum.
    auto quad_correction = [&](const Eigen::VectorXd& dz_step) {
      Eigen::VectorXd extra = Eigen::VectorXd::Zero(m);
      for (int g = 0; g < f.num_groups(); ++g) {
        const auto dz_z = dz_step.head(f.n_z);
        extra(f.m_aff() + g) =
            0.5 * dz_z.dot((*f.group_P[static_cast<std::size_t>(g)]) * dz_z);
      }
      return extra;
    };

    double alpha_p = 1.0, alpha_d = 1.0;
    Eigen::VectorXd dz, dnu, ds, dlambda;
    if (m > 0) {
      // Predictor (affine scaling) step.
      const Eigen::VectorXd r_comp_aff = it.s.cwiseProduct(it.lambda);
      auto aff = solve_direction(r_comp_aff, res.r_in);
      const double ap = step_to_boundary(it.s, aff.ds);
      const double ad = step_to_boundary(it.lambda, aff.dlambda);
      const double mu_aff =
          (it.s + ap * aff.ds).dot(it.lambda + ad * aff.dlambda) / m;
      double sigma = std::pow(std::max(mu_aff, 0.0) / std::max(res.mu, 1e-300), 3.0);
      sigma = std::clamp(sigma, 1e-8, 1.0);

      // Corrector: Mehrotra complementarity correction plus the exact
      // curvature correction of the curved rows, same factorization.
      const Eigen::VectorXd r_comp = it.s.cwiseProduct(it.lambda) +
                                     aff.ds.cwiseProduct(aff.dlambda) -
                                     Eigen::VectorXd::Constant(m, sigma * res.mu);
      const Eigen::VectorXd r_in_corr = res.r_in + quad_correction(aff.dz);
      auto cor = solve_direction(r_comp, r_in_corr);
      // Fraction-to-boundary, capped away from 1 so no slack ever lands on
      // the boundary exactly.
      const double tau = std::min(0.9995, std::max(0.99, 1.0 - std::max(res.mu, res.gap)));
      alpha_p = std::min(1.0, tau * step_to_boundary(it.s, cor.ds));
      alpha_d = std::min(1.0, tau * step_to_boundary(it.lambda, cor.dlambda));

      // Centrality safeguard: shrink the step until no complementarity
      // product falls far below the average, which otherwise lets mu
      // collapse many orders ahead of the residuals and wrecks the Newton
      // system conditioning.
      constexpr double kNeighborhood = 1e-6;
      for (int bt = 0; bt < 40; ++bt) {
        const Eigen::VectorXd s_new = it.s + alpha_p * cor.ds;
        const Eigen::VectorXd l_new = it.lambda + alpha_d * cor.dlambda;
        const Eigen::VectorXd prod = s_new.cwiseProduct(l_new);
        const double mu_new = prod.sum() / m;
        if (prod.minCoeff() >= kNeighborhood * mu_new) break;
        alpha_p *= 0.8;
        alpha_d *= 0.8;
      }
      dz = cor.dz;
      dnu = cor.dnu;
      ds = cor.ds;
      dlambda = cor.dlambda;
    } else {
      // No inequalities: plain Newton on the equality-constrained KKT system.
      auto dir = solve_direction(Eigen::VectorXd(), Eigen::VectorXd());
      dz = dir.dz;
      dnu = dir.dnu;
    }

    if (trace) std::fprintf(stderr, "        alpha_p=%9.2e alpha_d=%9.2e\n", alpha_p, alpha_d);
    it.z += alpha_p * dz;
    if (me > 0) it.nu += alpha_d * dnu;
    if (m > 0) {
      it.s += alpha_p * ds;
      it.lambda += alpha_d * dlambda;
    }
    ev = evaluate(f, it.z);

    if (std::min(alpha_p, alpha_d) < 1e-10) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
  }

  // No formally converged iterate: fall back to the best one seen if it
  // meets the gap tolerance exactly and feasibility within a 10x margin.
  const double best_obj = f.c.dot(best_it.z);
  const double best_dual_scale =
      obj_scale + (m > 0 ? best_it.lambda.lpNorm<Eigen::Infinity>() : 0.0);
  if (best_res.gap <= tol * (1.0 + std::abs(best_obj)) &&
      best_res.primal_inf <= 10.0 * tol * rhs_scale &&
      best_res.dual_inf <= 10.0 * tol * best_dual_scale) {
    out.converged = true;
    out.it = best_it;
    out.res = best_res;
    return out;
  }

  out.it = it;
  out.res = compute_residuals(f, it, ev);
  return out;
}

// Feasibility relaxation: minimize t subject to every inequality relaxed by
// t and t >= -1. Strictly feasible by construction, so the interior-point
// loop classifies feasibility of the original constraint set reliably.
ConvexQcqp make_phase1(const ConvexQcqp& prob) {
  ConvexQcqp p1;
  p1.n = prob.n + 1;
  const int tcol = prob.n;
  p1.objective = Eigen::VectorXd::Zero(p1.n);
  p1.objective(tcol) = 1.0;
  p1.eq_mat.resize(prob.num_eq(), p1.n);
  if (prob.num_eq() > 0) {
    p1.eq_mat << prob.eq_mat, Eigen::VectorXd::Zero(prob.num_eq());
  }
  p1.eq_rhs = prob.eq_rhs;
  p1.ineq_mat.resize(prob.num_ineq() + 1, p1.n);
  p1.ineq_mat.setZero();
  if (prob.num_ineq() > 0) {
    p1.ineq_mat.topLeftCorner(prob.num_ineq(), prob.n) = prob.ineq_mat;
    p1.ineq_mat.col(tcol).head(prob.num_ineq()).setConstant(-1.0);
  }
  p1.ineq_mat(prob.num_ineq(), tcol) = -1.0;  // -t <= 1
  p1.ineq_rhs.resize(prob.num_ineq() + 1);
  p1.ineq_rhs.head(prob.num_ineq()) = prob.ineq_rhs;
  p1.ineq_rhs(prob.num_ineq()) = 1.0;
  for (const auto& qc : prob.quads) {
    auto P = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(p1.n, p1.n));
    P->topLeftCorner(prob.n, prob.n) = *qc.P;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(p1.n);
    p.head(prob.n) = qc.p;
    p(qc.epigraph_col) -= 1.0;  // original epigraph variable stays on the lhs
    p1.quads.emplace_back(std::move(P), std::move(p), qc.c, tcol);
  }
  return p1;
}

// Bounded probe used to tell "unbounded" from "numerically stuck": re-solve
// inside a large box; hitting the box with a hugely negative objective is
// taken as unboundedness.
ConvexQcqp make_boxed(const ConvexQcqp& prob, double radius) {
  ConvexQcqp boxed = prob;
  const int m0 = prob.num_ineq();
  boxed.ineq_mat.conservativeResize(m0 + 2 * prob.n, prob.n);
  boxed.ineq_rhs.conservativeResize(m0 + 2 * prob.n);
  boxed.ineq_mat.bottomRows(2 * prob.n).setZero();
  for (int j = 0; j < prob.n; ++j) {
    boxed.ineq_mat(m0 + 2 * j, j) = 1.0;
    boxed.ineq_rhs(m0 + 2 * j) = radius;
    boxed.ineq_mat(m0 + 2 * j + 1, j) = -1.0;
    boxed.ineq_rhs(m0 + 2 * j + 1) = radius;
  }
  return boxed;
}

// KKT residuals of the ORIGINAL formulation at mapped multipliers; the
// reported numbers must describe the problem the caller posed, not the
// internal reformulation.
KktResiduals original_kkt(const ConvexQcqp& prob, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& nu, const Eigen::VectorXd& lambda_c,
                          const Eigen::VectorXd& lambda_q) {
  KktResiduals k;
  Eigen::VectorXd r_dual = prob.objective;
  if (prob.num_eq() > 0) {
    r_dual -= prob.eq_mat.transpose() * nu;
    k.primal = (prob.eq_mat * z - prob.eq_rhs).lpNorm<Eigen::Infinity>();
  }
  if (prob.num_ineq() > 0) {
    r_dual += prob.ineq_mat.transpose() * lambda_c;
    const Eigen::VectorXd slack = prob.ineq_rhs - prob.ineq_mat * z;
    k.primal = std::max(k.primal, (-slack).maxCoeff());
    k.complementarity =
        std::max(k.complementarity, slack.cwiseProduct(lambda_c).cwiseAbs().maxCoeff());
    k.gap += slack.dot(lambda_c);
  }
  for (int i = 0; i < prob.num_quad(); ++i) {
    const auto& qc = prob.quads[static_cast<std::size_t>(i)];
    const double g =
        0.5 * z.dot(*qc.P * z) + qc.p.dot(z) + qc.c - z(qc.epigraph_col);
    Eigen::VectorXd grad = *qc.P * z + qc.p;
    grad(qc.epigraph_col) -= 1.0;
    r_dual += lambda_q(i) * grad;
    k.primal = std::max(k.primal, g);
    k.complementarity = std::max(k.complementarity, std::abs(g * lambda_q(i)));
    k.gap += -g * lambda_q(i);
  }
  k.dual = r_dual.lpNorm<Eigen::Infinity>();
  return k;
}

SolveOutcome finish_optimal(const ConvexQcqp& prob, const FoldedProblem& f, const IpmResult& r) {
  SolveOutcome out;
  out.status = SolveStatus::Optimal;
  out.primal = r.it.z.head(prob.n);
  out.objective = prob.objective.dot(out.primal);
  out.eq_duals = r.it.nu;
  out.iterations = r.iterations;
  Eigen::VectorXd lambda_c = r.it.lambda.head(f.m_aff_orig);
  Eigen::VectorXd lambda_q = r.it.lambda.segment(f.m_aff_orig, f.m_quad_orig);
  out.min_dual_preclamp = r.it.lambda.size() > 0 ? r.it.lambda.minCoeff() : 0.0;
  out.ineq_duals = lambda_c.cwiseMax(0.0);
  out.quad_duals = lambda_q.cwiseMax(0.0);
  out.kkt = original_kkt(prob, out.primal, out.eq_duals, out.ineq_duals, out.quad_duals);
  return out;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericFailure: return "numeric-failure";
  }
  return "unknown";
}

void ConvexQcqp::check_shape() const {
  if (objective.size() != n) throw DimensionError("objective size != n");
  if (eq_mat.rows() != eq_rhs.size()) throw DimensionError("equality rows/rhs mismatch");
  if (eq_mat.rows() > 0 && eq_mat.cols() != n) throw DimensionError("equality cols != n");
  if (ineq_mat.rows() != ineq_rhs.size()) throw DimensionError("inequality rows/rhs mismatch");
  if (ineq_mat.rows() > 0 && ineq_mat.cols() != n) throw DimensionError("inequality cols != n");
  int epi = -1;
  for (const auto& qc : quads) {
    if (!qc.P) throw DimensionError("quadratic constraint missing P");
    if (qc.P->rows() != n || qc.P->cols() != n) throw DimensionError("quadratic P not n x n");
    if (qc.p.size() != n) throw DimensionError("quadratic p size != n");
    if (qc.epigraph_col < 0 || qc.epigraph_col >= n)
      throw DimensionError("epigraph column out of range");
    if (epi < 0) epi = qc.epigraph_col;
    if (qc.epigraph_col != epi)
      throw std::invalid_argument("all quadratic constraints must share one epigraph column");
  }
}

void ConvexQcqp::verify() const {
  check_shape();
  constexpr double kPsdFloor = -1e-9;
  for (std::size_t k = 0; k < quads.size(); ++k) {
    const Eigen::MatrixXd& P = *quads[k].P;
    if ((P - P.transpose()).lpNorm<Eigen::Infinity>() > 1e-9)
      throw std::invalid_argument("quadratic P not symmetric (constraint " + std::to_string(k) + ")");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdFloor)
      throw std::invalid_argument("quadratic P not PSD (constraint " + std::to_string(k) + ")");
  }
}

SolveOutcome solve_with_duals(const ConvexQcqp& prob, double tol) {
  if (!(tol >= 1e-12 && tol <= 1e-4))
    throw std::invalid_argument("solve_with_duals: tol must lie in [1e-12, 1e-4]");
  prob.check_shape();

  const FoldedProblem f = fold(prob);

  // Inconsistent equalities settle infeasibility outright.
  if (f.be.size() > 0) {
    const Eigen::VectorXd z_ls = f.Ae.completeOrthogonalDecomposition().solve(f.be);
    const double res = (f.Ae * z_ls - f.be).lpNorm<Eigen::Infinity>();
    if (res > 1e-8 * (1.0 + f.be.lpNorm<Eigen::Infinity>())) {
      SolveOutcome out;
      out.status = SolveStatus::Infeasible;
      return out;
    }
  }

  // No inequality rows at all: the LP is either flat on the equality
  // manifold or unbounded, decided by whether c lies in range(Ae').
  if (f.m() == 0) {
    SolveOutcome out;
    if (f.be.size() == 0) {
      if (f.c.lpNorm<Eigen::Infinity>() > 0.0) {
        out.status = SolveStatus::Unbounded;
      } else {
        out.status = SolveStatus::Optimal;
        out.primal = Eigen::VectorXd::Zero(prob.n);
        out.eq_duals.resize(0);
        out.ineq_duals.resize(0);
        out.quad_duals.resize(0);
      }
      return out;
    }
    const Eigen::VectorXd nu = f.Ae.transpose().completeOrthogonalDecomposition().solve(f.c);
    const double stat_res = (f.c - f.Ae.transpose() * nu).lpNorm<Eigen::Infinity>();
    if (stat_res > tol * (1.0 + f.c.lpNorm<Eigen::Infinity>())) {
      out.status = SolveStatus::Unbounded;
      return out;
    }
    out.status = SolveStatus::Optimal;
    out.primal = f.Ae.completeOrthogonalDecomposition().solve(f.be);
    out.objective = f.c.dot(out.primal);
    out.eq_duals = nu;
    out.ineq_duals.resize(0);
    out.quad_duals.resize(0);
    return out;
  }

  IpmResult r = run_ipm(f, tol, kMaxIterations);
  if (r.converged) {
    SolveOutcome out = finish_optimal(prob, f, r);
    if (out.min_dual_preclamp < kClampFloor) {
      out.status = SolveStatus::NumericFailure;
    }
    return out;
  }
  if (r.diverged_unbounded) {
    SolveOutcome out;
    out.status = SolveStatus::Unbounded;
    out.iterations = r.iterations;
    return out;
  }

  // Classification path: phase-1 feasibility, then a boxed boundedness probe.
  const ConvexQcqp p1 = make_phase1(prob);
  const FoldedProblem f1 = fold(p1);
  IpmResult r1 = run_ipm(f1, std::max(tol, 1e-9), kMaxIterations);
  const double feas_scale =
      1.0 + (prob.num_ineq() > 0 ? prob.ineq_rhs.lpNorm<Eigen::Infinity>() : 0.0);
  if (r1.converged && r1.it.z(prob.n) > 1e2 * std::max(tol, 1e-9) * feas_scale) {
    SolveOutcome out;
    out.status = SolveStatus::Infeasible;
    out.iterations = r.iterations;
    return out;
  }

  if (r1.converged) {
    const double radius = 1e7 * (1.0 + r1.it.z.head(prob.n).lpNorm<Eigen::Infinity>());
    const ConvexQcqp boxed = make_boxed(prob, radius);
    const FoldedProblem fb = fold(boxed);
    IpmResult rb = run_ipm(fb, 1e-6, kMaxIterations);
    if (rb.converged) {
      const double obj_scale = 1.0 + prob.objective.lpNorm<Eigen::Infinity>();
      if (rb.it.z.head(prob.n).lpNorm<Eigen::Infinity>() > 0.9 * radius ||
          prob.objective.dot(rb.it.z.head(prob.n)) < -1e5 * obj_scale) {
        SolveOutcome out;
        out.status = SolveStatus::Unbounded;
        out.iterations = r.iterations;
        return out;
      }
    }
  }

  SolveOutcome out;
  out.status = SolveStatus::NumericFailure;
  out.iterations = r.iterations;
  out.kkt.primal = r.res.primal_inf;
  out.kkt.dual = r.res.dual_inf;
  out.kkt.gap = r.res.gap;
  return out;
}

double dual_objective(const ConvexQcqp& prob, const Eigen::VectorXd& eq_duals,
                      const Eigen::VectorXd& ineq_duals, const Eigen::VectorXd& quad_duals) {
  prob.check_shape();

  // L(z) = 1/2 z'Hz + h'z + const with
  //   H = sum lambda_q_k P_k
  //   h = c - Ae'nu + Ai'lambda_c + sum lambda_q_k (p_k - e_alpha)
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(prob.n, prob.n);
  Eigen::VectorXd h = prob.objective;
  double constant = 0.0;
  if (prob.num_eq() > 0) {
    h -= prob.eq_mat.transpose() * eq_duals;
    constant += eq_duals.dot(prob.eq_rhs);
  }
  if (prob.num_ineq() > 0) {
    h += prob.ineq_mat.transpose() * ineq_duals;
    constant -= ineq_duals.dot(prob.ineq_rhs);
  }
  for (int k = 0; k < prob.num_quad(); ++k) {
    const auto& qc = prob.quads[static_cast<std::size_t>(k)];
    H += quad_duals(k) * (*qc.P);
    Eigen::VectorXd q = qc.p;
    q(qc.epigraph_col) -= 1.0;
    h += quad_duals(k) * q;
    constant += quad_duals(k) * qc.c;
  }

  // inf_z of the convex quadratic: finite iff h lies in range(H).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::VectorXd evals = es.eigenvalues();
  const Eigen::VectorXd hv = es.eigenvectors().transpose() * h;
  const double eig_floor = 1e-12 * std::max(1.0, evals.cwiseAbs().maxCoeff());
  double value = constant;
  for (int i = 0; i < evals.size(); ++i) {
    if (evals(i) > eig_floor) {
      value -= 0.5 * hv(i) * hv(i) / evals(i);
    } else if (std::abs(hv(i)) > 1e-7 * (1.0 + h.lpNorm<Eigen::Infinity>())) {
      return -kInfinity;
    }
  }
  return value;
}

}  // namespace qbenders
