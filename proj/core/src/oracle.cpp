#include "qbenders/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qbenders/errors.hpp"
#include "qbenders/parallel.hpp"

namespace qbenders {

namespace {

constexpr double kHuge = 1e30;

struct GridShape {
  std::vector<AxisSpec> axes;

  int ndim() const { return static_cast<int>(axes.size()); }
  Eigen::Index total() const {
    Eigen::Index t = 1;
    for (const auto& a : axes) t *= a.count;
    return t;
  }
  Eigen::VectorXd point(Eigen::Index flat) const {
    Eigen::VectorXd x(ndim());
    for (int d = ndim() - 1; d >= 0; --d) {
      const int i = static_cast<int>(flat % axes[d].count);
      flat /= axes[d].count;
      x(d) = axes[d].lo + i * axes[d].step();
    }
    return x;
  }
};

// Multilinear interpolation with clamping; *clamped reports whether the
// query left the box.
double interpolate(const std::vector<AxisSpec>& axes, const Eigen::VectorXd& values,
                   const Eigen::VectorXd& x, bool* clamped) {
  const int ndim = static_cast<int>(axes.size());
  std::vector<int> base(axes.size());
  std::vector<double> frac(axes.size());
  if (clamped) *clamped = false;
  for (int d = 0; d < ndim; ++d) {
    double t = (x(d) - axes[d].lo) / axes[d].step();
    if (t < 0.0) {
      t = 0.0;
      if (clamped) *clamped = true;
    }
    if (t > axes[d].count - 1) {
      t = axes[d].count - 1;
      if (clamped) *clamped = true;
    }
    int i = static_cast<int>(t);
    if (i >= axes[d].count - 1) i = axes[d].count - 2;
    base[d] = std::max(i, 0);
    frac[d] = t - base[d];
  }
  // Accumulate over the 2^ndim cell corners.
  double value = 0.0;
  const int corners = 1 << ndim;
  for (int corner = 0; corner < corners; ++corner) {
    double weight = 1.0;
    Eigen::Index flat = 0;
    for (int d = 0; d < ndim; ++d) {
      const int off = (corner >> d) & 1;
      weight *= off ? frac[d] : 1.0 - frac[d];
      flat = flat * axes[d].count + (base[d] + off);
    }
    value += weight * values(flat);
  }
  return value;
}

}  // namespace

double GridValueFunction::value_at(const Eigen::VectorXd& x) const {
  return interpolate(axes, values, x, nullptr);
}

GridValueFunction value_iteration(const CLQRInstance& inst, const std::vector<AxisSpec>& grid,
                                  const std::vector<AxisSpec>& u_grid, double vi_tol,
                                  int max_sweeps) {
  if (inst.nx() > 2)
    throw std::invalid_argument("value_iteration: desk-scale oracle supports n_x <= 2");
  if (static_cast<int>(grid.size()) != inst.nx() ||
      static_cast<int>(u_grid.size()) != inst.nu())
    throw DimensionError("value_iteration: grid dimensions do not match the instance");
  for (const auto& a : grid)
    if (a.count < 2 || !(a.hi > a.lo)) throw std::invalid_argument("value_iteration: bad state axis");
  for (const auto& a : u_grid)
    if (a.count < 1) throw std::invalid_argument("value_iteration: bad input axis");

  const GridShape xs{grid};
  const GridShape us{u_grid};
  const Eigen::Index n_states = xs.total();
  const Eigen::Index n_inputs = us.total();

  // Enumerate input candidates once.
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(static_cast<std::size_t>(n_inputs));
  for (Eigen::Index k = 0; k < n_inputs; ++k) inputs.push_back(us.point(k));

  GridValueFunction vf;
  vf.axes = grid;
  vf.values = Eigen::VectorXd::Zero(n_states);

  Eigen::VectorXd next(n_states);
  std::vector<std::uint8_t> clamped_flags(static_cast<std::size_t>(n_states), 0);
  std::vector<double> residual_history;
  double residual = std::numeric_limits<double>::infinity();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    parallel_for(static_cast<std::size_t>(n_states), [&](std::size_t sidx) {
      const Eigen::VectorXd x = xs.point(static_cast<Eigen::Index>(sidx));
      double best = kHuge;
      bool best_clamped = false;
      for (Eigen::Index k = 0; k < n_inputs; ++k) {
        const Eigen::VectorXd& u = inputs[static_cast<std::size_t>(k)];
        if (inst.max_violation(x, u) > 1e-12) continue;
        bool clamp = false;
        const double v =
            inst.stage_cost(x, u) +
            inst.gamma * interpolate(grid, vf.values, inst.dynamics(x, u), &clamp);
        if (v < best) {
          best = v;
          best_clamped = clamp;
        }
      }
      next(static_cast<Eigen::Index>(sidx)) = best;
      clamped_flags[sidx] = best_clamped ? 1 : 0;
    });

    residual = (next - vf.values).cwiseAbs().maxCoeff();
    vf.values.swap(next);
    vf.sweeps = sweep + 1;
    residual_history.push_back(residual);
    if (residual <= vi_tol) break;
  }

  if (residual > vi_tol) {
    std::ostringstream os;
    os << "value_iteration: residual " << residual << " above " << vi_tol << " after "
       << max_sweeps << " sweeps; recent residuals:";
    const std::size_t from = residual_history.size() > 5 ? residual_history.size() - 5 : 0;
    for (std::size_t i = from; i < residual_history.size(); ++i) os << " " << residual_history[i];
    throw std::runtime_error(os.str());
  }

  vf.residual = residual;
  vf.clamped_states = static_cast<int>(std::count(clamped_flags.begin(), clamped_flags.end(), 1));

  // Interpolation-error margin: linear interpolation of a smooth function is
  // off by at most max|f''| h^2 / 8 per axis, with the curvature estimated
  // from second differences along each axis.
  double interp_bound = 0.0;
  for (int d = 0; d < xs.ndim(); ++d) {
    const double h = grid[static_cast<std::size_t>(d)].step();
    Eigen::Index stride = 1;
    for (int e = xs.ndim() - 1; e > d; --e) stride *= grid[static_cast<std::size_t>(e)].count;
    double max_curv = 0.0;
    for (Eigen::Index flat = 0; flat < n_states; ++flat) {
      const Eigen::Index i_d = (flat / stride) % grid[static_cast<std::size_t>(d)].count;
      if (i_d == 0 || i_d == grid[static_cast<std::size_t>(d)].count - 1) continue;
      const double second =
          vf.values(flat - stride) - 2.0 * vf.values(flat) + vf.values(flat + stride);
      max_curv = std::max(max_curv, std::abs(second) / (h * h));
    }
    interp_bound += max_curv * h * h / 8.0;
  }
  vf.interp_error_bound = interp_bound;

  // Input-grid discretization: one extra half-resolution minimization sweep;
  // a second-order method loses ~3x the fine-grid error when the step
  // doubles, so gap/3 estimates the fine-grid error itself.
  double u_gap = 0.0;
  {
    Eigen::VectorXd coarse(n_states);
    parallel_for(static_cast<std::size_t>(n_states), [&](std::size_t sidx) {
      const Eigen::VectorXd x = xs.point(static_cast<Eigen::Index>(sidx));
      double best = kHuge;
      for (Eigen::Index k = 0; k < n_inputs; k += 2) {
        const Eigen::VectorXd& u = inputs[static_cast<std::size_t>(k)];
        if (inst.max_violation(x, u) > 1e-12) continue;
        const double v = inst.stage_cost(x, u) +
                         inst.gamma * interpolate(grid, vf.values, inst.dynamics(x, u), nullptr);
        best = std::min(best, v);
      }
      coarse(static_cast<Eigen::Index>(sidx)) = best;
    });
    Eigen::VectorXd fine(n_states);
    parallel_for(static_cast<std::size_t>(n_states), [&](std::size_t sidx) {
      const Eigen::VectorXd x = xs.point(static_cast<Eigen::Index>(sidx));
      double best = kHuge;
      for (Eigen::Index k = 0; k < n_inputs; ++k) {
        const Eigen::VectorXd& u = inputs[static_cast<std::size_t>(k)];
        if (inst.max_violation(x, u) > 1e-12) continue;
        const double v = inst.stage_cost(x, u) +
                         inst.gamma * interpolate(grid, vf.values, inst.dynamics(x, u), nullptr);
        best = std::min(best, v);
      }
      fine(static_cast<Eigen::Index>(sidx)) = best;
    });
    u_gap = (coarse - fine).cwiseAbs().maxCoeff() / 3.0;
  }
  vf.input_grid_bound = u_gap;

  // Remaining value-iteration tail from the measured contraction.
  double rho = 0.5;
  if (residual_history.size() >= 2) {
    const double prev = residual_history[residual_history.size() - 2];
    if (prev > 0.0) rho = std::clamp(residual / prev, 0.0, 0.999);
  }
  vf.residual_bound = residual * rho / (1.0 - rho);

  return vf;
}

double q_star_from_v(const GridValueFunction& vf, const CLQRInstance& inst,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  const Eigen::VectorXd succ = inst.dynamics(x, u);
  for (std::size_t d = 0; d < vf.axes.size(); ++d) {
    const double margin = vf.axes[d].step();
    if (succ(static_cast<Eigen::Index>(d)) < vf.axes[d].lo - margin ||
        succ(static_cast<Eigen::Index>(d)) > vf.axes[d].hi + margin) {
      std::ostringstream os;
      os << "q_star_from_v: successor coordinate " << d << " = "
         << succ(static_cast<Eigen::Index>(d)) << " lies beyond the grid clamp margin";
      throw std::domain_error(os.str());
    }
  }
  return inst.stage_cost(x, u) + inst.gamma * vf.value_at(succ);
}

RiccatiResult riccati_gain(const CLQRInstance& inst) {
  const Eigen::MatrixXd& A = inst.A;
  const Eigen::MatrixXd& B = inst.B;
  const Eigen::MatrixXd& Q = inst.Qmat;
  const Eigen::MatrixXd& R = inst.Rmat;
  const double g = inst.gamma;

  Eigen::LLT<Eigen::MatrixXd> r_llt(R);
  if (r_llt.info() != Eigen::Success)
    throw std::invalid_argument("riccati_gain: Rmat must be positive definite");

  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 100000;
  Eigen::MatrixXd P = Q;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd gain_den = R + g * BtP * B;
    const Eigen::MatrixXd P_next =
        Q + g * A.transpose() * P * A -
        g * g * A.transpose() * P * B * gain_den.ldlt().solve(BtP * A);
    const double residual = (P_next - P).cwiseAbs().maxCoeff();
    P = P_next;
    if (residual <= kTol) {
      RiccatiResult res;
      res.P = P;
      const Eigen::MatrixXd den = R + g * B.transpose() * P * B;
      res.K = g * den.ldlt().solve(B.transpose() * P * A);
      return res;
    }
  }
  throw std::runtime_error("riccati_gain: fixed-point iteration did not reach 1e-12");
}

Eigen::VectorXd clipped_lqr_policy(const CLQRInstance& inst, const Eigen::MatrixXd& K,
                                   const Eigen::VectorXd& x) {
  if (inst.D.size() > 0 && inst.D.cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("clipped_lqr_policy: requires D = 0");

  // Recover per-component box bounds from rows of E proportional to +-e_j.
  const int nu = inst.nu();
  Eigen::VectorXd ub = Eigen::VectorXd::Constant(nu, std::numeric_limits<double>::infinity());
  Eigen::VectorXd lb = Eigen::VectorXd::Constant(nu, -std::numeric_limits<double>::infinity());
  for (int r = 0; r < inst.nc(); ++r) {
    int nonzero = -1;
    bool single = true;
    for (int j = 0; j < nu; ++j) {
      if (inst.E(r, j) != 0.0) {
        if (nonzero >= 0) single = false;
        nonzero = j;
      }
    }
    if (!single || nonzero < 0) continue;
    const double coef = inst.E(r, nonzero);
    const double bound = inst.hbar(r) / coef;
    if (coef > 0.0)
      ub(nonzero) = std::min(ub(nonzero), bound);
    else
      lb(nonzero) = std::max(lb(nonzero), bound);
  }
  for (int j = 0; j < nu; ++j) {
    if (!std::isfinite(ub(j)) || !std::isfinite(lb(j)))
      throw std::invalid_argument("clipped_lqr_policy: E does not encode a full input box");
  }

  Eigen::VectorXd u = -(K * x);
  return u.cwiseMax(lb).cwiseMin(ub);
}

NuBoundReport nu_bound_diagnostic(const PwmQFunction& q, const CLQRInstance& inst, double X,
                                  double U) {
  (void)U;  // enters only through the ||D|| term, which this D = 0 case drops
  NuBoundReport report;
  double max_nu = 0.0;
  for (const BendersCut& cut : q.cuts()) max_nu = std::max(max_nu, cut.nu.norm());
  report.max_nu_norm = max_nu;

  if (inst.D.size() > 0 && inst.D.cwiseAbs().maxCoeff() > 0.0) {
    report.applicable = false;
    report.note = "only the D = 0 specialization is implemented";
    return report;
  }
  const double gA = inst.gamma * spectral_norm(inst.A);
  if (gA >= 1.0) {
    report.applicable = false;
    report.note = "gamma * ||A|| >= 1: bound undefined";
    return report;
  }
  report.applicable = true;
  report.bound = inst.gamma * X * spectral_norm(inst.Qmat) / (1.0 - gA);
  report.pass = max_nu <= report.bound + 1e-9;
  report.note = "bound = gamma * X * ||Q|| / (1 - gamma * ||A||)";
  return report;
}

double grid_bellman(const PwmQFunction& q, const Eigen::VectorXd& x_hat,
                    const Eigen::VectorXd& u_hat, int u_steps) {
  const CLQRInstance& inst = q.instance();
  if (inst.nu() != 1) throw std::invalid_argument("grid_bellman: brute force supports n_u = 1");
  if (u_steps < 2) throw std::invalid_argument("grid_bellman: u_steps must be >= 2");

  const Eigen::VectorXd succ = inst.dynamics(x_hat, u_hat);
  double best = kHuge;
  Eigen::VectorXd u(1);
  for (int k = 0; k < u_steps; ++k) {
    u(0) = -1.0 + 2.0 * k / (u_steps - 1);
    if (inst.max_violation(succ, u) > 1e-12) continue;
    best = std::min(best, q.eval(succ, u).value);
  }
  return inst.stage_cost(x_hat, u_hat) + inst.gamma * best;
}

double grid_greedy_value(const PwmQFunction& q, const Eigen::VectorXd& x, int u_steps) {
  const CLQRInstance& inst = q.instance();
  if (inst.nu() != 1)
    throw std::invalid_argument("grid_greedy_value: brute force supports n_u = 1");
  double best = kHuge;
  Eigen::VectorXd u(1);
  for (int k = 0; k < u_steps; ++k) {
    u(0) = -1.0 + 2.0 * k / (u_steps - 1);
    if (inst.max_violation(x, u) > 1e-12) continue;
    best = std::min(best, q.eval(x, u).value);
  }
  return best;
}

}  // namespace qbenders
