#include "qbenders/problem.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>

#include "qbenders/conic.hpp"
#include "qbenders/errors.hpp"
#include "qbenders/rng.hpp"

namespace qbenders {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

double min_eigenvalue_sym(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

CLQRInstance::CLQRInstance(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd Qmat_,
                           Eigen::MatrixXd Rmat_, Eigen::MatrixXd D_, Eigen::MatrixXd E_,
                           Eigen::VectorXd hbar_, double gamma_)
    : A(std::move(A_)), B(std::move(B_)), Qmat(std::move(Qmat_)), Rmat(std::move(Rmat_)),
      D(std::move(D_)), E(std::move(E_)), hbar(std::move(hbar_)), gamma(gamma_) {
  const auto nx = A.rows();
  const auto nu = B.cols();
  require(A.cols() == nx, "A must be square");
  require(B.rows() == nx, "A/B row mismatch");
  require(Qmat.rows() == nx && Qmat.cols() == nx, "A/Qmat dimension mismatch");
  require(Rmat.rows() == nu && Rmat.cols() == nu, "B/Rmat dimension mismatch");
  require(D.cols() == nx, "D/A column mismatch");
  require(E.cols() == nu, "E/B column mismatch");
  require(D.rows() == E.rows(), "D/E row mismatch");
  require(hbar.size() == E.rows(), "E/hbar size mismatch");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
}

double CLQRInstance::max_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (nc() == 0) return -std::numeric_limits<double>::infinity();
  return constraint_residual(x, u).maxCoeff();
}

CLQRInstance CLQRInstance::scalar_benchmark() {
  Eigen::MatrixXd A(1, 1), B(1, 1), Q(1, 1), R(1, 1), D(2, 1), E(2, 1);
  A << 0.9;
  B << 1.0;
  Q << 1.0;
  R << 1.0;
  D << 0.0, 0.0;
  E << 1.0, -1.0;
  Eigen::VectorXd hbar(2);
  hbar << 1.0, 1.0;
  return {A, B, Q, R, D, E, hbar, 1.0};
}

bool ValidationReport::usable() const {
  for (const auto& c : checks) {
    if (!c.pass && c.note.find("warning") == std::string::npos) return false;
  }
  return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate_instance(const CLQRInstance& inst) {
  constexpr double kPsdFloor = -1e-9;
  ValidationReport report;

  const double q_min = min_eigenvalue_sym(inst.Qmat);
  report.checks.push_back({"Qmat_psd", q_min >= kPsdFloor, q_min, "min eigenvalue"});
  const double r_min = min_eigenvalue_sym(inst.Rmat);
  report.checks.push_back({"Rmat_psd", r_min >= kPsdFloor, r_min, "min eigenvalue"});

  // Boundedness of {u : Eu <= hbar} probed by maximizing +-u_j at x = 0.
  bool bounded = true;
  double max_extent = 0.0;
  std::string note = "max |u_j| over 2 n_u LPs";
  for (int j = 0; j < inst.nu() && bounded; ++j) {
    for (double sign : {1.0, -1.0}) {
      ConvexQcqp lp;
      lp.n = inst.nu();
      lp.objective = Eigen::VectorXd::Zero(inst.nu());
      lp.objective(j) = -sign;  // maximize sign * u_j
      lp.eq_mat.resize(0, lp.n);
      lp.eq_rhs.resize(0);
      lp.ineq_mat = inst.E;
      lp.ineq_rhs = inst.hbar;
      const SolveOutcome out = solve_with_duals(lp, 1e-9);
      if (out.status == SolveStatus::Optimal) {
        max_extent = std::max(max_extent, std::abs(out.primal(j)));
      } else {
        bounded = false;
        note = out.status == SolveStatus::Unbounded
                   ? "input set unbounded in u_" + std::to_string(j)
                   : "boundedness LP returned " + std::string(to_string(out.status));
      }
    }
  }
  report.checks.push_back({"input_set_bounded", bounded, max_extent, note});

  const double ga = inst.gamma * spectral_norm(inst.A);
  report.checks.push_back(
      {"gamma_A_contraction", ga < 1.0, ga, ga < 1.0 ? "gamma*||A||_2" : "warning: gamma*||A||_2 >= 1"});

  return report;
}

CLQRInstance random_instance(std::uint64_t seed, int n_x, int n_u, double norm_cap) {
  if (n_x < 1 || n_u < 1) throw std::invalid_argument("random_instance: dimensions must be >= 1");
  if (!(norm_cap > 0.0)) throw std::invalid_argument("random_instance: norm_cap must be > 0");

  Xoshiro256pp rng(seed);
  Eigen::MatrixXd A(n_x, n_x);
  for (int i = 0; i < n_x; ++i)
    for (int j = 0; j < n_x; ++j) A(i, j) = rng.normal();
  const double a_norm = spectral_norm(A);
  if (a_norm > norm_cap) A *= norm_cap / a_norm;

  Eigen::MatrixXd B(n_x, n_u);
  for (int i = 0; i < n_x; ++i)
    for (int j = 0; j < n_u; ++j) B(i, j) = rng.normal();

  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n_x, n_x);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n_u, n_u);

  // ||u||_inf <= 1 as [I; -I] u <= 1, no state rows.
  Eigen::MatrixXd E(2 * n_u, n_u);
  E.topRows(n_u) = Eigen::MatrixXd::Identity(n_u, n_u);
  E.bottomRows(n_u) = -Eigen::MatrixXd::Identity(n_u, n_u);
  const Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * n_u, n_x);
  const Eigen::VectorXd hbar = Eigen::VectorXd::Ones(2 * n_u);

  return {A, B, Q, R, D, E, hbar, 1.0};
}

void check_sample_set(const SamplePointSet& set, const CLQRInstance& inst) {
  constexpr double kFeasTol = 1e-9;
  for (const auto& x : set.states) {
    if (x.size() != inst.nx())
      throw DimensionError("sample state dimension does not match the instance");
  }
  if (set.has_inputs()) {
    if (set.inputs.size() != set.states.size())
      throw std::invalid_argument("paired sample set must have one input per state");
    for (std::size_t m = 0; m < set.states.size(); ++m) {
      if (set.inputs[m].size() != inst.nu())
        throw DimensionError("sample input dimension does not match the instance");
      const double viol = inst.max_violation(set.states[m], set.inputs[m]);
      if (viol > kFeasTol) {
        std::ostringstream os;
        os << "sample pair " << m << " violates D x + E u <= hbar by " << viol;
        throw std::invalid_argument(os.str());
      }
    }
  }
}

SamplingSpec SamplingSpec::uniform_box(double lo, double hi, bool with_inputs) {
  SamplingSpec spec;
  spec.kind = Kind::UniformBox;
  spec.lo = Eigen::VectorXd::Constant(1, lo);
  spec.hi = Eigen::VectorXd::Constant(1, hi);
  spec.with_inputs = with_inputs;
  return spec;
}

SamplingSpec SamplingSpec::gaussian(double stddev, bool with_inputs) {
  SamplingSpec spec;
  spec.kind = Kind::Gaussian;
  spec.stddev = stddev;
  spec.with_inputs = with_inputs;
  return spec;
}

SamplePointSet sample_points(std::uint64_t seed, const CLQRInstance& inst, int M,
                             const SamplingSpec& spec) {
  if (M < 1) throw std::invalid_argument("sample_points: M must be >= 1");
  constexpr int kMaxRejections = 10000;

  Xoshiro256pp rng(seed);
  const int nx = inst.nx();
  const int nu = inst.nu();

  Eigen::VectorXd lo, hi;
  if (spec.kind == SamplingSpec::Kind::UniformBox) {
    auto broadcast = [nx](const Eigen::VectorXd& v, const char* which) {
      if (v.size() == nx) return v;
      if (v.size() == 1) return Eigen::VectorXd(Eigen::VectorXd::Constant(nx, v(0)));
      throw DimensionError(std::string("sampling box ") + which + " has wrong size");
    };
    lo = broadcast(spec.lo, "lo");
    hi = broadcast(spec.hi, "hi");
  }

  SamplePointSet set;
  set.states.reserve(M);
  if (spec.with_inputs) set.inputs.reserve(M);

  for (int m = 0; m < M; ++m) {
    Eigen::VectorXd x(nx);
    if (spec.kind == SamplingSpec::Kind::UniformBox) {
      for (int i = 0; i < nx; ++i) x(i) = rng.uniform(lo(i), hi(i));
    } else {
      for (int i = 0; i < nx; ++i) x(i) = spec.stddev * rng.normal();
    }
    set.states.push_back(x);

    if (spec.with_inputs) {
      Eigen::VectorXd u(nu);
      bool accepted = false;
      for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        for (int j = 0; j < nu; ++j) u(j) = rng.uniform(-1.0, 1.0);
        if (inst.max_violation(x, u) <= 0.0) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        std::ostringstream os;
        os << "sample_points: no feasible input found for state " << m << " after "
           << kMaxRejections << " draws; the constraint set is too tight for box sampling";
        throw std::runtime_error(os.str());
      }
      set.inputs.push_back(u);
    }
  }

  check_sample_set(set, inst);
  return set;
}

}  // namespace qbenders
