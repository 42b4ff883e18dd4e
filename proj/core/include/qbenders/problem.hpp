#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace qbenders {

/// One constrained linear-quadratic control problem:
///
///   dynamics    x+ = A x + B u
///   stage cost  l(x,u) = 1/2 x'Qmat x + 1/2 u'Rmat u
///   constraint  D x + E u <= hbar
///   discount    gamma in (0, 1]
///
/// Construction checks dimensional consistency only; use validate_instance()
/// for the structural assumptions (PSD costs, compact input set, spectral
/// stability). Instances are immutable after construction and safe to share
/// across threads.
struct CLQRInstance {
  Eigen::MatrixXd A;     // n_x x n_x
  Eigen::MatrixXd B;     // n_x x n_u
  Eigen::MatrixXd Qmat;  // n_x x n_x
  Eigen::MatrixXd Rmat;  // n_u x n_u
  Eigen::MatrixXd D;     // n_c x n_x
  Eigen::MatrixXd E;     // n_c x n_u
  Eigen::VectorXd hbar;  // n_c
  double gamma = 1.0;

  CLQRInstance(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd Qmat_,
               Eigen::MatrixXd Rmat_, Eigen::MatrixXd D_, Eigen::MatrixXd E_,
               Eigen::VectorXd hbar_, double gamma_);

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int nc() const { return static_cast<int>(E.rows()); }

  Eigen::VectorXd dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return A * x + B * u;
  }
  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return 0.5 * x.dot(Qmat * x) + 0.5 * u.dot(Rmat * u);
  }
  /// D x + E u - hbar (componentwise <= 0 means feasible).
  Eigen::VectorXd constraint_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return D * x + E * u - hbar;
  }
  /// Largest constraint violation; -inf when there are no constraint rows.
  double max_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  /// The 1-state, 1-input example system x+ = 0.9 x + u with unit cost
  /// weights, |u| <= 1 and gamma = 1. Used throughout the docs and tests.
  static CLQRInstance scalar_benchmark();
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  /// PSD and input-set boundedness must pass; the spectral condition is
  /// advisory (a warning, not a gate).
  bool usable() const;
  const ValidationCheck* find(const std::string& name) const;
};

/// Structural checks: Qmat/Rmat symmetric PSD (eigenvalue floor -1e-9),
/// boundedness of {u : E u <= hbar} probed by 2 n_u LPs at x = 0, and the
/// spectral condition gamma * ||A||_2 < 1.
ValidationReport validate_instance(const CLQRInstance& inst);

/// Random system in the style of the higher-dimensional experiments:
/// A, B standard-normal (A rescaled onto spectral norm `norm_cap` when the
/// raw norm exceeds it), identity cost weights, ||u||_inf <= 1, gamma = 1.
/// Deterministic for a fixed seed.
CLQRInstance random_instance(std::uint64_t seed, int n_x, int n_u, double norm_cap);

/// State samples with optional per-state inputs. With inputs present the set
/// drives the fixed-pairs algorithm variant; without them, the policy-driven
/// variant.
struct SamplePointSet {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;  // empty unless paired sampling was requested

  bool has_inputs() const { return !inputs.empty(); }
  int size() const { return static_cast<int>(states.size()); }
};

/// Throws if the set is malformed for the given instance (length mismatch,
/// or a paired sample violating D x + E u <= hbar + 1e-9).
void check_sample_set(const SamplePointSet& set, const CLQRInstance& inst);

struct SamplingSpec {
  enum class Kind { UniformBox, Gaussian };
  Kind kind = Kind::UniformBox;
  Eigen::VectorXd lo, hi;  // UniformBox bounds; size 1 broadcasts to all dims
  double stddev = 1.0;     // Gaussian standard deviation (zero mean)
  bool with_inputs = false;

  static SamplingSpec uniform_box(double lo, double hi, bool with_inputs = false);
  static SamplingSpec gaussian(double stddev, bool with_inputs = false);
};

/// Draws M states per the descriptor. When inputs are requested each u_m is
/// uniform on ||u||_inf <= 1, rejection-sampled against E u <= hbar - D x_m;
/// more than 10,000 rejected draws for one point is an error (the constraint
/// set is too tight for box sampling). Deterministic per seed.
SamplePointSet sample_points(std::uint64_t seed, const CLQRInstance& inst, int M,
                             const SamplingSpec& spec);

/// Spectral norm (largest singular value).
double spectral_norm(const Eigen::MatrixXd& M);

}  // namespace qbenders
