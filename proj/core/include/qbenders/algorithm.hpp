#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qbenders/problem.hpp"
#include "qbenders/qfunction.hpp"

namespace qbenders {

/// Point-selection mode: fixed (x, u) pairs chosen up front, or fixed states
/// with inputs taken from the greedy policy of the current estimate.
enum class Variant { A, B };

enum class SelectionRule {
  UniformRandom,  // uniform over 1..M with replacement
  LargestError,   // experimental: argmax of the most recent sweep
};

struct AlgConfig {
  Variant variant = Variant::B;
  SamplePointSet points;
  double eps_tol = 1e-3;         // termination tolerance on the max sweep error
  double skip_threshold = 1e-5;  // no cut when the error at the chosen point is below this
  int max_iterations = 100000;   // safety cap
  std::uint64_t seed = 0;        // for the uniform point choice
  double solver_tol = 1e-8;
  int sweep_period = 1;  // iterations between convergence sweeps
  SelectionRule selection = SelectionRule::UniformRandom;
  unsigned sweep_workers = 0;  // 0 = hardware concurrency

  /// Throws std::invalid_argument on violated invariants (eps_tol <= 0,
  /// skip_threshold >= eps_tol, variant/points shape mismatch, ...).
  void check(const CLQRInstance& inst) const;
};

enum class RunOutcome { Terminated, MaxIterations, Aborted };

const char* to_string(RunOutcome o);

struct IterationRecord {
  int iteration = 0;
  int chosen_m = 0;
  Eigen::VectorXd x, u;        // the point the cut was attempted at
  double q_value_before = 0.0; // Q_I(x, u) before the cut
  double bellman_value = 0.0;  // T_Q Q_I(x, u)
  double bellman_error = 0.0;  // fresh error at the point
  bool cut_added = false;
  int cut_index = -1;
  double successor_norm = 0.0;   // ||x'||
  double next_input_norm = 0.0;  // ||u'||
  double solve_seconds = 0.0;
};

struct SweepRecord {
  int iteration = 0;
  double max_error = 0.0;
  double mean_error = 0.0;
  std::vector<double> per_point_error;
  std::vector<double> per_point_value;  // Q lower value at each point (greedy value for Variant B)
  double seconds = 0.0;
};

struct RunLog {
  std::vector<IterationRecord> iterations;
  std::vector<SweepRecord> sweeps;
  RunOutcome outcome = RunOutcome::Aborted;
  int final_iteration = 0;
  int cut_count = 0;
  double total_seconds = 0.0;
  double cut_seconds = 0.0;    // time spent generating cuts (excludes sweeps)
  double sweep_seconds = 0.0;  // time spent in convergence sweeps
  double worst_dual_sum_gap = 0.0;   // max |1'lambda_alpha - gamma| over all solves
  double min_dual_preclamp = 0.0;    // most negative multiplier seen pre-clamp
  std::string abort_reason;
};

struct SweepResult {
  double max_error = 0.0;
  double mean_error = 0.0;
  std::vector<double> per_point_error;
  std::vector<double> per_point_value;
};

/// Bellman errors at all M points under the variant's point rule
/// (stored pairs for A, greedy inputs for B). Parallel across points.
SweepResult convergence_sweep(const PwmQFunction& q, const AlgConfig& cfg);

struct RunResult {
  PwmQFunction q;
  RunLog log;
};

/// The cut-generation loop: initialize with the stage-cost cut, sweep every
/// sweep_period iterations and stop once the max error is within eps_tol,
/// otherwise pick a point uniformly at random and add the Benders cut there
/// when the solve yields duals and the error clears skip_threshold. The
/// iteration counter advances whether or not a cut was added.
RunResult run(std::shared_ptr<const CLQRInstance> inst, const AlgConfig& cfg);

/// Max ||A x + B u|| and max ||u'|| over the iteration records, the bounds
/// the nu-norm diagnostic needs.
struct VisitedBounds {
  double state_bound = 0.0;  // X: successor-state norms
  double input_bound = 0.0;  // U: successor-input norms
};
VisitedBounds measure_visited_bounds(const RunLog& log);

}  // namespace qbenders
