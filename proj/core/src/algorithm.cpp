#include "qbenders/algorithm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "qbenders/errors.hpp"
#include "qbenders/one_stage.hpp"
#include "qbenders/parallel.hpp"
#include "qbenders/policy.hpp"
#include "qbenders/rng.hpp"

namespace qbenders {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

const char* to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Terminated: return "terminated";
    case RunOutcome::MaxIterations: return "max-iterations";
    case RunOutcome::Aborted: return "aborted";
  }
  return "unknown";
}

void AlgConfig::check(const CLQRInstance& inst) const {
  if (!(eps_tol > 0.0)) throw std::invalid_argument("AlgConfig: eps_tol must be > 0");
  if (!(skip_threshold < eps_tol))
    throw std::invalid_argument("AlgConfig: skip_threshold must be < eps_tol");
  if (points.size() < 1) throw std::invalid_argument("AlgConfig: point set is empty");
  if (variant == Variant::A && !points.has_inputs())
    throw std::invalid_argument("AlgConfig: Variant A requires paired (x, u) samples");
  if (variant == Variant::B && points.has_inputs())
    throw std::invalid_argument("AlgConfig: Variant B requires states only (no inputs)");
  if (max_iterations < 1) throw std::invalid_argument("AlgConfig: max_iterations must be >= 1");
  if (sweep_period < 1) throw std::invalid_argument("AlgConfig: sweep_period must be >= 1");
  if (!(solver_tol >= 1e-12 && solver_tol <= 1e-4))
    throw std::invalid_argument("AlgConfig: solver_tol must lie in [1e-12, 1e-4]");
  check_sample_set(points, inst);
}

SweepResult convergence_sweep(const PwmQFunction& q, const AlgConfig& cfg) {
  const int M = cfg.points.size();
  SweepResult res;
  res.per_point_error.assign(static_cast<std::size_t>(M), 0.0);
  res.per_point_value.assign(static_cast<std::size_t>(M), 0.0);

  parallel_for(
      static_cast<std::size_t>(M),
      [&](std::size_t m) {
        const Eigen::VectorXd& x = cfg.points.states[m];
        Eigen::VectorXd u;
        double q_value;
        if (cfg.variant == Variant::A) {
          u = cfg.points.inputs[m];
          q_value = q.eval(x, u).value;
        } else {
          const GreedyResult g = greedy_input(q, x, cfg.solver_tol);
          u = g.u;
          q_value = g.value;
        }
        res.per_point_error[m] = bellman_error(q, x, u, cfg.solver_tol);
        res.per_point_value[m] = q_value;
      },
      cfg.sweep_workers);

  res.max_error = *std::max_element(res.per_point_error.begin(), res.per_point_error.end());
  double sum = 0.0;
  for (double e : res.per_point_error) sum += e;
  res.mean_error = sum / M;
  return res;
}

RunResult run(std::shared_ptr<const CLQRInstance> inst, const AlgConfig& cfg) {
  if (!inst) throw std::invalid_argument("run: null instance");
  cfg.check(*inst);

  const auto t_start = Clock::now();
  const int M = cfg.points.size();
  Xoshiro256pp rng(cfg.seed);

  RunResult result{PwmQFunction(inst), RunLog{}};
  PwmQFunction& q = result.q;
  RunLog& log = result.log;
  log.min_dual_preclamp = 0.0;

  std::vector<int> consecutive_failures(static_cast<std::size_t>(M), 0);
  std::vector<double> last_sweep_errors;
  int iteration = 0;

  auto record_solution_health = [&log](const OneStageSolution& sol) {
    log.worst_dual_sum_gap = std::max(log.worst_dual_sum_gap, sol.dual_sum_gap);
    log.min_dual_preclamp = std::min(log.min_dual_preclamp, sol.min_dual_preclamp);
  };

  while (true) {
    if (iteration % cfg.sweep_period == 0) {
      const auto t_sweep = Clock::now();
      SweepRecord sweep;
      sweep.iteration = iteration;
      try {
        SweepResult sr = convergence_sweep(q, cfg);
        sweep.max_error = sr.max_error;
        sweep.mean_error = sr.mean_error;
        sweep.per_point_error = std::move(sr.per_point_error);
        sweep.per_point_value = std::move(sr.per_point_value);
      } catch (const std::exception& e) {
        log.outcome = RunOutcome::Aborted;
        log.abort_reason = std::string("sweep failed: ") + e.what();
        break;
      }
      sweep.seconds = seconds_since(t_sweep);
      log.sweep_seconds += sweep.seconds;
      last_sweep_errors = sweep.per_point_error;
      log.sweeps.push_back(std::move(sweep));

      if (log.sweeps.back().max_error <= cfg.eps_tol) {
        log.outcome = RunOutcome::Terminated;
        break;
      }
    }
    if (iteration >= cfg.max_iterations) {
      log.outcome = RunOutcome::MaxIterations;
      break;
    }

    // Choose the next point.
    int m;
    if (cfg.selection == SelectionRule::LargestError && !last_sweep_errors.empty()) {
      m = static_cast<int>(std::max_element(last_sweep_errors.begin(), last_sweep_errors.end()) -
                           last_sweep_errors.begin());
    } else {
      m = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(M)));
    }

    const auto t_cut = Clock::now();
    IterationRecord rec;
    rec.iteration = iteration;
    rec.chosen_m = m;
    rec.x = cfg.points.states[static_cast<std::size_t>(m)];

    try {
      if (cfg.variant == Variant::A) {
        rec.u = cfg.points.inputs[static_cast<std::size_t>(m)];
      } else {
        rec.u = greedy_input(q, rec.x, cfg.solver_tol).u;
      }
      rec.q_value_before = q.eval(rec.x, rec.u).value;

      // One solve serves both the skip decision and the cut itself.
      const OneStageSolution sol = apply_bellman(q, rec.x, rec.u, cfg.solver_tol);
      if (sol.feasible) {
        record_solution_health(sol);
        rec.bellman_value = sol.value;
        const double raw_error = sol.value - rec.q_value_before;
        if (raw_error < -1e-6) {
          std::ostringstream os;
          os << "negative Bellman error " << raw_error << " at point " << m;
          throw InvariantViolation(os.str());
        }
        rec.bellman_error = std::max(raw_error, 0.0);
        rec.successor_norm = sol.successor.norm();
        rec.next_input_norm = sol.next_input.norm();
        if (rec.bellman_error >= cfg.skip_threshold) {
          BendersCut cut = extract_cut(sol, q, rec.x, rec.u);
          rec.cut_index = cut.index;
          rec.cut_added = true;
          q = q.add_cut(std::move(cut));
          ++log.cut_count;
        }
      }
      consecutive_failures[static_cast<std::size_t>(m)] = 0;
    } catch (const NumericFailure&) {
      // Skip the cut; a point that keeps failing aborts the run.
      if (++consecutive_failures[static_cast<std::size_t>(m)] >= 10) {
        log.outcome = RunOutcome::Aborted;
        std::ostringstream os;
        os << "point " << m << " failed 10 consecutive solves";
        log.abort_reason = os.str();
        rec.solve_seconds = seconds_since(t_cut);
        log.cut_seconds += rec.solve_seconds;
        log.iterations.push_back(std::move(rec));
        break;
      }
    } catch (const std::exception& e) {
      log.outcome = RunOutcome::Aborted;
      log.abort_reason = e.what();
      rec.solve_seconds = seconds_since(t_cut);
      log.cut_seconds += rec.solve_seconds;
      log.iterations.push_back(std::move(rec));
      break;
    }

    rec.solve_seconds = seconds_since(t_cut);
    log.cut_seconds += rec.solve_seconds;
    log.iterations.push_back(std::move(rec));
    ++iteration;
  }

  log.final_iteration = iteration;
  log.total_seconds = seconds_since(t_start);
  return result;
}

VisitedBounds measure_visited_bounds(const RunLog& log) {
  VisitedBounds b;
  for (const auto& rec : log.iterations) {
    b.state_bound = std::max(b.state_bound, rec.successor_norm);
    b.input_bound = std::max(b.input_bound, rec.next_input_norm);
  }
  return b;
}

}  // namespace qbenders
