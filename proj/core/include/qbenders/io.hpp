#pragma once

#include <string>
#include <vector>

#include "qbenders/algorithm.hpp"
#include "qbenders/conic.hpp"
#include "qbenders/oracle.hpp"
#include "qbenders/policy.hpp"
#include "qbenders/problem.hpp"
#include "qbenders/qfunction.hpp"

namespace qbenders {

// ---- instance fixtures (JSON; the canonical test fixture format) ----
// Top-level keys: dims {nx, nu, nc}, A, B, Q, R, D, E, hbar, gamma.
// Matrices are row-major nested arrays.
std::string instance_to_json(const CLQRInstance& inst);
CLQRInstance instance_from_json(const std::string& text);
void save_instance(const CLQRInstance& inst, const std::string& path);
CLQRInstance load_instance(const std::string& path);

// ---- cut lists ----
// JSON: ordered records {index, nu, xi}. CSV columns: index,xi,nu_0..nu_{nx-1}.
std::string cuts_to_json(const PwmQFunction& q);
std::vector<BendersCut> cuts_from_json(const std::string& text);
void write_cuts_csv(const PwmQFunction& q, const std::string& path);
std::vector<BendersCut> read_cuts_csv(const std::string& path);

// ---- run artifacts ----
// run_log.csv: iteration,chosen_m,x_*,u_*,q_before,bellman_value,
//              bellman_error,cut_added,cut_index,solve_seconds
// sweep.csv:   iteration,max_error,mean_error,sweep_seconds
void write_run_log_csv(const RunLog& log, const std::string& path);
void write_sweep_csv(const RunLog& log, const std::string& path);
std::string summary_to_json(const RunLog& log);
void write_summary_json(const RunLog& log, const std::string& path);

// trajectory CSV: t,x_0..x_{nx-1},u_0..u_{nu-1},stage_cost (inputs empty on
// the terminal row).
void write_trajectory_csv(const TrajectoryRecord& traj, const std::string& path);

// grid CSV: x_0[,x_1],value over the product grid.
void write_grid_csv(const GridValueFunction& vf, const std::string& path);

// Debug dump of a conic subproblem for external cross-checks.
std::string qcqp_to_json(const ConvexQcqp& prob);
void dump_qcqp(const ConvexQcqp& prob, const std::string& path);

// ---- generic CSV ----
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};
CsvTable read_csv(const std::string& path);

/// Writes content to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qbenders
