#include "qbenders/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qbenders/errors.hpp"

namespace qbenders {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 const std::string& name) {
  Eigen::MatrixXd M(rows, cols);
  if (static_cast<Eigen::Index>(j.size()) != rows)
    throw std::invalid_argument("instance JSON: " + name + " has wrong row count");
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("instance JSON: " + name + " has wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return M;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string instance_to_json(const CLQRInstance& inst) {
  json j;
  j["dims"] = {{"nx", inst.nx()}, {"nu", inst.nu()}, {"nc", inst.nc()}};
  j["A"] = matrix_to_json(inst.A);
  j["B"] = matrix_to_json(inst.B);
  j["Q"] = matrix_to_json(inst.Qmat);
  j["R"] = matrix_to_json(inst.Rmat);
  j["D"] = matrix_to_json(inst.D);
  j["E"] = matrix_to_json(inst.E);
  j["hbar"] = vector_to_json(inst.hbar);
  j["gamma"] = inst.gamma;
  return j.dump(2);
}

CLQRInstance instance_from_json(const std::string& text) {
  const json j = json::parse(text);
  const int nx = j.at("dims").at("nx").get<int>();
  const int nu = j.at("dims").at("nu").get<int>();
  const int nc = j.at("dims").at("nc").get<int>();
  return CLQRInstance(matrix_from_json(j.at("A"), nx, nx, "A"),
                      matrix_from_json(j.at("B"), nx, nu, "B"),
                      matrix_from_json(j.at("Q"), nx, nx, "Q"),
                      matrix_from_json(j.at("R"), nu, nu, "R"),
                      matrix_from_json(j.at("D"), nc, nx, "D"),
                      matrix_from_json(j.at("E"), nc, nu, "E"),
                      vector_from_json(j.at("hbar")), j.at("gamma").get<double>());
}

void save_instance(const CLQRInstance& inst, const std::string& path) {
  write_file_atomic(path, instance_to_json(inst) + "\n");
}

CLQRInstance load_instance(const std::string& path) { return instance_from_json(read_file(path)); }

std::string cuts_to_json(const PwmQFunction& q) {
  json arr = json::array();
  for (const BendersCut& cut : q.cuts()) {
    arr.push_back({{"index", cut.index}, {"nu", vector_to_json(cut.nu)}, {"xi", cut.xi}});
  }
  json j;
  j["cuts"] = std::move(arr);
  return j.dump(2);
}

std::vector<BendersCut> cuts_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<BendersCut> cuts;
  for (const json& rec : j.at("cuts")) {
    BendersCut cut;
    cut.index = rec.at("index").get<int>();
    cut.nu = vector_from_json(rec.at("nu"));
    cut.xi = rec.at("xi").get<double>();
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

void write_cuts_csv(const PwmQFunction& q, const std::string& path) {
  std::ostringstream os;
  const int nx = q.instance().nx();
  os << "index,xi";
  for (int i = 0; i < nx; ++i) os << ",nu_" << i;
  os << "\n";
  for (const BendersCut& cut : q.cuts()) {
    os << cut.index << "," << format_double(cut.xi);
    for (int i = 0; i < nx; ++i) os << "," << format_double(cut.nu(i));
    os << "\n";
  }
  write_file_atomic(path, os.str());
}

std::vector<BendersCut> read_cuts_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int xi_col = table.column("xi");
  const int idx_col = table.column("index");
  if (xi_col < 0 || idx_col < 0) throw std::runtime_error(path + ": not a cuts CSV");
  int nx = 0;
  while (table.column("nu_" + std::to_string(nx)) >= 0) ++nx;
  if (nx == 0) throw std::runtime_error(path + ": no nu columns");
  std::vector<BendersCut> cuts;
  for (const auto& row : table.rows) {
    BendersCut cut;
    cut.index = static_cast<int>(row[static_cast<std::size_t>(idx_col)]);
    cut.xi = row[static_cast<std::size_t>(xi_col)];
    cut.nu.resize(nx);
    for (int i = 0; i < nx; ++i)
      cut.nu(i) = row[static_cast<std::size_t>(table.column("nu_" + std::to_string(i)))];
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

void write_run_log_csv(const RunLog& log, const std::string& path) {
  std::ostringstream os;
  const int nx = log.iterations.empty() ? 0 : static_cast<int>(log.iterations.front().x.size());
  const int nu = log.iterations.empty() ? 0 : static_cast<int>(log.iterations.front().u.size());
  os << "iteration,chosen_m";
  for (int i = 0; i < nx; ++i) os << ",x_" << i;
  for (int i = 0; i < nu; ++i) os << ",u_" << i;
  os << ",q_before,bellman_value,bellman_error,cut_added,cut_index,solve_seconds\n";
  for (const auto& rec : log.iterations) {
    os << rec.iteration << "," << rec.chosen_m;
    for (int i = 0; i < nx; ++i) os << "," << format_double(i < rec.x.size() ? rec.x(i) : 0.0);
    for (int i = 0; i < nu; ++i) os << "," << format_double(i < rec.u.size() ? rec.u(i) : 0.0);
    os << "," << format_double(rec.q_value_before) << "," << format_double(rec.bellman_value)
       << "," << format_double(rec.bellman_error) << "," << (rec.cut_added ? 1 : 0) << ","
       << rec.cut_index << "," << format_double(rec.solve_seconds) << "\n";
  }
  write_file_atomic(path, os.str());
}

void write_sweep_csv(const RunLog& log, const std::string& path) {
  std::ostringstream os;
  os << "iteration,max_error,mean_error,sweep_seconds\n";
  for (const auto& s : log.sweeps) {
    os << s.iteration << "," << format_double(s.max_error) << "," << format_double(s.mean_error)
       << "," << format_double(s.seconds) << "\n";
  }
  write_file_atomic(path, os.str());
}

std::string summary_to_json(const RunLog& log) {
  json j;
  j["outcome"] = to_string(log.outcome);
  j["iterations"] = log.final_iteration;
  j["cuts"] = log.cut_count;
  j["total_seconds"] = log.total_seconds;
  j["cut_seconds"] = log.cut_seconds;
  j["sweep_seconds"] = log.sweep_seconds;
  j["worst_dual_sum_gap"] = log.worst_dual_sum_gap;
  j["min_dual_preclamp"] = log.min_dual_preclamp;
  if (!log.sweeps.empty()) {
    j["final_max_error"] = log.sweeps.back().max_error;
    j["final_mean_error"] = log.sweeps.back().mean_error;
  }
  if (!log.abort_reason.empty()) j["abort_reason"] = log.abort_reason;
  return j.dump(2);
}

void write_summary_json(const RunLog& log, const std::string& path) {
  write_file_atomic(path, summary_to_json(log) + "\n");
}

void write_trajectory_csv(const TrajectoryRecord& traj, const std::string& path) {
  std::ostringstream os;
  const int nx = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  const int nu = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs.front().size());
  os << "t";
  for (int i = 0; i < nx; ++i) os << ",x_" << i;
  for (int i = 0; i < nu; ++i) os << ",u_" << i;
  os << ",stage_cost\n";
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    os << t;
    for (int i = 0; i < nx; ++i) os << "," << format_double(traj.states[t](i));
    const bool has_input = t < traj.inputs.size();
    for (int i = 0; i < nu; ++i) os << "," << (has_input ? format_double(traj.inputs[t](i)) : "");
    os << "," << (has_input ? format_double(traj.stage_costs[t]) : "") << "\n";
  }
  write_file_atomic(path, os.str());
}

void write_grid_csv(const GridValueFunction& vf, const std::string& path) {
  std::ostringstream os;
  const std::size_t ndim = vf.axes.size();
  for (std::size_t d = 0; d < ndim; ++d) os << "x_" << d << ",";
  os << "value\n";
  std::vector<int> idx(ndim, 0);
  for (Eigen::Index flat = 0; flat < vf.values.size(); ++flat) {
    for (std::size_t d = 0; d < ndim; ++d) {
      os << format_double(vf.axes[d].lo + idx[d] * vf.axes[d].step()) << ",";
    }
    os << format_double(vf.values(flat)) << "\n";
    for (std::size_t d = ndim; d-- > 0;) {
      if (++idx[d] < vf.axes[d].count) break;
      idx[d] = 0;
    }
  }
  write_file_atomic(path, os.str());
}

std::string qcqp_to_json(const ConvexQcqp& prob) {
  json j;
  j["n"] = prob.n;
  j["objective"] = vector_to_json(prob.objective);
  j["eq_mat"] = matrix_to_json(prob.eq_mat);
  j["eq_rhs"] = vector_to_json(prob.eq_rhs);
  j["ineq_mat"] = matrix_to_json(prob.ineq_mat);
  j["ineq_rhs"] = vector_to_json(prob.ineq_rhs);
  json quads = json::array();
  for (const auto& qc : prob.quads) {
    quads.push_back({{"P", matrix_to_json(*qc.P)},
                     {"p", vector_to_json(qc.p)},
                     {"c", qc.c},
                     {"epigraph_col", qc.epigraph_col}});
  }
  j["quads"] = std::move(quads);
  return j.dump(2);
}

void dump_qcqp(const ConvexQcqp& prob, const std::string& path) {
  write_file_atomic(path, qcqp_to_json(prob) + "\n");
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty CSV");
  std::stringstream hs(line);
  std::string field;
  while (std::getline(hs, field, ',')) table.header.push_back(field);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, field, ',')) {
      row.push_back(field.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(field));
    }
    row.resize(table.header.size(), std::numeric_limits<double>::quiet_NaN());
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace qbenders
