#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include <unistd.h>

#include "qbenders/io.hpp"
#include "qbenders/one_stage.hpp"
#include "qbenders/rng.hpp"
#include "test_util.hpp"

using namespace qbenders;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qbenders_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("instance JSON round-trips exactly") {
  const auto inst = random_instance(123, 4, 2, 0.99);
  const auto text = instance_to_json(inst);
  const auto back = instance_from_json(text);
  CHECK(back.A == inst.A);
  CHECK(back.B == inst.B);
  CHECK(back.Qmat == inst.Qmat);
  CHECK(back.Rmat == inst.Rmat);
  CHECK(back.D == inst.D);
  CHECK(back.E == inst.E);
  CHECK(back.hbar == inst.hbar);
  CHECK(back.gamma == inst.gamma);
}

TEST_CASE("instance JSON file round trip") {
  TempDir dir;
  const auto inst = CLQRInstance::scalar_benchmark();
  save_instance(inst, dir.file("inst.json"));
  const auto back = load_instance(dir.file("inst.json"));
  CHECK(back.A == inst.A);
  CHECK(back.hbar == inst.hbar);
}

TEST_CASE("cut lists round-trip through JSON and CSV") {
  TempDir dir;
  PwmQFunction q(test::scalar_instance());
  Xoshiro256pp rng(5);
  for (int i = 1; i <= 7; ++i)
    q = q.add_cut(BendersCut{test::vec1(rng.normal()), rng.normal(), i});

  const auto from_json = cuts_from_json(cuts_to_json(q));
  REQUIRE(from_json.size() == 8);
  write_cuts_csv(q, dir.file("cuts.csv"));
  const auto from_csv = read_cuts_csv(dir.file("cuts.csv"));
  REQUIRE(from_csv.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(from_json[i].index == i);
    CHECK(from_json[i].nu == q.cut(i).nu);
    CHECK(from_json[i].xi == q.cut(i).xi);
    CHECK(from_csv[i].nu == q.cut(i).nu);
    CHECK(from_csv[i].xi == q.cut(i).xi);
  }
}

TEST_CASE("run artifacts have stable schemas") {
  TempDir dir;
  auto cfg = test::scalar_config(Variant::B);
  cfg.max_iterations = 10;
  cfg.eps_tol = 1e-6;
  cfg.skip_threshold = 1e-8;
  const auto result = run(test::scalar_instance(), cfg);

  write_run_log_csv(result.log, dir.file("run_log.csv"));
  const auto run_table = read_csv(dir.file("run_log.csv"));
  for (const char* col : {"iteration", "chosen_m", "x_0", "u_0", "q_before", "bellman_value",
                          "bellman_error", "cut_added", "cut_index", "solve_seconds"}) {
    CHECK_MESSAGE(run_table.column(col) >= 0, col);
  }
  CHECK(run_table.rows.size() == result.log.iterations.size());

  write_sweep_csv(result.log, dir.file("sweep.csv"));
  const auto sweep_table = read_csv(dir.file("sweep.csv"));
  for (const char* col : {"iteration", "max_error", "mean_error", "sweep_seconds"}) {
    CHECK_MESSAGE(sweep_table.column(col) >= 0, col);
  }

  const auto summary = summary_to_json(result.log);
  CHECK(summary.find("\"outcome\"") != std::string::npos);
  CHECK(summary.find("max-iterations") != std::string::npos);
}

TEST_CASE("trajectory CSV schema") {
  TempDir dir;
  const auto& inst = *test::scalar_instance();
  const auto traj = simulate(inst, [](const Eigen::VectorXd& x) { return -0.5 * x; },
                             test::vec1(2.0));
  write_trajectory_csv(traj, dir.file("traj.csv"));
  const auto table = read_csv(dir.file("traj.csv"));
  CHECK(table.column("t") == 0);
  CHECK(table.column("x_0") >= 0);
  CHECK(table.column("u_0") >= 0);
  CHECK(table.column("stage_cost") >= 0);
  CHECK(table.rows.size() == traj.states.size());
}

TEST_CASE("grid CSV export") {
  TempDir dir;
  const auto vf = value_iteration(*test::scalar_instance(), {{-2.0, 2.0, 41}},
                                  {{-1.0, 1.0, 41}}, 1e-7, 300);
  write_grid_csv(vf, dir.file("grid.csv"));
  const auto table = read_csv(dir.file("grid.csv"));
  CHECK(table.column("x_0") == 0);
  CHECK(table.column("value") == 1);
  CHECK(table.rows.size() == 41);
}

TEST_CASE("qcqp debug dump parses back as JSON") {
  TempDir dir;
  PwmQFunction q(test::scalar_instance());
  const auto prob = build_one_stage(q, test::vec1(1.0), test::vec1(0.0));
  dump_qcqp(prob, dir.file("prob.json"));
  CHECK(std::filesystem::file_size(dir.file("prob.json")) > 100);
}
