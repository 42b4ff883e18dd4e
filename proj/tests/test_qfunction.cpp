#include <doctest.h>

#include "qbenders/errors.hpp"
#include "qbenders/one_stage.hpp"
#include "qbenders/qfunction.hpp"
#include "qbenders/rng.hpp"
#include "test_util.hpp"

using namespace qbenders;

TEST_CASE("eval_cut: base cut is the stage cost") {
  const auto& inst = *test::scalar_instance();
  BendersCut base{Eigen::VectorXd::Zero(1), 0.0, 0};
  CHECK(eval_cut(base, inst, test::vec1(2.0), test::vec1(1.0)) == doctest::Approx(2.5));
}

TEST_CASE("eval_cut: direct substitution") {
  const auto& inst = *test::scalar_instance();
  BendersCut cut{test::vec1(1.0), -0.3, 1};
  // 0.5 * 1 + 1 * (0.9 * 1 + 0) - 0.3
  CHECK(eval_cut(cut, inst, test::vec1(1.0), test::vec1(0.0)) == doctest::Approx(1.1));
}

TEST_CASE("eval_cut: only xi survives at the origin") {
  const auto& inst = *test::scalar_instance();
  Xoshiro256pp rng(5);
  for (int i = 0; i < 20; ++i) {
    BendersCut cut{test::vec1(rng.normal()), rng.normal(), i};
    CHECK(eval_cut(cut, inst, test::vec1(0.0), test::vec1(0.0)) == doctest::Approx(cut.xi));
  }
}

TEST_CASE("eval_cut: agrees with the expanded scalar form to 1e-12 relative") {
  const auto& inst = *test::scalar_instance();
  Xoshiro256pp rng(8);
  for (int i = 0; i < 200; ++i) {
    const double nu = rng.normal(), xi = rng.normal();
    const double x = rng.uniform(-3.0, 3.0), u = rng.uniform(-1.0, 1.0);
    BendersCut cut{test::vec1(nu), xi, 0};
    const double expanded = 0.5 * x * x + 0.5 * u * u + nu * (0.9 * x + u) + xi;
    const double got = eval_cut(cut, inst, test::vec1(x), test::vec1(u));
    CHECK(std::abs(got - expanded) <= 1e-12 * std::max(1.0, std::abs(expanded)));
  }
}

TEST_CASE("eval: base-only function and dominated cuts") {
  PwmQFunction q(test::scalar_instance());
  const auto base_eval = q.eval(test::vec1(2.0), test::vec1(1.0));
  CHECK(base_eval.value == doctest::Approx(2.5));
  CHECK(base_eval.argmax == 0);

  // A cut shifted down by 5 never wins anywhere.
  q = q.add_cut(BendersCut{Eigen::VectorXd::Zero(1), -5.0, 1});
  Xoshiro256pp rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto e = q.eval(test::vec1(rng.uniform(-3, 3)), test::vec1(rng.uniform(-1, 1)));
    CHECK(e.argmax == 0);
  }
}

TEST_CASE("eval: ties break toward the smallest index") {
  PwmQFunction q(test::scalar_instance());
  q = q.add_cut(BendersCut{Eigen::VectorXd::Zero(1), 0.0, 1});  // exact duplicate of cut 0
  CHECK(q.eval(test::vec1(1.5), test::vec1(-0.5)).argmax == 0);
}

TEST_CASE("add_cut: index discipline") {
  PwmQFunction q(test::scalar_instance());
  q = q.add_cut(BendersCut{test::vec1(0.1), 0.0, 1});
  CHECK(q.cut_count() == 2);
  CHECK(q.cut(1).index == 1);
  CHECK_THROWS_AS(q.add_cut(BendersCut{test::vec1(0.0), 0.0, 5}), InvariantViolation);
}

TEST_CASE("add_cut: pointwise monotone at 100 random points, exactly") {
  PwmQFunction q(test::scalar_instance());
  Xoshiro256pp rng(17);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> probes;
  for (int i = 0; i < 100; ++i)
    probes.emplace_back(test::vec1(rng.uniform(-3, 3)), test::vec1(rng.uniform(-1, 1)));

  for (int round = 0; round < 5; ++round) {
    std::vector<double> before;
    before.reserve(probes.size());
    for (const auto& [x, u] : probes) before.push_back(q.eval(x, u).value);
    q = q.add_cut(BendersCut{test::vec1(rng.normal()), rng.normal(), q.cut_count()});
    for (std::size_t i = 0; i < probes.size(); ++i) {
      CHECK(q.eval(probes[i].first, probes[i].second).value >= before[i]);
    }
  }
}

TEST_CASE("add_cut: copy-on-extend leaves the original untouched") {
  PwmQFunction q(test::scalar_instance());
  const PwmQFunction extended = q.add_cut(BendersCut{test::vec1(2.0), 3.0, 1});
  CHECK(q.cut_count() == 1);
  CHECK(extended.cut_count() == 2);
}

TEST_CASE("prefix: replays snapshots") {
  PwmQFunction q(test::scalar_instance());
  q = q.add_cut(BendersCut{test::vec1(1.0), -1.0, 1});
  q = q.add_cut(BendersCut{test::vec1(-1.0), 0.5, 2});
  const auto snap = q.prefix(2);
  CHECK(snap.cut_count() == 2);
  CHECK(snap.cut(1).xi == -1.0);
  CHECK_THROWS_AS(q.prefix(0), std::invalid_argument);
}

TEST_CASE("never_active_cuts: flags dominated cuts only") {
  PwmQFunction q(test::scalar_instance());
  q = q.add_cut(BendersCut{Eigen::VectorXd::Zero(1), -5.0, 1});  // dominated
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> probes;
  Xoshiro256pp rng(9);
  for (int i = 0; i < 50; ++i)
    probes.emplace_back(test::vec1(rng.uniform(-3, 3)), test::vec1(rng.uniform(-1, 1)));
  const auto idle = never_active_cuts(q, probes);
  REQUIRE(idle.size() == 1);
  CHECK(idle[0] == 1);
}
