#include <doctest.h>

#include <cmath>

#include "qbenders/oracle.hpp"
#include "qbenders/rng.hpp"
#include "test_util.hpp"

using namespace qbenders;

namespace {

const GridValueFunction& scalar_vf() {
  static const GridValueFunction vf = value_iteration(
      *test::scalar_instance(), {{-4.0, 4.0, 801}}, {{-1.0, 1.0, 201}}, 1e-9, 500);
  return vf;
}

}  // namespace

TEST_CASE("value_iteration: converges and is zero at the origin") {
  const auto& vf = scalar_vf();
  CHECK(vf.residual <= 1e-9);
  CHECK(vf.value_at(test::vec1(0.0)) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(vf.values.minCoeff() >= 0.0);
}

TEST_CASE("value_iteration: matches the unconstrained LQR value where unsaturated") {
  const auto& vf = scalar_vf();
  const auto ric = riccati_gain(*test::scalar_instance());
  const double p = ric.P(0, 0);
  // |x| <= 1/K keeps the LQR input inside the box, so the values coincide.
  for (double x : {0.1, 0.5, 1.0, 1.5, 1.8}) {
    const double lqr = 0.5 * p * x * x;
    CHECK(vf.value_at(test::vec1(x)) == doctest::Approx(lqr).epsilon(1e-4));
    CHECK(vf.value_at(test::vec1(-x)) == doctest::Approx(lqr).epsilon(1e-4));
  }
}

TEST_CASE("value_iteration: nondecreasing in |x|") {
  const auto& vf = scalar_vf();
  for (int i = 401; i < 800; ++i) CHECK(vf.values(i + 1) >= vf.values(i) - 1e-12);
  for (int i = 400; i > 0; --i) CHECK(vf.values(i - 1) >= vf.values(i) - 1e-12);
}

TEST_CASE("q_star_from_v: origin and dominance over one backup") {
  const auto& vf = scalar_vf();
  const auto& inst = *test::scalar_instance();
  CHECK(q_star_from_v(vf, inst, test::vec1(0.0), test::vec1(0.0)) ==
        doctest::Approx(0.0).epsilon(1e-8));
  // Q*(2,0) dominates the single backup of the stage cost, 3.62.
  CHECK(q_star_from_v(vf, inst, test::vec1(2.0), test::vec1(0.0)) >= 3.62 - 1e-9);
}

TEST_CASE("q_star_from_v: refinement shrinks the interpolation error") {
  const auto& inst = *test::scalar_instance();
  const auto coarse = value_iteration(inst, {{-4.0, 4.0, 201}}, {{-1.0, 1.0, 201}}, 1e-9, 500);
  const auto medium = value_iteration(inst, {{-4.0, 4.0, 401}}, {{-1.0, 1.0, 201}}, 1e-9, 500);
  const auto fine = value_iteration(inst, {{-4.0, 4.0, 801}}, {{-1.0, 1.0, 201}}, 1e-9, 500);
  Xoshiro256pp rng(4);
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < 25; ++i) {
    const auto x = test::vec1(rng.uniform(-3.0, 3.0));
    const auto u = test::vec1(rng.uniform(-1.0, 1.0));
    d1 = std::max(d1, std::abs(q_star_from_v(coarse, inst, x, u) -
                               q_star_from_v(medium, inst, x, u)));
    d2 = std::max(d2, std::abs(q_star_from_v(medium, inst, x, u) -
                               q_star_from_v(fine, inst, x, u)));
  }
  CHECK(d2 <= 0.5 * d1 + 1e-9);  // second-order interpolation: ~4x per halving
}

TEST_CASE("q_star_from_v: far-out successors are rejected") {
  const auto& vf = scalar_vf();
  const auto& inst = *test::scalar_instance();
  CHECK_THROWS_AS(q_star_from_v(vf, inst, test::vec1(8.0), test::vec1(1.0)), std::domain_error);
}

TEST_CASE("oracle self-consistency: Q*(x, pi*(x)) tracks V*(x)") {
  const auto& vf = scalar_vf();
  const auto& inst = *test::scalar_instance();
  const auto ric = riccati_gain(inst);
  for (double x : {0.2, 0.9, 1.7, 2.5, 2.9}) {
    const auto u = clipped_lqr_policy(inst, ric.K, test::vec1(x));
    const double gap = q_star_from_v(vf, inst, test::vec1(x), u) - vf.value_at(test::vec1(x));
    CHECK(std::abs(gap) <= 2.0 * vf.tol_oracle());
  }
}

TEST_CASE("riccati_gain: scalar benchmark values") {
  const auto res = riccati_gain(*test::scalar_instance());
  CHECK(res.P(0, 0) == doctest::Approx(1.4839).epsilon(1e-4));
  CHECK(res.K(0, 0) == doctest::Approx(0.5377).epsilon(1e-4));
  // Cross-check against the closed-form scalar fixed point p^2 = 1 + 0.81 p.
  const double p_exact = (0.81 + std::sqrt(0.81 * 0.81 + 4.0)) / 2.0;
  CHECK(res.P(0, 0) == doctest::Approx(p_exact).epsilon(1e-10));
}

TEST_CASE("riccati_gain: A = 0 gives P = Q, K = 0") {
  const auto base = CLQRInstance::scalar_benchmark();
  const CLQRInstance inst(Eigen::MatrixXd::Zero(1, 1), base.B, base.Qmat, base.Rmat, base.D,
                          base.E, base.hbar, 1.0);
  const auto res = riccati_gain(inst);
  CHECK(res.P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(res.K(0, 0)) <= 1e-12);
}

TEST_CASE("riccati_gain: gain invariant under joint cost scaling") {
  const auto base = CLQRInstance::scalar_benchmark();
  const CLQRInstance scaled(base.A, base.B, 7.5 * base.Qmat, 7.5 * base.Rmat, base.D, base.E,
                            base.hbar, 1.0);
  const auto k1 = riccati_gain(base).K(0, 0);
  const auto k2 = riccati_gain(scaled).K(0, 0);
  CHECK(std::abs(k1 - k2) <= 1e-10);
}

TEST_CASE("clipped_lqr_policy: clamp arithmetic") {
  const auto& inst = *test::scalar_instance();
  const auto ric = riccati_gain(inst);
  CHECK(clipped_lqr_policy(inst, ric.K, test::vec1(1.0))(0) ==
        doctest::Approx(-0.5377).epsilon(1e-4));
  CHECK(clipped_lqr_policy(inst, ric.K, test::vec1(3.0))(0) == doctest::Approx(-1.0));
  CHECK(clipped_lqr_policy(inst, ric.K, test::vec1(0.0))(0) == doctest::Approx(0.0));
}

TEST_CASE("nu_bound_diagnostic: base-only function passes trivially") {
  PwmQFunction q(test::scalar_instance());
  const auto report = nu_bound_diagnostic(q, q.instance(), 3.7, 1.0);
  CHECK(report.applicable);
  CHECK(report.pass);
  CHECK(report.max_nu_norm == 0.0);
  CHECK(report.bound == doctest::Approx(1.0 * 3.7 * 1.0 / (1.0 - 0.9)));
}

TEST_CASE("nu_bound_diagnostic: gamma ||A|| >= 1 is inapplicable") {
  const auto base = CLQRInstance::scalar_benchmark();
  Eigen::MatrixXd A(1, 1);
  A << 1.0;
  const auto inst = std::make_shared<const CLQRInstance>(A, base.B, base.Qmat, base.Rmat, base.D,
                                                         base.E, base.hbar, 1.0);
  PwmQFunction q(inst);
  const auto report = nu_bound_diagnostic(q, *inst, 1.0, 1.0);
  CHECK_FALSE(report.applicable);
}

TEST_CASE("value_iteration: guards") {
  const auto& inst = *test::scalar_instance();
  CHECK_THROWS(value_iteration(inst, {{-4.0, 4.0, 801}}, {{-1.0, 1.0, 201}}, 1e-9, 1));
  CHECK_THROWS_AS(value_iteration(random_instance(1, 3, 1, 0.9), {{-1, 1, 3}, {-1, 1, 3}, {-1, 1, 3}},
                                  {{-1, 1, 3}}, 1e-3, 10),
                  std::invalid_argument);
}
