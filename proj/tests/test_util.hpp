#pragma once

#include <Eigen/Dense>
#include <memory>

#include "qbenders/algorithm.hpp"
#include "qbenders/problem.hpp"
#include "qbenders/qfunction.hpp"

namespace qbenders::test {

inline std::shared_ptr<const CLQRInstance> scalar_instance() {
  static const auto inst =
      std::make_shared<const CLQRInstance>(CLQRInstance::scalar_benchmark());
  return inst;
}

inline Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

/// Standard point set for the scalar runs: 50 states uniform on [0, 3],
/// optionally paired with uniform inputs in [-1, 1].
inline SamplePointSet scalar_points(bool with_inputs, std::uint64_t seed = 42) {
  return sample_points(seed, *scalar_instance(), 50,
                       SamplingSpec::uniform_box(0.0, 3.0, with_inputs));
}

inline AlgConfig scalar_config(Variant variant, std::uint64_t seed = 42) {
  AlgConfig cfg;
  cfg.variant = variant;
  cfg.points = scalar_points(variant == Variant::A, seed);
  cfg.eps_tol = 1e-3;
  cfg.skip_threshold = 1e-5;
  cfg.max_iterations = variant == Variant::A ? 2000 : 1000;
  cfg.seed = seed + 1;
  cfg.solver_tol = 1e-8;
  cfg.sweep_period = 1;
  return cfg;
}

/// One converged Variant-B scalar run, computed once per binary.
inline const RunResult& scalar_run_b() {
  static const RunResult result = run(scalar_instance(), scalar_config(Variant::B));
  return result;
}

/// One converged Variant-A scalar run, computed once per binary.
inline const RunResult& scalar_run_a() {
  static const RunResult result = run(scalar_instance(), scalar_config(Variant::A));
  return result;
}

}  // namespace qbenders::test
