#pragma once

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

#include "qbenders/problem.hpp"

namespace qbenders {

/// One lower-bounding function
///   q_i(x,u) = l(x,u) + nu'(Ax + Bu) + xi.
/// Only (nu, xi) are stored; the quadratic part is bound through the
/// instance, which all cuts share. Cut 0 is always (nu = 0, xi = 0), i.e.
/// the stage cost itself.
struct BendersCut {
  Eigen::VectorXd nu;
  double xi = 0.0;
  int index = 0;
};

double eval_cut(const BendersCut& cut, const CLQRInstance& inst, const Eigen::VectorXd& x,
                const Eigen::VectorXd& u);

/// A Q-function estimate represented as the pointwise maximum of cuts.
/// Immutable: add_cut returns an extended copy, so concurrent readers never
/// observe a partial update. Cuts are never pruned or modified.
class PwmQFunction {
 public:
  explicit PwmQFunction(std::shared_ptr<const CLQRInstance> inst);

  const CLQRInstance& instance() const { return *inst_; }
  const std::shared_ptr<const CLQRInstance>& instance_ptr() const { return inst_; }

  int cut_count() const { return static_cast<int>(cuts_.size()); }
  const BendersCut& cut(int i) const { return cuts_.at(static_cast<std::size_t>(i)); }
  const std::vector<BendersCut>& cuts() const { return cuts_; }

  struct Eval {
    double value = 0.0;
    int argmax = 0;  // smallest index attaining the max
  };
  Eval eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  /// Extends the cut list. The new cut's index must equal cut_count()
  /// (anything else indicates a driver bug and throws).
  PwmQFunction add_cut(BendersCut cut) const;

  /// Truncation to the first `count` cuts, for replaying snapshots of a run.
  PwmQFunction prefix(int count) const;

 private:
  std::shared_ptr<const CLQRInstance> inst_;
  std::vector<BendersCut> cuts_;
};

/// Diagnostic: indices of cuts that are never the argmax on the given probe
/// points. Such cuts are dominated on the probe set (they still participate
/// in evaluation; nothing is pruned).
std::vector<int> never_active_cuts(const PwmQFunction& q,
                                   const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& probes);

}  // namespace qbenders
