#include "qbenders/qfunction.hpp"

#include <sstream>

#include "qbenders/errors.hpp"

namespace qbenders {

double eval_cut(const BendersCut& cut, const CLQRInstance& inst, const Eigen::VectorXd& x,
                const Eigen::VectorXd& u) {
  if (x.size() != inst.nx() || u.size() != inst.nu())
    throw DimensionError("eval_cut: point dimension does not match the instance");
  if (cut.nu.size() != inst.nx())
    throw DimensionError("eval_cut: cut slope dimension does not match the instance");
  return inst.stage_cost(x, u) + cut.nu.dot(inst.dynamics(x, u)) + cut.xi;
}

PwmQFunction::PwmQFunction(std::shared_ptr<const CLQRInstance> inst) : inst_(std::move(inst)) {
  if (!inst_) throw std::invalid_argument("PwmQFunction: null instance");
  // Cut 0 is the stage cost itself.
  cuts_.push_back(BendersCut{Eigen::VectorXd::Zero(inst_->nx()), 0.0, 0});
}

PwmQFunction::Eval PwmQFunction::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  // max over cuts = l(x,u) + max_i (nu_i'f + xi_i); the shared stage cost
  // and successor are computed once.
  const double ell = inst_->stage_cost(x, u);
  const Eigen::VectorXd f = inst_->dynamics(x, u);
  Eval best{cuts_[0].nu.dot(f) + cuts_[0].xi, 0};
  for (std::size_t i = 1; i < cuts_.size(); ++i) {
    const double affine = cuts_[i].nu.dot(f) + cuts_[i].xi;
    if (affine > best.value) {
      best.value = affine;
      best.argmax = static_cast<int>(i);
    }
  }
  best.value += ell;
  return best;
}

PwmQFunction PwmQFunction::add_cut(BendersCut cut) const {
  if (cut.index != cut_count()) {
    std::ostringstream os;
    os << "add_cut: cut index " << cut.index << " does not match the next slot " << cut_count();
    throw InvariantViolation(os.str());
  }
  if (cut.nu.size() != inst_->nx())
    throw DimensionError("add_cut: cut slope dimension does not match the instance");
  PwmQFunction extended = *this;
  extended.cuts_.push_back(std::move(cut));
  return extended;
}

PwmQFunction PwmQFunction::prefix(int count) const {
  if (count < 1 || count > cut_count())
    throw std::invalid_argument("prefix: count out of range");
  PwmQFunction truncated(inst_);
  truncated.cuts_.assign(cuts_.begin(), cuts_.begin() + count);
  return truncated;
}

std::vector<int> never_active_cuts(
    const PwmQFunction& q,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& probes) {
  std::vector<bool> active(static_cast<std::size_t>(q.cut_count()), false);
  for (const auto& [x, u] : probes) active[static_cast<std::size_t>(q.eval(x, u).argmax)] = true;
  std::vector<int> idle;
  for (int i = 0; i < q.cut_count(); ++i) {
    if (!active[static_cast<std::size_t>(i)]) idle.push_back(i);
  }
  return idle;
}

}  // namespace qbenders
