#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace amopt::opt {

/// Black-box problem for the method of local variations. Continuous
/// variables halve their step on failed sweeps, integer variables decrement
/// it by one; probes are clamped onto the box before evaluation.
struct VariationProblem {
  std::function<double(const Eigen::VectorXd&)> f;
  std::vector<bool> is_integer;
  Eigen::VectorXd tau0, tau_min, lo, hi;
  int max_iterations = 10000;
  /// Probes of one sweep run through this batch evaluator when set (used to
  /// fan simulations out across worker threads). Results must align with the
  /// input order; selection stays deterministic either way.
  std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)> batch_f;

  void validate(const Eigen::VectorXd& y0) const;
};

struct LvProbe {
  int iteration = 0;
  Eigen::VectorXd y;
  double f = 0.0;
  bool accepted = false;
  bool skipped = false;  // evaluator failure; the probe is ignored
};

struct LvResult {
  Eigen::VectorXd y;
  double f = 0.0;
  std::vector<LvProbe> probes;
  int evaluations = 0;
};

/// Coordinate-wise +/- probing pattern search with shrinking steps,
/// terminating once every step component has reached its minimum size.
LvResult minimize(const VariationProblem& problem, const Eigen::VectorXd& y0);

}  // namespace amopt::opt
