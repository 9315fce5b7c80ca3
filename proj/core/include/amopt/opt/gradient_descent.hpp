#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace amopt::opt {

/// Box-constrained problem for the projected gradient descent. The evaluator
/// returns the objective; the gradient evaluator returns objective and
/// gradient together (one simulation with sensitivities).
struct BoxedProblem {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)> value_and_gradient;
  Eigen::VectorXd lo, hi;
  double alpha0 = 1.0;
  double rho = 0.5;   ///< backtracking contraction, in (0, 1)
  double eta = 0.1;   ///< sufficient-decrease constant, in (0, 1)
  int max_iterations = 100;
  int max_backtracks = 30;
  double step_tol = 1e-4;  ///< stop when the step is below step_tol * (hi - lo)

  void validate() const;
};

struct GdIterate {
  int k = 0;
  Eigen::VectorXd y;
  double f = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
};

struct GdResult {
  Eigen::VectorXd y;
  double f = 0.0;
  std::vector<GdIterate> log;
  std::string status;  // "converged", "stalled", "max_iterations", "zero_gradient", "aborted"
};

/// Projected gradient descent with Armijo backtracking on the normalized
/// descent direction. Line-search candidates are clamped onto the box before
/// evaluation, so every evaluated point is feasible and accepted iterates
/// decrease monotonically; backtracking exhaustion at a bound terminates the
/// run with status "stalled".
GdResult minimize(const BoxedProblem& problem, const Eigen::VectorXd& y0);

}  // namespace amopt::opt
