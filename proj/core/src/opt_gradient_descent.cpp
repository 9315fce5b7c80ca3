#include "amopt/opt/gradient_descent.hpp"

#include <limits>

#include "amopt/errors.hpp"

namespace amopt::opt {

void BoxedProblem::validate() const {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw ConfigError("gradient descent: malformed bounds");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw ConfigError("gradient descent: need lo < hi per variable");
  if (rho <= 0.0 || rho >= 1.0) throw ConfigError("gradient descent: rho must be in (0, 1)");
  if (eta <= 0.0 || eta >= 1.0) throw ConfigError("gradient descent: eta must be in (0, 1)");
  if (alpha0 <= 0.0) throw ConfigError("gradient descent: alpha0 must be positive");
}

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& y, const BoxedProblem& p) {
  return y.cwiseMax(p.lo).cwiseMin(p.hi);
}

}  // namespace

GdResult minimize(const BoxedProblem& problem, const Eigen::VectorXd& y0) {
  problem.validate();
  if (((y0 - clamp(y0, problem)).array() != 0.0).any())
    throw ConfigError("gradient descent: infeasible starting point");

  GdResult res;
  Eigen::VectorXd y = y0;
  double f_best = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd y_best = y0;
  auto update_best = [&](double f, const Eigen::VectorXd& yy) {
    if (std::isnan(f_best) || f <= f_best) {
      f_best = f;
      y_best = yy;
    }
  };

  try {
    for (int k = 0; k < problem.max_iterations; ++k) {
      auto [f, g] = problem.value_and_gradient(y);
      update_best(f, y);
      const double gnorm = g.norm();
      if (gnorm == 0.0) {
        res.log.push_back({k, y, f, gnorm, 0.0});
        res.status = "zero_gradient";
        break;
      }
      const Eigen::VectorXd p = -g / gnorm;

      double alpha = problem.alpha0;
      bool accepted = false;
      Eigen::VectorXd y_next;
      double f_next = 0.0;
      for (int bt = 0; bt < problem.max_backtracks; ++bt) {
        y_next = clamp(y + alpha * p, problem);
        f_next = problem.value(y_next);
        if (f_next <= f + problem.eta * alpha * g.dot(p)) {
          accepted = true;
          break;
        }
        alpha *= problem.rho;
      }
      res.log.push_back({k, y, f, gnorm, accepted ? alpha : 0.0});
      if (!accepted) {
        res.status = "stalled";
        break;
      }
      const Eigen::VectorXd step = y_next - y;
      y = y_next;
      update_best(f_next, y_next);
      const double tol = problem.step_tol * (problem.hi - problem.lo).maxCoeff();
      if (step.lpNorm<Eigen::Infinity>() < tol) {
        res.status = "converged";
        break;
      }
    }
  } catch (const SolverError&) {
    res.status = "aborted";
  }
  if (res.status.empty()) res.status = "max_iterations";
  res.y = y_best;
  res.f = f_best;
  return res;
}

}  // namespace amopt::opt
