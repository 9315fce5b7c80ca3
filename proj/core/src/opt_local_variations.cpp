#include "amopt/opt/local_variations.hpp"

#include <cmath>

#include "amopt/errors.hpp"

namespace amopt::opt {

void VariationProblem::validate(const Eigen::VectorXd& y0) const {
  const Eigen::Index d = lo.size();
  if (d == 0 || hi.size() != d || tau0.size() != d || tau_min.size() != d ||
      static_cast<Eigen::Index>(is_integer.size()) != d || y0.size() != d)
    throw ConfigError("local variations: inconsistent dimensions");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(lo[j] < hi[j])) throw ConfigError("local variations: need lo < hi per variable");
    if (!(tau0[j] > tau_min[j]) || !(tau_min[j] > 0.0))
      throw ConfigError("local variations: need tau0 > tau_min > 0 per variable");
    if (y0[j] < lo[j] || y0[j] > hi[j])
      throw ConfigError("local variations: infeasible starting point");
    if (is_integer[j]) {
      auto integral = [](double v) { return std::abs(v - std::round(v)) < 1e-12; };
      if (!integral(y0[j]) || !integral(tau0[j]) || !integral(tau_min[j]) || !integral(lo[j]) ||
          !integral(hi[j]))
        throw ConfigError("local variations: integer variable with non-integer data");
      if (tau_min[j] < 1.0) throw ConfigError("local variations: integer tau_min must be >= 1");
    }
  }
}

LvResult minimize(const VariationProblem& problem, const Eigen::VectorXd& y0) {
  problem.validate(y0);
  const Eigen::Index d = problem.lo.size();
  LvResult res;

  Eigen::VectorXd y = y0;
  double fy = problem.f(y);
  ++res.evaluations;
  res.probes.push_back({0, y, fy, true, false});

  Eigen::VectorXd tau = problem.tau0;
  auto all_at_min = [&] {
    for (Eigen::Index j = 0; j < d; ++j)
      if (tau[j] > problem.tau_min[j]) return false;
    return true;
  };

  for (int k = 1; k <= problem.max_iterations && !all_at_min(); ++k) {
    // 2d candidate probes; clamped duplicates of the center are dropped.
    std::vector<Eigen::VectorXd> pts;
    std::vector<Eigen::Index> dims;
    for (Eigen::Index j = 0; j < d; ++j) {
      for (double dir : {+1.0, -1.0}) {
        Eigen::VectorXd z = y;
        z[j] = std::min(problem.hi[j], std::max(problem.lo[j], y[j] + dir * tau[j]));
        if (z[j] == y[j]) continue;
        pts.push_back(std::move(z));
        dims.push_back(j);
      }
    }

    std::vector<double> vals(pts.size());
    std::vector<char> failed(pts.size(), 0);
    if (problem.batch_f) {
      vals = problem.batch_f(pts);
      for (size_t i = 0; i < pts.size(); ++i)
        if (std::isnan(vals[i])) failed[i] = 1;
      res.evaluations += static_cast<int>(pts.size());
    } else {
      for (size_t i = 0; i < pts.size(); ++i) {
        try {
          vals[i] = problem.f(pts[i]);
          ++res.evaluations;
        } catch (const SolverError&) {
          failed[i] = 1;
        }
      }
    }

    int best = -1;
    double f_min = fy;
    for (size_t i = 0; i < pts.size(); ++i) {
      if (failed[i]) continue;
      if (vals[i] < f_min) {  // strict improvement; ties keep the lowest index
        f_min = vals[i];
        best = static_cast<int>(i);
      }
    }
    for (size_t i = 0; i < pts.size(); ++i)
      res.probes.push_back({k, pts[i], failed[i] ? std::nan("") : vals[i],
                            static_cast<int>(i) == best, failed[i] != 0});

    if (best >= 0) {
      y = pts[static_cast<size_t>(best)];
      fy = f_min;
    } else {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (tau[j] <= problem.tau_min[j]) continue;
        tau[j] = problem.is_integer[j] ? tau[j] - 1.0 : tau[j] / 2.0;
      }
    }
  }

  res.y = y;
  res.f = fy;
  return res;
}

}  // namespace amopt::opt
