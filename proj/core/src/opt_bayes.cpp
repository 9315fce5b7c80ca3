#include "amopt/opt/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amopt/errors.hpp"

namespace amopt::opt {
namespace {

double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double theta) {
  return std::exp(-(a - b).squaredNorm() / (theta * theta));
}

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double theta, double jitter) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel(X.row(i), X.row(j), theta);
      K(i, j) = v;
      K(j, i) = v;
    }
    K(i, i) += jitter;
  }
  return K;
}

/// Cholesky-based fit of the weight vector; returns false when the candidate
/// length scale makes the covariance numerically indefinite.
bool factorize(GpSurrogate& gp) {
  const Eigen::MatrixXd K = kernel_matrix(gp.X, gp.theta_len, gp.jitter);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) return false;
  gp.chol_L = llt.matrixL();
  gp.coeffs = llt.solve(gp.g);
  return true;
}

}  // namespace

Eigen::VectorXd GpSurrogate::scale_input(const Eigen::VectorXd& y_raw) const {
  Eigen::VectorXd s(y_raw.size());
  for (Eigen::Index i = 0; i < y_raw.size(); ++i) {
    const double w = box_hi[i] - box_lo[i];
    s[i] = w > 0 ? (y_raw[i] - box_lo[i]) / w : 0.0;
  }
  return s;
}

double log_marginal_likelihood(const GpSurrogate& gp) {
  const int n = gp.n();
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(gp.chol_L(i, i));
  return -0.5 * gp.g.dot(gp.coeffs) - logdet - 0.5 * n * std::log(2.0 * M_PI);
}

GpSurrogate gp_fit(const std::vector<BoSample>& samples, const Eigen::VectorXd& box_lo,
                   const Eigen::VectorXd& box_hi, double jitter) {
  if (samples.empty()) throw ConfigError("gp_fit: no samples");
  GpSurrogate gp;
  gp.jitter = jitter;
  gp.box_lo = box_lo;
  gp.box_hi = box_hi;

  // Duplicate inputs keep the latest observation.
  std::vector<BoSample> unique;
  for (const BoSample& s : samples) {
    auto it = std::find_if(unique.begin(), unique.end(),
                           [&](const BoSample& t) { return t.y == s.y; });
    if (it != unique.end())
      it->f = s.f;
    else
      unique.push_back(s);
  }

  const int n = static_cast<int>(unique.size());
  const int d = static_cast<int>(box_lo.size());
  Eigen::VectorXd neg(n);
  gp.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    gp.X.row(i) = gp.scale_input(unique[static_cast<size_t>(i)].y);
    neg[i] = -unique[static_cast<size_t>(i)].f;
  }
  gp.value_mean = neg.mean();
  const double var = (neg.array() - gp.value_mean).square().mean();
  gp.value_scale = var > 1e-30 ? std::sqrt(var) : 1.0;
  gp.g = (neg.array() - gp.value_mean) / gp.value_scale;

  if (n < 2) {
    gp.theta_len = 1.0;
    factorize(gp);
    return gp;
  }

  // Log-spaced candidate length scales over the scaled box; the marginal
  // likelihood is cheap at these sample counts, so the search is exhaustive.
  double best_theta = 1.0;
  double best_lml = -std::numeric_limits<double>::infinity();
  constexpr int kCandidates = 41;
  for (int c = 0; c < kCandidates; ++c) {
    const double ex = -1.5 + 2.5 * c / (kCandidates - 1);  // 10^-1.5 .. 10^1
    gp.theta_len = std::pow(10.0, ex);
    if (!factorize(gp)) continue;
    const double lml = log_marginal_likelihood(gp);
    if (lml > best_lml) {
      best_lml = lml;
      best_theta = gp.theta_len;
    }
  }
  gp.theta_len = best_theta;
  if (!factorize(gp)) throw SolverError("gp_fit: covariance factorization failed");
  return gp;
}

GpPosterior gp_posterior(const GpSurrogate& gp, const Eigen::VectorXd& y_raw) {
  const Eigen::VectorXd x = gp.scale_input(y_raw);
  const int n = gp.n();
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) k[i] = kernel(x, gp.X.row(i), gp.theta_len);
  GpPosterior post;
  post.mean = k.dot(gp.coeffs);
  const Eigen::VectorXd w = gp.chol_L.triangularView<Eigen::Lower>().solve(k);
  post.variance = std::max(0.0, kernel(x, x, gp.theta_len) - w.squaredNorm());
  return post;
}

void AcquisitionParams::validate() const {
  if (xi < 0.0) throw ConfigError("acquisition: xi must be non-negative");
  if (grid_per_dim < 2) throw ConfigError("acquisition: grid_per_dim must be at least 2");
}

double expected_improvement(const GpSurrogate& gp, const Eigen::VectorXd& y_raw,
                            const AcquisitionParams& params, double f_best) {
  params.validate();
  const GpPosterior post = gp_posterior(gp, y_raw);
  const double sigma = std::sqrt(post.variance);
  if (sigma == 0.0) return 0.0;
  const double gap = post.mean - gp.scale_value(f_best) - params.xi;
  const double z = gap / sigma;
  return gap * norm_cdf(z) + sigma * norm_pdf(z);
}

namespace {

double incumbent_best_f(const GpSurrogate& gp) {
  // Largest scaled value corresponds to the smallest objective.
  return gp.unscale_value(gp.g.maxCoeff());
}

/// Deterministic grid + local-refinement argmax of an objective over the box.
Eigen::VectorXd grid_argmax(const std::function<double(const Eigen::VectorXd&)>& score,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int grid_per_dim,
                            int polish_rounds, double* best_out = nullptr) {
  const int d = static_cast<int>(lo.size());
  std::vector<int> idx(static_cast<size_t>(d), 0);
  Eigen::VectorXd best_y = lo;
  double best = -std::numeric_limits<double>::infinity();
  const long total = static_cast<long>(std::pow(grid_per_dim, d));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Eigen::VectorXd y(d);
    for (int j = 0; j < d; ++j) {
      const int i = static_cast<int>(rem % grid_per_dim);
      rem /= grid_per_dim;
      y[j] = lo[j] + (hi[j] - lo[j]) * i / (grid_per_dim - 1);
    }
    const double v = score(y);
    if (v > best) {
      best = v;
      best_y = y;
    }
  }
  Eigen::VectorXd spacing = (hi - lo) / (grid_per_dim - 1);
  for (int round = 0; round < polish_rounds; ++round) {
    spacing *= 0.25;
    const int local = 5;
    const long ltotal = static_cast<long>(std::pow(local, d));
    Eigen::VectorXd center = best_y;
    for (long flat = 0; flat < ltotal; ++flat) {
      long rem = flat;
      Eigen::VectorXd y(d);
      for (int j = 0; j < d; ++j) {
        const int i = static_cast<int>(rem % local);
        rem /= local;
        y[j] = std::min(hi[j], std::max(lo[j], center[j] + (i - local / 2) * spacing[j]));
      }
      const double v = score(y);
      if (v > best) {
        best = v;
        best_y = y;
      }
    }
  }
  if (best_out) *best_out = best;
  return best_y;
}

}  // namespace

Eigen::VectorXd propose_next(const GpSurrogate& gp, const AcquisitionParams& params,
                             const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi) {
  params.validate();
  const double f_best = incumbent_best_f(gp);
  double best_ei = 0.0;
  Eigen::VectorXd y = grid_argmax(
      [&](const Eigen::VectorXd& p) { return expected_improvement(gp, p, params, f_best); },
      box_lo, box_hi, params.grid_per_dim, params.polish_rounds, &best_ei);
  if (best_ei > 0.0) return y;
  // Degenerate surrogate with vanishing improvement everywhere: fall back to
  // the posterior-mean optimum on the grid.
  return grid_argmax(
      [&](const Eigen::VectorXd& p) { return gp_posterior(gp, p).mean; }, box_lo, box_hi,
      params.grid_per_dim, params.polish_rounds);
}

BoResult optimize(const std::function<double(const Eigen::VectorXd&)>& f,
                  const std::vector<Eigen::VectorXd>& initial_designs,
                  const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi,
                  const BoOptions& options,
                  const std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>&
                      batch_f) {
  if (initial_designs.empty()) throw ConfigError("bayesian optimization: no initial designs");
  const int d = static_cast<int>(box_lo.size());
  std::vector<bool> is_int = options.is_integer;
  if (is_int.empty()) is_int.assign(static_cast<size_t>(d), false);

  BoResult res;
  if (batch_f) {
    const std::vector<double> vals = batch_f(initial_designs);
    for (size_t i = 0; i < initial_designs.size(); ++i)
      res.samples.push_back({initial_designs[i], vals[i]});
  } else {
    for (const auto& y : initial_designs) res.samples.push_back({y, f(y)});
  }

  auto round_integers = [&](Eigen::VectorXd y) {
    for (int j = 0; j < d; ++j)
      if (is_int[static_cast<size_t>(j)])
        y[j] = std::min(box_hi[j], std::max(box_lo[j], std::round(y[j])));
    return y;
  };
  auto sampled = [&](const Eigen::VectorXd& y) {
    return std::any_of(res.samples.begin(), res.samples.end(),
                       [&](const BoSample& s) { return s.y == y; });
  };
  // Duplicate integer proposals step outward to the nearest unsampled point.
  auto dedup = [&](Eigen::VectorXd y) {
    if (!sampled(y)) return y;
    for (int j = 0; j < d; ++j) {
      if (!is_int[static_cast<size_t>(j)]) continue;
      for (int off = 1; off <= static_cast<int>(box_hi[j] - box_lo[j]); ++off) {
        for (double s : {+1.0, -1.0}) {
          Eigen::VectorXd cand = y;
          cand[j] = y[j] + s * off;
          if (cand[j] < box_lo[j] || cand[j] > box_hi[j]) continue;
          if (!sampled(cand)) return cand;
        }
      }
    }
    return y;
  };

  GpSurrogate gp = gp_fit(res.samples, box_lo, box_hi, options.jitter);
  auto surrogate_optimum = [&](const GpSurrogate& g) {
    double best = 0.0;
    Eigen::VectorXd y = grid_argmax(
        [&](const Eigen::VectorXd& p) { return gp_posterior(g, p).mean; }, box_lo, box_hi,
        options.acquisition.grid_per_dim, options.acquisition.polish_rounds, &best);
    return std::pair{y, best};
  };
  auto [opt_y, opt_v] = surrogate_optimum(gp);

  for (int k = 1; k <= options.max_proposals; ++k) {
    const double theta_at_proposal = gp.theta_len;
    Eigen::VectorXd y = dedup(round_integers(propose_next(gp, options.acquisition, box_lo, box_hi)));
    const double ei = expected_improvement(gp, y, options.acquisition, incumbent_best_f(gp));
    const double fy = f(y);
    res.samples.push_back({y, fy});
    res.history.push_back({k, y, fy, theta_at_proposal, ei});

    gp = gp_fit(res.samples, box_lo, box_hi, options.jitter);
    auto [new_y, new_v] = surrogate_optimum(gp);
    Eigen::VectorXd dy(d);
    for (int j = 0; j < d; ++j)
      dy[j] = (new_y[j] - opt_y[j]) / std::max(box_hi[j] - box_lo[j], 1e-300);
    const bool conv = dy.lpNorm<Eigen::Infinity>() < options.tol_y &&
                      std::abs(new_v - opt_v) < options.tol_value;
    opt_y = new_y;
    opt_v = new_v;
    if (conv) {
      res.converged = true;
      break;
    }
  }

  const auto best = std::min_element(res.samples.begin(), res.samples.end(),
                                     [](const BoSample& a, const BoSample& b) { return a.f < b.f; });
  res.y = best->y;
  res.f = best->f;
  res.surrogate = gp;
  return res;
}

std::vector<Eigen::VectorXd> corner_designs(const Eigen::VectorXd& box_lo,
                                            const Eigen::VectorXd& box_hi, int per_dim,
                                            const std::vector<bool>& is_integer) {
  const int d = static_cast<int>(box_lo.size());
  std::vector<Eigen::VectorXd> out;
  const long total = static_cast<long>(std::pow(per_dim, d));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Eigen::VectorXd y(d);
    for (int j = 0; j < d; ++j) {
      const int i = static_cast<int>(rem % per_dim);
      rem /= per_dim;
      y[j] = box_lo[j] + (box_hi[j] - box_lo[j]) * i / (per_dim - 1);
      if (!is_integer.empty() && is_integer[static_cast<size_t>(j)]) y[j] = std::round(y[j]);
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace amopt::opt
