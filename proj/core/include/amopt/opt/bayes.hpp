#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace amopt::opt {

/// One evaluated design: raw (unscaled) design vector and its objective.
struct BoSample {
  Eigen::VectorXd y;
  double f = 0.0;
};

/// Gaussian-process surrogate over the box-scaled design space. The model is
/// trained on the standardized negative objective, so larger surrogate values
/// mean smaller shape error and the acquisition maximizes as usual.
struct GpSurrogate {
  Eigen::MatrixXd X;            // N x d inputs scaled to the unit box
  Eigen::VectorXd g;            // standardized -f values
  double theta_len = 1.0;       // squared-exponential length scale (scaled units)
  double jitter = 1e-10;        // diagonal regularizer
  double value_mean = 0.0;      // standardization statistics of -f
  double value_scale = 1.0;
  Eigen::VectorXd box_lo, box_hi;
  Eigen::MatrixXd chol_L;       // Cholesky factor of K + jitter * I
  Eigen::VectorXd coeffs;       // (K + jitter I)^{-1} g

  int n() const { return static_cast<int>(X.rows()); }
  Eigen::VectorXd scale_input(const Eigen::VectorXd& y_raw) const;
  double scale_value(double f) const { return (-f - value_mean) / value_scale; }
  double unscale_value(double gval) const { return -(gval * value_scale + value_mean); }
};

/// Posterior statistics in the scaled (standardized, negated) space.
struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;  // clamped at zero
};

/// Fits the surrogate: duplicate inputs keep the latest value, objectives are
/// standardized, and the kernel length scale maximizes the log marginal
/// likelihood over a log-spaced candidate range (a fixed default is used when
/// fewer than two samples exist).
GpSurrogate gp_fit(const std::vector<BoSample>& samples, const Eigen::VectorXd& box_lo,
                   const Eigen::VectorXd& box_hi, double jitter = 1e-10);

GpPosterior gp_posterior(const GpSurrogate& gp, const Eigen::VectorXd& y_raw);

double log_marginal_likelihood(const GpSurrogate& gp);

struct AcquisitionParams {
  double xi = 0.01;        ///< exploration margin in scaled objective units
  int grid_per_dim = 64;   ///< dense grid resolution of the inner argmax
  int polish_rounds = 3;   ///< local grid refinements around the best cell

  void validate() const;
};

/// Expected improvement over the incumbent best sample, zero at zero
/// posterior variance.
double expected_improvement(const GpSurrogate& gp, const Eigen::VectorXd& y_raw,
                            const AcquisitionParams& params, double f_best);

/// Maximizes the expected improvement by dense grid plus local refinement.
/// Falls back to the posterior-mean argmax when the improvement vanishes
/// everywhere on the grid.
Eigen::VectorXd propose_next(const GpSurrogate& gp, const AcquisitionParams& params,
                             const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi);

struct BoOptions {
  AcquisitionParams acquisition;
  int max_proposals = 16;
  double tol_y = 1e-3;      ///< on successive surrogate optima, scaled box units
  double tol_value = 1e-3;  ///< on successive surrogate optima, scaled objective units
  double jitter = 1e-10;
  std::vector<bool> is_integer;  // per dimension; empty means all continuous
  unsigned long long seed = 0;   // recorded for reproducibility; the loop is deterministic
};

struct BoHistoryEntry {
  int iteration = 0;
  Eigen::VectorXd proposal;
  double f = 0.0;
  double theta_len = 0.0;  // of the surrogate that produced the proposal
  double ei = 0.0;         // acquisition value at the proposal
};

struct BoResult {
  Eigen::VectorXd y;
  double f = 0.0;
  GpSurrogate surrogate;
  std::vector<BoHistoryEntry> history;
  std::vector<BoSample> samples;
  bool converged = false;
};

/// Sequential Bayesian optimization: propose by expected improvement,
/// evaluate, refit, and stop once consecutive surrogate optima agree in
/// location and value. Integer dimensions round the proposal to the nearest
/// feasible integer and step to the nearest unsampled one on duplicates.
/// Returns the best evaluated sample.
BoResult optimize(const std::function<double(const Eigen::VectorXd&)>& f,
                  const std::vector<Eigen::VectorXd>& initial_designs,
                  const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi,
                  const BoOptions& options,
                  const std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>&
                      batch_f = nullptr);

/// Tensor grid of per_dim points per dimension across the box (2 gives the
/// corners, 3 adds edge midpoints and the center).
std::vector<Eigen::VectorXd> corner_designs(const Eigen::VectorXd& box_lo,
                                            const Eigen::VectorXd& box_hi, int per_dim,
                                            const std::vector<bool>& is_integer = {});

}  // namespace amopt::opt
