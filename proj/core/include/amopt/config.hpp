#pragma once

#include <string>
#include <vector>

#include "amopt/material.hpp"
#include "amopt/mesh.hpp"

namespace amopt {

enum class Algorithm { GradientDescent, LocalVariations, Bayesian };
enum class ObjectiveVariant { TopEdge, StepEdge };

/// Gradient-descent settings; the design variable is the convection
/// coefficient in W/(m^2 K), matching the configuration units.
struct GdConfig {
  double h0 = 40.0, h_min = 30.0, h_max = 55.0;
  double alpha0 = 1.0, rho = 0.5, eta = 0.1;
  int max_iterations = 100;
  double step_tol = 1e-4;
};

/// Shared settings of the gradient-free optimizers over printing speed
/// (dt_element, seconds) and layer count.
struct FreeConfig {
  double dt0 = 0.0075;
  int layers0 = 40;
  double dt_min = 0.005, dt_max = 0.01;
  int layers_min = 30, layers_max = 50;
  // local variations
  double tau0_dt = 0.001, tau_min_dt = 2e-4;
  int tau0_layers = 4, tau_min_layers = 1;
  // bayesian optimization
  int initial_design = 4;  // 4 corners or 9 grid points
  double xi = 0.01;
  int max_proposals = 8;
  double bo_tol = 1e-3;
};

struct OutputConfig {
  std::string dir = "out";
  int snapshot_interval = 0;  // steps between field snapshots; 0 disables
  unsigned long long seed = 0;
};

struct GradientCheckConfig {
  std::vector<double> h_values{32.0, 40.0, 50.0};
  double fd_step_rel = 1e-3;
  double threshold = 1e-3;
};

struct RunConfig {
  MaterialParams material;  // internal units, converted at load time
  BuildPlan build;
  ObjectiveVariant objective = ObjectiveVariant::TopEdge;
  double characteristic_length = 0.0;  // 0 -> variant default
  Algorithm algorithm = Algorithm::GradientDescent;
  GdConfig gd;
  FreeConfig free_opt;
  OutputConfig output;
  GradientCheckConfig gradient_check;

  void validate() const;  // throws ConfigError
};

/// Converts a convection coefficient from W/(m^2 K) to internal units.
inline double convection_to_internal(double h_w_m2k) { return h_w_m2k * 1e-3; }

/// Parses the INI-style key-value configuration file. Unknown sections or
/// keys are rejected; parse and validation errors carry the offending line
/// or field. Unit conversions to the internal N-mm-s-K system happen here.
RunConfig load_config(const std::string& path);

/// Same parser over an in-memory buffer (used by tests).
RunConfig parse_config(const std::string& text, const std::string& origin = "<memory>");

}  // namespace amopt
