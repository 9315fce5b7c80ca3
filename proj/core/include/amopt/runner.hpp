#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "amopt/config.hpp"
#include "amopt/fem.hpp"
#include "amopt/objective.hpp"

namespace amopt {

/// Design point of one simulation: convection coefficient in configuration
/// units plus the printing-speed / layer-count pair.
struct DesignPoint {
  double h_w_m2k;
  double dt_element;
  int n_layers;

  static DesignPoint from_config(const RunConfig& cfg) {
    return {cfg.material.h_conv / convection_to_internal(1.0), cfg.build.dt_element,
            cfg.build.n_layers};
  }
};

struct SimulationOutput {
  double f_h = 0.0;
  double df_dh = 0.0;  // valid when requested; per W/(m^2 K)
  SimState state;
  RunSummary summary;
};

/// Runs one full simulation of the configured scenario at the given design
/// point, optionally with the convection-coefficient gradient. The mesh is
/// rebuilt when the layer count changes; everything else is shared.
class ScenarioRunner {
 public:
  explicit ScenarioRunner(const RunConfig& cfg);

  SimulationOutput simulate(const DesignPoint& dp, bool with_gradient = false,
                            const std::function<void(const SimState&, int)>& on_step = nullptr,
                            bool track_birth_stress = false) const;

  /// Memoized objective evaluation; identical design points reuse the cached
  /// simulation. Thread-safe.
  double objective(const DesignPoint& dp) const;

  /// Evaluates a batch of design points across up to `jobs` worker threads,
  /// preserving input order. Failed evaluations come back as NaN.
  std::vector<double> objective_batch(const std::vector<DesignPoint>& pts, int jobs) const;

  int evaluation_count() const;
  const RunConfig& config() const { return cfg_; }

  /// Mesh and error surface for a given layer count (cached, shared).
  struct Discretization {
    Mesh mesh;
    ErrorSurface surface;
  };
  std::shared_ptr<const Discretization> discretization(int n_layers) const;

 private:
  RunConfig cfg_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::shared_ptr<const Discretization>> mesh_cache_;
  mutable std::map<std::tuple<double, double, int>, double> value_cache_;
  mutable int evaluations_ = 0;
};

/// Gradient verification report of cmd_verify_gradient.
struct GradientCheckRow {
  double h = 0.0;
  double analytic = 0.0;
  double finite_difference = 0.0;
  double rel_err = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckRow> rows;
  double threshold = 0.0;
  bool passed = false;
};

GradientCheckReport run_gradient_check(const ScenarioRunner& runner);

/// CLI verbs. Each writes its artifacts under out_dir and reports through
/// standard output; the returned value is the process exit code
/// (0 ok, 2 config error, 3 solver failure, 4 verification failure).
int cmd_simulate(const RunConfig& cfg, const std::string& out_dir);
int cmd_verify_gradient(const RunConfig& cfg, const std::string& out_dir);
int cmd_optimize(const RunConfig& cfg, const std::string& out_dir, int jobs);

}  // namespace amopt
