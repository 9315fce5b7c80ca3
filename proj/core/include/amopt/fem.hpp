#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "amopt/constraints.hpp"
#include "amopt/element.hpp"
#include "amopt/material.hpp"
#include "amopt/mesh.hpp"

namespace amopt {

/// Full nodal state of the coupled simulation at one time step. Vectors span
/// every mesh node; entries of inactive nodes are zero and unused. Dirichlet
/// entries hold their prescribed values exactly after every converged step.
struct SimState {
  Eigen::VectorXd u, v, a;          // interleaved (x, y) per node
  Eigen::VectorXd theta, theta_dot; // per node
  double time = 0.0;
  int step = 0;
  std::vector<char> node_active, elem_active;
  std::vector<Eigen::Matrix<double, 8, 1>> u_his;  // nodal displacement at element birth
  std::vector<Eigen::Vector4d> theta_his;          // nodal temperature at element birth
  int n_active_nodes = 0, n_active_elems = 0;

  /// Referential temperature of one element, the average of its nodal birth
  /// temperatures.
  double element_theta_his(int e) const { return theta_his[e].mean(); }
};

/// Forward sensitivities of the state with respect to one design variable.
struct SensitivityState {
  Eigen::VectorXd du, dv, da;  // 2 * n_nodes
  Eigen::VectorXd dtheta;      // n_nodes
  std::vector<Eigen::Matrix<double, 8, 1>> du_his;
  std::vector<Eigen::Vector4d> dtheta_his;

  static SensitivityState zero(int n_nodes, int n_elems);
};

/// Design variables supported by the gradient (primal sensitivity) path.
/// Printing speed and layer count are handled by the gradient-free methods.
enum class DesignVariable { ConvectionCoefficient };

struct NewtonOptions {
  double rtol = 1e-8;        // scaled infinity-norm test per residual block
  double atol_floor = 1e-12;
  int max_iterations = 25;
};

struct SimOptions {
  NewtonOptions newton;
  bool track_birth_stress = false;
  std::optional<DesignVariable> sensitivity;
  /// Called after every converged step.
  std::function<void(const SimState&, int)> on_step;
};

struct StepDiagnostics {
  int newton_iterations = 0;
  std::vector<double> residual_history;  // max of the two scaled block norms
  double max_birth_stress = 0.0;         // largest |sigma| component at this step's births
};

struct RunSummary {
  int steps = 0;
  double end_time = 0.0;
  double max_birth_stress = 0.0;
  int total_newton_iterations = 0;
};

/// Reduced linear system of one Newton iteration.
struct AssembledStep {
  std::shared_ptr<DofMap> map;
  Eigen::SparseMatrix<double> J;
  Eigen::VectorXd r;
  double f_ref = 0.0, q_ref = 0.0;  // block scales fixed at the first iteration
};

/// Drives one print simulation: element activation, the monolithic
/// Newton-Raphson solve of the coupled balance laws per time step, and the
/// optional forward sensitivity propagation that reuses each step's final
/// factorization. One instance runs one simulation at a time; distinct
/// instances are independent and may run concurrently.
class Simulator {
 public:
  Simulator(const Mesh& mesh, const ActivationSchedule& schedule, const MaterialParams& material,
            SimOptions options = {});

  SimState initial_state() const;
  SensitivityState initial_sensitivity() const;

  /// Activates the elements scheduled for `step` (1-based): newborn nodes
  /// take the interpolated displacement of their support, deposit
  /// temperature, and zero velocity/acceleration; history values freeze.
  /// Throws ScheduleError when an activated element lacks support.
  void activate(SimState& state, int step, SensitivityState* sens = nullptr) const;

  /// Assembles the reduced residual and block Jacobian at the current iterate.
  AssembledStep assemble(const SimState& iterate, const SimState& prev,
                         const std::shared_ptr<DofMap>& map, double dt) const;

  /// Solves the block system for the Newton update (reduced unknowns).
  Eigen::VectorXd newton_step(const AssembledStep& system);

  /// Advances the state over schedule step `state.step + 1`, propagating
  /// sensitivities when enabled. Throws SolverError on non-convergence.
  StepDiagnostics advance_step(SimState& state, SensitivityState* sens = nullptr);

  /// Runs every scheduled step from the initial state.
  RunSummary run(SimState& state, SensitivityState* sens = nullptr);

  const Mesh& mesh() const { return mesh_; }
  const ActivationSchedule& schedule() const { return schedule_; }
  const MaterialParams& material() const { return material_; }
  const SimOptions& options() const { return options_; }

  /// Exposed convection edges of an active element in the current state.
  std::array<bool, 4> convection_edges(const SimState& state, int elem) const;

  ElementGeom element_geom(int elem) const;
  ElementState gather_element_state(const SimState& iterate, const SimState& prev, int elem,
                                    double dt) const;

 private:
  friend struct SensitivityWork;
  void propagate_sensitivity(const SimState& state, const SimState& prev,
                             const AssembledStep& system,
                             Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
                             SensitivityState& sens, double dt) const;

  const Mesh& mesh_;
  const ActivationSchedule& schedule_;
  MaterialParams material_;
  SimOptions options_;

  // Factorization workspace; the symbolic analysis is reused while the
  // active set (hence the sparsity pattern) is unchanged.
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  int analyzed_eq_count_ = -1;
  bool pattern_dirty_ = true;
};

/// Plain-text field snapshot: one row per active node with id, reference
/// coordinates, displacement and temperature.
void write_field_snapshot(std::ostream& os, const Mesh& mesh, const SimState& state);

}  // namespace amopt
