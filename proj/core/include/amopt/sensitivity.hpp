#pragma once

#include <Eigen/Sparse>

#include "amopt/fem.hpp"

namespace amopt {

/// Assembled derivatives of the step residual with respect to the previous
/// step's state. The acceleration block accompanies the displacement and
/// velocity ones because the trapezoidal rule carries a_{n-1} into r1.
struct StepRhsMatrices {
  Eigen::SparseMatrix<double> dr_du_prev;     // n_eq x 2*n_nodes
  Eigen::SparseMatrix<double> dr_dv_prev;     // n_eq x 2*n_nodes
  Eigen::SparseMatrix<double> dr_da_prev;     // n_eq x 2*n_nodes
  Eigen::SparseMatrix<double> dr_dtheta_prev; // n_eq x n_nodes
};

/// Element-level blocks scattered over the domain; rows are reduced
/// equations, columns full previous-state dofs.
StepRhsMatrices step_rhs_matrices(const Simulator& sim, const SimState& state,
                                  const SimState& prev, const DofMap& map, double dt);

/// Assembled derivatives with respect to the frozen history values.
struct HistoryMatrices {
  Eigen::SparseMatrix<double> dr_du_his;      // n_eq x 8*n_elems (element-local columns)
  Eigen::SparseMatrix<double> dr_dtheta_his;  // n_eq x 4*n_elems
};

HistoryMatrices history_matrices(const Simulator& sim, const SimState& state,
                                 const SimState& prev, const DofMap& map, double dt);

/// Explicit residual derivative with respect to the design variable.
/// Only the convection coefficient is supported on the gradient path;
/// anything else throws std::invalid_argument.
Eigen::VectorXd dr_dy(const Simulator& sim, const SimState& state, const SimState& prev,
                      const DofMap& map, double dt, DesignVariable variable);

/// Solves the sensitivity system of one converged step with the factorized
/// Newton matrix and advances the rate sensitivities. `state`/`prev` must be
/// the converged and previous snapshots used by the final Newton assembly.
void propagate_step(const Simulator& sim, const SimState& state, const SimState& prev,
                    const AssembledStep& system,
                    Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu, SensitivityState& sens,
                    double dt);

/// Chain rule of the shape-error objective: only the displacement term is
/// non-zero for this objective.
double total_gradient(const Eigen::VectorXd& dfh_du, const SensitivityState& sens);

}  // namespace amopt
