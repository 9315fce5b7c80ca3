#pragma once

#include <Eigen/Dense>
#include <array>

#include "amopt/material.hpp"

namespace amopt {

/// Reference geometry of one 4-node quadrilateral (counter-clockwise corners).
struct ElementGeom {
  std::array<Eigen::Vector2d, 4> X;
};

/// Nodal state of one element over a time step (t_{n-1}, t_n]. Displacements
/// interleave as (ux0, uy0, ux1, ...). conv_edge marks local edges (0 bottom,
/// 1 right, 2 top, 3 left) currently exposed to convection.
struct ElementState {
  Eigen::Matrix<double, 8, 1> u = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Vector4d theta = Eigen::Vector4d::Zero();
  Eigen::Matrix<double, 8, 1> u_prev = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 1> v_prev = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 1> a_prev = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Vector4d theta_prev = Eigen::Vector4d::Zero();
  Eigen::Matrix<double, 8, 1> u_his = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Vector4d theta_his = Eigen::Vector4d::Zero();
  double dt = 1.0;
  std::array<bool, 4> conv_edge{false, false, false, false};

  /// Trapezoidal-rule recoveries at t_n given the current iterate u, theta.
  Eigen::Matrix<double, 8, 1> accel() const {
    return 4.0 / (dt * dt) * (u - u_prev - dt * v_prev) - a_prev;
  }
  Eigen::Matrix<double, 8, 1> velocity() const { return 2.0 / dt * (u - u_prev) - v_prev; }
  Eigen::Vector4d theta_rate() const { return (theta - theta_prev) / dt; }
};

/// Elemental pieces of the discrete balance laws: consistent mass, internal
/// force, load, capacity, conduction-convection and thermoelastic coupling.
struct ElementMatrices {
  Eigen::Matrix<double, 8, 8> M_u = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> R_u = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 1> F = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix4d T = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d M_t = Eigen::Matrix4d::Zero();
  Eigen::Vector4d R_t = Eigen::Vector4d::Zero();
  Eigen::Vector4d Q = Eigen::Vector4d::Zero();
};

struct ElementResidual {
  Eigen::Matrix<double, 8, 1> r1 = Eigen::Matrix<double, 8, 1>::Zero();  // momentum
  Eigen::Vector4d r2 = Eigen::Vector4d::Zero();                          // energy
};

/// Exact Jacobian blocks of the elemental residual under the time-stepping
/// substitution, with respect to the current nodal u and theta.
struct ElementTangents {
  Eigen::Matrix<double, 8, 8> K_u = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 4> K_t = Eigen::Matrix<double, 8, 4>::Zero();
  Eigen::Matrix<double, 4, 8> A_u = Eigen::Matrix<double, 4, 8>::Zero();
  Eigen::Matrix4d A_t = Eigen::Matrix4d::Zero();
};

/// Derivatives of the elemental residual with respect to the previous-step
/// state, used as right-hand sides of the forward sensitivity propagation.
/// The momentum blocks are scalar multiples of the mass matrix.
struct ElementPrevStateMatrices {
  Eigen::Matrix<double, 8, 8> dr1_du_prev;
  Eigen::Matrix<double, 8, 8> dr1_dv_prev;
  Eigen::Matrix<double, 8, 8> dr1_da_prev;
  Eigen::Matrix<double, 4, 8> dr2_du_prev;
  Eigen::Matrix<double, 4, 8> dr2_dv_prev;
  Eigen::Matrix4d dr2_dtheta_prev;
};

/// Derivatives of the elemental residual with respect to the history values
/// frozen at element birth.
struct ElementHistoryMatrices {
  Eigen::Matrix<double, 8, 8> dr1_du_his;
  Eigen::Matrix<double, 8, 4> dr1_dtheta_his;
  Eigen::Matrix<double, 4, 8> dr2_du_his;
  Eigen::Matrix4d dr2_dtheta_his;
};

ElementMatrices element_matrices(const ElementGeom& g, const ElementState& s,
                                 const MaterialParams& p);
ElementResidual element_residual(const ElementGeom& g, const ElementState& s,
                                 const MaterialParams& p);
ElementTangents element_tangents(const ElementGeom& g, const ElementState& s,
                                 const MaterialParams& p);
ElementPrevStateMatrices element_prev_state_matrices(const ElementGeom& g, const ElementState& s,
                                                     const MaterialParams& p);
ElementHistoryMatrices element_history_matrices(const ElementGeom& g, const ElementState& s,
                                                const MaterialParams& p);

/// d r2 / d h over the exposed convection edges (d r1 / d h vanishes).
Eigen::Vector4d element_convection_coefficient_derivative(const ElementGeom& g,
                                                          const ElementState& s,
                                                          const MaterialParams& p);

/// Stress tensors at the nine quadrature points for the current state.
std::array<Eigen::Matrix2d, 9> element_qp_stresses(const ElementGeom& g, const ElementState& s,
                                                   const MaterialParams& p);

}  // namespace amopt
