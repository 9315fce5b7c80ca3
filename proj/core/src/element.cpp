#include "amopt/element.hpp"

#include <cmath>

namespace amopt {
namespace {

constexpr double kGaussPos = 0.774596669241483377;  // sqrt(3/5)
constexpr std::array<double, 3> kGaussPt{-kGaussPos, 0.0, kGaussPos};
constexpr std::array<double, 3> kGaussWt{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

struct QuadPoint {
  Eigen::Vector4d N;                    // bilinear shape values
  Eigen::Matrix<double, 2, 4> dN;       // physical shape gradients
  Eigen::Matrix<double, 3, 8> B;        // strain-displacement, Voigt [xx, yy, xy(eng)]
  double w = 0.0;                       // weight * |J|
};

QuadPoint make_qp(const ElementGeom& g, double xi, double eta, double w) {
  QuadPoint q;
  const std::array<double, 4> xs{-1.0, 1.0, 1.0, -1.0};
  const std::array<double, 4> es{-1.0, -1.0, 1.0, 1.0};
  Eigen::Matrix<double, 2, 4> dN_ref;
  for (int k = 0; k < 4; ++k) {
    q.N(k) = 0.25 * (1.0 + xi * xs[k]) * (1.0 + eta * es[k]);
    dN_ref(0, k) = 0.25 * xs[k] * (1.0 + eta * es[k]);
    dN_ref(1, k) = 0.25 * es[k] * (1.0 + xi * xs[k]);
  }
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();  // J(i,j) = d x_i / d xi_j
  for (int k = 0; k < 4; ++k) J += g.X[k] * dN_ref.col(k).transpose();
  q.dN = J.inverse().transpose() * dN_ref;
  q.w = w * J.determinant();
  q.B.setZero();
  for (int k = 0; k < 4; ++k) {
    q.B(0, 2 * k) = q.dN(0, k);
    q.B(1, 2 * k + 1) = q.dN(1, k);
    q.B(2, 2 * k) = q.dN(1, k);
    q.B(2, 2 * k + 1) = q.dN(0, k);
  }
  return q;
}

template <typename Fn>
void for_each_qp(const ElementGeom& g, Fn&& fn) {
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      fn(make_qp(g, kGaussPt[a], kGaussPt[b], kGaussWt[a] * kGaussWt[b]));
}

struct EdgeQuadPoint {
  Eigen::Vector4d N;  // element shape values restricted to the edge
  double w = 0.0;     // weight * edge Jacobian
};

/// 3-point Gauss rule along a local edge; node pair (le, le+1 mod 4).
template <typename Fn>
void for_each_edge_qp(const ElementGeom& g, int le, Fn&& fn) {
  const int na = le;
  const int nb = (le + 1) % 4;
  const double len = (g.X[nb] - g.X[na]).norm();
  for (int k = 0; k < 3; ++k) {
    const double s = 0.5 * (1.0 + kGaussPt[k]);  // in [0, 1] along the edge
    EdgeQuadPoint eq;
    eq.N.setZero();
    eq.N(na) = 1.0 - s;
    eq.N(nb) = s;
    eq.w = kGaussWt[k] * 0.5 * len;
    fn(eq);
  }
}

struct PointFields {
  PointState ps;
  double theta_dot = 0.0;
  Eigen::Vector3d eps_dot_v;
  Eigen::Vector2d grad_theta;
};

PointFields gather_fields(const QuadPoint& q, const ElementState& s) {
  PointFields f;
  const Eigen::Vector3d eps_v = q.B * (s.u - s.u_his);
  f.eps_dot_v = q.B * s.velocity();
  f.ps.eps << eps_v(0), 0.5 * eps_v(2), 0.5 * eps_v(2), eps_v(1);
  f.ps.eps_dot << f.eps_dot_v(0), 0.5 * f.eps_dot_v(2), 0.5 * f.eps_dot_v(2), f.eps_dot_v(1);
  f.ps.theta = q.N.dot(s.theta);
  f.ps.theta_ref = q.N.dot(s.theta_his);
  f.theta_dot = q.N.dot(s.theta_rate());
  f.grad_theta = q.dN * s.theta;
  return f;
}

Eigen::Vector3d voigt_plain(const Eigen::Matrix2d& t) { return {t(0, 0), t(1, 1), t(0, 1)}; }

}  // namespace

ElementMatrices element_matrices(const ElementGeom& g, const ElementState& s,
                                 const MaterialParams& p) {
  ElementMatrices m;
  for_each_qp(g, [&](const QuadPoint& q) {
    const PointFields f = gather_fields(q, s);
    Eigen::Matrix<double, 2, 8> Nu = Eigen::Matrix<double, 2, 8>::Zero();
    for (int k = 0; k < 4; ++k) {
      Nu(0, 2 * k) = q.N(k);
      Nu(1, 2 * k + 1) = q.N(k);
    }
    m.M_u += q.w * p.rho_0 * Nu.transpose() * Nu;
    m.R_u += q.w * q.B.transpose() * voigt_plain(stress(f.ps, p));
    m.T += q.w * heat_capacity(f.ps, p) * q.N * q.N.transpose();
    m.M_t += q.w * p.k_cond * q.dN.transpose() * q.dN;
    const Eigen::Vector3d mv = voigt_plain(stress_temperature_modulus(f.ps, p));
    m.R_t -= q.w * f.ps.theta * mv.dot(f.eps_dot_v) * q.N;
    // Body force and heat supply default to zero, so F and the volumetric
    // part of Q stay empty.
  });
  for (int le = 0; le < 4; ++le) {
    if (!s.conv_edge[le]) continue;
    for_each_edge_qp(g, le, [&](const EdgeQuadPoint& eq) {
      m.M_t += eq.w * p.h_conv * eq.N * eq.N.transpose();
      m.Q += eq.w * p.h_conv * p.theta_inf * eq.N;
    });
  }
  return m;
}

ElementResidual element_residual(const ElementGeom& g, const ElementState& s,
                                 const MaterialParams& p) {
  const ElementMatrices m = element_matrices(g, s, p);
  ElementResidual r;
  r.r1 = m.M_u * s.accel() + m.R_u - m.F;
  r.r2 = m.T * s.theta_rate() + m.M_t * s.theta + m.R_t - m.Q;
  return r;
}

ElementTangents element_tangents(const ElementGeom& g, const ElementState& s,
                                 const MaterialParams& p) {
  ElementTangents t;
  const double dt = s.dt;
  for_each_qp(g, [&](const QuadPoint& q) {
    const PointFields f = gather_fields(q, s);
    const TangentModuli tm = tangent_moduli(f.ps, p);
    Eigen::Matrix<double, 2, 8> Nu = Eigen::Matrix<double, 2, 8>::Zero();
    for (int k = 0; k < 4; ++k) {
      Nu(0, 2 * k) = q.N(k);
      Nu(1, 2 * k + 1) = q.N(k);
    }
    t.K_u += q.w * (4.0 / (dt * dt) * p.rho_0 * Nu.transpose() * Nu +
                    q.B.transpose() * tm.dstress_deps * q.B);
    t.K_t += q.w * q.B.transpose() * voigt_plain(tm.dstress_dtheta) * q.N.transpose();

    const Eigen::Vector3d mv = voigt_plain(tm.dstress_dtheta);
    const Eigen::RowVector3d dc_deps = tm.dcapacity_deps.transpose();
    t.A_u += q.w * q.N * (f.theta_dot * dc_deps * q.B);
    t.A_u -= q.w * (2.0 / dt) * f.ps.theta * q.N * (mv.transpose() * q.B);
    t.A_u -= q.w * f.ps.theta * q.N * (f.eps_dot_v.transpose() * tm.dmodulus_deps * q.B);

    const double c = heat_capacity(f.ps, p);
    const double m_edot = mv.dot(f.eps_dot_v);
    const double dm_dtheta_edot = voigt_plain(tm.dmodulus_dtheta).dot(f.eps_dot_v);
    t.A_t += q.w * (tm.dcapacity_dtheta * f.theta_dot + c / dt - m_edot -
                    f.ps.theta * dm_dtheta_edot) *
             q.N * q.N.transpose();
    t.A_t += q.w * p.k_cond * q.dN.transpose() * q.dN;
  });
  for (int le = 0; le < 4; ++le) {
    if (!s.conv_edge[le]) continue;
    for_each_edge_qp(g, le, [&](const EdgeQuadPoint& eq) {
      t.A_t += eq.w * p.h_conv * eq.N * eq.N.transpose();
    });
  }
  return t;
}

ElementPrevStateMatrices element_prev_state_matrices(const ElementGeom& g, const ElementState& s,
                                                     const MaterialParams& p) {
  ElementPrevStateMatrices r;
  const double dt = s.dt;
  Eigen::Matrix<double, 8, 8> M_u = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 4, 8> theta_m_b = Eigen::Matrix<double, 4, 8>::Zero();
  Eigen::Matrix4d cap = Eigen::Matrix4d::Zero();
  for_each_qp(g, [&](const QuadPoint& q) {
    const PointFields f = gather_fields(q, s);
    Eigen::Matrix<double, 2, 8> Nu = Eigen::Matrix<double, 2, 8>::Zero();
    for (int k = 0; k < 4; ++k) {
      Nu(0, 2 * k) = q.N(k);
      Nu(1, 2 * k + 1) = q.N(k);
    }
    M_u += q.w * p.rho_0 * Nu.transpose() * Nu;
    const Eigen::Vector3d mv = voigt_plain(stress_temperature_modulus(f.ps, p));
    theta_m_b += q.w * f.ps.theta * q.N * (mv.transpose() * q.B);
    cap += q.w * heat_capacity(f.ps, p) * q.N * q.N.transpose();
  });
  r.dr1_du_prev = -4.0 / (dt * dt) * M_u;
  r.dr1_dv_prev = -4.0 / dt * M_u;
  r.dr1_da_prev = -M_u;
  // The strain rate enters through v_n = (2/dt)(u_n - u_{n-1}) - v_{n-1}.
  r.dr2_du_prev = 2.0 / dt * theta_m_b;
  r.dr2_dv_prev = theta_m_b;
  r.dr2_dtheta_prev = -cap / dt;
  return r;
}

ElementHistoryMatrices element_history_matrices(const ElementGeom& g, const ElementState& s,
                                                const MaterialParams& p) {
  ElementHistoryMatrices r;
  r.dr1_du_his.setZero();
  r.dr1_dtheta_his.setZero();
  r.dr2_du_his.setZero();
  r.dr2_dtheta_his.setZero();
  for_each_qp(g, [&](const QuadPoint& q) {
    const PointFields f = gather_fields(q, s);
    const TangentModuli tm = tangent_moduli(f.ps, p);
    // Strain is measured from u - u_his, so every strain-mediated derivative
    // flips sign against the corresponding tangent term.
    r.dr1_du_his -= q.w * q.B.transpose() * tm.dstress_deps * q.B;
    r.dr1_dtheta_his +=
        q.w * q.B.transpose() * voigt_plain(tm.dstress_dthetaref) * q.N.transpose();
    const Eigen::RowVector3d dc_deps = tm.dcapacity_deps.transpose();
    r.dr2_du_his -= q.w * q.N * (f.theta_dot * dc_deps * q.B);
    r.dr2_du_his += q.w * f.ps.theta * q.N * (f.eps_dot_v.transpose() * tm.dmodulus_deps * q.B);
    const double dm_ref_edot = voigt_plain(tm.dmodulus_dthetaref).dot(f.eps_dot_v);
    r.dr2_dtheta_his += q.w * (tm.dcapacity_dthetaref * f.theta_dot -
                               f.ps.theta * dm_ref_edot) *
                        q.N * q.N.transpose();
  });
  return r;
}

Eigen::Vector4d element_convection_coefficient_derivative(const ElementGeom& g,
                                                          const ElementState& s,
                                                          const MaterialParams& p) {
  Eigen::Vector4d d = Eigen::Vector4d::Zero();
  for (int le = 0; le < 4; ++le) {
    if (!s.conv_edge[le]) continue;
    for_each_edge_qp(g, le, [&](const EdgeQuadPoint& eq) {
      d += eq.w * (eq.N.dot(s.theta) - p.theta_inf) * eq.N;
    });
  }
  return d;
}

std::array<Eigen::Matrix2d, 9> element_qp_stresses(const ElementGeom& g, const ElementState& s,
                                                   const MaterialParams& p) {
  std::array<Eigen::Matrix2d, 9> out;
  int i = 0;
  for_each_qp(g, [&](const QuadPoint& q) {
    const PointFields f = gather_fields(q, s);
    out[i++] = stress(f.ps, p);
  });
  return out;
}

}  // namespace amopt
