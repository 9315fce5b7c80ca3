#include <doctest.h>

#include <random>

#include "amopt/element.hpp"

using namespace amopt;

namespace {

MaterialParams params() { return MaterialParams{}; }

ElementGeom unit_square(double w = 1.0, double h = 1.0) {
  ElementGeom g;
  g.X = {Eigen::Vector2d{0, 0}, {w, 0}, {w, h}, {0, h}};
  return g;
}

ElementState random_state(std::mt19937& rng, double dt = 0.01, bool with_edges = true) {
  std::uniform_real_distribution<double> du(-0.02, 0.02);
  std::uniform_real_distribution<double> dv(-0.5, 0.5);
  std::uniform_real_distribution<double> dth(330.0, 495.0);
  ElementState s;
  s.dt = dt;
  for (int i = 0; i < 8; ++i) {
    s.u(i) = du(rng);
    s.u_prev(i) = du(rng);
    s.v_prev(i) = dv(rng);
    s.a_prev(i) = dv(rng);
    s.u_his(i) = du(rng) * 0.5;
  }
  for (int i = 0; i < 4; ++i) {
    s.theta(i) = dth(rng);
    s.theta_prev(i) = dth(rng);
    s.theta_his(i) = dth(rng);
  }
  if (with_edges) s.conv_edge = {false, true, true, false};
  return s;
}

constexpr double kFdScale = 1e-6;

}  // namespace

TEST_CASE("residual vanishes for a uniform stress-free state") {
  const MaterialParams p = params();
  ElementState s;
  s.dt = 0.01;
  s.u.setConstant(0.004);
  s.u_prev = s.u;
  s.u_his = s.u;
  s.theta.setConstant(470.0);
  s.theta_prev = s.theta;
  s.theta_his = s.theta;
  const ElementResidual r = element_residual(unit_square(), s, p);
  CHECK(r.r1.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r.r2.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("consistent mass reproduces the element mass per direction") {
  const MaterialParams p = params();
  ElementGeom g = unit_square(0.5, 0.25);
  ElementState s;
  s.theta.setConstant(400.0);
  s.theta_prev = s.theta;
  s.theta_his = s.theta;
  const ElementMatrices m = element_matrices(g, s, p);
  const double mass = p.rho_0 * 0.5 * 0.25;
  double row_sum_x = 0.0, row_sum_y = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      if (i % 2 == 0 && j % 2 == 0) row_sum_x += m.M_u(i, j);
      if (i % 2 == 1 && j % 2 == 1) row_sum_y += m.M_u(i, j);
    }
  CHECK(row_sum_x == doctest::Approx(mass).epsilon(1e-12));
  CHECK(row_sum_y == doctest::Approx(mass).epsilon(1e-12));
}

TEST_CASE("convection edge load matches the closed-form edge integral") {
  // Constant h * theta_inf over one straight edge of length L integrates to
  // h * theta_inf * L / 2 per edge node.
  MaterialParams p = params();
  p.h_conv = 40e-3;
  p.theta_inf = 315.0;
  ElementGeom g = unit_square(0.5, 0.25);
  ElementState s;
  s.theta.setConstant(480.0);
  s.theta_prev = s.theta;
  s.theta_his = s.theta;
  s.conv_edge = {false, false, true, false};  // top edge, nodes 2 and 3, length 0.5
  const ElementMatrices m = element_matrices(g, s, p);
  const double per_node = p.h_conv * p.theta_inf * 0.5 / 2.0;
  CHECK(m.Q(2) == doctest::Approx(per_node).epsilon(1e-12));
  CHECK(m.Q(3) == doctest::Approx(per_node).epsilon(1e-12));
  CHECK(m.Q(0) == 0.0);
  CHECK(m.Q(1) == 0.0);

  // M_t edge block: int h N^T N over the edge of a linear pair is
  // h*L/6 * [[2,1],[1,2]] plus the conduction part; verify the coupling term
  // via a zero-conductivity copy.
  MaterialParams p2 = p;
  p2.k_cond = 1e-300;
  const ElementMatrices m2 = element_matrices(g, s, p2);
  CHECK(m2.M_t(2, 2) == doctest::Approx(p.h_conv * 0.5 / 3.0).epsilon(1e-10));
  CHECK(m2.M_t(2, 3) == doctest::Approx(p.h_conv * 0.5 / 6.0).epsilon(1e-10));
}

TEST_CASE("residual composes from the elemental matrices") {
  const MaterialParams p = params();
  std::mt19937 rng(5);
  const ElementGeom g = unit_square(0.5, 0.3);
  const ElementState s = random_state(rng);
  const ElementMatrices m = element_matrices(g, s, p);
  const ElementResidual r = element_residual(g, s, p);
  const Eigen::Matrix<double, 8, 1> r1 = m.M_u * s.accel() + m.R_u - m.F;
  const Eigen::Vector4d r2 = m.T * s.theta_rate() + m.M_t * s.theta + m.R_t - m.Q;
  CHECK((r.r1 - r1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.r2 - r2).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {

/// Central finite differences of the element residual against an arbitrary
/// mutation of the element state.
template <typename Mutate>
std::pair<Eigen::Matrix<double, 8, 1>, Eigen::Vector4d> fd_residual(
    const ElementGeom& g, const ElementState& s, const MaterialParams& p, double step,
    Mutate&& mutate) {
  ElementState hi = s, lo = s;
  mutate(hi, +step);
  mutate(lo, -step);
  const ElementResidual rhi = element_residual(g, hi, p);
  const ElementResidual rlo = element_residual(g, lo, p);
  return {(rhi.r1 - rlo.r1) / (2 * step), (rhi.r2 - rlo.r2) / (2 * step)};
}

void check_block_column(const Eigen::Ref<const Eigen::VectorXd>& analytic,
                        const Eigen::Ref<const Eigen::VectorXd>& fd, double scale) {
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    // 1e-5 relative per entry with floors for entries at or below the
    // finite-difference resolution of the residual itself.
    const double tol =
        1e-5 * std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-6 * scale}) + 1e-13;
    CHECK(std::abs(analytic[i] - fd[i]) <= tol);
  }
}

}  // namespace

TEST_CASE("tangent blocks match finite differences of the residual") {
  const MaterialParams p = params();
  std::mt19937 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const ElementGeom g = unit_square(0.4, 0.25);
    const ElementState s = random_state(rng);
    const ElementTangents t = element_tangents(g, s, p);

    double su = 0.0, sth = 0.0;
    for (int j = 0; j < 8; ++j) {
      auto [c1, c2] = fd_residual(g, s, p, kFdScale,
                                  [j](ElementState& e, double d) { e.u(j) += d; });
      su = std::max({su, c1.cwiseAbs().maxCoeff(), c2.cwiseAbs().maxCoeff()});
      check_block_column(t.K_u.col(j), c1, t.K_u.cwiseAbs().maxCoeff());
      check_block_column(t.A_u.col(j), c2, t.A_u.cwiseAbs().maxCoeff());
    }
    for (int j = 0; j < 4; ++j) {
      auto [c1, c2] = fd_residual(g, s, p, kFdScale * 100,
                                  [j](ElementState& e, double d) { e.theta(j) += d; });
      sth = std::max({sth, c1.cwiseAbs().maxCoeff(), c2.cwiseAbs().maxCoeff()});
      check_block_column(t.K_t.col(j), c1, t.K_t.cwiseAbs().maxCoeff());
      check_block_column(t.A_t.col(j), c2, t.A_t.cwiseAbs().maxCoeff());
    }
    CHECK(su > 0.0);
    CHECK(sth > 0.0);
  }
}

TEST_CASE("zero strain rate removes the modulus-derivative term of A_u") {
  const MaterialParams p = params();
  const ElementGeom g = unit_square();
  ElementState s;
  s.dt = 0.02;
  s.u.setConstant(0.003);
  s.u_prev = s.u;  // v_n = -v_prev = 0
  s.v_prev.setZero();
  s.a_prev.setZero();
  s.u_his.setZero();
  s.theta.setConstant(460.0);
  s.theta_prev.setConstant(465.0);
  s.theta_his.setConstant(470.0);
  // With eps_dot = 0, A_u keeps only the capacity-derivative term and the
  // 2/dt coupling; the third integral of the tangent vanishes, which the FD
  // check captures because both must then agree for any dM/deps.
  const ElementTangents t = element_tangents(g, s, p);
  for (int j = 0; j < 8; ++j) {
    auto [c1, c2] =
        fd_residual(g, s, p, kFdScale, [j](ElementState& e, double d) { e.u(j) += d; });
    check_block_column(t.A_u.col(j), c2, t.A_u.cwiseAbs().maxCoeff());
    (void)c1;
  }
}

TEST_CASE("zero convection coefficient removes the boundary term of A_t") {
  MaterialParams p = params();
  p.h_conv = 0.0;
  const ElementGeom g = unit_square();
  std::mt19937 rng(23);
  const ElementState s = random_state(rng);
  ElementState s_no_edges = s;
  s_no_edges.conv_edge = {false, false, false, false};
  const ElementTangents with_edges = element_tangents(g, s, p);
  const ElementTangents without = element_tangents(g, s_no_edges, p);
  CHECK((with_edges.A_t - without.A_t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("previous-state derivative blocks match finite differences") {
  const MaterialParams p = params();
  std::mt19937 rng(31);
  const ElementGeom g = unit_square(0.4, 0.25);
  const ElementState s = random_state(rng);
  const ElementPrevStateMatrices m = element_prev_state_matrices(g, s, p);

  // The residual is exactly linear in the previous-step state, so large FD
  // steps carry no truncation error and sidestep cancellation noise on the
  // tiny mass-scaled blocks.
  const double big = 1e-1;
  for (int j = 0; j < 8; ++j) {
    auto [c1u, c2u] =
        fd_residual(g, s, p, big, [j](ElementState& e, double d) { e.u_prev(j) += d; });
    check_block_column(m.dr1_du_prev.col(j), c1u, m.dr1_du_prev.cwiseAbs().maxCoeff());
    check_block_column(m.dr2_du_prev.col(j), c2u, m.dr2_du_prev.cwiseAbs().maxCoeff());

    auto [c1v, c2v] =
        fd_residual(g, s, p, big, [j](ElementState& e, double d) { e.v_prev(j) += d; });
    check_block_column(m.dr1_dv_prev.col(j), c1v, m.dr1_dv_prev.cwiseAbs().maxCoeff());
    check_block_column(m.dr2_dv_prev.col(j), c2v, m.dr2_dv_prev.cwiseAbs().maxCoeff());

    auto [c1a, c2a] =
        fd_residual(g, s, p, big, [j](ElementState& e, double d) { e.a_prev(j) += d; });
    check_block_column(m.dr1_da_prev.col(j), c1a, m.dr1_da_prev.cwiseAbs().maxCoeff());
    CHECK(c2a.cwiseAbs().maxCoeff() < 1e-12);  // r2 does not see a_{n-1}
  }
  for (int j = 0; j < 4; ++j) {
    auto [c1t, c2t] =
        fd_residual(g, s, p, big, [j](ElementState& e, double d) { e.theta_prev(j) += d; });
    CHECK(c1t.cwiseAbs().maxCoeff() < 1e-12);  // r1 does not see theta_{n-1}
    check_block_column(m.dr2_dtheta_prev.col(j), c2t, m.dr2_dtheta_prev.cwiseAbs().maxCoeff());
  }

  // Scaling identities of the momentum blocks.
  CHECK((m.dr1_dv_prev - s.dt * m.dr1_du_prev).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.dr1_da_prev - (s.dt * s.dt / 4.0) * m.dr1_du_prev).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("history derivative blocks match finite differences") {
  const MaterialParams p = params();
  std::mt19937 rng(37);
  const ElementGeom g = unit_square(0.4, 0.25);
  const ElementState s = random_state(rng);
  const ElementHistoryMatrices m = element_history_matrices(g, s, p);

  for (int j = 0; j < 8; ++j) {
    auto [c1, c2] = fd_residual(g, s, p, kFdScale,
                                [j](ElementState& e, double d) { e.u_his(j) += d; });
    check_block_column(m.dr1_du_his.col(j), c1, m.dr1_du_his.cwiseAbs().maxCoeff());
    check_block_column(m.dr2_du_his.col(j), c2, m.dr2_du_his.cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < 4; ++j) {
    auto [c1, c2] = fd_residual(g, s, p, kFdScale * 100,
                                [j](ElementState& e, double d) { e.theta_his(j) += d; });
    check_block_column(m.dr1_dtheta_his.col(j), c1, m.dr1_dtheta_his.cwiseAbs().maxCoeff());
    check_block_column(m.dr2_dtheta_his.col(j), c2, m.dr2_dtheta_his.cwiseAbs().maxCoeff());
  }

  // Strain lives on u - u_his, so the history block mirrors the material part
  // of the stiffness with the opposite sign.
  const ElementTangents t = element_tangents(g, s, p);
  const Eigen::Matrix<double, 8, 8> mass_part =
      -element_prev_state_matrices(g, s, p).dr1_du_prev;  // 4/dt^2 M_u
  CHECK((m.dr1_du_his + (t.K_u - mass_part)).cwiseAbs().maxCoeff() <
        1e-9 * t.K_u.cwiseAbs().maxCoeff());
}

TEST_CASE("zero strain rate kills the modulus term of dr2/du_his") {
  const MaterialParams p = params();
  const ElementGeom g = unit_square();
  ElementState s;
  s.dt = 0.02;
  s.u.setConstant(0.002);
  s.u_prev = s.u;
  s.theta.setConstant(450.0);
  s.theta_prev.setConstant(440.0);
  s.theta_his.setConstant(460.0);
  const ElementHistoryMatrices m = element_history_matrices(g, s, p);
  // Only the capacity-derivative term survives; it carries theta_dot != 0.
  for (int j = 0; j < 8; ++j) {
    auto [c1, c2] = fd_residual(g, s, p, kFdScale,
                                [j](ElementState& e, double d) { e.u_his(j) += d; });
    check_block_column(m.dr2_du_his.col(j), c2, m.dr2_du_his.cwiseAbs().maxCoeff());
    (void)c1;
  }
}

TEST_CASE("convection coefficient derivative of the energy residual") {
  MaterialParams p = params();
  p.theta_inf = 315.0;
  const ElementGeom g = unit_square(0.5, 0.25);
  std::mt19937 rng(41);
  ElementState s = random_state(rng);
  s.conv_edge = {false, false, true, false};

  // theta == theta_inf everywhere gives a vanishing derivative.
  ElementState amb = s;
  amb.theta.setConstant(p.theta_inf);
  CHECK(element_convection_coefficient_derivative(g, amb, p).cwiseAbs().maxCoeff() < 1e-14);

  // One hot edge against the closed-form linear integral.
  ElementState hot = s;
  hot.theta << 0.0, 0.0, 480.0, 480.0;
  const Eigen::Vector4d d = element_convection_coefficient_derivative(g, hot, p);
  const double expected = (480.0 - 315.0) * 0.5 / 2.0;  // edge length 0.5
  CHECK(d(2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(d(3) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(d(0) == 0.0);

  // FD against the residual in h.
  const Eigen::Vector4d dh = element_convection_coefficient_derivative(g, s, p);
  const double step = 1e-6;
  MaterialParams hi = p, lo = p;
  hi.h_conv += step;
  lo.h_conv -= step;
  const Eigen::Vector4d fd =
      (element_residual(g, s, hi).r2 - element_residual(g, s, lo).r2) / (2 * step);
  CHECK((dh - fd).cwiseAbs().maxCoeff() < 1e-8 * fd.cwiseAbs().maxCoeff() + 1e-14);

  // The momentum residual never depends on h.
  const Eigen::Matrix<double, 8, 1> fd1 =
      (element_residual(g, s, hi).r1 - element_residual(g, s, lo).r1) / (2 * step);
  CHECK(fd1.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quadrature stresses are zero at the birth configuration") {
  const MaterialParams p = params();
  const ElementGeom g = unit_square(0.4, 0.3);
  ElementState s;
  s.dt = 0.01;
  s.u << 0.001, -0.002, 0.0015, 0.0, -0.001, 0.002, 0.0, 0.001;
  s.u_prev = s.u;
  s.u_his = s.u;
  s.theta << 480.0, 470.0, 500.0, 500.0;  // mixed interface temperatures
  s.theta_prev = s.theta;
  s.theta_his = s.theta;
  for (const Eigen::Matrix2d& sig : element_qp_stresses(g, s, p))
    CHECK(sig.cwiseAbs().maxCoeff() < 1e-10);
}
