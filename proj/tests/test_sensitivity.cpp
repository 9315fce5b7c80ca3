#include <doctest.h>

#include <random>

#include "amopt/objective.hpp"
#include "amopt/sensitivity.hpp"

using namespace amopt;

namespace {

struct Rig {
  BuildPlan plan;
  Mesh mesh;
  ActivationSchedule schedule;
  MaterialParams mat;

  explicit Rig(BuildPlan p) : plan(p), mesh(build_mesh(p)), schedule(make_schedule(p, mesh)) {}
};

BuildPlan desk_wall() {
  BuildPlan plan;
  plan.width = 3.0;
  plan.height = 1.2;
  plan.nx = 6;
  plan.n_layers = 4;
  plan.dt_element = 0.01;
  plan.dwell_factor = 0.5;
  plan.cooldown = 30.0;
  return plan;
}

/// Runs the simulation at the given convection coefficient; optionally also
/// propagates sensitivities.
double run_f(const Rig& rig, double h_conv, SensitivityState* sens, SimState* out_state = nullptr) {
  MaterialParams mat = rig.mat;
  mat.h_conv = h_conv;
  SimOptions opt;
  if (sens) opt.sensitivity = DesignVariable::ConvectionCoefficient;
  Simulator sim(rig.mesh, rig.schedule, mat, opt);
  SimState s = sim.initial_state();
  sim.run(s, sens);
  const ErrorSurface surf = make_top_edge_surface(rig.mesh);
  if (out_state) *out_state = s;
  return shape_error(s.u, surf);
}

}  // namespace

TEST_CASE("assembled previous-state matrices carry the expected structure") {
  Rig rig(desk_wall());
  Simulator sim(rig.mesh, rig.schedule, rig.mat, {});
  SimState s = sim.initial_state();
  // March a few steps in, then inspect an interior step's matrices.
  for (int k = 0; k < 8; ++k) sim.advance_step(s);
  SimState prev = s;
  sim.advance_step(s);

  auto map = std::make_shared<DofMap>(rig.mesh.n_nodes(), s.node_active, rig.mesh.node_on_base,
                                      rig.mesh.hanging);
  const double dt = rig.schedule.steps[static_cast<size_t>(s.step - 1)].dt;
  const StepRhsMatrices m = step_rhs_matrices(sim, s, prev, *map, dt);

  // dr1/du_{n-1} = -(4/dt^2) M_u: velocity block is dt times it, and the
  // acceleration block dt^2/4 times it.
  const Eigen::MatrixXd du(m.dr_du_prev);
  const Eigen::MatrixXd dv(m.dr_dv_prev);
  const Eigen::MatrixXd da(m.dr_da_prev);
  const int n_u = map->n_u_equations();
  CHECK((dv.topRows(n_u) - dt * du.topRows(n_u)).cwiseAbs().maxCoeff() <=
        1e-12 * du.topRows(n_u).cwiseAbs().maxCoeff());
  CHECK((da.topRows(n_u) - dt * dt / 4.0 * du.topRows(n_u)).cwiseAbs().maxCoeff() <=
        1e-12 * du.topRows(n_u).cwiseAbs().maxCoeff());
  // The momentum residual never sees the previous temperature.
  CHECK(Eigen::MatrixXd(m.dr_dtheta_prev).topRows(n_u).cwiseAbs().maxCoeff() == 0.0);
  // The energy residual keeps a -T/dt block against the previous temperature.
  CHECK(Eigen::MatrixXd(m.dr_dtheta_prev).bottomRows(map->n_equations() - n_u)
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("one-step sensitivity matches rerunning the step at perturbed h") {
  Rig rig(desk_wall());
  const double h0 = 40e-3;

  // March to a mid-print step at the base coefficient, with sensitivities.
  MaterialParams mat = rig.mat;
  mat.h_conv = h0;
  SimOptions opt;
  opt.sensitivity = DesignVariable::ConvectionCoefficient;
  Simulator sim(rig.mesh, rig.schedule, mat, opt);
  SimState s = sim.initial_state();
  SensitivityState sens = sim.initial_sensitivity();
  const int n_march = 9;
  for (int k = 0; k < n_march; ++k) sim.advance_step(s, &sens);

  // Central difference over full reruns from scratch.
  const double step = 1e-3 * h0;
  auto rerun = [&](double h) {
    MaterialParams m2 = rig.mat;
    m2.h_conv = h;
    Simulator s2(rig.mesh, rig.schedule, m2, {});
    SimState st = s2.initial_state();
    for (int k = 0; k < n_march; ++k) s2.advance_step(st);
    return st;
  };
  const SimState hi = rerun(h0 + step);
  const SimState lo = rerun(h0 - step);
  const Eigen::VectorXd fd_u = (hi.u - lo.u) / (2 * step);
  const Eigen::VectorXd fd_th = (hi.theta - lo.theta) / (2 * step);

  const double scale_u = fd_u.cwiseAbs().maxCoeff();
  const double scale_th = fd_th.cwiseAbs().maxCoeff();
  REQUIRE(scale_u > 0.0);
  REQUIRE(scale_th > 0.0);
  for (int i = 0; i < fd_u.size(); ++i)
    CHECK(std::abs(sens.du[i] - fd_u[i]) <= 1e-4 * std::max(std::abs(fd_u[i]), 0.02 * scale_u));
  for (int i = 0; i < fd_th.size(); ++i)
    CHECK(std::abs(sens.dtheta[i] - fd_th[i]) <=
          1e-4 * std::max(std::abs(fd_th[i]), 0.02 * scale_th));
}

TEST_CASE("initial sensitivities are zero and Dirichlet rows stay zero") {
  Rig rig(desk_wall());
  MaterialParams mat = rig.mat;
  SimOptions opt;
  opt.sensitivity = DesignVariable::ConvectionCoefficient;
  Simulator sim(rig.mesh, rig.schedule, mat, opt);
  SensitivityState sens = sim.initial_sensitivity();
  CHECK(sens.du.norm() == 0.0);
  CHECK(sens.dtheta.norm() == 0.0);

  SimState s = sim.initial_state();
  while (s.step < rig.schedule.n_steps()) {
    sim.advance_step(s, &sens);
    for (int n = 0; n < rig.mesh.n_nodes(); ++n) {
      if (!rig.mesh.node_on_base[n] || !s.node_active[n]) continue;
      CHECK(sens.du[2 * n] == 0.0);
      CHECK(sens.du[2 * n + 1] == 0.0);
      CHECK(sens.dtheta[n] == 0.0);
    }
  }
  CHECK(sens.dtheta.cwiseAbs().maxCoeff() > 0.0);  // the run genuinely responds to h
}

TEST_CASE("history sensitivities freeze bitwise at birth") {
  Rig rig(desk_wall());
  MaterialParams mat = rig.mat;
  SimOptions opt;
  opt.sensitivity = DesignVariable::ConvectionCoefficient;
  Simulator sim(rig.mesh, rig.schedule, mat, opt);
  SimState s = sim.initial_state();
  SensitivityState sens = sim.initial_sensitivity();

  std::vector<Eigen::Matrix<double, 8, 1>> du_at_birth(rig.mesh.n_elems());
  std::vector<Eigen::Vector4d> dth_at_birth(rig.mesh.n_elems());
  while (s.step < rig.schedule.n_steps()) {
    const int step = s.step + 1;
    sim.advance_step(s, &sens);
    for (int e : rig.schedule.steps[static_cast<size_t>(step - 1)].activate) {
      du_at_birth[e] = sens.du_his[e];
      dth_at_birth[e] = sens.dtheta_his[e];
    }
  }
  for (int e = 0; e < rig.mesh.n_elems(); ++e) {
    CHECK((sens.du_his[e] - du_at_birth[e]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sens.dtheta_his[e] - dth_at_birth[e]).cwiseAbs().maxCoeff() == 0.0);
  }
  // Later births genuinely inherit non-zero displacement sensitivity.
  double max_birth_sens = 0.0;
  for (int e = 0; e < rig.mesh.n_elems(); ++e)
    max_birth_sens = std::max(max_birth_sens, du_at_birth[e].cwiseAbs().maxCoeff());
  CHECK(max_birth_sens > 0.0);
}

TEST_CASE("end-to-end objective gradient matches the trajectory finite difference") {
  Rig rig(desk_wall());
  for (double h_cfg : {32.0, 40.0, 50.0}) {
    const double h0 = h_cfg * 1e-3;
    SensitivityState sens;
    SimState final_state;
    {
      MaterialParams mat = rig.mat;
      mat.h_conv = h0;
      SimOptions opt;
      opt.sensitivity = DesignVariable::ConvectionCoefficient;
      Simulator sim(rig.mesh, rig.schedule, mat, opt);
      final_state = sim.initial_state();
      sens = sim.initial_sensitivity();
      sim.run(final_state, &sens);
    }
    const ErrorSurface surf = make_top_edge_surface(rig.mesh);
    const Eigen::VectorXd dfdu =
        shape_error_gradient_u(final_state.u, surf, rig.mesh.n_nodes(), rig.mesh.hanging);
    const double analytic = total_gradient(dfdu, sens);

    const double step = 1e-3 * h0;
    const double f_hi = run_f(rig, h0 + step, nullptr);
    const double f_lo = run_f(rig, h0 - step, nullptr);
    const double fd = (f_hi - f_lo) / (2 * step);
    REQUIRE(fd != 0.0);
    CHECK(std::abs(analytic - fd) / std::abs(fd) < 1e-3);

    // More cooling reduces the shape error on the wall scenario.
    CHECK(analytic < 0.0);
  }
}

TEST_CASE("zero-sensitivity trajectory gives a zero total gradient") {
  SensitivityState sens = SensitivityState::zero(10, 4);
  const Eigen::VectorXd g = Eigen::VectorXd::Ones(20);
  CHECK(total_gradient(g, sens) == 0.0);
}

TEST_CASE("descent direction is invariant under positive objective rescaling") {
  Eigen::VectorXd dfdu(4);
  dfdu << 0.1, -0.2, 0.05, 0.0;
  SensitivityState sens = SensitivityState::zero(2, 1);
  sens.du << 1.0, 2.0, -1.0, 0.5;
  const double g = total_gradient(dfdu, sens);
  const double g_scaled = total_gradient((7.5 * dfdu).eval(), sens);
  CHECK(g_scaled == doctest::Approx(7.5 * g));
  CHECK(std::signbit(g) == std::signbit(g_scaled));
}

TEST_CASE("unsupported design variables are rejected on the gradient path") {
  Rig rig(desk_wall());
  Simulator sim(rig.mesh, rig.schedule, rig.mat, {});
  SimState s = sim.initial_state();
  sim.advance_step(s);
  auto map = std::make_shared<DofMap>(rig.mesh.n_nodes(), s.node_active, rig.mesh.node_on_base,
                                      rig.mesh.hanging);
  CHECK_THROWS_AS(dr_dy(sim, s, s, *map, 0.01, static_cast<DesignVariable>(137)),
                  std::invalid_argument);
}
