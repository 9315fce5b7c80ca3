#include "amopt/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "amopt/errors.hpp"
#include "amopt/sensitivity.hpp"

namespace amopt {

SensitivityState SensitivityState::zero(int n_nodes, int n_elems) {
  SensitivityState s;
  s.du = Eigen::VectorXd::Zero(2 * n_nodes);
  s.dv = Eigen::VectorXd::Zero(2 * n_nodes);
  s.da = Eigen::VectorXd::Zero(2 * n_nodes);
  s.dtheta = Eigen::VectorXd::Zero(n_nodes);
  s.du_his.assign(static_cast<size_t>(n_elems), Eigen::Matrix<double, 8, 1>::Zero());
  s.dtheta_his.assign(static_cast<size_t>(n_elems), Eigen::Vector4d::Zero());
  return s;
}

Simulator::Simulator(const Mesh& mesh, const ActivationSchedule& schedule,
                     const MaterialParams& material, SimOptions options)
    : mesh_(mesh), schedule_(schedule), material_(material), options_(std::move(options)) {
  material_.validate();
}

SimState Simulator::initial_state() const {
  SimState s;
  const int n = mesh_.n_nodes();
  s.u = Eigen::VectorXd::Zero(2 * n);
  s.v = Eigen::VectorXd::Zero(2 * n);
  s.a = Eigen::VectorXd::Zero(2 * n);
  s.theta = Eigen::VectorXd::Zero(n);
  s.theta_dot = Eigen::VectorXd::Zero(n);
  s.node_active.assign(static_cast<size_t>(n), 0);
  s.elem_active.assign(static_cast<size_t>(mesh_.n_elems()), 0);
  s.u_his.assign(static_cast<size_t>(mesh_.n_elems()), Eigen::Matrix<double, 8, 1>::Zero());
  s.theta_his.assign(static_cast<size_t>(mesh_.n_elems()), Eigen::Vector4d::Zero());
  return s;
}

SensitivityState Simulator::initial_sensitivity() const {
  return SensitivityState::zero(mesh_.n_nodes(), mesh_.n_elems());
}

namespace {

/// Grid node directly below (same column); -1 when on the base line.
int support_node(const Mesh& mesh, int node) {
  const int stride = mesh.nx + 1;
  const int j = node / stride;
  if (j == 0) return -1;
  return node - stride;
}

}  // namespace

void Simulator::activate(SimState& state, int step, SensitivityState* sens) const {
  const auto& batch = schedule_.steps[static_cast<size_t>(step - 1)].activate;
  for (int e : batch) {
    if (state.elem_active[e]) throw ScheduleError("element activated twice");
    const auto& conn = mesh_.elems[e];
    // Bottom corners must rest on the base or on previously printed material.
    for (int lc = 0; lc < 2; ++lc) {
      const int n = conn[lc];
      if (!state.node_active[n] && !mesh_.node_on_base[n])
        throw ScheduleError("activating an element with an unsupported node");
    }
    for (int n : conn) {
      if (state.node_active[n]) continue;
      state.node_active[n] = 1;
      ++state.n_active_nodes;
      const int below = support_node(mesh_, n);
      if (below >= 0 && !state.node_active[below])
        throw ScheduleError("activating an element with an unsupported node");
      if (below >= 0) {
        state.u[2 * n] = state.u[2 * below];
        state.u[2 * n + 1] = state.u[2 * below + 1];
        if (sens) {
          sens->du[2 * n] = sens->du[2 * below];
          sens->du[2 * n + 1] = sens->du[2 * below + 1];
        }
      } else {
        state.u[2 * n] = state.u[2 * n + 1] = 0.0;
        if (sens) sens->du[2 * n] = sens->du[2 * n + 1] = 0.0;
      }
      state.v[2 * n] = state.v[2 * n + 1] = 0.0;
      state.a[2 * n] = state.a[2 * n + 1] = 0.0;
      state.theta[n] = material_.theta_deposit;
      state.theta_dot[n] = 0.0;
      if (sens) {
        sens->dv[2 * n] = sens->dv[2 * n + 1] = 0.0;
        sens->da[2 * n] = sens->da[2 * n + 1] = 0.0;
        sens->dtheta[n] = 0.0;
      }
    }
    state.elem_active[e] = 1;
    ++state.n_active_elems;
    // History values freeze the birth configuration so the newborn element is
    // stress- and strain-free.
    for (int k = 0; k < 4; ++k) {
      state.u_his[e](2 * k) = state.u[2 * conn[k]];
      state.u_his[e](2 * k + 1) = state.u[2 * conn[k] + 1];
      state.theta_his[e](k) = state.theta[conn[k]];
      if (sens) {
        sens->du_his[e](2 * k) = sens->du[2 * conn[k]];
        sens->du_his[e](2 * k + 1) = sens->du[2 * conn[k] + 1];
        sens->dtheta_his[e](k) = sens->dtheta[conn[k]];
      }
    }
  }
  // Hanging nodes come alive with their masters and interpolate them.
  for (const HangingConstraint& hc : mesh_.hanging) {
    if (state.node_active[hc.slave]) continue;
    if (!state.node_active[hc.master_a] || !state.node_active[hc.master_b]) continue;
    state.node_active[hc.slave] = 1;
    ++state.n_active_nodes;
    const double wa = 1.0 - hc.ratio, wb = hc.ratio;
    for (int c = 0; c < 2; ++c) {
      state.u[2 * hc.slave + c] = wa * state.u[2 * hc.master_a + c] + wb * state.u[2 * hc.master_b + c];
      state.v[2 * hc.slave + c] = wa * state.v[2 * hc.master_a + c] + wb * state.v[2 * hc.master_b + c];
      state.a[2 * hc.slave + c] = wa * state.a[2 * hc.master_a + c] + wb * state.a[2 * hc.master_b + c];
    }
    state.theta[hc.slave] = wa * state.theta[hc.master_a] + wb * state.theta[hc.master_b];
    state.theta_dot[hc.slave] = wa * state.theta_dot[hc.master_a] + wb * state.theta_dot[hc.master_b];
    if (sens) {
      for (int c = 0; c < 2; ++c)
        sens->du[2 * hc.slave + c] =
            wa * sens->du[2 * hc.master_a + c] + wb * sens->du[2 * hc.master_b + c];
      sens->dtheta[hc.slave] = wa * sens->dtheta[hc.master_a] + wb * sens->dtheta[hc.master_b];
    }
  }
}

std::array<bool, 4> Simulator::convection_edges(const SimState& state, int elem) const {
  std::array<bool, 4> edges{false, false, false, false};
  for (int le = 0; le < 4; ++le) {
    if (le == 0 && mesh_.elem_row[elem] == 0) continue;  // Dirichlet base
    const int nb = mesh_.neighbor(elem, le);
    edges[le] = (nb < 0) || !state.elem_active[nb];
  }
  return edges;
}

ElementGeom Simulator::element_geom(int elem) const {
  ElementGeom g;
  for (int k = 0; k < 4; ++k) {
    const auto& nd = mesh_.nodes[mesh_.elems[elem][k]];
    g.X[k] = {nd.x, nd.y};
  }
  return g;
}

ElementState Simulator::gather_element_state(const SimState& iterate, const SimState& prev,
                                             int elem, double dt) const {
  ElementState s;
  s.dt = dt;
  const auto& conn = mesh_.elems[elem];
  for (int k = 0; k < 4; ++k) {
    const int n = conn[k];
    s.u(2 * k) = iterate.u[2 * n];
    s.u(2 * k + 1) = iterate.u[2 * n + 1];
    s.theta(k) = iterate.theta[n];
    s.u_prev(2 * k) = prev.u[2 * n];
    s.u_prev(2 * k + 1) = prev.u[2 * n + 1];
    s.v_prev(2 * k) = prev.v[2 * n];
    s.v_prev(2 * k + 1) = prev.v[2 * n + 1];
    s.a_prev(2 * k) = prev.a[2 * n];
    s.a_prev(2 * k + 1) = prev.a[2 * n + 1];
    s.theta_prev(k) = prev.theta[n];
  }
  s.u_his = iterate.u_his[elem];
  s.theta_his = iterate.theta_his[elem];
  s.conv_edge = convection_edges(iterate, elem);
  return s;
}

AssembledStep Simulator::assemble(const SimState& iterate, const SimState& prev,
                                  const std::shared_ptr<DofMap>& map, double dt) const {
  AssembledStep sys;
  sys.map = map;
  const int n_eq = map->n_equations();
  sys.r = Eigen::VectorXd::Zero(n_eq);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(iterate.n_active_elems) * 144);

  for (int e = 0; e < mesh_.n_elems(); ++e) {
    if (!iterate.elem_active[e]) continue;
    const ElementGeom g = element_geom(e);
    const ElementState es = gather_element_state(iterate, prev, e, dt);
    const ElementResidual res = element_residual(g, es, material_);
    const ElementTangents tan = element_tangents(g, es, material_);
    const auto& conn = mesh_.elems[e];

    for (int i = 0; i < 4; ++i) {
      for (int ci = 0; ci < 2; ++ci) {
        const auto& row = map->u_expansion(conn[i], ci);
        if (row.empty()) continue;
        map->add_vector_entry(row, res.r1(2 * i + ci), sys.r);
        for (int j = 0; j < 4; ++j) {
          for (int cj = 0; cj < 2; ++cj)
            map->add_matrix_entry(row, map->u_expansion(conn[j], cj),
                                  tan.K_u(2 * i + ci, 2 * j + cj), trip);
          map->add_matrix_entry(row, map->th_expansion(conn[j]), tan.K_t(2 * i + ci, j), trip);
        }
      }
      const auto& row = map->th_expansion(conn[i]);
      if (row.empty()) continue;
      map->add_vector_entry(row, res.r2(i), sys.r);
      for (int j = 0; j < 4; ++j) {
        for (int cj = 0; cj < 2; ++cj)
          map->add_matrix_entry(row, map->u_expansion(conn[j], cj), tan.A_u(i, 2 * j + cj), trip);
        map->add_matrix_entry(row, map->th_expansion(conn[j]), tan.A_t(i, j), trip);
      }
    }
  }

  sys.J.resize(n_eq, n_eq);
  sys.J.setFromTriplets(trip.begin(), trip.end());
  const int n_u = map->n_u_equations();
  sys.f_ref = n_u > 0 ? sys.r.head(n_u).lpNorm<Eigen::Infinity>() : 0.0;
  sys.q_ref = n_eq > n_u ? sys.r.tail(n_eq - n_u).lpNorm<Eigen::Infinity>() : 0.0;
  return sys;
}

Eigen::VectorXd Simulator::newton_step(const AssembledStep& sys) {
  if (pattern_dirty_ || analyzed_eq_count_ != sys.J.rows()) {
    lu_.analyzePattern(sys.J);
    analyzed_eq_count_ = static_cast<int>(sys.J.rows());
    pattern_dirty_ = false;
  }
  lu_.factorize(sys.J);
  if (lu_.info() != Eigen::Success)
    throw SolverError("singular constrained system in Newton step");
  return lu_.solve(-sys.r);
}

StepDiagnostics Simulator::advance_step(SimState& state, SensitivityState* sens) {
  const int step = state.step + 1;
  if (step > schedule_.n_steps()) throw ScheduleError("advance_step past the end of the schedule");
  const double dt = schedule_.steps[static_cast<size_t>(step - 1)].dt;
  StepDiagnostics diag;

  const bool had_births = !schedule_.steps[static_cast<size_t>(step - 1)].activate.empty();
  activate(state, step, sens);
  if (had_births) pattern_dirty_ = true;

  // The trapezoidal velocity recursion carries an undamped alternating mode;
  // restarting the transient integrator when the step size changes keeps the
  // print-phase ringing out of the coarse dissipation steps.
  if (step > 1 && dt != schedule_.steps[static_cast<size_t>(step - 2)].dt) {
    state.v.setZero();
    state.a.setZero();
    if (sens) {
      sens->dv.setZero();
      sens->da.setZero();
    }
  }

  if (options_.track_birth_stress) {
    for (int e : schedule_.steps[static_cast<size_t>(step - 1)].activate) {
      ElementState es = gather_element_state(state, state, e, dt);
      for (const auto& sig : element_qp_stresses(element_geom(e), es, material_))
        diag.max_birth_stress = std::max(diag.max_birth_stress, sig.cwiseAbs().maxCoeff());
    }
  }

  // Previous-step snapshot; newborn entries carry their birth values.
  SimState prev = state;

  // Prescribed values enter the iterate before the solve.
  for (int n = 0; n < mesh_.n_nodes(); ++n) {
    if (!state.node_active[n] || !mesh_.node_on_base[n]) continue;
    state.u[2 * n] = state.u[2 * n + 1] = 0.0;
    state.theta[n] = material_.theta_inf;
  }

  auto map = std::make_shared<DofMap>(mesh_.n_nodes(), state.node_active, mesh_.node_on_base,
                                      mesh_.hanging);

  const NewtonOptions& nopt = options_.newton;
  AssembledStep sys;
  bool converged = false;
  double f_ref = 0.0, q_ref = 0.0;
  for (int it = 0; it < nopt.max_iterations; ++it) {
    sys = assemble(state, prev, map, dt);
    if (it == 0) {
      f_ref = sys.f_ref;
      q_ref = sys.q_ref;
    }
    const int n_u = map->n_u_equations();
    const double rn1 = n_u > 0 ? sys.r.head(n_u).lpNorm<Eigen::Infinity>() : 0.0;
    const double rn2 =
        sys.r.size() > n_u ? sys.r.tail(sys.r.size() - n_u).lpNorm<Eigen::Infinity>() : 0.0;
    diag.residual_history.push_back(std::max(
        f_ref > 0 ? rn1 / f_ref : rn1, q_ref > 0 ? rn2 / q_ref : rn2));
    if (rn1 <= std::max(nopt.rtol * f_ref, nopt.atol_floor) &&
        rn2 <= std::max(nopt.rtol * q_ref, nopt.atol_floor)) {
      converged = true;
      diag.newton_iterations = it;
      break;
    }
    const Eigen::VectorXd delta = newton_step(sys);
    Eigen::VectorXd du = Eigen::VectorXd::Zero(2 * mesh_.n_nodes());
    Eigen::VectorXd dth = Eigen::VectorXd::Zero(mesh_.n_nodes());
    map->expand_u(delta, du);
    map->expand_th(delta, dth);
    state.u += du;
    state.theta += dth;
  }
  if (!converged)
    throw SolverError("Newton did not converge in step " + std::to_string(step),
                      diag.residual_history);

  // Trapezoidal / backward-Euler recoveries on active nodes.
  for (int n = 0; n < mesh_.n_nodes(); ++n) {
    if (!state.node_active[n]) continue;
    for (int c = 0; c < 2; ++c) {
      const int d = 2 * n + c;
      const double vnew = 2.0 / dt * (state.u[d] - prev.u[d]) - prev.v[d];
      const double anew = 4.0 / (dt * dt) * (state.u[d] - prev.u[d] - dt * prev.v[d]) - prev.a[d];
      state.v[d] = vnew;
      state.a[d] = anew;
    }
    state.theta_dot[n] = (state.theta[n] - prev.theta[n]) / dt;
  }
  map->sync_slaves(state.u, state.theta);

  if (sens && options_.sensitivity) {
    // The last assembly happened at the converged iterate, so its
    // factorization serves the sensitivity solve directly.
    if (pattern_dirty_ || analyzed_eq_count_ != sys.J.rows()) {
      lu_.analyzePattern(sys.J);
      analyzed_eq_count_ = static_cast<int>(sys.J.rows());
      pattern_dirty_ = false;
    }
    lu_.factorize(sys.J);
    if (lu_.info() != Eigen::Success)
      throw SolverError("singular system in sensitivity solve");
    propagate_sensitivity(state, prev, sys, lu_, *sens, dt);
  }

  state.step = step;
  state.time += dt;
  if (options_.on_step) options_.on_step(state, step);
  return diag;
}

void Simulator::propagate_sensitivity(const SimState& state, const SimState& prev,
                                      const AssembledStep& sys,
                                      Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
                                      SensitivityState& sens, double dt) const {
  propagate_step(*this, state, prev, sys, lu, sens, dt);
}

RunSummary Simulator::run(SimState& state, SensitivityState* sens) {
  RunSummary summary;
  while (state.step < schedule_.n_steps()) {
    const StepDiagnostics d = advance_step(state, sens);
    summary.max_birth_stress = std::max(summary.max_birth_stress, d.max_birth_stress);
    summary.total_newton_iterations += d.newton_iterations;
  }
  summary.steps = state.step;
  summary.end_time = state.time;
  return summary;
}

void write_field_snapshot(std::ostream& os, const Mesh& mesh, const SimState& state) {
  os << "# id x y u_x u_y theta\n";
  char buf[256];
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (!state.node_active[n]) continue;
    std::snprintf(buf, sizeof(buf), "%d %.9g %.9g %.17g %.17g %.17g\n", n, mesh.nodes[n].x,
                  mesh.nodes[n].y, state.u[2 * n], state.u[2 * n + 1], state.theta[n]);
    os << buf;
  }
}

}  // namespace amopt
