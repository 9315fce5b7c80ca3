#include "amopt/sensitivity.hpp"

#include <stdexcept>

namespace amopt {
namespace {

struct Gathered {
  Eigen::Matrix<double, 8, 1> du_prev, dv_prev, da_prev;
  Eigen::Vector4d dtheta_prev;
};

Gathered gather_prev_sens(const Mesh& mesh, const SensitivityState& sens, int elem) {
  Gathered g;
  const auto& conn = mesh.elems[elem];
  for (int k = 0; k < 4; ++k) {
    const int n = conn[k];
    g.du_prev(2 * k) = sens.du[2 * n];
    g.du_prev(2 * k + 1) = sens.du[2 * n + 1];
    g.dv_prev(2 * k) = sens.dv[2 * n];
    g.dv_prev(2 * k + 1) = sens.dv[2 * n + 1];
    g.da_prev(2 * k) = sens.da[2 * n];
    g.da_prev(2 * k + 1) = sens.da[2 * n + 1];
    g.dtheta_prev(k) = sens.dtheta[n];
  }
  return g;
}

}  // namespace

StepRhsMatrices step_rhs_matrices(const Simulator& sim, const SimState& state,
                                  const SimState& prev, const DofMap& map, double dt) {
  const Mesh& mesh = sim.mesh();
  const int n_eq = map.n_equations();
  std::vector<Eigen::Triplet<double>> tu, tv, ta, tt;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (!state.elem_active[e]) continue;
    const ElementState es = sim.gather_element_state(state, prev, e, dt);
    const ElementPrevStateMatrices m =
        element_prev_state_matrices(sim.element_geom(e), es, sim.material());
    const auto& conn = mesh.elems[e];
    auto scatter = [&](auto& trips, const auto& block_u, const auto& block_t, bool theta_col) {
      for (int i = 0; i < 4; ++i) {
        for (int ci = 0; ci < 2; ++ci)
          for (const auto& [req, w] : map.u_expansion(conn[i], ci))
            for (int j = 0; j < 4; ++j) {
              if (theta_col) {
                trips.emplace_back(req, conn[j], w * block_u(2 * i + ci, j));
              } else {
                for (int cj = 0; cj < 2; ++cj)
                  trips.emplace_back(req, 2 * conn[j] + cj, w * block_u(2 * i + ci, 2 * j + cj));
              }
            }
        for (const auto& [req, w] : map.th_expansion(conn[i]))
          for (int j = 0; j < 4; ++j) {
            if (theta_col) {
              trips.emplace_back(req, conn[j], w * block_t(i, j));
            } else {
              for (int cj = 0; cj < 2; ++cj)
                trips.emplace_back(req, 2 * conn[j] + cj, w * block_t(i, 2 * j + cj));
            }
          }
      }
    };
    Eigen::Matrix<double, 8, 4> zero84 = Eigen::Matrix<double, 8, 4>::Zero();
    scatter(tu, m.dr1_du_prev, m.dr2_du_prev, false);
    scatter(tv, m.dr1_dv_prev, m.dr2_dv_prev, false);
    scatter(ta, m.dr1_da_prev, Eigen::Matrix<double, 4, 8>::Zero().eval(), false);
    scatter(tt, zero84, m.dr2_dtheta_prev, true);
  }
  StepRhsMatrices out;
  out.dr_du_prev.resize(n_eq, 2 * mesh.n_nodes());
  out.dr_dv_prev.resize(n_eq, 2 * mesh.n_nodes());
  out.dr_da_prev.resize(n_eq, 2 * mesh.n_nodes());
  out.dr_dtheta_prev.resize(n_eq, mesh.n_nodes());
  out.dr_du_prev.setFromTriplets(tu.begin(), tu.end());
  out.dr_dv_prev.setFromTriplets(tv.begin(), tv.end());
  out.dr_da_prev.setFromTriplets(ta.begin(), ta.end());
  out.dr_dtheta_prev.setFromTriplets(tt.begin(), tt.end());
  return out;
}

HistoryMatrices history_matrices(const Simulator& sim, const SimState& state,
                                 const SimState& prev, const DofMap& map, double dt) {
  const Mesh& mesh = sim.mesh();
  const int n_eq = map.n_equations();
  std::vector<Eigen::Triplet<double>> tu, tt;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (!state.elem_active[e]) continue;
    const ElementState es = sim.gather_element_state(state, prev, e, dt);
    const ElementHistoryMatrices m =
        element_history_matrices(sim.element_geom(e), es, sim.material());
    const auto& conn = mesh.elems[e];
    for (int i = 0; i < 4; ++i) {
      for (int ci = 0; ci < 2; ++ci)
        for (const auto& [req, w] : map.u_expansion(conn[i], ci)) {
          for (int j = 0; j < 8; ++j)
            tu.emplace_back(req, 8 * e + j, w * m.dr1_du_his(2 * i + ci, j));
          for (int j = 0; j < 4; ++j)
            tt.emplace_back(req, 4 * e + j, w * m.dr1_dtheta_his(2 * i + ci, j));
        }
      for (const auto& [req, w] : map.th_expansion(conn[i])) {
        for (int j = 0; j < 8; ++j) tu.emplace_back(req, 8 * e + j, w * m.dr2_du_his(i, j));
        for (int j = 0; j < 4; ++j) tt.emplace_back(req, 4 * e + j, w * m.dr2_dtheta_his(i, j));
      }
    }
  }
  HistoryMatrices out;
  out.dr_du_his.resize(n_eq, 8 * mesh.n_elems());
  out.dr_dtheta_his.resize(n_eq, 4 * mesh.n_elems());
  out.dr_du_his.setFromTriplets(tu.begin(), tu.end());
  out.dr_dtheta_his.setFromTriplets(tt.begin(), tt.end());
  return out;
}

Eigen::VectorXd dr_dy(const Simulator& sim, const SimState& state, const SimState& prev,
                      const DofMap& map, double dt, DesignVariable variable) {
  if (variable != DesignVariable::ConvectionCoefficient)
    throw std::invalid_argument("dr_dy: only the convection coefficient has a gradient path");
  const Mesh& mesh = sim.mesh();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(map.n_equations());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (!state.elem_active[e]) continue;
    const ElementState es = sim.gather_element_state(state, prev, e, dt);
    const Eigen::Vector4d d =
        element_convection_coefficient_derivative(sim.element_geom(e), es, sim.material());
    const auto& conn = mesh.elems[e];
    for (int i = 0; i < 4; ++i) map.add_vector_entry(map.th_expansion(conn[i]), d(i), out);
  }
  return out;
}

void propagate_step(const Simulator& sim, const SimState& state, const SimState& prev,
                    const AssembledStep& sys, Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
                    SensitivityState& sens, double dt) {
  const Mesh& mesh = sim.mesh();
  const DofMap& map = *sys.map;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(map.n_equations());

  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (!state.elem_active[e]) continue;
    const ElementGeom g = sim.element_geom(e);
    const ElementState es = sim.gather_element_state(state, prev, e, dt);
    const ElementPrevStateMatrices pm = element_prev_state_matrices(g, es, sim.material());
    const ElementHistoryMatrices hm = element_history_matrices(g, es, sim.material());
    const Eigen::Vector4d dh =
        element_convection_coefficient_derivative(g, es, sim.material());
    const Gathered gs = gather_prev_sens(mesh, sens, e);

    const Eigen::Matrix<double, 8, 1> b1 =
        pm.dr1_du_prev * gs.du_prev + pm.dr1_dv_prev * gs.dv_prev + pm.dr1_da_prev * gs.da_prev +
        hm.dr1_du_his * sens.du_his[e] + hm.dr1_dtheta_his * sens.dtheta_his[e];
    const Eigen::Vector4d b2 = pm.dr2_du_prev * gs.du_prev + pm.dr2_dv_prev * gs.dv_prev +
                               pm.dr2_dtheta_prev * gs.dtheta_prev +
                               hm.dr2_du_his * sens.du_his[e] +
                               hm.dr2_dtheta_his * sens.dtheta_his[e] + dh;

    const auto& conn = mesh.elems[e];
    for (int i = 0; i < 4; ++i) {
      for (int ci = 0; ci < 2; ++ci)
        map.add_vector_entry(map.u_expansion(conn[i], ci), -b1(2 * i + ci), rhs);
      map.add_vector_entry(map.th_expansion(conn[i]), -b2(i), rhs);
    }
  }

  const Eigen::VectorXd x = lu.solve(rhs);
  Eigen::VectorXd du_new = Eigen::VectorXd::Zero(2 * mesh.n_nodes());
  Eigen::VectorXd dth_new = Eigen::VectorXd::Zero(mesh.n_nodes());
  map.expand_u(x, du_new);
  map.expand_th(x, dth_new);

  // Rate sensitivities follow the same time-stepping recoveries as the state.
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (!state.node_active[n]) continue;
    for (int c = 0; c < 2; ++c) {
      const int d = 2 * n + c;
      const double dvn = 2.0 / dt * (du_new[d] - sens.du[d]) - sens.dv[d];
      const double dan =
          4.0 / (dt * dt) * (du_new[d] - sens.du[d] - dt * sens.dv[d]) - sens.da[d];
      sens.dv[d] = dvn;
      sens.da[d] = dan;
      sens.du[d] = du_new[d];
    }
    sens.dtheta[n] = dth_new[n];
  }
}

double total_gradient(const Eigen::VectorXd& dfh_du, const SensitivityState& sens) {
  return dfh_du.dot(sens.du);
}

}  // namespace amopt
