#include "amopt/constraints.hpp"

#include "amopt/errors.hpp"

namespace amopt {

DofMap::DofMap(int n_nodes, const std::vector<char>& node_active,
               const std::vector<bool>& node_dirichlet,
               const std::vector<HangingConstraint>& constraints)
    : n_nodes_(n_nodes) {
  u_kind_.assign(static_cast<size_t>(2 * n_nodes), Kind::Inactive);
  th_kind_.assign(static_cast<size_t>(n_nodes), Kind::Inactive);

  for (int n = 0; n < n_nodes; ++n) {
    if (!node_active[n]) continue;
    const Kind k = node_dirichlet[n] ? Kind::Fixed : Kind::Equation;
    u_kind_[2 * n] = u_kind_[2 * n + 1] = k;
    th_kind_[n] = k;
  }

  std::vector<char> is_slave(static_cast<size_t>(n_nodes), 0);
  for (const HangingConstraint& hc : constraints) {
    hc.validate();
    if (!node_active[hc.slave]) continue;
    if (!node_active[hc.master_a] || !node_active[hc.master_b])
      throw ConfigError("hanging constraint: slave active before both masters");
    is_slave[hc.slave] = 1;
    active_constraints_.push_back(hc);
  }
  for (const HangingConstraint& hc : active_constraints_) {
    if (is_slave[hc.master_a] || is_slave[hc.master_b])
      throw ConfigError("hanging constraint cycle: a master is itself a slave");
    u_kind_[2 * hc.slave] = u_kind_[2 * hc.slave + 1] = Kind::Slave;
    th_kind_[hc.slave] = Kind::Slave;
  }

  u_eq_.assign(u_kind_.size(), -1);
  th_eq_.assign(th_kind_.size(), -1);
  for (size_t d = 0; d < u_kind_.size(); ++d)
    if (u_kind_[d] == Kind::Equation) u_eq_[d] = n_eq_++;
  n_u_eq_ = n_eq_;
  for (size_t d = 0; d < th_kind_.size(); ++d)
    if (th_kind_[d] == Kind::Equation) th_eq_[d] = n_eq_++;

  u_exp_.assign(u_kind_.size(), {});
  th_exp_.assign(th_kind_.size(), {});
  for (int n = 0; n < n_nodes; ++n) {
    for (int c = 0; c < 2; ++c)
      if (u_kind_[2 * n + c] == Kind::Equation) u_exp_[2 * n + c] = {{u_eq_[2 * n + c], 1.0}};
    if (th_kind_[n] == Kind::Equation) th_exp_[n] = {{th_eq_[n], 1.0}};
  }
  for (const HangingConstraint& hc : active_constraints_) {
    const double wa = 1.0 - hc.ratio;
    const double wb = hc.ratio;
    for (int c = 0; c < 2; ++c) {
      Expansion& e = u_exp_[2 * hc.slave + c];
      for (auto [m, w] : {std::pair{hc.master_a, wa}, std::pair{hc.master_b, wb}})
        if (u_kind_[2 * m + c] == Kind::Equation) e.emplace_back(u_eq_[2 * m + c], w);
    }
    Expansion& e = th_exp_[hc.slave];
    for (auto [m, w] : {std::pair{hc.master_a, wa}, std::pair{hc.master_b, wb}})
      if (th_kind_[m] == Kind::Equation) e.emplace_back(th_eq_[m], w);
  }
}

void DofMap::add_matrix_entry(const Expansion& row, const Expansion& col, double v,
                              std::vector<Eigen::Triplet<double>>& out) const {
  for (const auto& [ri, rw] : row)
    for (const auto& [ci, cw] : col) out.emplace_back(ri, ci, rw * cw * v);
}

void DofMap::add_vector_entry(const Expansion& row, double v, Eigen::VectorXd& out) const {
  for (const auto& [ri, rw] : row) out[ri] += rw * v;
}

void DofMap::expand_u(const Eigen::VectorXd& reduced, Eigen::VectorXd& full_u) const {
  for (size_t d = 0; d < u_exp_.size(); ++d) {
    double v = 0.0;
    for (const auto& [eq, w] : u_exp_[d]) v += w * reduced[eq];
    full_u[static_cast<Eigen::Index>(d)] = v;
  }
}

void DofMap::expand_th(const Eigen::VectorXd& reduced, Eigen::VectorXd& full_th) const {
  for (size_t d = 0; d < th_exp_.size(); ++d) {
    double v = 0.0;
    for (const auto& [eq, w] : th_exp_[d]) v += w * reduced[eq];
    full_th[static_cast<Eigen::Index>(d)] = v;
  }
}

void DofMap::sync_slaves(Eigen::VectorXd& full_u, Eigen::VectorXd& full_th) const {
  for (const HangingConstraint& hc : active_constraints_) {
    const double wa = 1.0 - hc.ratio;
    const double wb = hc.ratio;
    for (int c = 0; c < 2; ++c)
      full_u[2 * hc.slave + c] =
          wa * full_u[2 * hc.master_a + c] + wb * full_u[2 * hc.master_b + c];
    full_th[hc.slave] = wa * full_th[hc.master_a] + wb * full_th[hc.master_b];
  }
}

}  // namespace amopt
