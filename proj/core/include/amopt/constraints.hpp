#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "amopt/mesh.hpp"

namespace amopt {

/// Maps full-field degrees of freedom (2 displacement + 1 temperature per
/// node) onto the reduced equation set of one time step: inactive and
/// Dirichlet dofs are eliminated and hanging-node slaves are condensed onto
/// their edge endpoints with the fixed interpolation ratio.
class DofMap {
 public:
  enum class Kind : unsigned char { Inactive, Equation, Fixed, Slave };

  /// constraints may reference slaves that appear in element connectivity;
  /// a master that is itself a slave is rejected as a constraint cycle.
  DofMap(int n_nodes, const std::vector<char>& node_active,
         const std::vector<bool>& node_dirichlet, const std::vector<HangingConstraint>& constraints);

  int n_equations() const { return n_eq_; }
  int n_u_equations() const { return n_u_eq_; }

  /// Equation index of a displacement dof (node, component 0/1), -1 if none.
  int u_eq(int node, int comp) const { return u_eq_[2 * node + comp]; }
  /// Equation index of a temperature dof, -1 if none.
  int th_eq(int node) const { return th_eq_[node]; }

  Kind u_kind(int node, int comp) const { return u_kind_[2 * node + comp]; }
  Kind th_kind(int node) const { return th_kind_[node]; }

  /// Master expansion of a dof: list of (equation, weight). Equation dofs
  /// expand to themselves, fixed/inactive dofs to nothing.
  using Expansion = std::vector<std::pair<int, double>>;
  const Expansion& u_expansion(int node, int comp) const { return u_exp_[2 * node + comp]; }
  const Expansion& th_expansion(int node) const { return th_exp_[node]; }

  /// Scatters an element contribution into reduced triplets / residual.
  void add_matrix_entry(const Expansion& row, const Expansion& col, double v,
                        std::vector<Eigen::Triplet<double>>& out) const;
  void add_vector_entry(const Expansion& row, double v, Eigen::VectorXd& out) const;

  /// Applies the condensation map T to the full reduced vector (all
  /// n_equations entries): equation dofs copy their entry, slaves receive the
  /// ratio-weighted master combination, fixed and inactive dofs become zero.
  /// Valid for increments and sensitivities.
  void expand_u(const Eigen::VectorXd& reduced, Eigen::VectorXd& full_u) const;
  void expand_th(const Eigen::VectorXd& reduced, Eigen::VectorXd& full_th) const;

  /// Overwrites slave entries of absolute-value vectors with the master
  /// combination (Dirichlet masters contribute their prescribed values).
  void sync_slaves(Eigen::VectorXd& full_u, Eigen::VectorXd& full_th) const;

  const std::vector<HangingConstraint>& active_constraints() const { return active_constraints_; }

 private:
  int n_nodes_;
  int n_eq_ = 0, n_u_eq_ = 0;
  std::vector<int> u_eq_, th_eq_;
  std::vector<Kind> u_kind_;
  std::vector<Kind> th_kind_;
  std::vector<Expansion> u_exp_, th_exp_;
  std::vector<HangingConstraint> active_constraints_;
};

}  // namespace amopt
