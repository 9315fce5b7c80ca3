#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace amopt {

/// Build geometry and process schedule parameters for one print job.
struct BuildPlan {
  enum class Geometry { Rectangle, RectangleWithHole };

  double width = 20.0;    ///< part width [mm]
  double height = 10.0;   ///< part height [mm]
  int nx = 40;            ///< elements across the width
  int n_layers = 30;      ///< deposition layers over the height
  int rows_per_layer = 1; ///< element rows per layer (ny = n_layers * rows_per_layer)
  Geometry geometry = Geometry::Rectangle;
  double hole_radius = 0.0;   ///< quarter-circle hole radius at the top-right corner [mm]
  double dt_element = 0.006;  ///< time to print one full element [s]
  double dwell_factor = 0.5;  ///< inter-layer pause as a fraction of the layer print time
  double cooldown = 240.0;    ///< post-print dissipation time [s]

  int ny() const { return n_layers * rows_per_layer; }
  void validate() const;  // throws ConfigError
};

/// Hanging node tied to an existing element edge: its value stays the fixed
/// ratio between the edge endpoints. ratio must lie strictly inside (0, 1).
struct HangingConstraint {
  int slave = -1;
  int master_a = -1;
  int master_b = -1;
  double ratio = 0.5;  ///< interpolation weight of master_b

  void validate() const;
};

/// Structured quadrilateral mesh with optional hole cut-out and hanging nodes
/// placed where kept-element edges cross the hole boundary.
struct Mesh {
  struct Node {
    double x = 0.0, y = 0.0;
  };

  std::vector<Node> nodes;                  // grid nodes first, hanging nodes appended
  std::vector<std::array<int, 4>> elems;    // counter-clockwise corner node ids
  std::vector<int> elem_col, elem_row;      // grid cell of each element
  std::vector<int> cell_to_elem;            // (col, row) -> element id or -1 when removed
  std::vector<bool> node_on_base;           // Dirichlet tag (u = 0, theta = theta_inf)
  std::vector<HangingConstraint> hanging;

  int nx = 0, ny = 0;
  int n_grid_nodes = 0;  // nodes.size() minus the hanging nodes
  double width = 0.0, height = 0.0;
  bool has_hole = false;
  double hole_radius = 0.0;
  Eigen::Vector2d hole_center = Eigen::Vector2d::Zero();

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elems() const { return static_cast<int>(elems.size()); }
  int grid_node(int i, int j) const { return j * (nx + 1) + i; }
  int cell_index(int col, int row) const { return row * nx + col; }
  int elem_at(int col, int row) const {
    if (col < 0 || col >= nx || row < 0 || row >= ny) return -1;
    return cell_to_elem[cell_index(col, row)];
  }
  /// Element id of the in-grid neighbour across a local edge (0 bottom,
  /// 1 right, 2 top, 3 left), or -1 at the mesh exterior or a removed cell.
  int neighbor(int elem, int local_edge) const;
};

/// Builds the structured mesh for the plan. For the hole geometry, grid cells
/// whose centroid lies inside the hole are removed and edges crossing the
/// hole circle receive one hanging node at the intersection point.
/// Throws ConfigError when the geometry is inconsistent with the grid.
Mesh build_mesh(const BuildPlan& plan);

/// Element activation order and per-step time increments. Step indices are
/// 1-based; activations happen at the start of the step they are listed for.
struct ActivationSchedule {
  struct Step {
    double dt = 0.0;
    std::vector<int> activate;  // element ids activated at the start of this step
  };

  std::vector<Step> steps;
  std::vector<int> elem_birth_step;  // per element, 1-based
  std::vector<int> node_birth_step;  // per node, 1-based; hanging nodes follow masters
  int print_steps = 0;
  int dwell_steps = 0;
  int cooldown_steps = 0;
  double total_time = 0.0;

  int n_steps() const { return static_cast<int>(steps.size()); }
};

/// One element per step, rows left to right, layers bottom to top; a dwell of
/// dwell_factor times the layer print time after each layer but the last;
/// cooldown steps of 50*dt_element (capped so at least 40 steps exist).
ActivationSchedule make_schedule(const BuildPlan& plan, const Mesh& mesh);

}  // namespace amopt
