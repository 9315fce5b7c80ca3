#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "amopt/mesh.hpp"

namespace amopt {

/// Discretized surface over which the shape error is measured. Each segment
/// is integrated with 3-point Gauss; its endpoint kinematics interpolate mesh
/// nodes through the stored weights (single node for wall top edges, edge
/// mid-points for the step-edge polyline around the hole).
struct ErrorSurface {
  enum class Variant { TopEdge, StepEdge };

  struct Endpoint {
    Eigen::Vector2d X = Eigen::Vector2d::Zero();          // reference position
    std::vector<std::pair<int, double>> nodes;            // (node id, weight)
  };
  struct Segment {
    Endpoint a, b;
    double length = 0.0;
  };

  Variant variant = Variant::TopEdge;
  std::vector<Segment> segments;
  double L_c = 1.0;                 // characteristic length
  double design_height = 0.0;       // top-edge variant
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // step-edge variant
  double radius = 0.0;

  double total_length() const;
};

/// Final top surface of the wall; L_c is the wall height.
ErrorSurface make_top_edge_surface(const Mesh& mesh);

/// Polyline through the mid-points of the printed staircase edges around the
/// quarter-circle hole, ordered by angle about the hole center; L_c is the
/// hole radius. Throws ConfigError when the mesh has no hole.
ErrorSurface make_step_edge_surface(const Mesh& mesh);

/// Dimensionless shape error of the deformed surface (root mean square
/// deviation from the designed surface, normalized by L_c).
double shape_error(const Eigen::VectorXd& u, const ErrorSurface& surf);

/// Exact gradient of the shape error with respect to nodal displacements,
/// returned as a dense vector over all (2 * n_nodes) dofs. Defined as zero
/// when the shape error itself vanishes (the square root is not
/// differentiable there); slave-node contributions fold onto their masters
/// through `hanging`.
Eigen::VectorXd shape_error_gradient_u(const Eigen::VectorXd& u, const ErrorSurface& surf,
                                       int n_nodes,
                                       const std::vector<HangingConstraint>& hanging = {});

}  // namespace amopt
