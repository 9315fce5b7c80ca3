#include "amopt/objective.hpp"

#include <algorithm>
#include <cmath>

#include "amopt/errors.hpp"

namespace amopt {
namespace {

constexpr double kGaussPos = 0.774596669241483377;  // sqrt(3/5)
constexpr std::array<double, 3> kGaussPt{-kGaussPos, 0.0, kGaussPos};
constexpr std::array<double, 3> kGaussWt{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

Eigen::Vector2d endpoint_displacement(const ErrorSurface::Endpoint& ep, const Eigen::VectorXd& u) {
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  for (const auto& [n, w] : ep.nodes) d += w * Eigen::Vector2d{u[2 * n], u[2 * n + 1]};
  return d;
}

}  // namespace

double ErrorSurface::total_length() const {
  double L = 0.0;
  for (const auto& s : segments) L += s.length;
  return L;
}

ErrorSurface make_top_edge_surface(const Mesh& mesh) {
  ErrorSurface surf;
  surf.variant = ErrorSurface::Variant::TopEdge;
  surf.L_c = mesh.height;
  surf.design_height = mesh.height;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (mesh.elem_row[e] != mesh.ny - 1) continue;
    ErrorSurface::Segment seg;
    const int na = mesh.elems[e][3];  // top-left corner
    const int nb = mesh.elems[e][2];  // top-right corner
    seg.a.X = {mesh.nodes[na].x, mesh.nodes[na].y};
    seg.a.nodes = {{na, 1.0}};
    seg.b.X = {mesh.nodes[nb].x, mesh.nodes[nb].y};
    seg.b.nodes = {{nb, 1.0}};
    seg.length = (seg.b.X - seg.a.X).norm();
    surf.segments.push_back(std::move(seg));
  }
  if (surf.segments.empty()) throw ConfigError("top-edge surface: no top-row elements");
  return surf;
}

ErrorSurface make_step_edge_surface(const Mesh& mesh) {
  if (!mesh.has_hole) throw ConfigError("step-edge surface requires the hole geometry");
  ErrorSurface surf;
  surf.variant = ErrorSurface::Variant::StepEdge;
  surf.L_c = mesh.hole_radius;
  surf.center = mesh.hole_center;
  surf.radius = mesh.hole_radius;

  // Printed staircase edges: kept-element edges whose in-grid neighbour cell
  // was removed by the slicer.
  struct BoundaryEdge {
    int na, nb;
    double angle;
  };
  std::vector<BoundaryEdge> edges;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int le = 0; le < 4; ++le) {
      const int c = mesh.elem_col[e];
      const int r = mesh.elem_row[e];
      int nc = c, nr = r;
      switch (le) {
        case 0: nr = r - 1; break;
        case 1: nc = c + 1; break;
        case 2: nr = r + 1; break;
        case 3: nc = c - 1; break;
      }
      if (nc < 0 || nc >= mesh.nx || nr < 0 || nr >= mesh.ny) continue;  // mesh exterior
      if (mesh.elem_at(nc, nr) >= 0) continue;                           // kept neighbour
      const int na = mesh.elems[e][le];
      const int nb = mesh.elems[e][(le + 1) % 4];
      const Eigen::Vector2d mid = 0.5 * (Eigen::Vector2d{mesh.nodes[na].x, mesh.nodes[na].y} +
                                         Eigen::Vector2d{mesh.nodes[nb].x, mesh.nodes[nb].y});
      const Eigen::Vector2d rel = mid - mesh.hole_center;
      edges.push_back({na, nb, std::atan2(rel.y(), rel.x())});
    }
  }
  if (edges.size() < 2) throw ConfigError("step-edge surface: staircase has fewer than two edges");
  // The staircase spans the third quadrant seen from the hole center; sorting
  // mid-points by angle orders it from the top side to the right side.
  std::sort(edges.begin(), edges.end(),
            [](const BoundaryEdge& x, const BoundaryEdge& y) { return x.angle < y.angle; });

  auto midpoint_endpoint = [&](const BoundaryEdge& be) {
    ErrorSurface::Endpoint ep;
    const Eigen::Vector2d pa{mesh.nodes[be.na].x, mesh.nodes[be.na].y};
    const Eigen::Vector2d pb{mesh.nodes[be.nb].x, mesh.nodes[be.nb].y};
    ep.X = 0.5 * (pa + pb);
    ep.nodes = {{be.na, 0.5}, {be.nb, 0.5}};
    return ep;
  };
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    ErrorSurface::Segment seg;
    seg.a = midpoint_endpoint(edges[i]);
    seg.b = midpoint_endpoint(edges[i + 1]);
    seg.length = (seg.b.X - seg.a.X).norm();
    surf.segments.push_back(std::move(seg));
  }
  return surf;
}

namespace {

struct QpDeviation {
  double value = 0.0;
  // d(deviation)/d(endpoint displacement a/b), per component
  Eigen::Vector2d da = Eigen::Vector2d::Zero();
  Eigen::Vector2d db = Eigen::Vector2d::Zero();
};

QpDeviation deviation_at(const ErrorSurface& surf, const ErrorSurface::Segment& seg, double s,
                         const Eigen::VectorXd& u) {
  const double wa = 1.0 - s, wb = s;
  const Eigen::Vector2d X = wa * seg.a.X + wb * seg.b.X;
  const Eigen::Vector2d du = wa * endpoint_displacement(seg.a, u) + wb * endpoint_displacement(seg.b, u);
  QpDeviation d;
  if (surf.variant == ErrorSurface::Variant::TopEdge) {
    d.value = (X.y() + du.y()) - surf.design_height;
    d.da = {0.0, wa};
    d.db = {0.0, wb};
  } else {
    const Eigen::Vector2d rel = X + du - surf.center;
    const double rr = rel.norm();
    d.value = rr - surf.radius;
    const Eigen::Vector2d unit = rr > 0 ? Eigen::Vector2d(rel / rr) : Eigen::Vector2d::Zero();
    d.da = wa * unit;
    d.db = wb * unit;
  }
  return d;
}

}  // namespace

double shape_error(const Eigen::VectorXd& u, const ErrorSurface& surf) {
  if (surf.segments.empty()) throw ConfigError("shape_error: empty surface");
  double S = 0.0;
  for (const auto& seg : surf.segments)
    for (int k = 0; k < 3; ++k) {
      const double s = 0.5 * (1.0 + kGaussPt[k]);
      const QpDeviation d = deviation_at(surf, seg, s, u);
      S += d.value * d.value * kGaussWt[k] * seg.length / 2.0;
    }
  return std::sqrt(S) / (surf.L_c * std::sqrt(surf.total_length()));
}

Eigen::VectorXd shape_error_gradient_u(const Eigen::VectorXd& u, const ErrorSurface& surf,
                                       int n_nodes,
                                       const std::vector<HangingConstraint>& hanging) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * n_nodes);
  if (surf.segments.empty()) throw ConfigError("shape_error_gradient_u: empty surface");
  double S = 0.0;
  Eigen::VectorXd dS = Eigen::VectorXd::Zero(2 * n_nodes);
  for (const auto& seg : surf.segments)
    for (int k = 0; k < 3; ++k) {
      const double s = 0.5 * (1.0 + kGaussPt[k]);
      const QpDeviation d = deviation_at(surf, seg, s, u);
      const double w = kGaussWt[k] * seg.length / 2.0;
      S += d.value * d.value * w;
      const double f = 2.0 * d.value * w;
      for (const auto& [n, nw] : seg.a.nodes) {
        dS[2 * n] += f * nw * d.da.x();
        dS[2 * n + 1] += f * nw * d.da.y();
      }
      for (const auto& [n, nw] : seg.b.nodes) {
        dS[2 * n] += f * nw * d.db.x();
        dS[2 * n + 1] += f * nw * d.db.y();
      }
    }
  const double fh = std::sqrt(S) / (surf.L_c * std::sqrt(surf.total_length()));
  if (fh < 1e-14) return grad;  // the root is not differentiable at zero error
  grad = dS / (2.0 * std::sqrt(S) * surf.L_c * std::sqrt(surf.total_length()));
  // Slave contributions belong to the masters that actually carry equations.
  for (const HangingConstraint& hc : hanging) {
    for (int c = 0; c < 2; ++c) {
      const double g = grad[2 * hc.slave + c];
      if (g == 0.0) continue;
      grad[2 * hc.master_a + c] += (1.0 - hc.ratio) * g;
      grad[2 * hc.master_b + c] += hc.ratio * g;
      grad[2 * hc.slave + c] = 0.0;
    }
  }
  return grad;
}

}  // namespace amopt
