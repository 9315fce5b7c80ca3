#include "amopt/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "amopt/errors.hpp"

namespace amopt {

void BuildPlan::validate() const {
  if (width <= 0.0 || height <= 0.0) throw ConfigError("build: width and height must be positive");
  if (nx < 1) throw ConfigError("build: nx must be at least 1");
  if (n_layers < 1) throw ConfigError("build: n_layers must be at least 1");
  if (rows_per_layer < 1) throw ConfigError("build: rows_per_layer must be at least 1");
  if (dt_element <= 0.0) throw ConfigError("build: dt_element must be positive");
  if (dwell_factor < 0.0) throw ConfigError("build: dwell_factor must be non-negative");
  if (cooldown < 0.0) throw ConfigError("build: cooldown must be non-negative");
  if (geometry == Geometry::RectangleWithHole) {
    if (hole_radius <= 0.0) throw ConfigError("build: hole_radius must be positive");
    if (hole_radius >= width || hole_radius >= height)
      throw ConfigError("build: hole_radius must be smaller than both part dimensions");
  }
}

void HangingConstraint::validate() const {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw ConfigError("hanging constraint: ratio must lie strictly inside (0, 1)");
  if (slave < 0 || master_a < 0 || master_b < 0 || master_a == master_b || slave == master_a ||
      slave == master_b)
    throw ConfigError("hanging constraint: malformed node ids");
}

int Mesh::neighbor(int elem, int local_edge) const {
  const int c = elem_col[elem];
  const int r = elem_row[elem];
  switch (local_edge) {
    case 0: return elem_at(c, r - 1);
    case 1: return elem_at(c + 1, r);
    case 2: return elem_at(c, r + 1);
    case 3: return elem_at(c - 1, r);
    default: return -1;
  }
}

namespace {

bool inside_hole(const BuildPlan& plan, double x, double y) {
  const double dx = x - plan.width;
  const double dy = y - plan.height;
  return dx * dx + dy * dy < plan.hole_radius * plan.hole_radius;
}

}  // namespace

Mesh build_mesh(const BuildPlan& plan) {
  plan.validate();
  Mesh mesh;
  mesh.nx = plan.nx;
  mesh.ny = plan.ny();
  mesh.width = plan.width;
  mesh.height = plan.height;
  mesh.has_hole = plan.geometry == BuildPlan::Geometry::RectangleWithHole;
  mesh.hole_radius = plan.hole_radius;
  mesh.hole_center = {plan.width, plan.height};

  const double hx = plan.width / mesh.nx;
  const double hy = plan.height / mesh.ny;

  mesh.nodes.reserve(static_cast<size_t>((mesh.nx + 1) * (mesh.ny + 1)));
  for (int j = 0; j <= mesh.ny; ++j)
    for (int i = 0; i <= mesh.nx; ++i) mesh.nodes.push_back({i * hx, j * hy});
  mesh.n_grid_nodes = mesh.n_nodes();

  mesh.cell_to_elem.assign(static_cast<size_t>(mesh.nx * mesh.ny), -1);
  for (int j = 0; j < mesh.ny; ++j) {
    for (int i = 0; i < mesh.nx; ++i) {
      if (mesh.has_hole && inside_hole(plan, (i + 0.5) * hx, (j + 0.5) * hy)) continue;
      const int id = mesh.n_elems();
      mesh.cell_to_elem[mesh.cell_index(i, j)] = id;
      mesh.elems.push_back({mesh.grid_node(i, j), mesh.grid_node(i + 1, j),
                            mesh.grid_node(i + 1, j + 1), mesh.grid_node(i, j + 1)});
      mesh.elem_col.push_back(i);
      mesh.elem_row.push_back(j);
    }
  }
  if (mesh.n_elems() == 0) throw ConfigError("build: geometry removed every element");
  if (mesh.has_hole && mesh.n_elems() == mesh.nx * mesh.ny)
    throw ConfigError("build: hole is too small to remove any element at this grid resolution");

  mesh.node_on_base.assign(mesh.nodes.size(), false);
  for (int i = 0; i <= mesh.nx; ++i) mesh.node_on_base[mesh.grid_node(i, 0)] = true;

  if (mesh.has_hole) {
    // One hanging node per kept-element edge that crosses the hole circle.
    // Edges are visited in element order, locally bottom/right/top/left;
    // shared edges are deduplicated through the sorted endpoint pair.
    std::vector<std::pair<int, int>> seen;
    auto crossing = [&](int na, int nb) {
      const bool a_in = inside_hole(plan, mesh.nodes[na].x, mesh.nodes[na].y);
      const bool b_in = inside_hole(plan, mesh.nodes[nb].x, mesh.nodes[nb].y);
      return a_in != b_in;
    };
    for (int e = 0; e < mesh.n_elems(); ++e) {
      for (int le = 0; le < 4; ++le) {
        const int na = mesh.elems[e][le];
        const int nb = mesh.elems[e][(le + 1) % 4];
        if (!crossing(na, nb)) continue;
        const std::pair<int, int> key{std::min(na, nb), std::max(na, nb)};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);

        const Eigen::Vector2d pa{mesh.nodes[na].x, mesh.nodes[na].y};
        const Eigen::Vector2d pb{mesh.nodes[nb].x, mesh.nodes[nb].y};
        // Intersection parameter of the segment with the circle.
        const Eigen::Vector2d d = pb - pa;
        const Eigen::Vector2d m = pa - mesh.hole_center;
        const double A = d.squaredNorm();
        const double B = 2.0 * m.dot(d);
        const double C = m.squaredNorm() - plan.hole_radius * plan.hole_radius;
        const double disc = B * B - 4.0 * A * C;
        if (disc <= 0.0) continue;
        double t = (-B - std::sqrt(disc)) / (2.0 * A);
        if (t <= 0.0 || t >= 1.0) t = (-B + std::sqrt(disc)) / (2.0 * A);
        if (t <= 0.0 || t >= 1.0) continue;  // tangential touch, no interior crossing

        HangingConstraint hc;
        hc.slave = mesh.n_nodes();
        hc.master_a = na;
        hc.master_b = nb;
        hc.ratio = t;
        hc.validate();
        const Eigen::Vector2d pos = pa + t * d;
        mesh.nodes.push_back({pos.x(), pos.y()});
        mesh.node_on_base.push_back(false);
        mesh.hanging.push_back(hc);
      }
    }
  }
  return mesh;
}

ActivationSchedule make_schedule(const BuildPlan& plan, const Mesh& mesh) {
  plan.validate();
  ActivationSchedule s;
  s.elem_birth_step.assign(static_cast<size_t>(mesh.n_elems()), -1);
  s.node_birth_step.assign(static_cast<size_t>(mesh.n_nodes()), -1);

  auto note_node = [&](int node, int step) {
    if (s.node_birth_step[node] < 0) s.node_birth_step[node] = step;
  };

  const int rows = plan.rows_per_layer;
  for (int layer = 0; layer < plan.n_layers; ++layer) {
    int printed_in_layer = 0;
    for (int r = layer * rows; r < (layer + 1) * rows; ++r) {
      for (int c = 0; c < mesh.nx; ++c) {
        const int e = mesh.elem_at(c, r);
        if (e < 0) continue;
        s.steps.push_back({plan.dt_element, {e}});
        const int step = s.n_steps();
        s.elem_birth_step[e] = step;
        for (int n : mesh.elems[e]) note_node(n, step);
        ++printed_in_layer;
      }
    }
    s.print_steps += printed_in_layer;
    if (layer + 1 < plan.n_layers) {
      const int dwell = static_cast<int>(
          std::llround(plan.dwell_factor * static_cast<double>(printed_in_layer)));
      for (int k = 0; k < dwell; ++k) s.steps.push_back({plan.dt_element, {}});
      s.dwell_steps += dwell;
    }
  }

  if (plan.cooldown > 0.0) {
    // Dissipation is slow, so cooldown steps are coarser than print steps.
    double dt_cool = 50.0 * plan.dt_element;
    dt_cool = std::min(dt_cool, plan.cooldown / 40.0);
    const int n_cool = static_cast<int>(std::ceil(plan.cooldown / dt_cool - 1e-9));
    const double dt = plan.cooldown / n_cool;
    for (int k = 0; k < n_cool; ++k) s.steps.push_back({dt, {}});
    s.cooldown_steps = n_cool;
  }

  // Hanging nodes come alive with the later of their two masters.
  for (const HangingConstraint& hc : mesh.hanging) {
    const int ba = s.node_birth_step[hc.master_a];
    const int bb = s.node_birth_step[hc.master_b];
    s.node_birth_step[hc.slave] = std::max(ba, bb);
  }

  for (const auto& st : s.steps) s.total_time += st.dt;
  return s;
}

}  // namespace amopt
