#pragma once

// Taylor-Hood P2-P1 space on a Mesh.
//
// P2 nodes: vertices first (node id = vertex id), then edge midpoints
// (node id = n_vertices + edge id). Local P2 node order on a cell is
// vertex 0,1,2 followed by the midpoints of local edges 0,1,2.
// Velocity DOFs exist only on interior nodes and are interleaved by
// component: dof = 2 * interior_index + component.
// Pressure DOFs are the vertices, all of them; the zero-mean constraint is
// imposed later through a multiplier.

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mesh.hpp"

namespace stokes_afem {

using Vec2 = std::array<double, 2>;

struct CoefficientVector {
  Eigen::VectorXd u;  // length n_u
  Eigen::VectorXd p;  // length n_p

  CoefficientVector() = default;
  CoefficientVector(Eigen::VectorXd u_, Eigen::VectorXd p_) : u(std::move(u_)), p(std::move(p_)) {}
  static CoefficientVector zero(int n_u, int n_p) {
    return {Eigen::VectorXd::Zero(n_u), Eigen::VectorXd::Zero(n_p)};
  }

  CoefficientVector& operator*=(double s) {
    u *= s;
    p *= s;
    return *this;
  }
  friend CoefficientVector operator-(const CoefficientVector& a, const CoefficientVector& b) {
    return {a.u - b.u, a.p - b.p};
  }
  friend CoefficientVector operator+(const CoefficientVector& a, const CoefficientVector& b) {
    return {a.u + b.u, a.p + b.p};
  }
  friend CoefficientVector operator*(double s, CoefficientVector c) { return c *= s; }
};

/// Affine geometry of one cell: barycentric gradients and area.
struct CellGeometry {
  std::array<Vertex, 3> x;
  std::array<Vec2, 3> grad_bary;
  double area = 0.0;

  explicit CellGeometry(const std::array<Vertex, 3>& coords) : x(coords) {
    const double det = (x[1].x - x[0].x) * (x[2].y - x[0].y) - (x[2].x - x[0].x) * (x[1].y - x[0].y);
    area = 0.5 * det;
    grad_bary[0] = {(x[1].y - x[2].y) / det, (x[2].x - x[1].x) / det};
    grad_bary[1] = {(x[2].y - x[0].y) / det, (x[0].x - x[2].x) / det};
    grad_bary[2] = {(x[0].y - x[1].y) / det, (x[1].x - x[0].x) / det};
  }

  Vertex map(const std::array<double, 3>& b) const {
    return {b[0] * x[0].x + b[1] * x[1].x + b[2] * x[2].x, b[0] * x[0].y + b[1] * x[1].y + b[2] * x[2].y};
  }

  std::array<double, 3> barycentric(double px, double py) const {
    const double det = 2.0 * area;
    const double l1 = ((px - x[0].x) * (x[2].y - x[0].y) - (x[2].x - x[0].x) * (py - x[0].y)) / det;
    const double l2 = ((x[1].x - x[0].x) * (py - x[0].y) - (px - x[0].x) * (x[1].y - x[0].y)) / det;
    return {1.0 - l1 - l2, l1, l2};
  }
};

namespace p2 {

inline std::array<double, 6> values(const std::array<double, 3>& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[1] * l[2],       4 * l[2] * l[0],       4 * l[0] * l[1]};
}

inline std::array<Vec2, 6> gradients(const std::array<double, 3>& l, const std::array<Vec2, 3>& g) {
  std::array<Vec2, 6> out{};
  for (int i = 0; i < 3; ++i) {
    const double s = 4 * l[i] - 1;
    out[i] = {s * g[i][0], s * g[i][1]};
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    out[3 + i] = {4 * (l[k] * g[j][0] + l[j] * g[k][0]), 4 * (l[k] * g[j][1] + l[j] * g[k][1])};
  }
  return out;
}

/// Laplacians of the P2 basis (constant on the cell).
inline std::array<double, 6> laplacians(const std::array<Vec2, 3>& g) {
  auto dot = [](const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; };
  std::array<double, 6> out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = 4 * dot(g[i], g[i]);
    out[3 + i] = 8 * dot(g[(i + 1) % 3], g[(i + 2) % 3]);
  }
  return out;
}

/// Barycentric coordinates of the 6 local nodes.
inline const std::array<std::array<double, 3>, 6>& nodes() {
  static const std::array<std::array<double, 3>, 6> n{{{1, 0, 0},
                                                       {0, 1, 0},
                                                       {0, 0, 1},
                                                       {0, 0.5, 0.5},
                                                       {0.5, 0, 0.5},
                                                       {0.5, 0.5, 0}}};
  return n;
}

}  // namespace p2

class THSpace {
 public:
  explicit THSpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
    if (!mesh_) throw std::invalid_argument("null mesh");
    if (mesh_->n_cells() < 3) {
      throw std::invalid_argument("Taylor-Hood space needs an admissible mesh with at least 3 cells");
    }
    const int nv = mesh_->n_vertices();
    const int ne = mesh_->n_edges();
    std::vector<char> on_boundary(nv + ne, 0);
    for (int e = 0; e < ne; ++e) {
      const auto& edge = mesh_->edge(e);
      if (!edge.boundary()) continue;
      on_boundary[edge.v[0]] = on_boundary[edge.v[1]] = 1;
      on_boundary[nv + e] = 1;
    }
    node_dof_.assign(nv + ne, -1);
    int interior = 0;
    for (int k = 0; k < nv + ne; ++k) {
      if (!on_boundary[k]) node_dof_[k] = interior++;
    }
    n_u_ = 2 * interior;
    n_p_ = nv;
    cell_nodes_.resize(mesh_->n_cells());
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      const auto& v = mesh_->cell(c).v;
      for (int i = 0; i < 3; ++i) {
        cell_nodes_[c][i] = v[i];
        cell_nodes_[c][3 + i] = nv + mesh_->cell_edge(c, i);
      }
    }
  }

  explicit THSpace(const Mesh& mesh) : THSpace(std::make_shared<const Mesh>(mesh)) {}

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }

  int n_u() const { return n_u_; }
  int n_p() const { return n_p_; }
  int n_nodes() const { return static_cast<int>(node_dof_.size()); }

  /// Interior index of a P2 node, -1 on the boundary.
  int node_dof(int node) const { return node_dof_[node]; }
  int velocity_dof(int node, int component) const {
    const int k = node_dof_[node];
    return k < 0 ? -1 : 2 * k + component;
  }
  const std::array<int, 6>& cell_nodes(int c) const { return cell_nodes_[c]; }

  Vertex node_coords(int node) const {
    const int nv = mesh_->n_vertices();
    if (node < nv) return mesh_->vertex(node);
    const auto& e = mesh_->edge(node - nv);
    const auto& a = mesh_->vertex(e.v[0]);
    const auto& b = mesh_->vertex(e.v[1]);
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  }

  CellGeometry geometry(int c) const { return CellGeometry(mesh_->cell_coords(c)); }

  /// Local velocity coefficients (zero on boundary nodes).
  std::array<Vec2, 6> local_velocity(const Eigen::VectorXd& u, int c) const {
    std::array<Vec2, 6> out{};
    for (int i = 0; i < 6; ++i) {
      const int k = node_dof_[cell_nodes_[c][i]];
      if (k >= 0) out[i] = {u[2 * k], u[2 * k + 1]};
    }
    return out;
  }

  std::array<double, 3> local_pressure(const Eigen::VectorXd& p, int c) const {
    const auto& v = mesh_->cell(c).v;
    return {p[v[0]], p[v[1]], p[v[2]]};
  }

  /// First cell containing the point, -1 if none.
  int locate(double x, double y, double tol = 1e-12) const {
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      const auto l = geometry(c).barycentric(x, y);
      if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) return c;
    }
    return -1;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<int> node_dof_;
  std::vector<std::array<int, 6>> cell_nodes_;
  int n_u_ = 0;
  int n_p_ = 0;
};

inline THSpace build_space(const Mesh& mesh) { return THSpace(mesh); }
inline THSpace build_space(std::shared_ptr<const Mesh> mesh) { return THSpace(std::move(mesh)); }

struct PointValue {
  Vec2 velocity{};
  double pressure = 0.0;
};

/// Value of (u, p) inside a given cell at barycentric coordinates l.
inline PointValue evaluate_in_cell(const THSpace& space, const CoefficientVector& c, int cell,
                                   const std::array<double, 3>& l) {
  const auto uloc = space.local_velocity(c.u, cell);
  const auto ploc = space.local_pressure(c.p, cell);
  const auto phi = p2::values(l);
  PointValue out;
  for (int i = 0; i < 6; ++i) {
    out.velocity[0] += phi[i] * uloc[i][0];
    out.velocity[1] += phi[i] * uloc[i][1];
  }
  out.pressure = l[0] * ploc[0] + l[1] * ploc[1] + l[2] * ploc[2];
  return out;
}

inline PointValue evaluate(const THSpace& space, const CoefficientVector& c, double x, double y) {
  const int cell = space.locate(x, y);
  if (cell < 0) throw std::out_of_range("point outside the domain");
  return evaluate_in_cell(space, c, cell, space.geometry(cell).barycentric(x, y));
}

/// Nodal interpolation. Boundary velocity values are dropped.
inline CoefficientVector interpolate(const THSpace& space, const std::function<Vec2(double, double)>& velocity,
                                     const std::function<double(double, double)>& pressure) {
  auto c = CoefficientVector::zero(space.n_u(), space.n_p());
  for (int node = 0; node < space.n_nodes(); ++node) {
    const int k = space.node_dof(node);
    if (k < 0 || !velocity) continue;
    const auto x = space.node_coords(node);
    const auto v = velocity(x.x, x.y);
    c.u[2 * k] = v[0];
    c.u[2 * k + 1] = v[1];
  }
  if (pressure) {
    for (int v = 0; v < space.n_p(); ++v) c.p[v] = pressure(space.mesh().vertex(v).x, space.mesh().vertex(v).y);
  }
  return c;
}

/// Exact embedding of a coarse Taylor-Hood function into the refined space.
inline CoefficientVector prolongate(const THSpace& coarse, const THSpace& fine, const CellMap& map,
                                    const CoefficientVector& c) {
  const Mesh& cm = coarse.mesh();
  const Mesh& fm = fine.mesh();
  if (map.n_coarse() != cm.n_cells() || map.n_fine() != fm.n_cells()) {
    throw std::invalid_argument("mismatched mesh lineage");
  }
  if (c.u.size() != coarse.n_u() || c.p.size() != coarse.n_p()) {
    throw std::invalid_argument("coefficient vector does not match the coarse space");
  }
  const auto parent = ancestors(map);
  auto out = CoefficientVector::zero(fine.n_u(), fine.n_p());
  std::vector<char> done_node(fine.n_nodes(), 0);
  for (int f = 0; f < fm.n_cells(); ++f) {
    const int a = parent[f];
    if (a < 0) throw std::invalid_argument("mismatched mesh lineage");
    const auto g = coarse.geometry(a);
    for (int i = 0; i < 6; ++i) {
      const int node = fine.cell_nodes(f)[i];
      if (done_node[node]) continue;
      done_node[node] = 1;
      const auto x = fine.node_coords(node);
      const auto l = g.barycentric(x.x, x.y);
      if (l[0] < -1e-9 || l[1] < -1e-9 || l[2] < -1e-9) throw std::invalid_argument("mismatched mesh lineage");
      const auto val = evaluate_in_cell(coarse, c, a, l);
      const int k = fine.node_dof(node);
      if (k >= 0) {
        out.u[2 * k] = val.velocity[0];
        out.u[2 * k + 1] = val.velocity[1];
      }
      if (i < 3) out.p[node] = val.pressure;
    }
  }
  return out;
}

inline nlohmann::json to_json(const CoefficientVector& c) {
  return {{"u", std::vector<double>(c.u.data(), c.u.data() + c.u.size())},
          {"p", std::vector<double>(c.p.data(), c.p.data() + c.p.size())}};
}

inline CoefficientVector coefficients_from_json(const nlohmann::json& j) {
  const auto u = j.at("u").get<std::vector<double>>();
  const auto p = j.at("p").get<std::vector<double>>();
  return {Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size())),
          Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()))};
}

}  // namespace stokes_afem
