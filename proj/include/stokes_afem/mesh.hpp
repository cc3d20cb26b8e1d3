#pragma once

// Conforming triangle meshes with newest-vertex bisection.
//
// Cell vertices are stored counterclockwise. Local edge i is the edge opposite
// local vertex i, i.e. (v[(i+1)%3], v[(i+2)%3]). The refinement edge of a cell
// is the edge opposite its newest vertex.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace stokes_afem {

enum class DomainTag { lshape, slit, square };

inline std::string to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::lshape: return "lshape";
    case DomainTag::slit: return "slit";
    case DomainTag::square: return "square";
  }
  return "unknown";
}

inline DomainTag parse_domain(std::string_view name) {
  if (name == "lshape") return DomainTag::lshape;
  if (name == "slit") return DomainTag::slit;
  if (name == "square") return DomainTag::square;
  throw std::invalid_argument("unknown domain tag '" + std::string(name) +
                              "' (expected lshape, slit or square)");
}

inline double domain_area(DomainTag tag) {
  switch (tag) {
    case DomainTag::lshape: return 3.0;
    case DomainTag::slit: return 4.0;
    case DomainTag::square: return 1.0;
  }
  return 0.0;
}

struct Vertex {
  double x = 0.0;
  double y = 0.0;
};

struct Cell {
  std::array<int, 3> v{};
  int refinement_edge = 0;
  int parent = -1;  // cell id in the mesh this one was refined from
  int generation = 0;
};

struct Edge {
  std::array<int, 2> v{};               // v[0] < v[1]
  std::array<int, 2> cells{-1, -1};     // first two incident cells
  std::array<int, 2> local{-1, -1};     // local edge index inside cells[k]
  int n_cells = 0;                      // > 2 only in broken meshes

  bool boundary() const { return n_cells == 1; }
};

/// Immutable triangulation plus derived edge adjacency.
class Mesh {
 public:
  Mesh() = default;

  Mesh(std::vector<Vertex> vertices, std::vector<Cell> cells, DomainTag domain)
      : vertices_(std::move(vertices)), cells_(std::move(cells)), domain_(domain) {
    build_topology();
  }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Edge>& edges() const { return edges_; }
  DomainTag domain() const { return domain_; }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_cells() const { return static_cast<int>(cells_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  const Vertex& vertex(int i) const { return vertices_[i]; }
  const Cell& cell(int c) const { return cells_[c]; }
  const Edge& edge(int e) const { return edges_[e]; }

  /// Global edge id of local edge i of cell c.
  int cell_edge(int c, int i) const { return cell_edges_[c][i]; }

  std::array<Vertex, 3> cell_coords(int c) const {
    const auto& v = cells_[c].v;
    return {vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]};
  }

  double signed_area(int c) const {
    const auto p = cell_coords(c);
    return 0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) -
                  (p[2].x - p[0].x) * (p[1].y - p[0].y));
  }

  double edge_length(int e) const {
    const auto& a = vertices_[edges_[e].v[0]];
    const auto& b = vertices_[edges_[e].v[1]];
    return std::hypot(b.x - a.x, b.y - a.y);
  }

  /// h_T: the longest edge of the cell.
  double diameter(int c) const {
    double h = 0.0;
    for (int i = 0; i < 3; ++i) h = std::max(h, edge_length(cell_edges_[c][i]));
    return h;
  }

  Vertex centroid(int c) const {
    const auto p = cell_coords(c);
    return {(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
  }

  double total_area() const {
    double a = 0.0;
    for (int c = 0; c < n_cells(); ++c) a += signed_area(c);
    return a;
  }

  /// Interior angles at the three local vertices.
  std::array<double, 3> angles(int c) const {
    const auto p = cell_coords(c);
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
      const auto& o = p[i];
      const auto& a = p[(i + 1) % 3];
      const auto& b = p[(i + 2) % 3];
      const double ux = a.x - o.x, uy = a.y - o.y;
      const double wx = b.x - o.x, wy = b.y - o.y;
      out[i] = std::atan2(std::abs(ux * wy - uy * wx), ux * wx + uy * wy);
    }
    return out;
  }

  double min_angle() const {
    double m = std::numbers::pi;
    for (int c = 0; c < n_cells(); ++c) {
      for (double a : angles(c)) m = std::min(m, a);
    }
    return m;
  }

 private:
  void build_topology() {
    edges_.clear();
    cell_edges_.assign(cells_.size(), {-1, -1, -1});
    std::map<std::pair<int, int>, int> lookup;
    for (int c = 0; c < n_cells(); ++c) {
      const auto& v = cells_[c].v;
      for (int i = 0; i < 3; ++i) {
        int a = v[(i + 1) % 3], b = v[(i + 2) % 3];
        if (a > b) std::swap(a, b);
        auto [it, inserted] = lookup.try_emplace({a, b}, n_edges());
        if (inserted) {
          Edge e;
          e.v = {a, b};
          edges_.push_back(e);
        }
        Edge& e = edges_[it->second];
        if (e.n_cells < 2) {
          e.cells[e.n_cells] = c;
          e.local[e.n_cells] = i;
        }
        ++e.n_cells;
        cell_edges_[c][i] = it->second;
      }
    }
  }

  std::vector<Vertex> vertices_;
  std::vector<Cell> cells_;
  DomainTag domain_ = DomainTag::square;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> cell_edges_;
};

/// Coarse-to-fine lineage produced by one refinement call.
struct CellMap {
  std::vector<std::vector<int>> children;  // indexed by coarse cell id
  std::vector<int> refined_set;            // coarse cells bisected at least once

  int n_coarse() const { return static_cast<int>(children.size()); }
  int n_fine() const {
    int n = 0;
    for (const auto& c : children) n += static_cast<int>(c.size());
    return n;
  }
};

inline CellMap identity_map(const Mesh& mesh) {
  CellMap map;
  map.children.resize(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) map.children[c] = {c};
  return map;
}

/// Lineage of coarse -> fine given coarse -> mid and mid -> fine.
inline CellMap compose(const CellMap& first, const CellMap& second) {
  CellMap out;
  out.children.resize(first.children.size());
  for (std::size_t c = 0; c < first.children.size(); ++c) {
    for (int mid : first.children[c]) {
      const auto& kids = second.children.at(mid);
      out.children[c].insert(out.children[c].end(), kids.begin(), kids.end());
    }
    if (out.children[c].size() > 1) out.refined_set.push_back(static_cast<int>(c));
  }
  return out;
}

/// Fine cell -> coarse ancestor.
inline std::vector<int> ancestors(const CellMap& map) {
  std::vector<int> parent(map.n_fine(), -1);
  for (int c = 0; c < map.n_coarse(); ++c) {
    for (int f : map.children[c]) parent.at(f) = c;
  }
  return parent;
}

namespace detail {

inline int longest_edge_index(const std::vector<Vertex>& vs, const std::array<int, 3>& v) {
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    const auto& a = vs[v[(i + 1) % 3]];
    const auto& b = vs[v[(i + 2) % 3]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    // ties: smallest opposite-vertex id
    if (len > best_len * (1.0 + 1e-12) ||
        (std::abs(len - best_len) <= 1e-12 * best_len && v[i] < v[best])) {
      best = i;
      best_len = len;
    }
  }
  return best;
}

inline Cell make_cell(const std::vector<Vertex>& vs, int a, int b, int c) {
  Cell cell;
  cell.v = {a, b, c};
  const auto& p = vs[a];
  const auto& q = vs[b];
  const auto& r = vs[c];
  if ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y) < 0.0) std::swap(cell.v[1], cell.v[2]);
  cell.refinement_edge = longest_edge_index(vs, cell.v);
  return cell;
}

}  // namespace detail

/// How often a marked cell is bisected before closure.
///   single: once (its refinement edge)
///   bisec3: all three edges, so the cell ends up quartered
enum class MarkedBisection { single, bisec3 };

inline std::string to_string(MarkedBisection b) { return b == MarkedBisection::single ? "single" : "bisec3"; }

inline MarkedBisection parse_bisection(std::string_view s) {
  if (s == "single") return MarkedBisection::single;
  if (s == "bisec3") return MarkedBisection::bisec3;
  throw std::invalid_argument("unknown bisection '" + std::string(s) + "'");
}

/// Newest-vertex bisection of every marked cell plus conformity closure.
///
/// Closure works on edges: an edge of a cell that will be split forces the
/// refinement edge of that cell to be split as well. Each cell is then
/// bisected at most twice (refinement edge first, then whichever of the two
/// remaining edges were split).
inline std::pair<Mesh, CellMap> refine(const Mesh& mesh, std::span<const int> marked,
                                       MarkedBisection rule = MarkedBisection::single) {
  const int n_edges = mesh.n_edges();
  std::vector<char> split(n_edges, 0);
  std::vector<int> work;
  auto mark_edge = [&](int e) {
    if (split[e]) return;
    split[e] = 1;
    const auto& edge = mesh.edge(e);
    for (int k = 0; k < std::min(edge.n_cells, 2); ++k) work.push_back(edge.cells[k]);
  };
  for (int c : marked) {
    if (c < 0 || c >= mesh.n_cells()) throw std::out_of_range("marked cell id out of range");
    mark_edge(mesh.cell_edge(c, mesh.cell(c).refinement_edge));
    if (rule == MarkedBisection::bisec3) {
      for (int i = 0; i < 3; ++i) mark_edge(mesh.cell_edge(c, i));
    }
  }
  while (!work.empty()) {
    const int c = work.back();
    work.pop_back();
    mark_edge(mesh.cell_edge(c, mesh.cell(c).refinement_edge));
  }

  std::vector<Vertex> vertices = mesh.vertices();
  std::map<std::pair<int, int>, int> midpoint;
  for (int e = 0; e < n_edges; ++e) {
    if (!split[e]) continue;
    const auto& edge = mesh.edge(e);
    const auto& a = mesh.vertex(edge.v[0]);
    const auto& b = mesh.vertex(edge.v[1]);
    midpoint[{edge.v[0], edge.v[1]}] = static_cast<int>(vertices.size());
    vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }
  auto find_midpoint = [&](int a, int b) -> int {
    if (a > b) std::swap(a, b);
    const auto it = midpoint.find({a, b});
    return it == midpoint.end() ? -1 : it->second;
  };

  std::vector<Cell> cells;
  cells.reserve(mesh.n_cells() + 2 * static_cast<int>(midpoint.size()));
  CellMap map;
  map.children.resize(mesh.n_cells());

  // Recursive bisection; only original edges can carry a pending midpoint.
  auto bisect = [&](auto&& self, std::array<int, 3> v, int ref, int parent, int generation) -> void {
    const int apex = v[ref];
    const int b = v[(ref + 1) % 3];
    const int c = v[(ref + 2) % 3];
    const int m = find_midpoint(b, c);
    if (m < 0) {
      cells.push_back({v, ref, parent, generation});
      map.children[parent].push_back(static_cast<int>(cells.size()) - 1);
      return;
    }
    // (apex, b, m): newest vertex m at local 2; (apex, m, c): m at local 1
    self(self, {apex, b, m}, 2, parent, generation + 1);
    self(self, {apex, m, c}, 1, parent, generation + 1);
  };

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cell(c);
    bisect(bisect, cell.v, cell.refinement_edge, c, cell.generation);
    if (map.children[c].size() > 1) map.refined_set.push_back(c);
  }
  return {Mesh(std::move(vertices), std::move(cells), mesh.domain()), std::move(map)};
}

inline std::pair<Mesh, CellMap> refine_all(const Mesh& mesh) {
  std::vector<int> all(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) all[c] = c;
  return refine(mesh, all);
}

/// Two full bisection sweeps: every cell ends up with at least four descendants.
inline std::pair<Mesh, CellMap> uniform_refine(const Mesh& mesh) {
  auto [mid, first] = refine_all(mesh);
  auto [fine, second] = refine_all(mid);
  return {std::move(fine), compose(first, second)};
}

namespace detail {

inline Mesh reset_lineage(const Mesh& mesh) {
  std::vector<Cell> cells = mesh.cells();
  for (auto& c : cells) {
    c.parent = -1;
    c.generation = 0;
  }
  return Mesh(mesh.vertices(), std::move(cells), mesh.domain());
}

}  // namespace detail

/// Fixed initial triangulations.
///
/// square: (0,1)^2 criss-cross, 4 cells.
/// lshape: (-1,1)^2 minus [0,1]^2, three unit squares split along a diagonal,
///         then one bisection sweep (12 cells).
/// slit:   (-1,1)^2 cut along [0,1]x{0}; the vertex (1,0) is duplicated so the
///         two sides of the cut share no edge. Two bisection sweeps (32 cells),
///         which also duplicates (0.5,0).
inline Mesh create_initial_mesh(DomainTag tag) {
  std::vector<Vertex> vs;
  std::vector<Cell> cells;
  using detail::make_cell;
  switch (tag) {
    case DomainTag::square: {
      vs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
      cells = {make_cell(vs, 0, 1, 4), make_cell(vs, 1, 2, 4), make_cell(vs, 2, 3, 4),
               make_cell(vs, 3, 0, 4)};
      return Mesh(std::move(vs), std::move(cells), tag);
    }
    case DomainTag::lshape: {
      //  6 --- 7
      //  |     |
      //  3 --- 4 --- 5
      //  |     |     |
      //  0 --- 1 --- 2
      vs = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}};
      cells = {make_cell(vs, 0, 1, 4), make_cell(vs, 0, 4, 3), make_cell(vs, 1, 2, 5),
               make_cell(vs, 1, 5, 4), make_cell(vs, 3, 4, 7), make_cell(vs, 3, 7, 6)};
      auto [swept, map] = refine_all(Mesh(std::move(vs), std::move(cells), tag));
      return detail::reset_lineage(swept);
    }
    case DomainTag::slit: {
      //  6 --- 7 --- 8
      //  |     |     |
      //  3 --- 4 --- 5   (5 = upper copy of (1,0), 9 = lower copy)
      //  |     |     |
      //  0 --- 1 --- 2
      vs = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}};
      cells = {make_cell(vs, 0, 1, 4), make_cell(vs, 0, 4, 3), make_cell(vs, 1, 2, 9),
               make_cell(vs, 1, 9, 4), make_cell(vs, 3, 4, 7), make_cell(vs, 3, 7, 6),
               make_cell(vs, 4, 5, 8), make_cell(vs, 4, 8, 7)};
      Mesh coarse(std::move(vs), std::move(cells), tag);
      auto [once, m1] = refine_all(coarse);
      auto [twice, m2] = refine_all(once);
      return detail::reset_lineage(twice);
    }
  }
  throw std::invalid_argument("unknown domain tag");
}

/// True when (x, y) lies on the boundary of the domain (including the slit).
inline bool on_domain_boundary(DomainTag tag, double x, double y, double eps = 1e-12) {
  auto near = [eps](double a, double b) { return std::abs(a - b) <= eps; };
  auto within = [eps](double a, double lo, double hi) { return a >= lo - eps && a <= hi + eps; };
  switch (tag) {
    case DomainTag::square:
      return (near(x, 0) || near(x, 1)) && within(y, 0, 1) ||
             (near(y, 0) || near(y, 1)) && within(x, 0, 1);
    case DomainTag::lshape:
      if ((near(x, -1) || near(x, 1)) && within(y, -1, 1)) return true;
      if ((near(y, -1) || near(y, 1)) && within(x, -1, 1)) return true;
      return (near(x, 0) && within(y, 0, 1)) || (near(y, 0) && within(x, 0, 1));
    case DomainTag::slit:
      if ((near(x, -1) || near(x, 1)) && within(y, -1, 1)) return true;
      if ((near(y, -1) || near(y, 1)) && within(x, -1, 1)) return true;
      return near(y, 0) && within(x, 0, 1);
  }
  return false;
}

inline bool is_boundary_segment(DomainTag tag, const Vertex& a, const Vertex& b) {
  return on_domain_boundary(tag, a.x, a.y) && on_domain_boundary(tag, b.x, b.y) &&
         on_domain_boundary(tag, 0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
}

enum class ViolationKind {
  too_few_cells,
  bad_orientation,
  bad_refinement_edge,
  non_manifold_edge,
  hanging_vertex,
  open_boundary_edge,
};

struct Violation {
  ViolationKind kind;
  int entity;  // cell, edge or vertex id depending on kind
  std::string message;
};

struct ConformityReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [kind](const Violation& v) { return v.kind == kind; }));
  }
};

/// Audits the Mesh invariants. An empty report means the mesh is admissible.
inline ConformityReport check_conformity(const Mesh& mesh) {
  ConformityReport report;
  auto add = [&](ViolationKind kind, int id, std::string msg) {
    report.violations.push_back({kind, id, std::move(msg)});
  };

  if (mesh.n_cells() < 3) add(ViolationKind::too_few_cells, mesh.n_cells(), "mesh has fewer than 3 cells");
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (!(mesh.signed_area(c) > 0.0)) add(ViolationKind::bad_orientation, c, "non-positive signed area");
    const int r = mesh.cell(c).refinement_edge;
    if (r < 0 || r > 2) add(ViolationKind::bad_refinement_edge, c, "refinement edge outside {0,1,2}");
  }
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (mesh.edge(e).n_cells > 2) add(ViolationKind::non_manifold_edge, e, "edge shared by more than 2 cells");
  }

  // vertex -> incident cells
  std::vector<std::vector<int>> vertex_cells(mesh.n_vertices());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    for (int v : mesh.cell(c).v) vertex_cells[v].push_back(c);
  }

  // bucket grid over vertices
  double xmin = std::numeric_limits<double>::max(), ymin = xmin;
  double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
  for (const auto& p : mesh.vertices()) {
    xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
  }
  const int n_grid = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.n_vertices()))));
  const double dx = std::max(xmax - xmin, 1e-300) / n_grid;
  const double dy = std::max(ymax - ymin, 1e-300) / n_grid;
  auto bucket = [&](double x, double y) {
    const int i = std::clamp(static_cast<int>((x - xmin) / dx), 0, n_grid - 1);
    const int j = std::clamp(static_cast<int>((y - ymin) / dy), 0, n_grid - 1);
    return std::pair{i, j};
  };
  std::vector<std::vector<int>> grid(static_cast<std::size_t>(n_grid) * n_grid);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (vertex_cells[v].empty()) continue;
    const auto [i, j] = bucket(mesh.vertex(v).x, mesh.vertex(v).y);
    grid[static_cast<std::size_t>(j) * n_grid + i].push_back(v);
  }

  struct Host {
    Vertex a, b;
  };
  std::vector<Host> hosts;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const auto& edge = mesh.edge(e);
    const auto& a = mesh.vertex(edge.v[0]);
    const auto& b = mesh.vertex(edge.v[1]);
    const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    const bool on_boundary = is_boundary_segment(mesh.domain(), a, b);
    const auto [i0, j0] = bucket(std::min(a.x, b.x), std::min(a.y, b.y));
    const auto [i1, j1] = bucket(std::max(a.x, b.x), std::max(a.y, b.y));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        for (int v : grid[static_cast<std::size_t>(j) * n_grid + i]) {
          if (v == edge.v[0] || v == edge.v[1]) continue;
          const auto& p = mesh.vertex(v);
          const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
          if (std::abs(cross) > 1e-10 * len2) continue;
          const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2;
          if (t <= 1e-10 || t >= 1.0 - 1e-10) continue;
          if (on_boundary) {
            // Along the slit the far side's vertices sit on this edge but are
            // topologically separate; only same-side vertices count.
            const auto mid = mesh.centroid(edge.cells[0]);
            const double side = (b.x - a.x) * (mid.y - a.y) - (b.y - a.y) * (mid.x - a.x);
            bool same_side = false;
            for (int c : vertex_cells[v]) {
              const auto q = mesh.centroid(c);
              const double s = (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
              if (s * side > 0.0) same_side = true;
            }
            if (!same_side) continue;
          }
          add(ViolationKind::hanging_vertex, v,
              "vertex " + std::to_string(v) + " lies inside edge " + std::to_string(e));
          hosts.push_back({a, b});
        }
      }
    }
  }

  auto inside_host = [&](const Vertex& p, const Host& h) {
    const double len2 = (h.b.x - h.a.x) * (h.b.x - h.a.x) + (h.b.y - h.a.y) * (h.b.y - h.a.y);
    const double cross = (h.b.x - h.a.x) * (p.y - h.a.y) - (h.b.y - h.a.y) * (p.x - h.a.x);
    const double t = ((p.x - h.a.x) * (h.b.x - h.a.x) + (p.y - h.a.y) * (h.b.y - h.a.y)) / len2;
    return std::abs(cross) <= 1e-10 * len2 && t >= -1e-10 && t <= 1.0 + 1e-10;
  };
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const auto& edge = mesh.edge(e);
    if (!edge.boundary()) continue;
    const auto& a = mesh.vertex(edge.v[0]);
    const auto& b = mesh.vertex(edge.v[1]);
    if (is_boundary_segment(mesh.domain(), a, b)) continue;
    const bool explained = std::any_of(hosts.begin(), hosts.end(), [&](const Host& h) {
      return inside_host(a, h) && inside_host(b, h);
    });
    if (!explained) {
      add(ViolationKind::open_boundary_edge, e, "single-cell edge " + std::to_string(e) + " is not on the domain boundary");
    }
  }
  return report;
}

// JSON exchange: {"vertices": [[x,y],...], "cells": [[v0,v1,v2,refedge],...], "domain_tag": "..."}

inline nlohmann::json to_json(const Mesh& mesh) {
  nlohmann::json j;
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices()) vs.push_back({v.x, v.y});
  auto& cs = j["cells"] = nlohmann::json::array();
  for (const auto& c : mesh.cells()) cs.push_back({c.v[0], c.v[1], c.v[2], c.refinement_edge});
  j["domain_tag"] = to_string(mesh.domain());
  return j;
}

inline Mesh mesh_from_json(const nlohmann::json& j) {
  std::vector<Vertex> vs;
  for (const auto& v : j.at("vertices")) vs.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  std::vector<Cell> cells;
  for (const auto& c : j.at("cells")) {
    Cell cell;
    cell.v = {c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()};
    cell.refinement_edge = c.at(3).get<int>();
    for (int v : cell.v) {
      if (v < 0 || v >= static_cast<int>(vs.size())) throw std::invalid_argument("cell references unknown vertex");
    }
    cells.push_back(cell);
  }
  return Mesh(std::move(vs), std::move(cells), parse_domain(j.at("domain_tag").get<std::string>()));
}

}  // namespace stokes_afem
