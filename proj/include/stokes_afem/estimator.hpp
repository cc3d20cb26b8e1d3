#pragma once

// Residual indicators for the Stokes eigenvalue problem:
//
//   eta_T^2 = h_T^2 ||lambda u + Lap u - grad p||_T^2
//           + h_T   ||[d_n u]||^2 on the interior edges of T
//           + h_T   ||div u|_T||^2 on all three edges of T
//
// with h_T the cell diameter.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "eigsolve.hpp"
#include "quadrature.hpp"
#include "th_space.hpp"

namespace stokes_afem {

struct Indicators {
  std::vector<double> eta_sq;  // vol + jump + div
  std::vector<double> vol;     // h_T^2 * volume residual
  std::vector<double> jump;    // h_T * normal-derivative jumps
  std::vector<double> div;     // h_T * divergence traces

  std::size_t size() const { return eta_sq.size(); }
};

inline double global_eta(std::span<const double> eta_sq) {
  double s = 0.0;
  for (double v : eta_sq) s += v;
  return std::sqrt(s);
}

inline double global_eta(const Indicators& ind) { return global_eta(ind.eta_sq); }

/// eta(M) for a subset of cells.
inline double subset_eta(const Indicators& ind, std::span<const int> cells) {
  double s = 0.0;
  for (int c : cells) s += ind.eta_sq.at(c);
  return std::sqrt(s);
}

namespace detail {

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// grad u as a 2x2 array g[component][direction].
inline std::array<Vec2, 2> velocity_gradient(const CellGeometry& g, const std::array<Vec2, 6>& u,
                                             const std::array<double, 3>& l) {
  const auto dphi = p2::gradients(l, g.grad_bary);
  std::array<Vec2, 2> out{};
  for (int i = 0; i < 6; ++i) {
    for (int d = 0; d < 2; ++d) {
      out[d][0] += u[i][d] * dphi[i][0];
      out[d][1] += u[i][d] * dphi[i][1];
    }
  }
  return out;
}

/// Endpoints of local edge i in barycentric coordinates at edge parameter t.
inline std::array<double, 3> edge_point(int local_edge, double t) {
  std::array<double, 3> l{};
  l[(local_edge + 1) % 3] = 1.0 - t;
  l[(local_edge + 2) % 3] = t;
  return l;
}

}  // namespace detail

/// Integral over T of |lambda u + Lap u - grad p|^2 (no h weight).
inline double cell_residual_sq(const CellGeometry& g, const std::array<Vec2, 6>& u,
                               const std::array<double, 3>& p, double lambda) {
  const auto lap = p2::laplacians(g.grad_bary);
  Vec2 lap_u{}, grad_p{};
  for (int i = 0; i < 6; ++i) {
    lap_u[0] += lap[i] * u[i][0];
    lap_u[1] += lap[i] * u[i][1];
  }
  for (int j = 0; j < 3; ++j) {
    grad_p[0] += p[j] * g.grad_bary[j][0];
    grad_p[1] += p[j] * g.grad_bary[j][1];
  }
  const auto& rule = triangle_rule();
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto phi = p2::values(rule.points[q]);
    Vec2 val{lap_u[0] - grad_p[0], lap_u[1] - grad_p[1]};
    for (int i = 0; i < 6; ++i) {
      val[0] += lambda * phi[i] * u[i][0];
      val[1] += lambda * phi[i] * u[i][1];
    }
    s += rule.weights[q] * 2.0 * g.area * detail::dot(val, val);
  }
  return s;
}

/// Sum over the three edges of T of the integral of (div u|_T)^2 (no h weight).
inline double cell_divergence_trace_sq(const CellGeometry& g, const std::array<Vec2, 6>& u) {
  const auto& rule = edge_rule();
  double s = 0.0;
  for (int e = 0; e < 3; ++e) {
    const auto& a = g.x[(e + 1) % 3];
    const auto& b = g.x[(e + 2) % 3];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto grad = detail::velocity_gradient(g, u, detail::edge_point(e, rule.points[q][1]));
      const double div = grad[0][0] + grad[1][1];
      s += rule.weights[q] * len * div * div;
    }
  }
  return s;
}

/// Integral over T of (div u)^2.
inline double cell_divergence_sq(const CellGeometry& g, const std::array<Vec2, 6>& u) {
  const auto& rule = triangle_rule();
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto grad = detail::velocity_gradient(g, u, rule.points[q]);
    const double div = grad[0][0] + grad[1][1];
    s += rule.weights[q] * 2.0 * g.area * div * div;
  }
  return s;
}

/// Integral over an interior edge of |[d_n u]|^2 (both velocity components).
inline double edge_jump_sq(const THSpace& space, const Eigen::VectorXd& u, int e) {
  const Mesh& mesh = space.mesh();
  const auto& edge = mesh.edge(e);
  if (edge.n_cells != 2) return 0.0;
  const int c0 = edge.cells[0], c1 = edge.cells[1];
  const int i0 = edge.local[0];
  const auto g0 = space.geometry(c0);
  const auto g1 = space.geometry(c1);
  const auto u0 = space.local_velocity(u, c0);
  const auto u1 = space.local_velocity(u, c1);
  const auto& a = g0.x[(i0 + 1) % 3];
  const auto& b = g0.x[(i0 + 2) % 3];
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const Vec2 normal{(b.y - a.y) / len, -(b.x - a.x) / len};  // outward for c0 (counterclockwise)
  const auto& rule = edge_rule();
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto l0 = detail::edge_point(i0, rule.points[q][1]);
    const auto x = g0.map(l0);
    const auto grad0 = detail::velocity_gradient(g0, u0, l0);
    const auto grad1 = detail::velocity_gradient(g1, u1, g1.barycentric(x.x, x.y));
    for (int d = 0; d < 2; ++d) {
      const double jump = detail::dot(grad0[d], normal) - detail::dot(grad1[d], normal);
      s += rule.weights[q] * len * jump * jump;
    }
  }
  return s;
}

inline Indicators compute_indicators(const THSpace& space, const CoefficientVector& c, double lambda) {
  if (c.u.size() != space.n_u() || c.p.size() != space.n_p()) {
    throw std::invalid_argument("eigenpair does not belong to this space");
  }
  const Mesh& mesh = space.mesh();
  const int nc = mesh.n_cells();
  Indicators ind;
  ind.eta_sq.assign(nc, 0.0);
  ind.vol.assign(nc, 0.0);
  ind.jump.assign(nc, 0.0);
  ind.div.assign(nc, 0.0);

  std::vector<double> jump(mesh.n_edges(), 0.0);
  for (int e = 0; e < mesh.n_edges(); ++e) jump[e] = edge_jump_sq(space, c.u, e);

  for (int t = 0; t < nc; ++t) {
    const auto g = space.geometry(t);
    const auto u = space.local_velocity(c.u, t);
    const auto p = space.local_pressure(c.p, t);
    const double h = mesh.diameter(t);
    ind.vol[t] = h * h * cell_residual_sq(g, u, p, lambda);
    double j = 0.0;
    for (int i = 0; i < 3; ++i) j += jump[mesh.cell_edge(t, i)];
    ind.jump[t] = h * j;
    ind.div[t] = h * cell_divergence_trace_sq(g, u);
    ind.eta_sq[t] = ind.vol[t] + ind.jump[t] + ind.div[t];
  }
  return ind;
}

inline Indicators compute_indicators(const THSpace& space, const EigenPair& pair) {
  return compute_indicators(space, pair.c, pair.lambda);
}

/// Minimum-cardinality Doerfler set: largest indicators first (ties by
/// ascending cell id) until eta(M)^2 >= theta * eta(T)^2.
inline std::vector<int> mark_dorfler(std::span<const double> eta_sq, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
  const double total = std::accumulate(eta_sq.begin(), eta_sq.end(), 0.0);
  if (!(total > 0.0)) return {};
  std::vector<int> order(eta_sq.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eta_sq[a] > eta_sq[b]; });
  const double target = theta * total;
  std::vector<int> marked;
  double acc = 0.0;
  for (int c : order) {
    marked.push_back(c);
    acc += eta_sq[c];
    if (acc >= target) break;
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

inline std::vector<int> mark_dorfler(const Indicators& ind, double theta) { return mark_dorfler(ind.eta_sq, theta); }

/// Quantities of the two local-equivalence estimates between this estimator and
/// the source-problem residual estimator.
struct EquivalenceDiagnostics {
  double div_sq = 0.0;         // ||div u||^2 over the domain
  double weighted_jump = 0.0;  // sum_e h_e ||[d_n u]||_e^2
  double div_jump_ratio = 0.0; // div_sq / weighted_jump
  double trace_ratio_max = 0.0;  // max_T h_T ||div u|_T||^2_{dT} / ||div u||^2_T
};

inline EquivalenceDiagnostics equivalence_diagnostics(const THSpace& space, const CoefficientVector& c) {
  const Mesh& mesh = space.mesh();
  EquivalenceDiagnostics d;
  for (int e = 0; e < mesh.n_edges(); ++e) d.weighted_jump += mesh.edge_length(e) * edge_jump_sq(space, c.u, e);
  for (int t = 0; t < mesh.n_cells(); ++t) {
    const auto g = space.geometry(t);
    const auto u = space.local_velocity(c.u, t);
    const double vol = cell_divergence_sq(g, u);
    d.div_sq += vol;
    if (vol > 0.0) {
      d.trace_ratio_max = std::max(d.trace_ratio_max, mesh.diameter(t) * cell_divergence_trace_sq(g, u) / vol);
    }
  }
  d.div_jump_ratio = d.weighted_jump > 0.0 ? d.div_sq / d.weighted_jump : 0.0;
  return d;
}

/// CSV: cell_id,eta_sq,vol,jump,div
inline void write_indicators_csv(std::ostream& out, const Indicators& ind) {
  out << "cell_id,eta_sq,vol,jump,div\n";
  out.precision(17);
  for (std::size_t c = 0; c < ind.size(); ++c) {
    out << c << ',' << ind.eta_sq[c] << ',' << ind.vol[c] << ',' << ind.jump[c] << ',' << ind.div[c] << '\n';
  }
}

}  // namespace stokes_afem
