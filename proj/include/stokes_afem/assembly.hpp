#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "quadrature.hpp"
#include "th_space.hpp"

namespace stokes_afem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete Stokes forms on a Taylor-Hood space.
///   A   n_u x n_u   a(u,v) = (grad u, grad v)
///   B   n_p x n_u   b(v,q) = -(div v, q)
///   M   n_u x n_u   (u, v)
///   Mp  n_p x n_p   (p, q), used by the graph norm and the inf-sup constant
///   m_p n_p         integral of each pressure basis function
struct StokesOperators {
  SparseMatrix A;
  SparseMatrix B;
  SparseMatrix M;
  SparseMatrix Mp;
  Eigen::VectorXd m_p;

  int n_u() const { return static_cast<int>(A.rows()); }
  int n_p() const { return static_cast<int>(B.rows()); }
};

/// Element matrices of one cell. Indices: P2 local node i, component d, P1 local vertex j.
struct ElementMatrices {
  Eigen::Matrix<double, 6, 6> stiffness;    // scalar (grad phi_i, grad phi_k)
  Eigen::Matrix<double, 6, 6> mass;         // scalar (phi_i, phi_k)
  Eigen::Matrix<double, 3, 12> divergence;  // -(d_d phi_i, psi_j) at column 2*i+d
  Eigen::Matrix<double, 3, 3> pressure_mass;
  Eigen::Vector3d pressure_integral;
};

inline ElementMatrices element_matrices(const CellGeometry& g) {
  ElementMatrices em;
  em.stiffness.setZero();
  em.mass.setZero();
  em.divergence.setZero();
  const auto& rule = triangle_rule();
  const double scale = 2.0 * g.area;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& l = rule.points[q];
    const double w = rule.weights[q] * scale;
    const auto phi = p2::values(l);
    const auto dphi = p2::gradients(l, g.grad_bary);
    for (int i = 0; i < 6; ++i) {
      for (int k = 0; k < 6; ++k) {
        em.stiffness(i, k) += w * (dphi[i][0] * dphi[k][0] + dphi[i][1] * dphi[k][1]);
        em.mass(i, k) += w * phi[i] * phi[k];
      }
      for (int j = 0; j < 3; ++j) {
        em.divergence(j, 2 * i) -= w * dphi[i][0] * l[j];
        em.divergence(j, 2 * i + 1) -= w * dphi[i][1] * l[j];
      }
    }
  }
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) em.pressure_mass(j, k) = g.area / 12.0 * (j == k ? 2.0 : 1.0);
    em.pressure_integral[j] = g.area / 3.0;
  }
  return em;
}

/// Serial assembly in ascending cell order; the triplet order is fixed, so the
/// result is bit-reproducible.
inline StokesOperators assemble(const THSpace& space) {
  const Mesh& mesh = space.mesh();
  std::vector<Eigen::Triplet<double>> ta, tm, tb, tp;
  ta.reserve(static_cast<std::size_t>(mesh.n_cells()) * 72);
  tm.reserve(ta.capacity());
  tb.reserve(static_cast<std::size_t>(mesh.n_cells()) * 36);
  tp.reserve(static_cast<std::size_t>(mesh.n_cells()) * 9);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(space.n_p());

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto em = element_matrices(space.geometry(c));
    const auto& nodes = space.cell_nodes(c);
    const auto& verts = mesh.cell(c).v;
    std::array<int, 6> dof{};
    for (int i = 0; i < 6; ++i) dof[i] = space.node_dof(nodes[i]);
    for (int i = 0; i < 6; ++i) {
      if (dof[i] < 0) continue;
      for (int k = 0; k < 6; ++k) {
        if (dof[k] < 0) continue;
        for (int d = 0; d < 2; ++d) {
          ta.emplace_back(2 * dof[i] + d, 2 * dof[k] + d, em.stiffness(i, k));
          tm.emplace_back(2 * dof[i] + d, 2 * dof[k] + d, em.mass(i, k));
        }
      }
      for (int j = 0; j < 3; ++j) {
        for (int d = 0; d < 2; ++d) tb.emplace_back(verts[j], 2 * dof[i] + d, em.divergence(j, 2 * i + d));
      }
    }
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) tp.emplace_back(verts[j], verts[k], em.pressure_mass(j, k));
      mean[verts[j]] += em.pressure_integral[j];
    }
  }

  StokesOperators ops;
  ops.A.resize(space.n_u(), space.n_u());
  ops.M.resize(space.n_u(), space.n_u());
  ops.B.resize(space.n_p(), space.n_u());
  ops.Mp.resize(space.n_p(), space.n_p());
  ops.A.setFromTriplets(ta.begin(), ta.end());
  ops.M.setFromTriplets(tm.begin(), tm.end());
  ops.B.setFromTriplets(tb.begin(), tb.end());
  ops.Mp.setFromTriplets(tp.begin(), tp.end());
  ops.m_p = std::move(mean);
  return ops;
}

enum class FormKind { a, b, l2_velocity, graph_norm };

/// a(u1,u2), b(u1,p2), (u1,u2), or |||c1||| (graph_norm ignores c2 apart from its shape).
inline double form_eval(const StokesOperators& ops, FormKind kind, const CoefficientVector& c1,
                        const CoefficientVector& c2) {
  const auto check = [&](const CoefficientVector& c) {
    if (c.u.size() != ops.n_u() || c.p.size() != ops.n_p()) {
      throw std::invalid_argument("coefficient vector dimension mismatch");
    }
  };
  check(c1);
  check(c2);
  switch (kind) {
    case FormKind::a: return c1.u.dot(ops.A * c2.u);
    case FormKind::b: return c2.p.dot(ops.B * c1.u);
    case FormKind::l2_velocity: return c1.u.dot(ops.M * c2.u);
    case FormKind::graph_norm: return std::sqrt(std::max(0.0, c1.u.dot(ops.A * c1.u) + c1.p.dot(ops.Mp * c1.p)));
  }
  return 0.0;
}

inline double graph_norm(const StokesOperators& ops, const CoefficientVector& c) {
  return form_eval(ops, FormKind::graph_norm, c, c);
}

inline double l2_norm_velocity(const StokesOperators& ops, const CoefficientVector& c) {
  return std::sqrt(std::max(0.0, c.u.dot(ops.M * c.u)));
}

/// Matrix Market coordinate format (general, real).
inline void write_matrix_market(const std::string& path, const SparseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace stokes_afem
