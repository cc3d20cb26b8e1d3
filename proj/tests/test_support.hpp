#pragma once

// Helpers shared by the unit tests and the acceptance driver.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <stokes_afem/assembly.hpp>
#include <stokes_afem/mesh.hpp>

namespace stokes_afem::test_support {

/// Sorted interior angles rounded to 1e-8 rad; equal keys mean similar triangles.
inline std::array<long long, 3> shape_key(const Mesh& m, int c) {
  const auto x = m.cell_coords(c);
  std::array<double, 3> ang{};
  for (int i = 0; i < 3; ++i) {
    const auto& a = x[i];
    const auto& b = x[(i + 1) % 3];
    const auto& d = x[(i + 2) % 3];
    const double ux = b.x - a.x, uy = b.y - a.y, vx = d.x - a.x, vy = d.y - a.y;
    ang[i] = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
  }
  std::sort(ang.begin(), ang.end());
  return {std::llround(ang[0] * 1e8), std::llround(ang[1] * 1e8), std::llround(ang[2] * 1e8)};
}

struct FuzzReport {
  int steps = 0;
  int final_cells = 0;
  int nonconforming_steps = 0;
  double max_area_error = 0.0;
  int max_classes_per_root = 0;
};

/// Random refinement: each step marks 1..max_marks random cells with a random
/// bisection rule. Tracks the initial ancestor of every cell.
inline FuzzReport fuzz_refine(Mesh mesh, int steps, unsigned seed, int max_marks = 3) {
  std::mt19937 gen(seed);
  const double area = mesh.total_area();
  std::vector<int> root(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) root[c] = c;
  FuzzReport rep;
  std::map<int, std::set<std::array<long long, 3>>> classes;
  auto record = [&] {
    for (int c = 0; c < mesh.n_cells(); ++c) classes[root[c]].insert(shape_key(mesh, c));
  };
  record();
  for (int s = 0; s < steps; ++s) {
    std::uniform_int_distribution<int> pick(0, mesh.n_cells() - 1), count(1, max_marks), rule(0, 1);
    std::vector<int> marked;
    for (int k = count(gen); k > 0; --k) marked.push_back(pick(gen));
    auto [fine, map] = refine(mesh, marked, rule(gen) ? MarkedBisection::bisec3 : MarkedBisection::single);
    std::vector<int> fine_root(fine.n_cells());
    for (int c = 0; c < mesh.n_cells(); ++c) {
      for (int f : map.children[c]) fine_root[f] = root[c];
    }
    mesh = std::move(fine);
    root = std::move(fine_root);
    if (!check_conformity(mesh).ok()) ++rep.nonconforming_steps;
    rep.max_area_error = std::max(rep.max_area_error, std::abs(mesh.total_area() - area));
    record();
    ++rep.steps;
  }
  rep.final_cells = mesh.n_cells();
  for (const auto& [r, set] : classes) rep.max_classes_per_root = std::max<int>(rep.max_classes_per_root, set.size());
  return rep;
}

inline FuzzReport fuzz_refine(DomainTag tag, int steps, unsigned seed, int max_marks = 3) {
  return fuzz_refine(create_initial_mesh(tag), steps, seed, max_marks);
}

/// Eigenvalues of A restricted to ker B with mass M, via a dense SVD null-space basis.
inline Eigen::VectorXd dense_oracle(const StokesOperators& ops) {
  const Eigen::MatrixXd B(ops.B);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  int rank = 0;
  if (B.rows() > 0) {
    const double tol = 1e-10 * svd.singularValues()(0);
    for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > tol;
  }
  const Eigen::MatrixXd Z = B.rows() > 0 ? Eigen::MatrixXd(svd.matrixV().rightCols(ops.n_u() - rank))
                                         : Eigen::MatrixXd::Identity(ops.n_u(), ops.n_u());
  const Eigen::MatrixXd a = Z.transpose() * Eigen::MatrixXd(ops.A) * Z;
  const Eigen::MatrixXd m = Z.transpose() * Eigen::MatrixXd(ops.M) * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (a + a.transpose()), 0.5 * (m + m.transpose()),
                                                                Eigen::EigenvaluesOnly);
  return ges.eigenvalues();
}

/// Largest mesh obtained by uniform refinement whose total DOF count stays <= limit.
inline Mesh largest_uniform_mesh(DomainTag tag, int limit) {
  Mesh m = create_initial_mesh(tag);
  for (;;) {
    Mesh f = uniform_refine(m).first;
    const THSpace s(f);
    if (s.n_u() + s.n_p() > limit) return m;
    m = std::move(f);
  }
}

}  // namespace stokes_afem::test_support
