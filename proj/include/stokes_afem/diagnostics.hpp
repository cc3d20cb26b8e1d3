#pragma once

// Executable checks: the two algebraic eigenvalue identities, the graph-norm
// gap between simple eigenspaces, effectivity indices and the discrete inf-sup
// constant.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include "eigsolve.hpp"
#include "mesh.hpp"
#include "th_space.hpp"

namespace stokes_afem {

/// One discrete eigenpair together with the space and forms it lives on.
struct Discretization {
  const THSpace& space;
  const StokesOperators& ops;
  const EigenPair& pair;
};

struct IdentityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;  // abs_gap / max(1, |lambda_coarse|)
};

namespace detail {

/// lambda_c - lambda_f versus a(e,e) + 2 b(e_u, e_p) - lambda_f ||e_u||^2,
/// e = fine - prolongated coarse, everything evaluated on the fine space.
inline IdentityReport eigenvalue_identity(const Discretization& coarse, const Discretization& fine, const CellMap& map) {
  CoefficientVector embedded = prolongate(coarse.space, fine.space, map, coarse.pair.c);
  CoefficientVector f = fine.pair.c;
  if (f.u.dot(fine.ops.M * embedded.u) < 0.0) f *= -1.0;
  const CoefficientVector e = f - embedded;
  IdentityReport r;
  r.lhs = coarse.pair.lambda - fine.pair.lambda;
  r.rhs = form_eval(fine.ops, FormKind::a, e, e) + 2.0 * form_eval(fine.ops, FormKind::b, e, e) -
          fine.pair.lambda * form_eval(fine.ops, FormKind::l2_velocity, e, e);
  r.abs_gap = std::abs(r.lhs - r.rhs);
  r.rel_gap = r.abs_gap / std::max(1.0, std::abs(coarse.pair.lambda));
  return r;
}

}  // namespace detail

/// Discrete identity between a mesh and any refinement of it. Exact up to the
/// eigensolver residual.
inline IdentityReport identity_II_check(const Discretization& coarse, const Discretization& fine, const CellMap& map) {
  return detail::eigenvalue_identity(coarse, fine, map);
}

/// Identity between a discrete pair and a reference pair standing in for the
/// continuous solution. The reference must live on a refinement of the mesh.
///
/// With a discrete reference the algebra is the same as identity_II_check, so
/// the gap itself sits at solver accuracy; the informative part is lhs, the
/// eigenvalue error against the reference.
inline IdentityReport identity_I_check(const Discretization& approx, const Discretization& reference, const CellMap& map) {
  return detail::eigenvalue_identity(approx, reference, map);
}

struct GapMeasure {
  double delta = 0.0;
};

/// Graph-norm gap between span(u_T) and span(u_ref) for normalized simple
/// eigenvectors: min over the sign s of |||s * P u_T - u_ref|||.
inline GapMeasure eigenspace_gap(const THSpace& space, const EigenPair& pair, const Discretization& reference,
                                 const CellMap& map) {
  const CoefficientVector embedded = prolongate(space, reference.space, map, pair.c);
  const double plus = graph_norm(reference.ops, embedded - reference.pair.c);
  const double minus = graph_norm(reference.ops, embedded + reference.pair.c);
  return {std::min(plus, minus)};
}

/// eta_l^2 / |lambda_ref - lambda_l| per level.
inline std::vector<double> effectivity_indices(std::span<const double> lambdas, std::span<const double> etas,
                                               std::optional<double> lambda_ref) {
  if (!lambda_ref) throw std::invalid_argument("effectivity needs a reference eigenvalue");
  if (lambdas.size() != etas.size()) throw std::invalid_argument("lambda/eta length mismatch");
  std::vector<double> out;
  out.reserve(lambdas.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const double err = std::abs(*lambda_ref - lambdas[l]);
    out.push_back(err > 0.0 ? etas[l] * etas[l] / err : std::numeric_limits<double>::infinity());
  }
  return out;
}

/// max/min of values[first..].
inline double band_ratio(std::span<const double> values, std::size_t first = 0) {
  if (values.size() <= first) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin() + static_cast<std::ptrdiff_t>(first), values.end());
  return *hi / *lo;
}

/// Discrete inf-sup constant: the smallest positive beta with
/// B A^{-1} B^T q = beta^2 Mp q on zero-mean pressures. Dense in the pressure
/// space, so meant for small meshes.
inline double infsup_constant(const THSpace& space, const StokesOperators& ops) {
  (void)space;
  const int n_p = ops.n_p();
  if (n_p < 2) throw std::invalid_argument("inf-sup constant needs at least two pressure DOFs");
  Eigen::SimplicialLLT<SparseMatrix> llt(ops.A);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("velocity stiffness matrix is singular; boundary conditions were not eliminated");
  }
  const Eigen::MatrixXd Bt = Eigen::MatrixXd(ops.B.transpose());
  const Eigen::MatrixXd X = llt.solve(Bt);
  Eigen::MatrixXd S = ops.B * X;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::MatrixXd Mp = Eigen::MatrixXd(ops.Mp);
  // Lift the constant pressure mode out of the way: S + alpha (Mp 1)(Mp 1)^T / (1^T Mp 1)
  // keeps every Mp-orthogonal eigenpair and moves the constant to alpha.
  const Eigen::VectorXd w = Mp * Eigen::VectorXd::Ones(n_p);
  const double alpha = 1.0 + S.trace() / n_p * 10.0;
  S += alpha * w * w.transpose() / w.sum();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(S, Mp, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw std::runtime_error("inf-sup eigenproblem failed");
  return std::sqrt(std::max(0.0, ges.eigenvalues()[0]));
}

/// Eigenpairs on uniformly refined meshes, cached on disk as JSON keyed by
/// (domain, refinement depth).
class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  struct Entry {
    std::vector<Mesh> meshes;      // depth + 1 meshes, coarsest first
    std::vector<CellMap> maps;     // maps[k]: meshes[k] -> meshes[k+1]
    EigenPair pair;                // first eigenpair on meshes.back()
  };

  Entry get(DomainTag domain, int depth, double tol = 1e-10) const {
    Entry entry;
    entry.meshes.push_back(create_initial_mesh(domain));
    for (int k = 0; k < depth; ++k) {
      auto [fine, map] = uniform_refine(entry.meshes.back());
      entry.meshes.push_back(std::move(fine));
      entry.maps.push_back(std::move(map));
    }
    const auto path = dir_ / ("ref_" + to_string(domain) + "_" + std::to_string(depth) + ".json");
    const THSpace space(entry.meshes.back());
    if (std::ifstream in(path); in) {
      const auto j = nlohmann::json::parse(in);
      entry.pair.lambda = j.at("lambda").get<double>();
      entry.pair.residual = j.at("residual").get<double>();
      entry.pair.c = coefficients_from_json(j.at("coefficients"));
      if (entry.pair.c.u.size() == space.n_u() && entry.pair.c.p.size() == space.n_p() &&
          entry.pair.residual <= tol) {
        return entry;
      }
    }
    const auto ops = assemble(space);
    entry.pair = solve_evp(ops, 1, 0.0, tol).front();
    std::filesystem::create_directories(dir_);
    std::ofstream out(path);
    out << nlohmann::json{{"lambda", entry.pair.lambda},
                          {"residual", entry.pair.residual},
                          {"coefficients", to_json(entry.pair.c)}}
               .dump();
    return entry;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace stokes_afem
