#pragma once

// Smallest eigenpairs of the Stokes pencil K x = lambda M_b x with
//
//       | A    B^T  0   |          | M  0  0 |
//   K = | B    0    m_p |,   M_b = | 0  0  0 |
//       | 0    m_p^T 0  |          | 0  0  0 |
//
// The last row/column (zero-mean multiplier) is present only when m_p is
// non-empty. K - shift*M_b is factored once; every iterate is an image
// (K - shift*M_b)^{-1} M_b X, so iterates satisfy the discrete divergence and
// mean constraints and the infinite eigenvalues never show up.
//
// The multiplier row is dense and ruins fill-reducing orderings, so the
// factorization works on the equivalent system with pressure DOF 0 pinned:
// constants lie in the kernel of B^T, hence the velocity is unchanged and the
// pressure differs by a constant that is removed afterwards (multiplier = 0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef STOKES_AFEM_USE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "assembly.hpp"

namespace stokes_afem {

class SolverError : public std::runtime_error {
 public:
  enum class Kind { factorization, no_convergence, too_few_modes };
  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct EigenPair {
  double lambda = 0.0;
  CoefficientVector c;
  double multiplier = 0.0;  // zero-mean Lagrange multiplier, ~0 for Stokes
  double residual = 0.0;
  int iterations = 0;
};

struct EigenOptions {
  int nev = 1;
  double shift = 0.0;
  double tol = 1e-10;
  int max_iter = 1000;
  int guard = 3;  // extra subspace vectors beyond nev
  std::uint64_t seed = 0x5eed5eed2024ULL;
  std::vector<Eigen::VectorXd> start;  // optional velocity start vectors
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform_pm1(std::uint64_t& state) {
  return 2.0 * (static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53) - 1.0;
}

inline bool has_mean_row(const StokesOperators& ops) { return ops.m_p.size() > 0 && ops.n_p() > 0; }

inline SparseMatrix augmented_matrix(const StokesOperators& ops, double shift) {
  const int n_u = ops.n_u(), n_p = ops.n_p();
  const bool mean = has_mean_row(ops);
  const int n = n_u + n_p + (mean ? 1 : 0);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(ops.A.nonZeros() + ops.M.nonZeros() + 2 * ops.B.nonZeros() + 2 * n_p);
  for (int k = 0; k < ops.A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(ops.A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  if (shift != 0.0) {
    for (int k = 0; k < ops.M.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(ops.M, k); it; ++it) t.emplace_back(it.row(), it.col(), -shift * it.value());
    }
  }
  for (int k = 0; k < ops.B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(ops.B, k); it; ++it) {
      t.emplace_back(n_u + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), n_u + it.row(), it.value());
    }
  }
  if (mean) {
    for (int j = 0; j < n_p; ++j) {
      t.emplace_back(n_u + j, n - 1, ops.m_p[j]);
      t.emplace_back(n - 1, n_u + j, ops.m_p[j]);
    }
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

/// M_b-orthonormalizes the columns of Y in place (two Gram-Schmidt passes).
/// Columns whose M-norm collapses are dropped. Returns the kept column count.
inline int mb_orthonormalize(Eigen::MatrixXd& Y, const SparseMatrix& M, int n_u) {
  int kept = 0;
  for (int j = 0; j < Y.cols(); ++j) {
    Eigen::VectorXd y = Y.col(j);
    const double norm0 = std::sqrt(std::max(0.0, y.head(n_u).dot(M * y.head(n_u))));
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < kept; ++i) {
        const double h = Y.col(i).head(n_u).dot(M * y.head(n_u));
        y -= h * Y.col(i);
      }
    }
    const double norm = std::sqrt(std::max(0.0, y.head(n_u).dot(M * y.head(n_u))));
    if (!(norm > 1e-10 * norm0) || norm0 == 0.0) continue;
    Y.col(kept++) = y / norm;
  }
  Y.conservativeResize(Eigen::NoChange, kept);
  return kept;
}

inline Eigen::VectorXd apply_K(const StokesOperators& ops, const Eigen::VectorXd& x) {
  const int n_u = ops.n_u(), n_p = ops.n_p();
  const bool mean = has_mean_row(ops);
  Eigen::VectorXd y(x.size());
  const auto u = x.head(n_u);
  const auto p = x.segment(n_u, n_p);
  y.head(n_u) = ops.A * u + ops.B.transpose() * p;
  y.segment(n_u, n_p) = ops.B * u;
  if (mean) {
    y.segment(n_u, n_p) += ops.m_p * x[n_u + n_p];
    y[n_u + n_p] = ops.m_p.dot(p);
  }
  return y;
}

inline Eigen::VectorXd pack(const StokesOperators& ops, const EigenPair& pair) {
  const int n_u = ops.n_u(), n_p = ops.n_p();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_u + n_p + (has_mean_row(ops) ? 1 : 0));
  x.head(n_u) = pair.c.u;
  x.segment(n_u, n_p) = pair.c.p;
  if (has_mean_row(ops)) x[n_u + n_p] = pair.multiplier;
  return x;
}

inline double relative_residual(const StokesOperators& ops, const Eigen::VectorXd& x, double lambda) {
  const int n_u = ops.n_u();
  const Eigen::VectorXd kx = apply_K(ops, x);
  Eigen::VectorXd mbx = Eigen::VectorXd::Zero(x.size());
  mbx.head(n_u) = ops.M * x.head(n_u);
  const double denom = kx.norm() + std::abs(lambda) * mbx.norm();
  if (denom == 0.0) return 0.0;
  return (kx - lambda * mbx).norm() / denom;
}

}  // namespace detail

/// Factorization of K - shift*M_b (see the header comment for the pinning).
class ShiftedStokesSolver {
 public:
  ShiftedStokesSolver(const StokesOperators& ops, double shift)
      : n_u_(ops.n_u()), n_p_(ops.n_p()), mean_(detail::has_mean_row(ops)), m_p_(ops.m_p) {
    StokesOperators plain;
    plain.A = ops.A;
    plain.B = ops.B;
    plain.M = ops.M;
    SparseMatrix K = detail::augmented_matrix(plain, shift);
    if (mean_) {
      const int pin = n_u_;
      K.prune([pin](Eigen::Index row, Eigen::Index col, double) { return row != pin && col != pin; });
      K.coeffRef(pin, pin) = 1.0;
      K.makeCompressed();
    }
#ifdef STOKES_AFEM_USE_UMFPACK
    lu_.umfpackControl()(UMFPACK_IRSTEP) = 0;
    // the pattern is symmetric; AMD on A+A' fills far less than the default COLAMD
    lu_.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
#endif
    K_ = std::move(K);
    lu_.analyzePattern(K_);
    lu_.factorize(K_);
    if (lu_.info() != Eigen::Success) {
      throw SolverError(SolverError::Kind::factorization,
                        "factorization of the augmented Stokes matrix failed (singular constraint block?)");
    }
  }

  /// Full augmented solution for right-hand sides (K - shift*M_b) x = [f; 0; 0],
  /// optionally with one step of iterative refinement.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs, bool refine = false) const {
    const Eigen::MatrixXd rhs_plain = rhs.topRows(n_u_ + n_p_);
    Eigen::MatrixXd y = lu_.solve(rhs_plain);
    if (refine) {
      const Eigen::MatrixXd r = rhs_plain - K_ * y;
      y += lu_.solve(r);
    }
    if (lu_.info() != Eigen::Success || !y.allFinite()) {
      throw SolverError(SolverError::Kind::factorization, "solve with the augmented Stokes matrix failed");
    }
    if (!mean_) return y;
    const double measure = m_p_.sum();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_u_ + n_p_ + 1, rhs.cols());
    x.topRows(n_u_ + n_p_) = y;
    for (int j = 0; j < x.cols(); ++j) {
      const double mean = m_p_.dot(x.col(j).segment(n_u_, n_p_)) / measure;
      x.col(j).segment(n_u_, n_p_).array() -= mean;
    }
    return x;
  }

 private:
  int n_u_, n_p_;
  bool mean_;
  Eigen::VectorXd m_p_;
  SparseMatrix K_;
#ifdef STOKES_AFEM_USE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu_;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
#endif
};

/// ||K x - lambda M_b x|| / (||K x|| + lambda ||M_b x||).
inline double residual(const StokesOperators& ops, const EigenPair& pair) {
  return detail::relative_residual(ops, detail::pack(ops, pair), pair.lambda);
}

/// Flips the sign so that the velocity coefficient of largest magnitude is positive.
inline void normalize_sign(EigenPair& pair) {
  if (pair.c.u.size() == 0) return;
  Eigen::Index imax = 0;
  pair.c.u.cwiseAbs().maxCoeff(&imax);
  if (pair.c.u[imax] < 0.0) {
    pair.c *= -1.0;
    pair.multiplier = -pair.multiplier;
  }
}

/// Flips the pair if its velocity has negative M-overlap with `reference`.
inline void align_sign(EigenPair& pair, const Eigen::VectorXd& reference, const SparseMatrix& M) {
  if (pair.c.u.dot(M * reference) < 0.0) {
    pair.c *= -1.0;
    pair.multiplier = -pair.multiplier;
  }
}

/// The nev smallest finite eigenpairs, ascending, with ||u||_0 = 1.
///
/// Shift-invert subspace iteration with Rayleigh-Ritz on a block of nev+guard
/// vectors. Throws SolverError on a singular augmented matrix or when the
/// residuals do not drop below tol within max_iter sweeps.
inline std::vector<EigenPair> solve_evp(const StokesOperators& ops, const EigenOptions& opt) {
  if (opt.nev < 1) throw std::invalid_argument("nev must be >= 1");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int n_u = ops.n_u(), n_p = ops.n_p();
  const bool mean = detail::has_mean_row(ops);
  const int n = n_u + n_p + (mean ? 1 : 0);
  if (n_u == 0) throw SolverError(SolverError::Kind::too_few_modes, "no velocity degrees of freedom");

  const ShiftedStokesSolver solver(ops, opt.shift);

  const int block = std::min(opt.nev + std::max(opt.guard, 0), n_u);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, block);
  std::uint64_t state = opt.seed;
  for (int j = 0; j < block; ++j) {
    if (j < static_cast<int>(opt.start.size()) && opt.start[j].size() == n_u) {
      X.col(j).head(n_u) = opt.start[j];
    } else {
      for (int i = 0; i < n_u; ++i) X(i, j) = detail::uniform_pm1(state);
    }
  }

  std::vector<EigenPair> pairs;
  bool refine = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, X.cols());
    for (int j = 0; j < X.cols(); ++j) rhs.col(j).head(n_u) = ops.M * X.col(j).head(n_u);
    Eigen::MatrixXd Y = solver.solve(rhs, refine);
    const int kept = detail::mb_orthonormalize(Y, ops.M, n_u);
    if (kept < opt.nev) {
      throw SolverError(SolverError::Kind::too_few_modes,
                        "the pencil has fewer than " + std::to_string(opt.nev) + " finite eigenvalues");
    }
    Eigen::MatrixXd KY(n, kept);
    for (int j = 0; j < kept; ++j) KY.col(j) = detail::apply_K(ops, Y.col(j));
    Eigen::MatrixXd projected = Y.transpose() * KY;
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(projected);
    X = Y * ritz.eigenvectors();

    pairs.clear();
    bool converged = true;
    double worst = 0.0;
    for (int j = 0; j < opt.nev; ++j) {
      EigenPair pair;
      pair.lambda = ritz.eigenvalues()[j];
      pair.c.u = X.col(j).head(n_u);
      pair.c.p = X.col(j).segment(n_u, n_p);
      pair.multiplier = mean ? X(n_u + n_p, j) : 0.0;
      pair.residual = detail::relative_residual(ops, X.col(j), pair.lambda);
      pair.iterations = it;
      converged = converged && pair.residual <= opt.tol;
      worst = std::max(worst, pair.residual);
      pairs.push_back(std::move(pair));
    }
    if (converged) {
      for (auto& p : pairs) {
        const double norm = l2_norm_velocity(ops, p.c);
        p.c *= 1.0 / norm;
        p.multiplier /= norm;
        normalize_sign(p);
      }
      return pairs;
    }
    // close to the round-off floor of a plain LU solve
    refine = refine || worst < 1e3 * opt.tol;
  }
  throw SolverError(SolverError::Kind::no_convergence,
                    "eigensolver did not reach tol " + std::to_string(opt.tol) + " within " +
                        std::to_string(opt.max_iter) + " iterations");
}

inline std::vector<EigenPair> solve_evp(const StokesOperators& ops, int nev, double shift = 0.0,
                                        double tol = 1e-10, int max_iter = 1000) {
  EigenOptions opt;
  opt.nev = nev;
  opt.shift = shift;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_evp(ops, opt);
}

}  // namespace stokes_afem
