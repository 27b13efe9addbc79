#pragma once

// Finite-difference reference solver for div(a grad p) = f with Dirichlet data.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pinnbc/datagen.hpp"
#include "pinnbc/error.hpp"
#include "pinnbc/grid.hpp"

namespace pinnbc {

struct Triplet {
  int row = 0;
  int col = 0;
  double coeff = 0.0;
};

/// Interior unknowns of an n x n node grid, ordered row-major.
struct SparseSystem {
  int n = 0;
  int dimension = 0;
  std::vector<Triplet> entries;
  std::vector<double> rhs;

  int unknown(int i, int j) const { return (j - 1) * (n - 2) + (i - 1); }
};

using ScalarField2D = std::function<double(double, double)>;

/// Flux-form five-point stencil. Face coefficients are arithmetic means of the
/// adjacent node values of a; Dirichlet values are moved to the right-hand side.
inline SparseSystem assemble(const ScalarField2D& a, const ScalarField2D& f, const ScalarField2D& g, int n) {
  require(n >= 3, "assemble: resolution must be >= 3");
  SparseSystem sys;
  sys.n = n;
  sys.dimension = (n - 2) * (n - 2);
  sys.rhs.assign(static_cast<std::size_t>(sys.dimension), 0.0);
  sys.entries.reserve(static_cast<std::size_t>(sys.dimension) * 5);

  const GridField an = GridField::sample(n, a);
  const double inv_h2 = 1.0 / (an.h() * an.h());
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const int row = sys.unknown(i, j);
      const struct { int di, dj; } nbrs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      double center = 0.0;
      double rhs = f(an.x(i), an.y(j));
      for (const auto& d : nbrs) {
        const int ni = i + d.di;
        const int nj = j + d.dj;
        const double face = 0.5 * (an(i, j) + an(ni, nj)) * inv_h2;
        center -= face;
        if (an.on_boundary(ni, nj)) {
          rhs -= face * g(an.x(ni), an.y(nj));
        } else {
          sys.entries.push_back({row, sys.unknown(ni, nj), face});
        }
      }
      sys.entries.push_back({row, row, center});
      sys.rhs[static_cast<std::size_t>(row)] = rhs;
    }
  }
  return sys;
}

struct SolveResult {
  std::vector<double> values;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
};

/// Raised when neither the Krylov iteration nor the direct fallback meets the
/// tolerance. Carries the best iterate found.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, SolveResult best)
      : Error(ErrorKind::solver_failure, what), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

 private:
  SolveResult best_;
};

namespace detail {

inline Eigen::SparseMatrix<double, Eigen::RowMajor> to_matrix(const SparseSystem& sys) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(sys.entries.size());
  for (const auto& e : sys.entries) t.emplace_back(e.row, e.col, e.coeff);
  Eigen::SparseMatrix<double, Eigen::RowMajor> A(sys.dimension, sys.dimension);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

/// Jacobi-preconditioned BiCGSTAB; `converged` reports whether the true
/// residual met `target`.
inline SolveResult bicgstab(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, const Eigen::VectorXd& b,
                            double target, int max_iter, bool& converged) {
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>> it;
  it.setMaxIterations(max_iter);
  it.setTolerance(target / b.norm());
  it.compute(A);
  const Eigen::VectorXd x = it.solve(b);
  SolveResult out{std::vector<double>(static_cast<std::size_t>(b.size()), 0.0), b.norm(),
                  static_cast<int>(it.iterations()), "bicgstab"};
  const double res = (b - A * x).norm();
  if (std::isfinite(res) && res < out.residual) {
    out.values.assign(x.data(), x.data() + x.size());
    out.residual = res;
  }
  converged = out.residual <= target;
  return out;
}

}  // namespace detail

/// Largest resolution for which the sparse direct factorization is used.
inline constexpr int kDirectMaxResolution = 192;

enum class SolveMethod { automatic, krylov, direct };

namespace detail {

inline bool direct_solve(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, const Eigen::VectorXd& b,
                         double target, SolveResult& best) {
  Eigen::SparseMatrix<double> Ac = A;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(Ac);
  if (lu.info() != Eigen::Success) return false;
  Eigen::VectorXd x = lu.solve(b);
  Eigen::VectorXd r = b - A * x;
  int steps = 0;
  // Iterative refinement; the first step is cheap and usually gains digits.
  for (; steps < 3 && (steps == 0 || r.norm() > target); ++steps) {
    x += lu.solve(r);
    r = b - A * x;
  }
  const double res = r.norm();
  if (!std::isfinite(res) || res >= best.residual) return false;
  best.values.assign(x.data(), x.data() + x.size());
  best.residual = res;
  best.iterations = steps;
  best.method = "sparse-lu";
  return res <= target;
}

}  // namespace detail

/// Solves the assembled system to ||r|| <= tol * max(1, ||rhs||).
///
/// `automatic` factorizes directly up to kDirectMaxResolution and iterates with
/// BiCGSTAB beyond it; either route falls back to the other on failure.
inline SolveResult solve(const SparseSystem& sys, double tol = 1e-10, int max_iter = 20000,
                         SolveMethod method = SolveMethod::automatic) {
  require(tol > 0.0, "solve: tol must be positive");
  const auto A = detail::to_matrix(sys);
  const Eigen::Map<const Eigen::VectorXd> b(sys.rhs.data(), sys.dimension);
  const double target = tol * std::max(1.0, b.norm());
  const bool direct_allowed = sys.n <= kDirectMaxResolution;

  SolveResult best{std::vector<double>(static_cast<std::size_t>(sys.dimension), 0.0), b.norm(), 0, "none"};
  if (best.residual <= target) return best;

  const bool direct_first =
      method == SolveMethod::direct || (method == SolveMethod::automatic && direct_allowed);
  if (direct_first && detail::direct_solve(A, b, target, best)) return best;
  if (method != SolveMethod::direct) {
    bool converged = false;
    SolveResult krylov = detail::bicgstab(A, b, target, max_iter, converged);
    if (krylov.residual < best.residual) best = std::move(krylov);
    if (converged) return best;
    if (!direct_first && direct_allowed && detail::direct_solve(A, b, target, best)) return best;
  }
  throw SolverFailure("solver did not reach tolerance (residual " + std::to_string(best.residual) +
                          ", target " + std::to_string(target) + ")",
                      std::move(best));
}

struct ReferenceSolution {
  GridField field;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
};

inline GridField embed_interior(const SparseSystem& sys, const std::vector<double>& interior,
                                const ScalarField2D& g) {
  GridField out(sys.n);
  for (int j = 0; j < sys.n; ++j) {
    for (int i = 0; i < sys.n; ++i) {
      out(i, j) = out.on_boundary(i, j) ? g(out.x(i), out.y(j))
                                        : interior[static_cast<std::size_t>(sys.unknown(i, j))];
    }
  }
  return out;
}

/// Ground truth of one equation variant on the instance's grid (or `resolution`
/// when positive). Boundary nodes carry g, or 0 for the zero-BC variant.
inline ReferenceSolution reference_solution(const DatasetInstance& inst, EquationVariant variant,
                                            int resolution = 0, double tol = 1e-10, int max_iter = 20000) {
  const int n = resolution > 0 ? resolution : inst.resolution;
  const ScalarField2D a = [&](double x, double y) { return inst.a(x, y); };
  const ScalarField2D f = uses_rhs(variant) ? ScalarField2D([&](double x, double y) { return inst.f(x, y); })
                                            : ScalarField2D([](double, double) { return 0.0; });
  const ScalarField2D g = uses_boundary(variant)
                              ? ScalarField2D([&](double x, double y) { return inst.g.at_xy(x, y); })
                              : ScalarField2D([](double, double) { return 0.0; });
  const SparseSystem sys = assemble(a, f, g, n);
  SolveResult sol = solve(sys, tol, max_iter);
  return {embed_interior(sys, sol.values, g), sol.residual, sol.iterations, sol.method};
}

}  // namespace pinnbc
