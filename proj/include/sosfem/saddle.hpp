#pragma once
/**
 * @file saddle.hpp
 * @brief Point-constrained second order splitting as one symmetric
 * indefinite linear system.
 *
 * Unknowns are ordered (u, w, lambda, p, q). With all blocks active the
 * matrix reads
 *
 *     [ C   B   T^t  a   0 ]   [u]   [F]
 *     [ B  -M   0    0   a ]   [w]   [G]
 *     [ T   0   0    0   0 ] * [l] = [Z]
 *     [ a^t 0   0    0   0 ]   [p]   [0]
 *     [ 0   a^t 0    0   0 ]   [q]   [0]
 *
 * where a holds the integrals of the basis functions (mean value
 * constraints). The penalty variant drops lambda and replaces C by
 * C + T^t T / eps and F by F + T^t Z / eps; the multiplier is then
 * recovered as (T u - Z) / eps.
 */

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>

#include "sosfem/error.hpp"
#include "sosfem/p1.hpp"

namespace sosfem {

inline constexpr double kPenaltyFloor = 1e-14;
/// Penalty parameter used to emulate hard point constraints.
inline constexpr double kHardConstraintPenalty = 1e-8;

struct SaddleConfig {
  enum class Mode { Lagrange, Penalty };
  Mode mode = Mode::Lagrange;
  double epsilon = kHardConstraintPenalty;  // only read in Penalty mode
  bool mean_constraint_u = false;
  bool mean_constraint_w = false;
  bool dirichlet = false;
  std::vector<Vec3> points;  // constraint points X_j
  Vector targets;            // Z_j

  static SaddleConfig lagrange(std::vector<Vec3> pts, Vector z) {
    SaddleConfig c;
    c.points = std::move(pts);
    c.targets = std::move(z);
    return c;
  }
  static SaddleConfig penalty(double eps, std::vector<Vec3> pts, Vector z) {
    SaddleConfig c = lagrange(std::move(pts), std::move(z));
    c.mode = Mode::Penalty;
    c.epsilon = eps;
    return c;
  }
  SaddleConfig with_mean_constraints(bool on_u, bool on_w) const {
    SaddleConfig c = *this;
    c.mean_constraint_u = on_u;
    c.mean_constraint_w = on_w;
    return c;
  }
  SaddleConfig with_dirichlet(bool on) const {
    SaddleConfig c = *this;
    c.dirichlet = on;
    return c;
  }
};

/// Offsets of the unknown blocks inside the monolithic system.
struct BlockLayout {
  Eigen::Index n_primal = 0;  // size of the u block (== size of the w block)
  Eigen::Index n_lambda = 0;
  bool has_p = false;
  bool has_q = false;

  Eigen::Index u() const { return 0; }
  Eigen::Index w() const { return n_primal; }
  Eigen::Index lambda() const { return 2 * n_primal; }
  Eigen::Index p() const { return lambda() + n_lambda; }
  Eigen::Index q() const { return p() + (has_p ? 1 : 0); }
  Eigen::Index size() const { return q() + (has_q ? 1 : 0); }
};

struct BlockSystem {
  SparseMatrix matrix;
  Vector rhs;
  BlockLayout layout;
};

struct SolverDiagnostics {
  Eigen::Index system_size = 0;
  double relative_residual = 0.0;
  std::string factorization;  // "ok" or the pivot report of the failed factorization
  std::string warning;
};

struct SolutionBundle {
  FEFunction u;
  FEFunction w;
  std::optional<Vector> lambda;
  std::optional<double> p_bar;
  std::optional<double> q_bar;
  std::optional<Vector> multiplier_recovery;
  SolverDiagnostics diagnostics;
};

namespace detail {

inline void add_block(std::vector<Eigen::Triplet<double>>& trip, const SparseMatrix& a,
                      Eigen::Index row0, Eigen::Index col0, double scale = 1.0) {
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      const auto r = static_cast<int>(row0 + it.row());
      const auto c = static_cast<int>(col0 + it.col());
      trip.emplace_back(r, c, scale * it.value());
    }
}

/// Selection matrix mapping full dof vectors onto the non-Dirichlet dofs.
inline SparseMatrix free_dof_selector(const FESpace& space, bool apply_dirichlet) {
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;
  for (std::size_t i = 0; i < space.ndof(); ++i)
    if (!(apply_dirichlet && space.dirichlet_mask[i])) trip.emplace_back(row++, static_cast<int>(i), 1.0);
  SparseMatrix p(row, static_cast<Eigen::Index>(space.ndof()));
  p.setFromTriplets(trip.begin(), trip.end());
  return p;
}

}  // namespace detail

/// Assembles the monolithic system from already reduced blocks.
inline BlockSystem assemble_block_system(const SparseMatrix& C, const SparseMatrix& B,
                                         const SparseMatrix& M, const SparseMatrix& T,
                                         const Vector& a, const Vector& F, const Vector& G,
                                         const SaddleConfig& config) {
  const Eigen::Index n = C.rows();
  const Eigen::Index nc = T.rows();
  if (C.cols() != n || B.rows() != n || B.cols() != n || M.rows() != n || M.cols() != n ||
      T.cols() != n || a.size() != n || F.size() != n || G.size() != n ||
      config.targets.size() != nc)
    throw Error("assemble_block_system: dimension mismatch");
  const bool penalty = config.mode == SaddleConfig::Mode::Penalty;
  if (penalty && !(config.epsilon >= kPenaltyFloor))
    throw Error("penalty parameter below the floor 1e-14");

  BlockSystem sys;
  auto& L = sys.layout;
  L.n_primal = n;
  L.n_lambda = penalty ? 0 : nc;
  L.has_p = config.mean_constraint_u;
  L.has_q = config.mean_constraint_w;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(C.nonZeros() + 2 * B.nonZeros() + M.nonZeros() +
                                        2 * nc + 4 * n));
  Vector F_eff = F;
  if (penalty) {
    const SparseMatrix tt = SparseMatrix(T.transpose()) * T;
    SparseMatrix c_pen = C + (1.0 / config.epsilon) * tt;
    detail::add_block(trip, c_pen, L.u(), L.u());
    F_eff += (1.0 / config.epsilon) * (T.transpose() * config.targets);
  } else {
    detail::add_block(trip, C, L.u(), L.u());
  }
  detail::add_block(trip, B, L.u(), L.w());
  detail::add_block(trip, B, L.w(), L.u());
  detail::add_block(trip, M, L.w(), L.w(), -1.0);
  if (!penalty) {
    const SparseMatrix tt = T.transpose();
    detail::add_block(trip, tt, L.u(), L.lambda());
    detail::add_block(trip, T, L.lambda(), L.u());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    if (L.has_p) {
      trip.emplace_back(static_cast<int>(L.u() + i), static_cast<int>(L.p()), a[i]);
      trip.emplace_back(static_cast<int>(L.p()), static_cast<int>(L.u() + i), a[i]);
    }
    if (L.has_q) {
      trip.emplace_back(static_cast<int>(L.w() + i), static_cast<int>(L.q()), a[i]);
      trip.emplace_back(static_cast<int>(L.q()), static_cast<int>(L.w() + i), a[i]);
    }
  }
  sys.matrix.resize(L.size(), L.size());
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();

  sys.rhs = Vector::Zero(L.size());
  sys.rhs.segment(L.u(), n) = F_eff;
  sys.rhs.segment(L.w(), n) = G;
  if (!penalty) sys.rhs.segment(L.lambda(), nc) = config.targets;
  return sys;
}

/// Sparse LU (UMFPACK) followed by one step of iterative refinement.
inline Vector solve_sparse(const SparseMatrix& A, const Vector& b, SolverDiagnostics& diag) {
  Eigen::UmfPackLU<SparseMatrix> lu;
  diag.system_size = A.rows();
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw Error("solve_sparse: dimension mismatch");
  lu.analyzePattern(A);
  if (lu.info() != Eigen::Success) {
    diag.factorization = "UMFPACK symbolic analysis failed";
    throw NumericalError("singular factorization: " + diag.factorization);
  }
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    diag.factorization = "UMFPACK status " + std::to_string(lu.umfpackFactorizeReturncode());
    if (lu.umfpackFactorizeReturncode() == UMFPACK_WARNING_singular_matrix) {
      const auto& U = lu.matrixU();
      for (Eigen::Index k = 0; k < U.rows(); ++k)
        if (U.coeff(k, k) == 0.0) {
          diag.factorization += ", zero pivot at elimination step " + std::to_string(k);
          break;
        }
    }
    throw NumericalError("singular factorization: " + diag.factorization);
  }
  diag.factorization = "ok";
  Vector x = lu.solve(b);
  const Vector r = b - A * x;
  x += lu.solve(r);
  const double bn = b.norm();
  diag.relative_residual = (b - A * x).norm() / (bn > 0.0 ? bn : 1.0);
  if (!x.allFinite()) throw NumericalError("linear solve produced non-finite values");
  return x;
}

/// Block system on the non-Dirichlet dofs together with the maps needed to
/// expand a solution back to the full space.
struct ConstrainedSystem {
  BlockSystem system;
  SparseMatrix selector;  // free dofs x all dofs
  SparseMatrix T;         // point evaluation on all dofs
};

inline ConstrainedSystem assemble_constrained_system(const AssembledForms& forms,
                                                     const FESpace& space, const Vector& F,
                                                     const Vector& G, const SaddleConfig& config) {
  const auto n = static_cast<Eigen::Index>(space.ndof());
  if (F.size() != n || G.size() != n) throw Error("solve: load vector dimension mismatch");
  ConstrainedSystem cs;
  cs.T = point_eval_matrix(space, config.points);
  cs.selector = detail::free_dof_selector(space, config.dirichlet);
  const SparseMatrix& P = cs.selector;
  const SparseMatrix Pt = P.transpose();
  auto reduce = [&](const SparseMatrix& A) -> SparseMatrix { return P * A * Pt; };
  const Vector a = forms.mass * Vector::Ones(n);
  cs.system = assemble_block_system(reduce(forms.c), reduce(forms.b), reduce(forms.m),
                                    cs.T * Pt, P * a, P * F, P * G, config);
  return cs;
}

/// Solves the constrained splitting system. Dispatches on config.mode.
inline SolutionBundle solve_saddle(const AssembledForms& forms,
                                   const std::shared_ptr<const FESpace>& space, const Vector& F,
                                   const Vector& G, const SaddleConfig& config) {
  const ConstrainedSystem cs = assemble_constrained_system(forms, *space, F, G, config);
  const SparseMatrix Pt = cs.selector.transpose();
  SolutionBundle out;
  const Vector x = solve_sparse(cs.system.matrix, cs.system.rhs, out.diagnostics);
  const auto& L = cs.system.layout;
  out.u = {space, Pt * x.segment(L.u(), L.n_primal)};
  out.w = {space, Pt * x.segment(L.w(), L.n_primal)};
  if (L.has_p) out.p_bar = x[L.p()];
  if (L.has_q) out.q_bar = x[L.q()];
  if (config.mode == SaddleConfig::Mode::Lagrange) {
    out.lambda = x.segment(L.lambda(), L.n_lambda);
  } else {
    out.multiplier_recovery = (cs.T * out.u.coefficients - config.targets) / config.epsilon;
    if (config.epsilon < 1e-10)
      out.diagnostics.warning = "penalty parameter below 1e-10: system may be ill-conditioned";
  }
  return out;
}

inline SolutionBundle solve_lagrange(const AssembledForms& forms,
                                     const std::shared_ptr<const FESpace>& space, const Vector& F,
                                     const Vector& G, SaddleConfig config) {
  config.mode = SaddleConfig::Mode::Lagrange;
  return solve_saddle(forms, space, F, G, config);
}

inline SolutionBundle solve_penalty(const AssembledForms& forms,
                                    const std::shared_ptr<const FESpace>& space, const Vector& F,
                                    const Vector& G, SaddleConfig config) {
  config.mode = SaddleConfig::Mode::Penalty;
  return solve_saddle(forms, space, F, G, config);
}

}  // namespace sosfem
