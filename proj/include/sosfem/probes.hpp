#pragma once
/**
 * @file probes.hpp
 * @brief Numerical checks of the structural assumptions behind the
 * splitting on concrete meshes.
 *
 * The eigenvalue probes use dense linear algebra and refuse systems larger
 * than kMaxProbeDofs.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "sosfem/error.hpp"
#include "sosfem/p1.hpp"
#include "sosfem/problems.hpp"
#include "sosfem/saddle.hpp"

namespace sosfem {

inline constexpr Eigen::Index kMaxProbeDofs = 5000;

struct ProbeReport {
  std::string name;
  std::vector<int> levels;
  std::vector<double> values;
  double threshold = 0.0;
  std::string criterion;  // human readable statement of what `pass` means
  bool pass = false;
};

namespace detail {

inline void check_probe_size(Eigen::Index n) {
  if (n > kMaxProbeDofs)
    throw NumericalError("probe system of size " + std::to_string(n) +
                         " exceeds the dense limit of " + std::to_string(kMaxProbeDofs));
}

inline Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

}  // namespace detail

/// b-orthogonal projection onto P1: (K + M) x = [ (grad f, grad phi_i) + (f, phi_i) ].
/// The exact surface gradient is projected onto each facet.
inline FEFunction ritz_projection(const std::shared_ptr<const FESpace>& space,
                                  const ScalarField& field, int quad_degree = 4) {
  if (!field.gradient) throw Error("ritz_projection: field needs a gradient");
  const auto& mesh = *space->mesh;
  const auto rule = triangle_rule(quad_degree);
  Vector load = Vector::Zero(static_cast<Eigen::Index>(space->ndof()));
  for (const auto& t : mesh.triangles) {
    const auto g = element_geometry(mesh, t);
    for (const auto& q : rule) {
      const Vec3 y = lift_point(g.point(q.bary), mesh.geometry);
      const double v = detail::checked(field.value(y), "field at quadrature node");
      Vec3 gv = field.gradient(y);
      gv -= gv.dot(g.normal) * g.normal;
      const double wq = q.weight * g.area;
      for (int i = 0; i < 3; ++i) load[t[i]] += wq * (gv.dot(g.grad[i]) + v * q.bary[i]);
    }
  }
  const SparseMatrix b = assemble_stiffness(*space) + assemble_mass(*space);
  Eigen::SimplicialLDLT<SparseMatrix> chol(b);
  if (chol.info() != Eigen::Success) throw NumericalError("ritz_projection: factorization failed");
  return {space, chol.solve(load)};
}

/// Projection of a discrete function. The load is integrated facet by facet
/// from the function's own values and gradients, so the result reproduces
/// the input only if load assembly and the b-matrix agree.
inline FEFunction ritz_projection(const FEFunction& v, int quad_degree = 4) {
  const auto& space = v.space;
  const auto& mesh = *space->mesh;
  const auto rule = triangle_rule(quad_degree);
  Vector load = Vector::Zero(static_cast<Eigen::Index>(space->ndof()));
  for (const auto& t : mesh.triangles) {
    const auto g = element_geometry(mesh, t);
    Vec3 gv = Vec3::Zero();
    for (int i = 0; i < 3; ++i) gv += v.coefficients[t[i]] * g.grad[i];
    for (const auto& q : rule) {
      double val = 0.0;
      for (int i = 0; i < 3; ++i) val += q.bary[i] * v.coefficients[t[i]];
      const double wq = q.weight * g.area;
      for (int i = 0; i < 3; ++i) load[t[i]] += wq * (gv.dot(g.grad[i]) + val * q.bary[i]);
    }
  }
  const SparseMatrix b = assemble_stiffness(*space) + assemble_mass(*space);
  Eigen::SimplicialLDLT<SparseMatrix> chol(b);
  if (chol.info() != Eigen::Success) throw NumericalError("ritz_projection: factorization failed");
  return {space, chol.solve(load)};
}

namespace detail {

/// Dense Q and M of the coercivity quotient on the free dofs.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> coercivity_matrices(const FESpace& space,
                                                                       const AssembledForms& forms,
                                                                       const SparseMatrix& T,
                                                                       double eps0) {
  const SparseMatrix P = free_dof_selector(space, space.has_dirichlet());
  const SparseMatrix Pt = P.transpose();
  check_probe_size(P.rows());
  const Eigen::MatrixXd B = dense(P * forms.b * Pt);
  const Eigen::MatrixXd M = dense(P * forms.m * Pt);
  const Eigen::MatrixXd C = dense(P * forms.c * Pt);
  const Eigen::MatrixXd Td = dense(T * Pt);

  Eigen::LLT<Eigen::MatrixXd> bllt(B);
  if (bllt.info() != Eigen::Success) throw NumericalError("coercivity_probe: b is not SPD");
  const Eigen::MatrixXd S = bllt.solve(M);  // u = S w
  Eigen::MatrixXd Q = S.transpose() * C * S + M;
  if (std::isfinite(eps0)) {
    const Eigen::MatrixXd TS = Td * S;
    Q += (1.0 / eps0) * TS.transpose() * TS;
  }
  Q = 0.5 * (Q + Q.transpose()).eval();
  return {std::move(Q), M};
}

}  // namespace detail

/// Smallest value of
///     Q(w) / m(w, w),  Q(w) = c(u, u) + |T u|^2 / eps0 + m(w, w),  b(u, .) = m(w, .)
/// over all discrete w (free dofs only when the space carries Dirichlet
/// conditions). Pass eps0 = infinity to drop the constraint term.
inline double coercivity_probe(const FESpace& space, const AssembledForms& forms,
                               const SparseMatrix& T, double eps0) {
  const auto [Q, M] = detail::coercivity_matrices(space, forms, T, eps0);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("coercivity_probe: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

/// Q(w) / m(w, w) for one w given on the free dofs.
inline double coercivity_quotient(const FESpace& space, const AssembledForms& forms,
                                  const SparseMatrix& T, double eps0, const Vector& w) {
  const auto [Q, M] = detail::coercivity_matrices(space, forms, T, eps0);
  if (w.size() != M.rows()) throw Error("coercivity_quotient: w has the wrong length");
  const double den = w.dot(M * w);
  if (!(den > 0.0)) throw Error("coercivity_quotient: w must be nonzero");
  return w.dot(Q * w) / den;
}

/// Smallest singular value of the Lagrange block matrix measured in the
/// block-diagonal norm diag(b, b, I, 1, 1): the smallest |mu| with
/// A x = mu N x. This is an H^1 surrogate of the W^{1,q} x W^{1,p} pairing.
inline double saddle_infsup_probe(const FESpace& space, const AssembledForms& forms,
                                  const std::vector<Vec3>& points, bool mean_u, bool mean_w,
                                  bool dirichlet = false) {
  SaddleConfig cfg = SaddleConfig::lagrange(points, Vector::Zero(static_cast<Eigen::Index>(points.size())))
                         .with_mean_constraints(mean_u, mean_w)
                         .with_dirichlet(dirichlet);
  const auto n = static_cast<Eigen::Index>(space.ndof());
  const ConstrainedSystem cs =
      assemble_constrained_system(forms, space, Vector::Zero(n), Vector::Zero(n), cfg);
  const auto& L = cs.system.layout;
  detail::check_probe_size(L.size());

  const SparseMatrix& P = cs.selector;
  const Eigen::MatrixXd Bn = detail::dense(P * forms.b * SparseMatrix(P.transpose()));
  Eigen::MatrixXd N = Eigen::MatrixXd::Identity(L.size(), L.size());
  N.block(L.u(), L.u(), L.n_primal, L.n_primal) = Bn;
  N.block(L.w(), L.w(), L.n_primal, L.n_primal) = Bn;
  Eigen::LLT<Eigen::MatrixXd> nllt(N);
  if (nllt.info() != Eigen::Success) throw NumericalError("saddle_infsup_probe: norm not SPD");
  const Eigen::MatrixXd Lf = nllt.matrixL();
  const Eigen::MatrixXd A = detail::dense(cs.system.matrix);
  // S = L^{-1} A L^{-T}
  Eigen::MatrixXd S = Lf.triangularView<Eigen::Lower>().solve(A);
  S = Lf.triangularView<Eigen::Lower>().solve(S.transpose().eval()).transpose().eval();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("saddle_infsup_probe: eigensolver failed");
  return es.eigenvalues().cwiseAbs().minCoeff();
}

struct ResidualReport {
  double first_equation = 0.0;   // dual (b^{-1}) norm of the u-rows
  double second_equation = 0.0;  // dual norm of the w-rows
  double constraint = 0.0;       // |T u_I - Z|
  double total = 0.0;
  Vector first_rows;   // masked residual vectors on all dofs
  Vector second_rows;
};

/// Residual of the discrete Lagrange system evaluated at the nodal
/// interpolants of the exact u and w (and the exact multipliers). Rows of
/// dofs touching a singular constraint vertex, and Dirichlet rows, are
/// dropped; w is never evaluated at the singular vertex itself.
///
/// A log-singular w is not in H^1, so the rows just outside the removed star
/// keep an O(1) contribution on every mesh. `exclusion_radius` > 0 also drops
/// every triangle with a vertex closer than that distance to a singular
/// vertex; with a fixed radius the remaining residual decays with h.
inline ResidualReport residual_probe(const std::shared_ptr<const FESpace>& space,
                                     const AssembledForms& forms, const ExactFields& exact,
                                     int quad_degree = 4, double exclusion_radius = 0.0) {
  const auto& mesh = *space->mesh;
  const auto n = static_cast<Eigen::Index>(space->ndof());

  std::set<int> singular;
  for (int j : exact.singular_points) {
    const int v = find_vertex(mesh, exact.points.at(static_cast<std::size_t>(j)));
    if (v < 0) throw Error("constraint point off-grid: " + exact.point_labels.at(j));
    singular.insert(v);
  }
  std::vector<char> keep(static_cast<std::size_t>(n), 1);
  for (std::size_t i = 0; i < space->ndof(); ++i)
    if (space->dirichlet_mask[i]) keep[i] = 0;
  for (const auto& t : mesh.triangles) {
    const bool touches = singular.count(t[0]) || singular.count(t[1]) || singular.count(t[2]);
    bool near = false;
    for (int v : t)
      for (int s : singular)
        if ((mesh.vertices[v] - mesh.vertices[s]).norm() < exclusion_radius) near = true;
    if (touches || near)
      for (int v : t) keep[static_cast<std::size_t>(v)] = 0;
  }

  Vector uI(n), wI(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 y = lift_point(mesh.vertices[static_cast<std::size_t>(i)], mesh.geometry);
    uI[i] = exact.u.value(y);
    wI[i] = singular.count(static_cast<int>(i)) ? 0.0 : exact.w.value(y);
  }

  const SparseMatrix T = point_eval_matrix(*space, exact.points);
  const Vector a = forms.mass * Vector::Ones(n);
  Vector r1 = forms.c * uI + forms.b * wI - assemble_load(*space, exact.f, quad_degree);
  if (exact.lambda) r1 += T.transpose() * (*exact.lambda);
  if (exact.p_bar) r1 += (*exact.p_bar) * a;
  Vector r2 = forms.b * uI - forms.m * wI - assemble_load(*space, exact.g, quad_degree);
  if (exact.q_bar) r2 += (*exact.q_bar) * a;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!keep[static_cast<std::size_t>(i)]) r1[i] = r2[i] = 0.0;

  const SparseMatrix b = assemble_stiffness(*space) + assemble_mass(*space);
  Eigen::SimplicialLDLT<SparseMatrix> chol(b);
  if (chol.info() != Eigen::Success) throw NumericalError("residual_probe: factorization failed");
  ResidualReport rep;
  rep.first_equation = std::sqrt(std::max(0.0, r1.dot(chol.solve(r1))));
  rep.second_equation = std::sqrt(std::max(0.0, r2.dot(chol.solve(r2))));
  rep.constraint = (T * uI - exact.Z).norm();
  rep.total = std::sqrt(rep.first_equation * rep.first_equation +
                        rep.second_equation * rep.second_equation +
                        rep.constraint * rep.constraint);
  rep.first_rows = std::move(r1);
  rep.second_rows = std::move(r2);
  return rep;
}

}  // namespace sosfem
