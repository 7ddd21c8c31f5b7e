#pragma once
/**
 * @file p1.hpp
 * @brief Continuous piecewise linear finite elements on a TriangleMesh.
 *
 * All integrals are taken over the flat facets of Gamma_h. Data supplied as
 * ScalarField is always evaluated at the lifted point on the smooth surface,
 * so on the sphere loads and errors use f(p(x)) weighted with the facet
 * measure.
 */

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sosfem/error.hpp"
#include "sosfem/mesh.hpp"
#include "sosfem/quadrature.hpp"

namespace sosfem {

/// Symmetric matrices are stored with both triangles populated.
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct FESpace {
  std::shared_ptr<const TriangleMesh> mesh;
  std::vector<bool> dirichlet_mask;

  std::size_t ndof() const { return mesh->num_vertices(); }
  bool has_dirichlet() const {
    for (bool b : dirichlet_mask)
      if (b) return true;
    return false;
  }
};

/// P1 space on `mesh`. With `dirichlet` set, boundary vertices of a disc
/// mesh carry homogeneous Dirichlet conditions; closed surfaces have none.
inline std::shared_ptr<const FESpace> make_space(TriangleMesh mesh, bool dirichlet = false) {
  auto space = std::make_shared<FESpace>();
  space->dirichlet_mask.assign(mesh.num_vertices(), false);
  if (dirichlet && !mesh.geometry.is_sphere())
    for (int b : mesh.boundary_vertices) space->dirichlet_mask[b] = true;
  space->mesh = std::make_shared<const TriangleMesh>(std::move(mesh));
  return space;
}

struct FEFunction {
  std::shared_ptr<const FESpace> space;
  Vector coefficients;
};

/// A function on the smooth surface. `gradient` returns the tangential
/// gradient and may be left empty when only values are needed.
struct ScalarField {
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> gradient;
  std::string note;

  static ScalarField constant(double c) {
    return {[c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3::Zero().eval(); },
            "constant"};
  }
};

/// s(u, v) = grad_coeff * (grad u, grad v) + mass_coeff * (u, v)
struct FormWeights {
  enum class Tag { c, b, m, custom };
  double grad_coeff = 0.0;
  double mass_coeff = 0.0;
  Tag tag = Tag::custom;
};

/// Geometry of one flat facet: area, unit normal and the constant gradients
/// of the three barycentric basis functions.
struct ElementGeometry {
  std::array<Vec3, 3> corners;
  double area = 0.0;
  Vec3 normal;
  std::array<Vec3, 3> grad;

  Vec3 point(const std::array<double, 3>& bary) const {
    return bary[0] * corners[0] + bary[1] * corners[1] + bary[2] * corners[2];
  }
};

inline constexpr double kMinTriangleArea = 1e-14;

inline ElementGeometry element_geometry(const TriangleMesh& mesh, const Triangle& t) {
  ElementGeometry g;
  for (int i = 0; i < 3; ++i) g.corners[i] = mesh.vertices[t[i]];
  const Vec3 n = (g.corners[1] - g.corners[0]).cross(g.corners[2] - g.corners[0]);
  const double twice_area = n.norm();
  g.area = 0.5 * twice_area;
  if (!(g.area >= kMinTriangleArea)) throw Error("degenerate triangle (area below 1e-14)");
  g.normal = n / twice_area;
  for (int i = 0; i < 3; ++i)
    g.grad[i] = g.normal.cross(g.corners[(i + 2) % 3] - g.corners[(i + 1) % 3]) / twice_area;
  return g;
}

namespace detail {

template <class LocalFn>
SparseMatrix assemble_local(const FESpace& space, LocalFn&& local) {
  const auto& mesh = *space.mesh;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_triangles() * 9);
  for (const auto& t : mesh.triangles) {
    const auto g = element_geometry(mesh, t);
    const Eigen::Matrix3d a = local(g);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], a(i, j));
  }
  const auto n = static_cast<Eigen::Index>(space.ndof());
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

inline double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value of ") + what);
  return v;
}

}  // namespace detail

inline Eigen::Matrix3d local_stiffness(const ElementGeometry& g) {
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k(i, j) = g.area * g.grad[i].dot(g.grad[j]);
  return k;
}

inline Eigen::Matrix3d local_mass(const ElementGeometry& g) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Constant(1.0);
  m.diagonal().setConstant(2.0);
  return (g.area / 12.0) * m;
}

inline SparseMatrix assemble_stiffness(const FESpace& space) {
  return detail::assemble_local(space, local_stiffness);
}

inline SparseMatrix assemble_mass(const FESpace& space) {
  return detail::assemble_local(space, local_mass);
}

/// F_i = sum_T sum_q w_q f(p(x_q)) phi_i(x_q) |T|
inline Vector assemble_load(const FESpace& space, const ScalarField& field, int quad_degree) {
  const auto rule = triangle_rule(quad_degree);
  const auto& mesh = *space.mesh;
  Vector f = Vector::Zero(static_cast<Eigen::Index>(space.ndof()));
  for (const auto& t : mesh.triangles) {
    const auto g = element_geometry(mesh, t);
    for (const auto& q : rule) {
      const double v = detail::checked(
          field.value(lift_point(g.point(q.bary), mesh.geometry)), "load field at quadrature node");
      for (int i = 0; i < 3; ++i) f[t[i]] += q.weight * g.area * v * q.bary[i];
    }
  }
  return f;
}

inline SparseMatrix form_matrix(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                const FormWeights& w) {
  if (stiffness.rows() != mass.rows() || stiffness.cols() != mass.cols())
    throw Error("form_matrix: dimension mismatch");
  SparseMatrix s = w.grad_coeff * stiffness + w.mass_coeff * mass;
  s.makeCompressed();
  return s;
}

/// Index of the vertex coinciding with `x` (within `tol`), or -1.
inline int find_vertex(const TriangleMesh& mesh, const Vec3& x, double tol = 1e-12) {
  for (const auto& c : mesh.constraint_vertices)
    if ((mesh.vertices[c.vertex] - x).norm() <= tol) return c.vertex;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if ((mesh.vertices[i] - x).norm() <= tol) return static_cast<int>(i);
  return -1;
}

/// Row j holds a single unit entry at the vertex coinciding with points[j].
inline SparseMatrix point_eval_matrix(const FESpace& space, const std::vector<Vec3>& points) {
  SparseMatrix t(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(space.ndof()));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t j = 0; j < points.size(); ++j) {
    const int v = find_vertex(*space.mesh, points[j]);
    if (v < 0) throw Error("constraint point off-grid: " + detail::point_label(points[j]));
    trip.emplace_back(static_cast<int>(j), v, 1.0);
  }
  t.setFromTriplets(trip.begin(), trip.end());
  t.makeCompressed();
  return t;
}

/// a_i = integral of phi_i
inline Vector mean_vector(const FESpace& space) {
  return assemble_mass(space) * Vector::Ones(static_cast<Eigen::Index>(space.ndof()));
}

inline FEFunction interpolate(std::shared_ptr<const FESpace> space, const ScalarField& field) {
  const auto& mesh = *space->mesh;
  Vector c(static_cast<Eigen::Index>(space->ndof()));
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double v = field.value(lift_point(mesh.vertices[i], mesh.geometry));
    if (!std::isfinite(v))
      throw NumericalError("interpolate: non-finite field value at vertex " + std::to_string(i) +
                           " " + detail::point_label(mesh.vertices[i]));
    c[static_cast<Eigen::Index>(i)] = v;
  }
  return {std::move(space), std::move(c)};
}

/// Stiffness, mass and the three splitting forms on one space.
struct AssembledForms {
  SparseMatrix stiffness;
  SparseMatrix mass;
  SparseMatrix c;
  SparseMatrix b;
  SparseMatrix m;
};

inline AssembledForms assemble_forms(const FESpace& space, const FormWeights& c,
                                     const FormWeights& b, const FormWeights& m) {
  AssembledForms f;
  f.stiffness = assemble_stiffness(space);
  f.mass = assemble_mass(space);
  f.c = form_matrix(f.stiffness, f.mass, c);
  f.b = form_matrix(f.stiffness, f.mass, b);
  f.m = form_matrix(f.stiffness, f.mass, m);
  return f;
}

/// Weights of the splitting forms for the membrane models with bending
/// rigidity kappa and tension sigma. On a sphere of radius R:
///   c = (sigma/kappa - 2 - 2/R^2) grad-grad - (1 + 2 sigma/(kappa R^2)) mass,
/// and in the flat (Monge gauge) case:
///   c = (sigma/kappa - 2) grad-grad - mass.
/// In both cases b = grad-grad + mass and m = mass.
struct MembraneWeights {
  FormWeights c, b, m;
};

inline MembraneWeights sphere_membrane_weights(double kappa, double sigma, double radius) {
  const double r2 = radius * radius;
  return {{sigma / kappa - 2.0 - 2.0 / r2, -(1.0 + 2.0 * sigma / (kappa * r2)), FormWeights::Tag::c},
          {1.0, 1.0, FormWeights::Tag::b},
          {0.0, 1.0, FormWeights::Tag::m}};
}

inline MembraneWeights flat_membrane_weights(double kappa, double sigma) {
  return {{sigma / kappa - 2.0, -1.0, FormWeights::Tag::c},
          {1.0, 1.0, FormWeights::Tag::b},
          {0.0, 1.0, FormWeights::Tag::m}};
}

inline AssembledForms assemble_forms(const FESpace& space, const MembraneWeights& w) {
  return assemble_forms(space, w.c, w.b, w.m);
}

}  // namespace sosfem
