#pragma once
/**
 * @file error_metrics.hpp
 * @brief Relative errors of P1 functions against exact fields, and
 * experimental orders of convergence.
 *
 * Errors are integrated over the facets of Gamma_h. The exact field is
 * evaluated at the lifted quadrature point; its surface gradient is
 * projected onto the facet plane before being compared with the (constant)
 * discrete gradient.
 */

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sosfem/p1.hpp"

namespace sosfem {

struct NormKind {
  enum class Tag { L2, H1, W1p };
  Tag tag = Tag::L2;
  double p = 2.0;

  static NormKind l2() { return {Tag::L2, 2.0}; }
  static NormKind h1() { return {Tag::H1, 2.0}; }
  static NormKind w1p(double p) {
    if (!(p > 1.0 && p <= 2.0)) throw Error("W1p exponent must lie in (1, 2]");
    return {Tag::W1p, p};
  }
  bool has_gradient() const { return tag != Tag::L2; }
  std::string name() const {
    switch (tag) {
      case Tag::L2: return "L2";
      case Tag::H1: return "H1";
      default: return "W1p(" + std::to_string(p) + ")";
    }
  }
};

struct NormError {
  double absolute = 0.0;
  double relative = 0.0;
  double exact_norm = 0.0;
};

/// || exact - v_h || and the same divided by || exact || (identical rule).
inline NormError fe_error_norm(const FEFunction& v_h, const ScalarField& exact, NormKind kind,
                               int quad_degree) {
  const auto& space = *v_h.space;
  const auto& mesh = *space.mesh;
  if (v_h.coefficients.size() != static_cast<Eigen::Index>(space.ndof()))
    throw Error("fe_error_norm: coefficient length does not match the space");
  if (kind.has_gradient() && !exact.gradient)
    throw Error("fe_error_norm: gradient norm requested but field has no gradient");
  const double p = kind.tag == NormKind::Tag::W1p ? kind.p : 2.0;
  const auto rule = triangle_rule(quad_degree);

  double err = 0.0, ref = 0.0;
  for (const auto& t : mesh.triangles) {
    const auto g = element_geometry(mesh, t);
    const Eigen::Vector3d nodal(v_h.coefficients[t[0]], v_h.coefficients[t[1]],
                                v_h.coefficients[t[2]]);
    Vec3 grad_h = Vec3::Zero();
    if (kind.has_gradient())
      for (int i = 0; i < 3; ++i) grad_h += nodal[i] * g.grad[i];
    for (const auto& q : rule) {
      const Vec3 y = lift_point(g.point(q.bary), mesh.geometry);
      const double u = detail::checked(exact.value(y), "exact field at quadrature node");
      const double uh = q.bary[0] * nodal[0] + q.bary[1] * nodal[1] + q.bary[2] * nodal[2];
      const double wq = q.weight * g.area;
      err += wq * std::pow(std::abs(u - uh), p);
      ref += wq * std::pow(std::abs(u), p);
      if (kind.has_gradient()) {
        Vec3 gu = exact.gradient(y);
        if (!gu.allFinite()) throw NumericalError("non-finite exact gradient at quadrature node");
        gu -= gu.dot(g.normal) * g.normal;
        err += wq * std::pow((gu - grad_h).norm(), p);
        ref += wq * std::pow(gu.norm(), p);
      }
    }
  }
  NormError out;
  out.absolute = std::pow(err, 1.0 / p);
  out.exact_norm = std::pow(ref, 1.0 / p);
  out.relative = out.exact_norm > 0.0 ? out.absolute / out.exact_norm
                                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// ||lambda_h - lambda||_2 / ||lambda||_2
inline double lambda_error(const Vector& lambda_h, const Vector& lambda_exact) {
  if (lambda_h.size() != lambda_exact.size()) throw Error("lambda_error: dimension mismatch");
  const double ref = lambda_exact.norm();
  if (!(ref > 0.0)) throw Error("lambda_error: exact multiplier is zero");
  return (lambda_h - lambda_exact).norm() / ref;
}

/// Experimental order of convergence log(E1/E2) / log(h1/h2). The same
/// formula is used with penalty parameters in place of mesh sizes.
inline double eoc(double e1, double e2, double h1, double h2) {
  if (!(e1 > 0.0 && e2 > 0.0 && h1 > 0.0 && h2 > 0.0))
    throw Error("eoc: inputs must be positive");
  if (h1 == h2) throw Error("eoc: h1 == h2");
  return std::log(e1 / e2) / std::log(h1 / h2);
}

/// One row of a convergence table. Errors and EOCs are keyed by column name;
/// EOCs are absent on the first row.
struct ErrorRow {
  double h = 0.0;
  std::optional<double> epsilon;
  std::vector<std::pair<std::string, double>> errors;
  std::vector<std::pair<std::string, std::optional<double>>> eocs;

  std::optional<double> error(const std::string& name) const {
    for (const auto& [k, v] : errors)
      if (k == name) return v;
    return std::nullopt;
  }
  std::optional<double> eoc_of(const std::string& name) const {
    for (const auto& [k, v] : eocs)
      if (k == name) return v;
    return std::nullopt;
  }
};

}  // namespace sosfem
