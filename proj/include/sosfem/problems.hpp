#pragma once
/**
 * @file problems.hpp
 * @brief Manufactured membrane problems with known solutions.
 *
 * Flat: clamped-free plate on the unit disc with Navier conditions, five
 * point constraints, kappa = 1, sigma = 0 and vanishing data. The solution
 * u = 1 - r^2 + (r^2 / 2) log r^2 is the biharmonic Green's function shape,
 * so the only nonzero multiplier sits at the origin: Delta^2 u = 8 pi delta_0
 * gives lambda = (-8 pi, 0, 0, 0, 0).
 *
 * Sphere: unit sphere, kappa = sigma = 1, six axis constraints, mean value
 * constraints on u and w. With t = x_3,
 *   u = (1 - t) log(1 - t) - (log 4 - 1) / 2,
 *   w = log(1 - t) - (log 2 - 1)      (shifted to zero mean).
 * Delta_Gamma log(1 - t) = -1 + 4 pi delta_N, so the north pole carries the
 * multiplier 4 pi and the mean multipliers absorb the shift of w:
 * p = log 2 - 1, q = -(log 2 - 1).
 */

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sosfem/p1.hpp"

namespace sosfem {

enum class ProblemKind { Flat, Sphere };

struct ExactFields {
  ProblemKind kind = ProblemKind::Flat;
  ScalarField u;
  ScalarField w;
  std::optional<ScalarField> w_unshifted;
  ScalarField f;
  ScalarField g;
  std::vector<Vec3> points;
  std::vector<std::string> point_labels;
  Vector Z;
  std::optional<Vector> lambda;
  std::optional<double> p_bar;
  std::optional<double> q_bar;
  std::vector<int> singular_points;  // indices into `points` where w is unbounded
};

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

inline double flat_u(const Vec3& x) {
  const double r2 = x.x() * x.x() + x.y() * x.y();
  if (r2 == 0.0) return 1.0;
  return 1.0 - r2 + 0.5 * r2 * std::log(r2);
}

inline Vec3 flat_grad_u(const Vec3& x) {
  const double r2 = x.x() * x.x() + x.y() * x.y();
  if (r2 == 0.0) return Vec3::Zero();
  return (std::log(r2) - 1.0) * Vec3(x.x(), x.y(), 0.0);
}

inline double sphere_u(double t) {
  const double s = 1.0 - t;
  const double shift = 0.5 * (std::log(4.0) - 1.0);
  return (s > 0.0 ? s * std::log(s) : 0.0) - shift;
}

// d/dt of the sphere profiles; the surface gradient of phi(x_3) on the unit
// sphere is phi'(t) (e_3 - t x).
inline Vec3 sphere_tangent(const Vec3& x, double dphi) {
  return dphi * (Vec3::UnitZ() - x.z() * x);
}

}  // namespace detail

inline ExactFields flat_problem() {
  using detail::flat_grad_u;
  using detail::flat_u;
  ExactFields e;
  e.kind = ProblemKind::Flat;
  e.u = {flat_u, flat_grad_u, "1 - r^2 + (r^2/2) log r^2"};
  e.w = {[](const Vec3& x) {
           const double r2 = x.x() * x.x() + x.y() * x.y();
           if (r2 == 0.0) return std::numeric_limits<double>::infinity();
           return -2.0 * std::log(r2) + flat_u(x);
         },
         [](const Vec3& x) -> Vec3 {
           const double r2 = x.x() * x.x() + x.y() * x.y();
           if (r2 == 0.0) return Vec3::Constant(std::numeric_limits<double>::infinity());
           return (-4.0 / r2) * Vec3(x.x(), x.y(), 0.0) + flat_grad_u(x);
         },
         "-2 log r^2 + u (log-singular at the origin)"};
  e.f = ScalarField::constant(0.0);
  e.g = ScalarField::constant(0.0);
  e.points = {Vec3(0, 0, 0), Vec3(0.5, 0, 0), Vec3(-0.5, 0, 0), Vec3(0, 0.5, 0), Vec3(0, -0.5, 0)};
  e.point_labels = {"(0,0)", "(0.5,0)", "(-0.5,0)", "(0,0.5)", "(0,-0.5)"};
  e.Z.resize(5);
  for (int j = 0; j < 5; ++j) e.Z[j] = flat_u(e.points[j]);
  e.lambda = Vector::Zero(5);
  (*e.lambda)[0] = -8.0 * detail::kPi;
  e.singular_points = {0};
  return e;
}

inline ExactFields sphere_problem() {
  using detail::sphere_tangent;
  ExactFields e;
  e.kind = ProblemKind::Sphere;
  const double mean_log = std::log(2.0) - 1.0;
  e.u = {[](const Vec3& x) { return detail::sphere_u(x.z()); },
         [](const Vec3& x) -> Vec3 {
           const double s = 1.0 - x.z();
           if (s <= 0.0) return Vec3::Zero();
           return sphere_tangent(x, -std::log(s) - 1.0);
         },
         "(1-x3) log(1-x3) - (log 4 - 1)/2"};
  auto log_w = [](const Vec3& x) {
    const double s = 1.0 - x.z();
    return s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
  };
  auto grad_log_w = [](const Vec3& x) -> Vec3 {
    const double s = 1.0 - x.z();
    if (s <= 0.0) return Vec3::Constant(std::numeric_limits<double>::infinity());
    return sphere_tangent(x, -1.0 / s);
  };
  e.w = {[=](const Vec3& x) { return log_w(x) - mean_log; }, grad_log_w,
         "log(1-x3) - (log 2 - 1)"};
  e.w_unshifted = ScalarField{log_w, grad_log_w, "log(1-x3)"};
  e.f = {[](const Vec3& x) {
           const double t = x.z(), s = 1.0 - t;
           const double ls = s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
           return 9.0 * t * ls + 9.0 * t - 2.0 * ls + 0.5 * (5.0 + 3.0 * std::log(4.0));
         },
         {},
         "9 x3 log(1-x3) + 9 x3 - 2 log(1-x3) + (5 + 3 log 4)/2"};
  e.g = {[](const Vec3& x) {
           const double t = x.z(), s = 1.0 - t;
           return -3.0 * t * (s > 0.0 ? std::log(s) : 0.0) - 3.0 * t - 0.5 * (std::log(4.0) + 1.0);
         },
         {},
         "-3 x3 log(1-x3) - 3 x3 - (log 4 + 1)/2"};
  e.points = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0),
              Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
  e.point_labels = {"(1,0,0)", "(-1,0,0)", "(0,1,0)", "(0,-1,0)", "(0,0,1)", "(0,0,-1)"};
  e.Z.resize(6);
  for (int j = 0; j < 6; ++j) e.Z[j] = detail::sphere_u(e.points[j].z());
  e.lambda = Vector::Zero(6);
  (*e.lambda)[4] = 4.0 * detail::kPi;
  e.p_bar = mean_log;
  e.q_bar = -mean_log;
  e.singular_points = {4};
  return e;
}

inline ExactFields exact_fields(ProblemKind kind) {
  return kind == ProblemKind::Flat ? flat_problem() : sphere_problem();
}

}  // namespace sosfem
