#pragma once
// Symmetric quadrature rules on the reference triangle with strictly interior
// nodes (Strang-Fix / Dunavant). Weights sum to one; multiply by the area.

#include <array>
#include <string>
#include <vector>

#include "sosfem/error.hpp"

namespace sosfem {

struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;
};

using QuadratureRule = std::vector<QuadraturePoint>;

namespace detail {

inline void add_orbit3(QuadratureRule& rule, double a, double b, double w) {
  // (a, b, b) and its rotations
  rule.push_back({{a, b, b}, w});
  rule.push_back({{b, a, b}, w});
  rule.push_back({{b, b, a}, w});
}

inline void add_orbit6(QuadratureRule& rule, double a, double b, double c, double w) {
  rule.push_back({{a, b, c}, w});
  rule.push_back({{a, c, b}, w});
  rule.push_back({{b, a, c}, w});
  rule.push_back({{b, c, a}, w});
  rule.push_back({{c, a, b}, w});
  rule.push_back({{c, b, a}, w});
}

}  // namespace detail

/// Rule exact for polynomials of total degree <= `degree` (1..6).
inline QuadratureRule triangle_rule(int degree) {
  QuadratureRule r;
  switch (degree) {
    case 1:
      r.push_back({{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0});
      break;
    case 2:
      detail::add_orbit3(r, 2.0 / 3, 1.0 / 6, 1.0 / 3);
      break;
    case 3:
      detail::add_orbit6(r, 0.659027622374092, 0.231933368553031, 0.109039009072877, 1.0 / 6);
      break;
    case 4:
      detail::add_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
      detail::add_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
      break;
    case 5:
      r.push_back({{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225});
      detail::add_orbit3(r, 0.059715871789770, 0.470142064105115, 0.132394152788506);
      detail::add_orbit3(r, 0.797426985353087, 0.101286507323456, 0.125939180544827);
      break;
    case 6:
      detail::add_orbit3(r, 0.501426509658179, 0.249286745170910, 0.116786275726379);
      detail::add_orbit3(r, 0.873821971016996, 0.063089014491502, 0.050844906370207);
      detail::add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.636502499121399,
                         0.082851075618374);
      break;
    default:
      throw Error("quadrature degree " + std::to_string(degree) + " not in 1..6");
  }
  return r;
}

}  // namespace sosfem
