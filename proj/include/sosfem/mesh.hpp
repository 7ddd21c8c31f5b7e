#pragma once
/**
 * @file mesh.hpp
 * @brief Triangulated approximations of the unit disc and of spheres.
 *
 * Both mesh families are produced by uniform quadrisection of a fixed coarse
 * template. New vertices are placed on the smooth surface (radially for the
 * sphere, onto the unit circle for boundary edges of the disc), so every
 * vertex of the polyhedral surface lies on the exact one. Constraint points
 * are vertices of the coarse template and therefore persist bit-exactly.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sosfem/error.hpp"

namespace sosfem {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

struct Geometry {
  enum class Kind { Sphere, FlatDisc };
  Kind kind = Kind::FlatDisc;
  double radius = 1.0;  // sphere radius; unused for the disc

  static Geometry sphere(double r) { return {Kind::Sphere, r}; }
  static Geometry flat_disc() { return {Kind::FlatDisc, 1.0}; }
  bool is_sphere() const { return kind == Kind::Sphere; }
};

struct ConstraintVertex {
  std::string label;
  int vertex = -1;
};

/// Polyhedral surface Gamma_h. Flat meshes use z = 0.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  Geometry geometry;
  std::vector<int> boundary_vertices;  // sorted, empty for closed surfaces
  std::vector<ConstraintVertex> constraint_vertices;  // ordering is the multiplier ordering
  int level = 0;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  std::vector<Vec3> constraint_points() const {
    std::vector<Vec3> pts;
    pts.reserve(constraint_vertices.size());
    for (const auto& c : constraint_vertices) pts.push_back(vertices[c.vertex]);
    return pts;
  }
};

struct MeshStats {
  double h = 0.0;  // max longest edge
  std::size_t num_vertices = 0;
  std::size_t num_triangles = 0;
  double total_area = 0.0;
};

inline constexpr int kMaxMeshLevel = 10;

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline std::unordered_map<std::uint64_t, int> edge_counts(const std::vector<Triangle>& tris) {
  std::unordered_map<std::uint64_t, int> counts;
  counts.reserve(tris.size() * 2);
  for (const auto& t : tris)
    for (int e = 0; e < 3; ++e) ++counts[edge_key(t[e], t[(e + 1) % 3])];
  return counts;
}

inline void check_level(int level) {
  if (level < 0 || level > kMaxMeshLevel)
    throw Error("mesh level " + std::to_string(level) + " out of range [0, " +
                std::to_string(kMaxMeshLevel) + "]");
}

inline std::string point_label(const Vec3& p) {
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s == "-0" ? std::string("0") : s;
  };
  return "(" + fmt(p.x()) + "," + fmt(p.y()) + "," + fmt(p.z()) + ")";
}

}  // namespace detail

/// Closest-point projection onto the smooth surface.
inline Vec3 lift_point(const Vec3& x, const Geometry& geometry) {
  if (!geometry.is_sphere()) return x;
  const double n = x.norm();
  if (n == 0.0) throw Error("cannot lift the origin onto a sphere");
  return (geometry.radius / n) * x;
}

/// Uniform quadrisection. Midpoints of sphere edges are pushed radially to
/// the sphere; midpoints of disc boundary edges are pushed onto the unit circle.
inline TriangleMesh refine(const TriangleMesh& mesh) {
  TriangleMesh out;
  out.geometry = mesh.geometry;
  out.level = mesh.level + 1;
  out.constraint_vertices = mesh.constraint_vertices;
  out.vertices = mesh.vertices;
  out.vertices.reserve(mesh.vertices.size() + mesh.triangles.size() * 3 / 2 + 8);
  out.triangles.reserve(mesh.triangles.size() * 4);

  const auto counts = detail::edge_counts(mesh.triangles);
  std::vector<char> on_boundary(mesh.vertices.size(), 0);
  for (int b : mesh.boundary_vertices) on_boundary[b] = 1;
  std::vector<int> new_boundary = mesh.boundary_vertices;

  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(counts.size());
  auto mid = [&](int a, int b) {
    const auto key = detail::edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    Vec3 p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    const bool boundary_edge = counts.at(key) == 1;
    if (mesh.geometry.is_sphere()) {
      p = lift_point(p, mesh.geometry);
    } else if (boundary_edge && on_boundary[a] && on_boundary[b]) {
      p /= p.norm();
    }
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    if (!mesh.geometry.is_sphere() && boundary_edge) new_boundary.push_back(idx);
    midpoint.emplace(key, idx);
    return idx;
  };

  for (const auto& t : mesh.triangles) {
    const int ab = mid(t[0], t[1]);
    const int bc = mid(t[1], t[2]);
    const int ca = mid(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  std::sort(new_boundary.begin(), new_boundary.end());
  out.boundary_vertices = std::move(new_boundary);
  return out;
}

/// Octahedron inscribed in the sphere of radius R, refined `level` times.
/// The six axis vertices are registered as constraint vertices in the order
/// (+x, -x, +y, -y, +z, -z).
inline TriangleMesh build_octasphere(int level, double radius = 1.0) {
  detail::check_level(level);
  if (!(radius > 0.0)) throw Error("sphere radius must be positive");
  TriangleMesh mesh;
  mesh.geometry = Geometry::sphere(radius);
  const double r = radius;
  mesh.vertices = {Vec3(r, 0, 0), Vec3(-r, 0, 0), Vec3(0, r, 0),
                   Vec3(0, -r, 0), Vec3(0, 0, r), Vec3(0, 0, -r)};
  for (int sx : {0, 1})
    for (int sy : {0, 1})
      for (int sz : {0, 1}) {
        Triangle t{sx, 2 + sy, 4 + sz};
        if ((sx + sy + sz) % 2 == 1) std::swap(t[1], t[2]);  // keep outward orientation
        mesh.triangles.push_back(t);
      }
  for (int i = 0; i < 6; ++i)
    mesh.constraint_vertices.push_back({detail::point_label(mesh.vertices[i] / r), i});
  for (int l = 0; l < level; ++l) mesh = refine(mesh);
  return mesh;
}

/// Polygon inscribed in the unit disc, refined `level` times. The coarse
/// template has the origin, the four points at radius 0.5 on the axes and
/// eight points on the circle; constraint ordering is
/// (0,0), (0.5,0), (-0.5,0), (0,0.5), (0,-0.5).
inline TriangleMesh build_disc_mesh(int level) {
  detail::check_level(level);
  TriangleMesh mesh;
  mesh.geometry = Geometry::flat_disc();
  const double pi = std::acos(-1.0);
  // 0: centre, 1..4: inner ring at angles 0, 90, 180, 270 deg, 5..12: circle at 45 deg steps
  mesh.vertices.push_back(Vec3::Zero());
  const std::array<Vec3, 4> inner{Vec3(0.5, 0, 0), Vec3(0, 0.5, 0), Vec3(-0.5, 0, 0),
                                  Vec3(0, -0.5, 0)};
  for (const auto& p : inner) mesh.vertices.push_back(p);
  for (int j = 0; j < 8; ++j) {
    if (j % 2 == 0) {
      mesh.vertices.push_back(2.0 * inner[j / 2]);  // exact axis points
    } else {
      const double a = pi / 4.0 * j;
      mesh.vertices.push_back(Vec3(std::cos(a), std::sin(a), 0.0));
    }
  }
  auto I = [](int i) { return 1 + (i % 4); };
  auto B = [](int j) { return 5 + (j % 8); };
  for (int i = 0; i < 4; ++i) {
    mesh.triangles.push_back({0, I(i), I(i + 1)});
    mesh.triangles.push_back({I(i), B(2 * i), B(2 * i + 1)});
    mesh.triangles.push_back({I(i), B(2 * i + 1), I(i + 1)});
    mesh.triangles.push_back({I(i + 1), B(2 * i + 1), B(2 * i + 2)});
  }
  for (int j = 0; j < 8; ++j) mesh.boundary_vertices.push_back(B(j));
  mesh.constraint_vertices = {{"(0,0)", 0}, {"(0.5,0)", 1}, {"(-0.5,0)", 3},
                              {"(0,0.5)", 2}, {"(0,-0.5)", 4}};
  for (int l = 0; l < level; ++l) mesh = refine(mesh);
  return mesh;
}

inline double triangle_area(const TriangleMesh& mesh, const Triangle& t) {
  const Vec3& a = mesh.vertices[t[0]];
  return 0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm();
}

inline MeshStats mesh_size(const TriangleMesh& mesh) {
  MeshStats s;
  s.num_vertices = mesh.num_vertices();
  s.num_triangles = mesh.num_triangles();
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e)
      s.h = std::max(s.h, (mesh.vertices[t[e]] - mesh.vertices[t[(e + 1) % 3]]).norm());
    s.total_area += triangle_area(mesh, t);
  }
  return s;
}

/// Every edge is shared by exactly two triangles (closed) or at most two (with boundary).
inline bool is_edge_manifold(const TriangleMesh& mesh) {
  const bool closed = mesh.geometry.is_sphere();
  for (const auto& [key, n] : detail::edge_counts(mesh.triangles)) {
    if (n > 2 || (closed && n != 2)) return false;
  }
  return true;
}

/// Checks the geometric invariants of meshes produced by the builders above.
/// Returns an empty string when the mesh is valid, otherwise a description.
inline std::string validate_mesh(const TriangleMesh& mesh, double tol = 1e-12) {
  if (!is_edge_manifold(mesh)) return "mesh is not edge-manifold";
  const auto n = static_cast<int>(mesh.vertices.size());
  for (const auto& t : mesh.triangles)
    for (int v : t)
      if (v < 0 || v >= n) return "triangle references a missing vertex";
  if (mesh.geometry.is_sphere()) {
    for (const auto& v : mesh.vertices)
      if (std::abs(v.norm() - mesh.geometry.radius) > tol) return "vertex off the sphere";
    if (!mesh.boundary_vertices.empty()) return "closed surface with boundary vertices";
  } else {
    for (int b : mesh.boundary_vertices)
      if (std::abs(mesh.vertices[b].norm() - 1.0) > tol) return "boundary vertex off the circle";
    for (const auto& v : mesh.vertices)
      if (v.norm() > 1.0 + tol) return "vertex outside the unit disc";
  }
  for (const auto& c : mesh.constraint_vertices)
    if (c.vertex < 0 || c.vertex >= n) return "constraint vertex index out of range";
  return {};
}

/// Writes the mesh as OFF text.
inline void write_off(std::ostream& os, const TriangleMesh& mesh) {
  os << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
  os.precision(17);
  for (const auto& v : mesh.vertices) os << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace sosfem
