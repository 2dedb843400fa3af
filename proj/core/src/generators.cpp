#include <algorithm>
#include <cmath>
#include <map>

#include "mtbem/geometry.hpp"

namespace mtbem {

namespace {

std::vector<double> linspace(double lo, double hi, int cells) {
  std::vector<double> out(static_cast<std::size_t>(cells + 1));
  for (int i = 0; i <= cells; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / cells;
  out.back() = hi;
  return out;
}

// Collects axis-aligned quads into a watertight triangulation. Vertices are
// merged on a 1e-9 lattice, which is exact for coordinates produced by
// linspace() from shared breakpoints.
class QuadSurface {
 public:
  void add_quad(const std::array<Vec3, 4>& q, const Vec3& outward) {
    // Split along the diagonal through the lexicographically smallest corner
    // so that two cubes sharing a face triangulate it identically.
    int first = 0;
    for (int i = 1; i < 4; ++i) {
      if (std::lexicographical_compare(q[i].data(), q[i].data() + 3, q[first].data(),
                                       q[first].data() + 3)) {
        first = i;
      }
    }
    std::array<int, 4> id;
    for (int i = 0; i < 4; ++i) id[i] = vertex(q[(first + i) % 4]);
    add_triangle({id[0], id[1], id[2]}, outward);
    add_triangle({id[0], id[2], id[3]}, outward);
  }

  Mesh build() { return Mesh(vertices_, triangles_); }

 private:
  int vertex(const Vec3& p) {
    const std::array<long long, 3> key{std::llround(p.x() * 1e9), std::llround(p.y() * 1e9),
                                       std::llround(p.z() * 1e9)};
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(vertices_.size()));
    if (inserted) vertices_.push_back(p);
    return it->second;
  }

  void add_triangle(Triangle t, const Vec3& outward) {
    const Vec3 n = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
    if (n.dot(outward) < 0.0) std::swap(t[1], t[2]);
    triangles_.push_back(t);
  }

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::map<std::array<long long, 3>, int> index_;
};

// Quads of the plane `axis = value` over cells of the other two axes.
// `keep(i, j)` filters cells.
template <class Keep>
void add_plane(QuadSurface& s, int axis, double value, const std::vector<double>& u,
               const std::vector<double>& v, const Vec3& outward, Keep keep) {
  const int ua = (axis + 1) % 3;
  const int va = (axis + 2) % 3;
  auto point = [&](double a, double b) {
    Vec3 p;
    p[axis] = value;
    p[ua] = a;
    p[va] = b;
    return p;
  };
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
      if (!keep(i, j)) continue;
      s.add_quad({point(u[i], v[j]), point(u[i + 1], v[j]), point(u[i + 1], v[j + 1]),
                  point(u[i], v[j + 1])},
                 outward);
    }
  }
}

constexpr auto all_cells = [](std::size_t, std::size_t) { return true; };

}  // namespace

int grid_cells(double length, double h) {
  return std::max(1, static_cast<int>(std::lround(length / h)));
}

Mesh generate_sphere(double radius, int subdivisions) {
  if (!(radius > 0.0) || subdivisions < 0) {
    throw MeshError(MeshError::Kind::InvalidArgument, "sphere needs radius > 0 and subdivisions >= 0");
  }
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto [it, inserted] = mid.try_emplace(std::minmax(a, b), static_cast<int>(v.size()));
      if (inserted) v.push_back((v[a] + v[b]).normalized());
      return it->second;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int ab = midpoint(t[0], t[1]);
      const int bc = midpoint(t[1], t[2]);
      const int ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (auto& t : f) {
    const Vec3 n = (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]);
    if (n.dot(v[t[0]] + v[t[1]] + v[t[2]]) < 0.0) std::swap(t[1], t[2]);
  }
  for (auto& p : v) p *= radius;
  return Mesh(std::move(v), std::move(f));
}

MultiMesh generate_cube_stack(double side, int count, double h_target) {
  if (!(side > 0.0) || count < 1 || !(h_target > 0.0)) {
    throw MeshError(MeshError::Kind::InvalidArgument,
                    "cube stack needs side > 0, count >= 1 and h_target > 0");
  }
  const int n = grid_cells(side, h_target);
  const auto xy = linspace(0.0, side, n);
  std::vector<Mesh> meshes;
  for (int k = 0; k < count; ++k) {
    const double z0 = side * k;
    const double z1 = side * (k + 1);
    const auto z = linspace(z0, z1, n);
    QuadSurface s;
    add_plane(s, 0, 0.0, xy, z, Vec3(-1, 0, 0), all_cells);
    add_plane(s, 0, side, xy, z, Vec3(1, 0, 0), all_cells);
    add_plane(s, 1, 0.0, z, xy, Vec3(0, -1, 0), all_cells);
    add_plane(s, 1, side, z, xy, Vec3(0, 1, 0), all_cells);
    add_plane(s, 2, z0, xy, xy, Vec3(0, 0, -1), all_cells);
    add_plane(s, 2, z1, xy, xy, Vec3(0, 0, 1), all_cells);
    meshes.push_back(s.build());
  }
  return make_multimesh(std::move(meshes));
}

Mesh generate_square_torus(double outer, double inner, double height, double h_target) {
  if (!(outer > inner) || !(inner > 0.0) || !(height > 0.0) || !(h_target > 0.0)) {
    throw MeshError(MeshError::Kind::InvalidArgument,
                    "square torus needs outer > inner > 0, height > 0 and h_target > 0");
  }
  if (outer - inner < 2.0 * h_target) {
    throw MeshError(MeshError::Kind::InvalidArgument,
                    "square torus is degenerate: outer - inner < 2 h_target");
  }
  const double ro = 0.5 * outer;
  const double ri = 0.5 * inner;
  const int n_rim = grid_cells(ro - ri, h_target);
  const int n_hole = grid_cells(inner, h_target);
  std::vector<double> a = linspace(-ro, -ri, n_rim);
  for (double x : linspace(-ri, ri, n_hole)) {
    if (x > a.back()) a.push_back(x);
  }
  for (double x : linspace(ri, ro, n_rim)) {
    if (x > a.back()) a.push_back(x);
  }
  const std::vector<double> hole = linspace(-ri, ri, n_hole);
  const auto z = linspace(0.0, height, grid_cells(height, h_target));

  auto solid = [&](std::size_t i, std::size_t j) {
    const double cx = 0.5 * (a[i] + a[i + 1]);
    const double cy = 0.5 * (a[j] + a[j + 1]);
    return !(std::abs(cx) < ri && std::abs(cy) < ri);
  };
  QuadSurface s;
  add_plane(s, 2, 0.0, a, a, Vec3(0, 0, -1), solid);
  add_plane(s, 2, height, a, a, Vec3(0, 0, 1), solid);
  add_plane(s, 0, -ro, a, z, Vec3(-1, 0, 0), all_cells);
  add_plane(s, 0, ro, a, z, Vec3(1, 0, 0), all_cells);
  add_plane(s, 1, -ro, z, a, Vec3(0, -1, 0), all_cells);
  add_plane(s, 1, ro, z, a, Vec3(0, 1, 0), all_cells);
  // Hole walls face the hole.
  add_plane(s, 0, -ri, hole, z, Vec3(1, 0, 0), all_cells);
  add_plane(s, 0, ri, hole, z, Vec3(-1, 0, 0), all_cells);
  add_plane(s, 1, -ri, z, hole, Vec3(0, 1, 0), all_cells);
  add_plane(s, 1, ri, z, hole, Vec3(0, -1, 0), all_cells);
  Mesh mesh = s.build();
  validate(mesh);
  return mesh;
}

}  // namespace mtbem
