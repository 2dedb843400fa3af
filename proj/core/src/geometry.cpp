#include "mtbem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace mtbem {

namespace {

std::string edge_name(int a, int b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

// Groups points closer than `tol` (max-norm on x, Euclidean check). Returns a
// representative id per point.
std::vector<std::size_t> merge_points(const std::vector<Vec3>& pts, double tol) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x() < pts[b].x();
  });
  UnionFind uf(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Vec3& p = pts[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Vec3& q = pts[order[j]];
      if (q.x() - p.x() > tol) break;
      if ((p - q).norm() <= tol) uf.unite(order[i], order[j]);
    }
  }
  std::vector<std::size_t> rep(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) rep[i] = uf.find(i);
  return rep;
}

struct TripleHash {
  std::size_t operator()(const std::array<std::size_t, 3>& k) const noexcept {
    std::size_t h = k[0];
    h = h * 0x9E3779B97F4A7C15ull ^ k[1];
    h = h * 0x9E3779B97F4A7C15ull ^ k[2];
    return h;
  }
};

}  // namespace

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = num_vertices();
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int v : triangles_[t]) {
      if (v < 0 || v >= nv) {
        throw MeshError(MeshError::Kind::MalformedFile,
                        "triangle " + std::to_string(t) + " references missing vertex " +
                            std::to_string(v));
      }
    }
    const auto& tri = triangles_[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshError(MeshError::Kind::DegenerateTriangle,
                      "triangle " + std::to_string(t) + " repeats a vertex");
    }
  }
  areas_.resize(triangles_.size());
  normals_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto c = corners(static_cast<int>(t));
    const Vec3 cr = (c[1] - c[0]).cross(c[2] - c[0]);
    const double n = cr.norm();
    areas_[t] = 0.5 * n;
    normals_[t] = n > 0.0 ? Vec3(cr / n) : Vec3::Zero();
  }
  build_connectivity();
}

void Mesh::build_connectivity() {
  std::map<std::pair<int, int>, int> index;
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int i = 0; i < 3; ++i) {
      const int a = tri[(i + 1) % 3];
      const int b = tri[(i + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = index.try_emplace(key, num_edges());
      if (inserted) {
        Edge e{{key.first, key.second}, {-1, -1}};
        edges_.push_back(e);
      }
      Edge& e = edges_[it->second];
      const bool forward = (a == e.v[0]);
      int& slot = forward ? e.tri[0] : e.tri[1];
      if (slot != -1) {
        const bool twice = (e.tri[0] != -1 && e.tri[1] != -1);
        throw MeshError(twice ? MeshError::Kind::NonManifold
                              : MeshError::Kind::InconsistentOrientation,
                        (twice ? "edge shared by more than two triangles: "
                               : "neighbouring triangles traverse edge in the same direction: ") +
                            edge_name(e.v[0], e.v[1]));
      }
      slot = t;
      triangle_edges_[t][i] = it->second;
    }
  }
  // Boundary edges that only have a minus side are stored with tri[0] = -1;
  // normalise so that tri[0] is always populated.
  for (auto& e : edges_) {
    if (e.tri[0] == -1) {
      std::swap(e.v[0], e.v[1]);
      std::swap(e.tri[0], e.tri[1]);
    }
  }
}

std::array<Vec3, 3> Mesh::corners(int t) const {
  const auto& tri = triangles_[t];
  return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
}

Vec3 Mesh::centroid(int t) const {
  const auto c = corners(t);
  return (c[0] + c[1] + c[2]) / 3.0;
}

double Mesh::diameter(int t) const {
  const auto c = corners(t);
  return std::max({(c[0] - c[1]).norm(), (c[1] - c[2]).norm(), (c[2] - c[0]).norm()});
}

double Mesh::total_area() const {
  return std::accumulate(areas_.begin(), areas_.end(), 0.0);
}

double Mesh::characteristic_size() const {
  if (edges_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : edges_) sum += (vertices_[e.v[0]] - vertices_[e.v[1]]).norm();
  return sum / static_cast<double>(edges_.size());
}

double Mesh::bounding_box_diagonal() const {
  if (vertices_.empty()) return 0.0;
  Vec3 lo = vertices_.front(), hi = vertices_.front();
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

double Mesh::signed_volume() const {
  double vol = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto c = corners(t);
    vol += c[0].dot(c[1].cross(c[2]));
  }
  return vol / 6.0;
}

bool Mesh::is_closed() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.tri[0] != -1 && e.tri[1] != -1; });
}

Mesh Mesh::flipped() const {
  auto tris = triangles_;
  for (auto& t : tris) std::swap(t[1], t[2]);
  return Mesh(vertices_, std::move(tris));
}

void validate(const Mesh& mesh) {
  if (mesh.num_triangles() == 0) {
    throw MeshError(MeshError::Kind::MalformedFile, "mesh has no triangles");
  }
  for (const auto& e : mesh.edges()) {
    if (e.tri[0] == -1 || e.tri[1] == -1) {
      throw MeshError(MeshError::Kind::OpenBoundary,
                      "boundary edge " + edge_name(e.v[0], e.v[1]) + " in a closed-surface mesh");
    }
  }
  const double scale = mesh.bounding_box_diagonal();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!(mesh.area(t) > 1e-14 * scale * scale)) {
      throw MeshError(MeshError::Kind::DegenerateTriangle,
                      "triangle " + std::to_string(t) + " has zero area");
    }
  }
  const auto rep = merge_points(mesh.vertices(), 1e-10 * scale);
  for (std::size_t i = 0; i < rep.size(); ++i) {
    if (rep[i] != i) {
      throw MeshError(MeshError::Kind::DuplicateVertex,
                      "vertices " + std::to_string(rep[i]) + " and " + std::to_string(i) +
                          " coincide");
    }
  }
}

BarycentricRefinement barycentric_refine(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  const int nt = mesh.num_triangles();

  std::vector<Vec3> verts;
  verts.reserve(static_cast<std::size_t>(nv + ne + nt));
  verts.insert(verts.end(), mesh.vertices().begin(), mesh.vertices().end());
  for (const auto& e : mesh.edges()) verts.push_back(0.5 * (mesh.vertex(e.v[0]) + mesh.vertex(e.v[1])));
  for (int t = 0; t < nt; ++t) verts.push_back(mesh.centroid(t));

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(6 * nt));
  BarycentricRefinement out;
  out.parent.reserve(static_cast<std::size_t>(6 * nt));
  out.children.resize(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles()[t];
    const int g = nv + ne + t;
    for (int i = 0; i < 3; ++i) {
      // Edge (v_i, v_{i+1}) is opposite local vertex i+2.
      const int m = nv + mesh.triangle_edge(t, (i + 2) % 3);
      out.children[t][2 * i] = static_cast<int>(tris.size());
      tris.push_back({tri[i], m, g});
      out.parent.push_back(t);
      out.children[t][2 * i + 1] = static_cast<int>(tris.size());
      tris.push_back({m, tri[(i + 1) % 3], g});
      out.parent.push_back(t);
    }
  }
  out.mesh = Mesh(std::move(verts), std::move(tris));

  out.child_shape.resize(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const auto P = mesh.corners(t);
    const Vec3& n = mesh.normal(t);
    const double two_area = 2.0 * mesh.area(t);
    for (int c = 0; c < 6; ++c) {
      const auto Q = out.mesh.corners(out.children[t][c]);
      Eigen::Matrix3d& M = out.child_shape[t][c];
      for (int m = 0; m < 3; ++m) {
        const Vec3& p = Q[(m + 1) % 3];
        const Vec3& q = Q[(m + 2) % 3];
        const Vec3 mid = 0.5 * (p + q);
        const Vec3 outward = (q - p).cross(n);
        for (int l = 0; l < 3; ++l) M(m, l) = (mid - P[l]).dot(outward) / two_area;
      }
    }
  }
  return out;
}

Boundary::Boundary(Mesh primal_mesh)
    : primal(std::move(primal_mesh)), refinement(barycentric_refine(primal)) {}

int MultiMesh::total_edges() const {
  int n = 0;
  for (const auto& m : meshes) n += m.num_edges();
  return n;
}

const InterfacePair* MultiMesh::find_interface(int j, int k) const {
  for (const auto& ip : interface_pairs) {
    if ((ip.j == j && ip.k == k) || (ip.j == k && ip.k == j)) return &ip;
  }
  return nullptr;
}

namespace {

// Uniform bucket grid over triangle bounding boxes.
class TriangleGrid {
 public:
  TriangleGrid(const Mesh& mesh, double cell) : mesh_(mesh), cell_(cell) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto c = mesh.corners(t);
      Vec3 lo = c[0].cwiseMin(c[1]).cwiseMin(c[2]);
      Vec3 hi = c[0].cwiseMax(c[1]).cwiseMax(c[2]);
      const auto a = key(lo), b = key(hi);
      for (long i = a[0]; i <= b[0]; ++i)
        for (long j = a[1]; j <= b[1]; ++j)
          for (long k = a[2]; k <= b[2]; ++k) cells_[{i, j, k}].push_back(t);
    }
  }

  const std::vector<int>* at(const Vec3& p) const {
    auto it = cells_.find(key(p));
    return it == cells_.end() ? nullptr : &it->second;
  }

 private:
  std::array<long, 3> key(const Vec3& p) const {
    return {static_cast<long>(std::floor(p.x() / cell_)), static_cast<long>(std::floor(p.y() / cell_)),
            static_cast<long>(std::floor(p.z() / cell_))};
  }

  const Mesh& mesh_;
  double cell_;
  std::map<std::array<long, 3>, std::vector<int>> cells_;
};

bool point_on_triangle(const Mesh& mesh, int t, const Vec3& p, double tol) {
  const auto c = mesh.corners(t);
  const Vec3& n = mesh.normal(t);
  if (std::abs(n.dot(p - c[0])) > tol) return false;
  const double two_a = 2.0 * mesh.area(t);
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = c[(i + 1) % 3];
    const Vec3& b = c[(i + 2) % 3];
    const double lambda = (b - a).cross(p - a).dot(n) / two_a;
    if (lambda <= 1e-9) return false;
  }
  return true;
}

}  // namespace

std::vector<InterfacePair> match_interfaces(const std::vector<Mesh>& meshes) {
  std::vector<Vec3> pts;
  std::vector<std::size_t> offset(meshes.size() + 1, 0);
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    offset[m + 1] = offset[m] + meshes[m].vertices().size();
    for (const auto& v : meshes[m].vertices()) {
      pts.push_back(v);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  if (pts.empty()) return {};
  const double tol = 1e-8 * (hi - lo).norm();
  const auto rep = merge_points(pts, tol);

  std::unordered_map<std::array<std::size_t, 3>, std::vector<std::pair<int, int>>, TripleHash> by_key;
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    for (int t = 0; t < meshes[m].num_triangles(); ++t) {
      const auto& tri = meshes[m].triangles()[t];
      std::array<std::size_t, 3> k{rep[offset[m] + tri[0]], rep[offset[m] + tri[1]],
                                   rep[offset[m] + tri[2]]};
      std::sort(k.begin(), k.end());
      by_key[k].emplace_back(static_cast<int>(m), t);
    }
  }

  std::map<std::pair<int, int>, InterfacePair> pairs;
  std::vector<std::vector<char>> matched(meshes.size());
  for (std::size_t m = 0; m < meshes.size(); ++m) matched[m].assign(meshes[m].triangles().size(), 0);

  for (const auto& [key, list] : by_key) {
    if (list.size() < 2) continue;
    if (list.size() > 2) {
      throw MeshError(MeshError::Kind::NonManifold,
                      "more than two coincident triangles across subdomain meshes");
    }
    auto [a, b] = std::minmax(list[0], list[1]);
    if (a.first == b.first) {
      throw MeshError(MeshError::Kind::DuplicateVertex, "mesh " + std::to_string(a.first) +
                                                            " contains two coincident triangles");
    }
    const double dot = meshes[a.first].normal(a.second).dot(meshes[b.first].normal(b.second));
    if (!(dot < -1.0 + 1e-10)) {
      throw MeshError(MeshError::Kind::InconsistentOrientation,
                      "coincident interface triangles of meshes " + std::to_string(a.first) + " and " +
                          std::to_string(b.first) + " do not have opposite normals");
    }
    auto& ip = pairs[{a.first, b.first}];
    ip.j = a.first;
    ip.k = b.first;
    ip.triangles.emplace_back(a.second, b.second);
    matched[a.first][a.second] = 1;
    matched[b.first][b.second] = 1;
  }

  // Coplanar overlap without coincidence means the interface meshes differ.
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    double cell = 0.0;
    for (int t = 0; t < meshes[k].num_triangles(); ++t) cell = std::max(cell, meshes[k].diameter(t));
    if (cell <= 0.0) continue;
    TriangleGrid grid(meshes[k], cell);
    for (std::size_t j = 0; j < meshes.size(); ++j) {
      if (j == k) continue;
      for (int t = 0; t < meshes[j].num_triangles(); ++t) {
        if (matched[j][t]) continue;
        const Vec3 c = meshes[j].centroid(t);
        const auto* bucket = grid.at(c);
        if (bucket == nullptr) continue;
        for (int s : *bucket) {
          if (point_on_triangle(meshes[k], s, c, tol)) {
            throw MeshError(MeshError::Kind::NonConformalInterface,
                            "partially overlapping non-coincident triangles detected between meshes " +
                                std::to_string(j) + " and " + std::to_string(k));
          }
        }
      }
    }
  }

  std::vector<InterfacePair> out;
  for (auto& [key, ip] : pairs) {
    std::sort(ip.triangles.begin(), ip.triangles.end());
    out.push_back(std::move(ip));
  }
  return out;
}

MultiMesh make_multimesh(std::vector<Mesh> meshes) {
  for (const auto& m : meshes) validate(m);
  MultiMesh mm;
  mm.interface_pairs = match_interfaces(meshes);
  mm.meshes = std::move(meshes);
  return mm;
}

}  // namespace mtbem
