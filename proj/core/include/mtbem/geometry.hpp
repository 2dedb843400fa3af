#pragma once

// Triangle surface meshes for subdomain boundaries.
//
// A Mesh is an immutable, oriented triangulation. Triangles are wound
// counter-clockwise when viewed from outside the enclosed subdomain, so the
// right-hand normal points out of the subdomain. Edge connectivity is derived
// on construction.

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mtbem/error.hpp"

namespace mtbem {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

struct Edge {
  // tri[0] traverses v[0] -> v[1] in its winding ("plus" side); tri[1] is
  // the "minus" side, or -1 on a boundary edge. Interior edges have
  // v[0] < v[1].
  std::array<int, 2> v;
  std::array<int, 2> tri;
};

class Mesh {
 public:
  Mesh() = default;
  // Throws MeshError for out-of-range indices, edges shared by more than two
  // triangles and inconsistently oriented neighbours. Boundary edges are
  // allowed; use validate() for the closed-surface checks.
  Mesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Vec3& vertex(int i) const { return vertices_[i]; }
  std::array<Vec3, 3> corners(int t) const;

  // Edge index opposite to local vertex i of triangle t.
  int triangle_edge(int t, int i) const { return triangle_edges_[t][i]; }

  double area(int t) const { return areas_[t]; }
  const Vec3& normal(int t) const { return normals_[t]; }
  Vec3 centroid(int t) const;
  double diameter(int t) const;

  double total_area() const;
  // Average edge length.
  double characteristic_size() const;
  double bounding_box_diagonal() const;
  // Signed enclosed volume; positive for outward orientation of a closed mesh.
  double signed_volume() const;

  int euler_characteristic() const { return num_vertices() - num_edges() + num_triangles(); }
  bool is_closed() const;

  // Same triangles with reversed winding.
  Mesh flipped() const;

 private:
  void build_connectivity();

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<double> areas_;
  std::vector<Vec3> normals_;
};

// Closed-surface checks: watertight, positive areas, no duplicate vertices
// (within 1e-10 x bounding-box diagonal). Throws MeshError.
void validate(const Mesh& mesh);

// Barycentric refinement. Vertex numbering of the refined mesh:
//   [0, V)          primal vertices,
//   [V, V + E)      primal edge midpoints (edge order),
//   [V + E, V+E+F)  primal triangle centroids.
// Primal triangle (a, b, c) yields children in winding order
//   (a, m_ab, g), (m_ab, b, g), (b, m_bc, g), (m_bc, c, g), (c, m_ca, g), (m_ca, a, g).
struct BarycentricRefinement {
  Mesh mesh;
  std::vector<int> parent;
  std::vector<std::array<int, 6>> children;
  // child_shape[t][c](m, l): coefficient of child-local shape m when the
  // primal-local shape l of triangle t is restricted to child c. Shapes are
  // the lowest-order div-conforming functions (x - v)/(2A) attached to a
  // triangle vertex.
  std::vector<std::array<Eigen::Matrix3d, 6>> child_shape;
};

BarycentricRefinement barycentric_refine(const Mesh& mesh);

// A subdomain boundary together with its barycentric refinement.
struct Boundary {
  explicit Boundary(Mesh primal_mesh);

  Mesh primal;
  BarycentricRefinement refinement;
};

using BoundaryPtr = std::shared_ptr<const Boundary>;

struct InterfacePair {
  int j = 0;
  int k = 0;
  // (triangle on mesh j, triangle on mesh k), geometrically coincident.
  std::vector<std::pair<int, int>> triangles;
};

struct MultiMesh {
  std::vector<Mesh> meshes;
  std::vector<InterfacePair> interface_pairs;

  int size() const { return static_cast<int>(meshes.size()); }
  int total_edges() const;
  const InterfacePair* find_interface(int j, int k) const;
};

// Coincident triangle pairs between distinct meshes, one entry per unordered
// (j, k) pair with j < k that shares at least one triangle. Tolerance is
// 1e-8 x global bounding-box diagonal. Throws MeshError::NonConformalInterface
// when coplanar triangles of two meshes overlap without coinciding.
std::vector<InterfacePair> match_interfaces(const std::vector<Mesh>& meshes);

// Builds a MultiMesh, validating each mesh and computing interface pairs.
MultiMesh make_multimesh(std::vector<Mesh> meshes);

// Procedural generators -------------------------------------------------------

Mesh generate_sphere(double radius, int subdivisions);

// `count` cubes of edge `side` stacked along +z starting at z = 0, each face
// a structured grid with round(side / h_target) cells per direction.
MultiMesh generate_cube_stack(double side, int count, double h_target);

// Square-section torus: a box of footprint outer x outer and thickness
// `height` with a centred square through-hole of side `inner`.
Mesh generate_square_torus(double outer, double inner, double height, double h_target);

// Cell count used by the structured generators for a segment of length
// `length` at target size `h`.
int grid_cells(double length, double h);

// Mesh files -----------------------------------------------------------------

enum class MeshFormat { GmshV2Ascii, Off };

MeshFormat mesh_format_from_string(const std::string& name);

MultiMesh import_mesh(const std::filesystem::path& path, MeshFormat format);

// All meshes concatenated into one OFF file plus a JSON sidecar
// (`<path>.json`) listing the subdomain of every triangle.
void export_mesh(const MultiMesh& mm, const std::filesystem::path& off_path);

}  // namespace mtbem
