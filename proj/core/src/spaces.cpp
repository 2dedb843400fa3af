#include "mtbem/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mtbem {

namespace {

void require_closed(const Mesh& mesh) {
  if (!mesh.is_closed()) {
    throw MeshError(MeshError::Kind::OpenBoundary, "trace spaces need a closed mesh");
  }
}

// Local index of the vertex opposite `edge` in triangle t.
int opposite(const Mesh& mesh, int t, int edge) {
  for (int i = 0; i < 3; ++i) {
    if (mesh.triangle_edge(t, i) == edge) return i;
  }
  throw MeshError(MeshError::Kind::InvalidArgument, "edge is not on the triangle");
}

int local_vertex(const Mesh& mesh, int t, int v) {
  const auto& tri = mesh.triangles()[t];
  for (int i = 0; i < 3; ++i) {
    if (tri[i] == v) return i;
  }
  throw MeshError(MeshError::Kind::InvalidArgument, "vertex is not on the triangle");
}

int edge_between(const Mesh& mesh, int t, int u, int v) {
  const int iu = local_vertex(mesh, t, u);
  const int iv = local_vertex(mesh, t, v);
  return mesh.triangle_edge(t, 3 - iu - iv);
}

int other_triangle(const Edge& e, int t) { return e.tri[0] == t ? e.tri[1] : e.tri[0]; }

// RWG coefficients of an edge: +1 on the shape opposite the edge in tri[0],
// -1 in tri[1].
std::vector<CellRestriction> rwg_cells(const Mesh& mesh, int edge) {
  const Edge& e = mesh.edges()[edge];
  std::vector<CellRestriction> cells(2);
  for (int s = 0; s < 2; ++s) {
    cells[s].triangle = e.tri[s];
    cells[s].coeffs[opposite(mesh, e.tri[s], edge)] = s == 0 ? 1.0 : -1.0;
  }
  return cells;
}

std::vector<BasisFunction> rwg_functions(const Mesh& mesh) {
  require_closed(mesh);
  std::vector<BasisFunction> out(static_cast<std::size_t>(mesh.num_edges()));
  for (int e = 0; e < mesh.num_edges(); ++e) out[e].cells = rwg_cells(mesh, e);
  return out;
}

// Triangles of the refined mesh around vertex v in cyclic order, starting at
// `start` and leaving it across the v-incident edge other than `first_edge`.
// Returns the triangles and the edges crossed between consecutive ones.
void ring(const Mesh& fine, int v, int start, int first_edge, std::vector<int>& tris,
          std::vector<int>& crossed) {
  tris.assign(1, start);
  crossed.clear();
  int t = start;
  int prev = first_edge;
  for (int guard = 0; guard < 10000; ++guard) {
    const int iv = local_vertex(fine, t, v);
    const int e1 = fine.triangle_edge(t, (iv + 1) % 3);
    const int e2 = fine.triangle_edge(t, (iv + 2) % 3);
    const int next = e1 == prev ? e2 : e1;
    if (next == first_edge) return;
    crossed.push_back(next);
    t = other_triangle(fine.edges()[next], t);
    tris.push_back(t);
    prev = next;
  }
  throw MeshError(MeshError::Kind::NonManifold, "vertex star does not close");
}

}  // namespace

const char* to_string(SpaceKind kind) { return kind == SpaceKind::Rwg ? "rwg" : "bc"; }

TraceSpace::TraceSpace(BoundaryPtr boundary, SpaceKind kind, Level level,
                       std::vector<BasisFunction> functions)
    : boundary_(std::move(boundary)), kind_(kind), level_(level), functions_(std::move(functions)) {
  by_triangle_.resize(static_cast<std::size_t>(mesh().num_triangles()));
  for (int dof = 0; dof < size(); ++dof) {
    for (const auto& c : functions_[dof].cells) {
      if (c.triangle < 0 || c.triangle >= mesh().num_triangles()) {
        throw MeshError(MeshError::Kind::InvalidArgument, "basis function on a missing triangle");
      }
      by_triangle_[c.triangle].push_back({dof, c.coeffs});
    }
  }
}

const Mesh& TraceSpace::mesh() const {
  return level_ == Level::Primal ? boundary_->primal : boundary_->refinement.mesh;
}

int TraceSpace::parent(int triangle) const {
  return level_ == Level::Primal ? triangle : boundary_->refinement.parent[triangle];
}

Vec3 TraceSpace::evaluate(int dof, int triangle, const Vec3& x) const {
  const Mesh& m = mesh();
  const auto c = m.corners(triangle);
  const Vec3& n = m.normal(triangle);
  const double tol = 1e-8 * m.diameter(triangle);
  bool inside = std::abs(n.dot(x - c[0])) <= tol;
  for (int i = 0; i < 3 && inside; ++i) {
    const Vec3& a = c[(i + 1) % 3];
    const Vec3& b = c[(i + 2) % 3];
    inside = (b - a).cross(x - a).dot(n) >= -tol * (b - a).norm();
  }
  if (!inside) throw MeshError(MeshError::Kind::InvalidArgument, "evaluation point is not on the triangle");
  for (const auto& cell : functions_[dof].cells) {
    if (cell.triangle != triangle) continue;
    Vec3 v = Vec3::Zero();
    for (int l = 0; l < 3; ++l) v += cell.coeffs[l] * (x - c[l]);
    return v / (2.0 * m.area(triangle));
  }
  return Vec3::Zero();
}

double TraceSpace::divergence(int dof, int triangle) const {
  for (const auto& cell : functions_[dof].cells) {
    if (cell.triangle == triangle) return cell.coeffs.sum() / mesh().area(triangle);
  }
  return 0.0;
}

TraceSpace build_rwg(BoundaryPtr boundary) {
  auto functions = rwg_functions(boundary->primal);
  return TraceSpace(std::move(boundary), SpaceKind::Rwg, Level::Primal, std::move(functions));
}

TraceSpace build_refined_rwg(BoundaryPtr boundary) {
  auto functions = rwg_functions(boundary->refinement.mesh);
  return TraceSpace(std::move(boundary), SpaceKind::Rwg, Level::Refined, std::move(functions));
}

Eigen::SparseMatrix<double> bc_refined_rwg_coefficients(const Boundary& boundary) {
  const Mesh& coarse = boundary.primal;
  const Mesh& fine = boundary.refinement.mesh;
  require_closed(coarse);
  const auto& children = boundary.refinement.children;
  const int nv = coarse.num_vertices();
  const int ne = coarse.num_edges();

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<int> tris, crossed;
  for (int e = 0; e < ne; ++e) {
    const Edge& edge = coarse.edges()[e];
    const int a = edge.v[0];
    const int b = edge.v[1];
    const int plus = edge.tri[0];
    const int minus = edge.tri[1];
    const int mid = nv + e;
    const int ia = local_vertex(coarse, plus, a);  // b follows a in plus

    std::map<int, double> coeff;
    // Flow `f` from triangle `from` across refined edge `fe`.
    auto set_flow = [&](int fe, int from, double f) {
      coeff[fe] += fine.edges()[fe].tri[0] == from ? f : -f;
    };

    // Sink cell around a (sign +1) and source cell around b (sign -1). Both
    // rings start at the refined triangle on `plus` touching the half edge.
    const std::array<std::pair<int, double>, 2> cells{{{a, 1.0}, {b, -1.0}}};
    for (const auto& [v, sign] : cells) {
      const int start = children[plus][v == a ? 2 * ia : 2 * ia + 1];
      const int half_edge = edge_between(fine, start, v, mid);
      ring(fine, v, start, half_edge, tris, crossed);
      const int two_n = static_cast<int>(tris.size());
      const int n = two_n / 2;
      for (int i = 1; i < two_n; ++i) {
        const double f = sign * static_cast<double>(n - i) / two_n;
        set_flow(crossed[i - 1], tris[i - 1], f);
      }
    }

    // Unit flux across the dual edge (g+, m_e, g-) from cell b into cell a.
    for (int side : {plus, minus}) {
      const int g = nv + ne + side;
      for (int child : children[side]) {
        const auto& ct = fine.triangles()[child];
        if (std::find(ct.begin(), ct.end(), a) == ct.end() ||
            std::find(ct.begin(), ct.end(), mid) == ct.end()) {
          continue;
        }
        const int fe = edge_between(fine, child, mid, g);
        set_flow(fe, other_triangle(fine.edges()[fe], child), 0.5);
      }
    }

    for (const auto& [fe, c] : coeff) {
      if (c != 0.0) triplets.emplace_back(fe, e, c);
    }
  }
  Eigen::SparseMatrix<double> out(fine.num_edges(), ne);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

TraceSpace build_bc(BoundaryPtr boundary) {
  const Mesh& fine = boundary->refinement.mesh;
  const Eigen::SparseMatrix<double> coeff = bc_refined_rwg_coefficients(*boundary);
  std::vector<BasisFunction> functions(static_cast<std::size_t>(coeff.cols()));
  for (int e = 0; e < coeff.cols(); ++e) {
    std::map<int, Eigen::Vector3d> cells;
    for (Eigen::SparseMatrix<double>::InnerIterator it(coeff, e); it; ++it) {
      for (const auto& cell : rwg_cells(fine, static_cast<int>(it.row()))) {
        auto [pos, inserted] = cells.try_emplace(cell.triangle, Eigen::Vector3d::Zero());
        pos->second += it.value() * cell.coeffs;
      }
    }
    for (const auto& [t, c] : cells) functions[e].cells.push_back({t, c});
  }
  return TraceSpace(std::move(boundary), SpaceKind::Bc, Level::Refined, std::move(functions));
}

}  // namespace mtbem
