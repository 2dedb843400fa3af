#pragma once

// Lowest-order div-conforming trace spaces on a subdomain boundary.
//
// Every basis function is stored per supporting triangle as coefficients of
// the three local shapes phi_l(x) = (x - P_l) / (2A), where P_l is local
// vertex l. phi_l has divergence 1/A and unit outward flux through the edge
// opposite P_l, so coefficients are edge fluxes.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mtbem/geometry.hpp"

namespace mtbem {

enum class SpaceKind { Rwg, Bc };
// Mesh on which the supporting triangles live.
enum class Level { Primal, Refined };

const char* to_string(SpaceKind kind);

struct CellRestriction {
  int triangle = 0;
  Eigen::Vector3d coeffs = Eigen::Vector3d::Zero();
};

struct BasisFunction {
  std::vector<CellRestriction> cells;
};

class TraceSpace {
 public:
  struct Term {
    int dof = 0;
    Eigen::Vector3d coeffs = Eigen::Vector3d::Zero();
  };

  TraceSpace(BoundaryPtr boundary, SpaceKind kind, Level level, std::vector<BasisFunction> functions);

  const Boundary& boundary() const { return *boundary_; }
  const BoundaryPtr& boundary_ptr() const { return boundary_; }
  SpaceKind kind() const { return kind_; }
  Level level() const { return level_; }
  // Mesh of the supporting triangles.
  const Mesh& mesh() const;

  int size() const { return static_cast<int>(functions_.size()); }
  const BasisFunction& function(int dof) const { return functions_[dof]; }
  // Functions supported on a triangle of mesh().
  const std::vector<Term>& terms(int triangle) const { return by_triangle_[triangle]; }
  // Primal triangle containing a triangle of mesh().
  int parent(int triangle) const;

  // Value at x on `triangle` of mesh(); zero outside the support. Throws
  // MeshError::InvalidArgument if x is not on the triangle.
  Vec3 evaluate(int dof, int triangle, const Vec3& x) const;
  double divergence(int dof, int triangle) const;

 private:
  BoundaryPtr boundary_;
  SpaceKind kind_;
  Level level_;
  std::vector<BasisFunction> functions_;
  std::vector<std::vector<Term>> by_triangle_;
};

// RWG functions +-(x - p_opp) / (2A), one per edge, positive on the triangle
// that traverses the edge as (v[0], v[1]).
TraceSpace build_rwg(BoundaryPtr boundary);

// RWG functions of the barycentrically refined mesh.
TraceSpace build_refined_rwg(BoundaryPtr boundary);

// Buffa-Christiansen functions, one per primal edge. The function of edge
// (a, b) carries unit flux from the dual cell of b into the dual cell of a;
// each refined triangle of a dual cell of valence N absorbs (or emits)
// 1/(2N) of it.
TraceSpace build_bc(BoundaryPtr boundary);

// Column e holds the coefficients of BC function e over build_refined_rwg().
Eigen::SparseMatrix<double> bc_refined_rwg_coefficients(const Boundary& boundary);

// Electric and magnetic trace slots over the same space.
struct PairTraceSpace {
  TraceSpace electric;
  TraceSpace magnetic;
  int size() const { return electric.size() + magnetic.size(); }
};

}  // namespace mtbem
