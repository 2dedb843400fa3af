#pragma once

// Kernels and Galerkin quadrature over pairs of flat triangles.
//
// Kernel convention: G(r) = exp(-i kappa r) / (4 pi r). A Yukawa kernel
// exp(-k0 r) / (4 pi r) is obtained with kappa = -i k0.

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mtbem/geometry.hpp"

namespace mtbem {

using cd = std::complex<double>;
using Corners = std::array<Vec3, 3>;

// Gauss-Legendre nodes and weights on [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

LineRule gauss_legendre(int n);

// Triangle rule in barycentric coordinates; weights sum to 1 so that
// integral_T f ~= area(T) * sum_i w_i f(x_i).
struct TriangleRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int degree = 0;
};

// Smallest available rule exact for polynomials of the given degree. Degrees
// 1, 2, 4 and 5 use symmetric rules with 1, 3, 6 and 7 points; above 5 a
// collapsed Gauss rule is used.
TriangleRule triangle_rule(int degree);

// Collapsed tensor Gauss rule with n points per direction.
TriangleRule collapsed_gauss_rule(int n);

// e^{-i kappa r} / (4 pi r); throws QuadratureError for r = 0.
cd green(cd kappa, const Vec3& x, const Vec3& y);

// grad_x G = green_gradient_factor(kappa, r) * (x - y).
cd green_gradient_factor(cd kappa, double r);

enum class PairRelation { Identical, Edge, Vertex, Near, Far };

const char* to_string(PairRelation r);

// Relation between two triangles and vertex orders that put shared vertices
// first and in the same order on both sides: a[order_a[i]] == b[order_b[i]]
// for each shared slot i.
struct PairClass {
  PairRelation relation = PairRelation::Far;
  std::array<int, 3> order_a{0, 1, 2};
  std::array<int, 3> order_b{0, 1, 2};
};

// Vertices coincide within 1e-8 x (diam a + diam b). Near means centroid
// distance below 2h, with h the larger of the two diameters unless given.
PairClass near_singular_split(const Corners& a, const Corners& b, double h = 0.0);

struct QuadratureOrders {
  // Gauss points per dimension of the regularizing transforms.
  int singular = 4;
  // Polynomial degree of the triangle rules for near and far pairs.
  int near = 3;
  int far = 2;
  // Degree on refined cells when their primal parents are far apart.
  int refined_far = 1;
};

// Point pairs (x in a, y in b) with weights that include both area Jacobians:
// integral_a integral_b f ~= sum_i w_i f(x_i, y_i).
struct PairPoints {
  std::vector<Vec3> x;
  std::vector<Vec3> y;
  std::vector<double> w;

  void clear() {
    x.clear();
    y.clear();
    w.clear();
  }
  std::size_t size() const { return w.size(); }
};

// Point pairs on the reference triangle {0 <= x2 <= x1 <= 1}, mapped by
// chi(x) = P0 + x1 (P1 - P0) + x2 (P2 - P1). Weights integrate over the
// reference pair, whose measure is 1/4.
struct ReferencePairRule {
  std::vector<Eigen::Vector2d> x, y;
  std::vector<double> w;
};

// Sauter-Schwab transforms for Identical, Edge (shared P0 P1) and Vertex
// (shared P0) with n Gauss points per dimension.
ReferencePairRule sauter_schwab_rule(PairRelation relation, int n);

// Precomputed reference rules for all relations at fixed orders.
class PairQuadrature {
 public:
  explicit PairQuadrature(QuadratureOrders orders = {});

  const QuadratureOrders& orders() const { return orders_; }

  void points(const Corners& a, const Corners& b, const PairClass& cls, PairPoints& out) const;

  const TriangleRule& far_rule() const { return far_; }
  const TriangleRule& refined_far_rule() const { return refined_far_; }

 private:
  QuadratureOrders orders_;
  std::array<ReferencePairRule, 3> singular_;  // Identical, Edge, Vertex
  TriangleRule near_, far_, refined_far_;
};

// Product of two triangle rules.
void tensor_points(const Corners& a, const TriangleRule& ra, const Corners& b, const TriangleRule& rb,
                   PairPoints& out);

// Galerkin integral of a scalar integrand over a triangle pair.
cd integrate_pair(const std::function<cd(const Vec3&, const Vec3&)>& integrand, const Corners& test,
                  const Corners& trial, const PairQuadrature& quad);

// Local Galerkin blocks between the lowest-order div-conforming shapes
// phi_a(x) = (x - P_a) / (2A) on the test triangle and psi_b on the trial
// triangle:
//   S(a, b) = int int G phi_a . psi_b
//   D       = int int G div phi_a div psi_b       (same for all a, b)
//   K(a, b) = int int grad_x G . (psi_b x phi_a)
struct LocalInteraction {
  Eigen::Matrix3cd S = Eigen::Matrix3cd::Zero();
  cd D = 0.0;
  Eigen::Matrix3cd K = Eigen::Matrix3cd::Zero();
};

struct LocalRequest {
  bool single_layer = true;  // S and D
  bool double_layer = true;  // K
};

// One LocalInteraction per wavenumber, all evaluated at the same point pairs.
// Throws QuadratureError if any result is not finite.
void integrate_local(const Corners& test, const Corners& trial, const PairClass& cls,
                     std::span<const cd> kappas, const LocalRequest& request,
                     const PairQuadrature& quad, PairPoints& scratch,
                     std::vector<LocalInteraction>& out);

// Same, over prepared point pairs. K is skipped for Identical pairs.
void integrate_local_points(const Corners& test, const Corners& trial, PairRelation relation,
                            const PairPoints& pts, std::span<const cd> kappas,
                            const LocalRequest& request, std::vector<LocalInteraction>& out);

}  // namespace mtbem
