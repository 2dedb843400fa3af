#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mtbem/quadrature.hpp"
#include "oracles.hpp"

using namespace mtbem;

namespace {

const Corners tri{Vec3(0, 0, 0), Vec3(1, 0.1, 0), Vec3(0.2, 0.9, 0)};
const Corners edge_nb{Vec3(1, 0.1, 0), Vec3(0, 0, 0), Vec3(0.6, -0.7, 0.3)};
const Corners vertex_nb{Vec3(0.2, 0.9, 0), Vec3(-0.5, 1.4, 0.2), Vec3(-0.8, 0.6, -0.1)};
const Corners near_nb{Vec3(1.3, 0.2, 0.0), Vec3(2.0, 0.5, 0.1), Vec3(1.4, 1.0, 0.0)};
const Corners far_nb{Vec3(4.0, 1.0, 0.5), Vec3(4.8, 1.3, 0.4), Vec3(4.3, 1.9, 1.0)};

oracle::Bundle library(const Corners& a, const Corners& b, cd kappa, QuadratureOrders o) {
  const PairQuadrature q(o);
  PairPoints pts;
  std::vector<LocalInteraction> out;
  const std::vector<cd> ks{kappa};
  integrate_local(a, b, near_singular_split(a, b), ks, {}, q, pts, out);
  return {out[0].S, out[0].D, out[0].K};
}

double rel(const oracle::Bundle& a, const oracle::Bundle& ref) {
  return oracle::max_diff(a, ref) / oracle::max_abs(ref);
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1") {
  for (int n = 1; n <= 12; ++n) {
    const auto g = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.points[i], p);
      CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("triangle rules are exact to their degree") {
  // Reference triangle (0,0), (1,0), (0,1): int s^a t^b = a! b! / (a+b+2)!, area 1/2.
  auto exact = [](int a, int b) {
    return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3) * 2.0;
  };
  for (int degree : {1, 2, 4, 5, 6, 9, 14}) {
    const auto r = triangle_rule(degree);
    REQUIRE(r.degree >= degree);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.weights.size(); ++i) {
          s += r.weights[i] * std::pow(r.points[i][1], a) * std::pow(r.points[i][2], b);
        }
        CHECK(s == doctest::Approx(exact(a, b)).epsilon(1e-12));
      }
    }
  }
  CHECK(triangle_rule(3).weights.size() == 6);
  CHECK(triangle_rule(14).weights.size() == 64);
}

TEST_CASE("green's function") {
  const Vec3 o(0, 0, 0), x(1, 0, 0);
  CHECK(std::abs(green(0.0, o, x) - 1.0 / (4 * std::numbers::pi)) < 1e-15);
  CHECK(std::abs(green(0.0, o, x) - 0.0795774715) < 1e-10);
  const cd yukawa = green(cd(0, -2), o, x);
  CHECK(std::abs(yukawa.imag()) < 1e-17);
  CHECK(yukawa.real() == doctest::Approx(std::exp(-2.0) / (4 * std::numbers::pi)).epsilon(1e-14));
  const Vec3 a(0.3, -1.2, 0.7), b(-0.4, 0.5, 2.0);
  CHECK(std::abs(green(3.0, a, b) - green(3.0, b, a)) < 1e-16);
  CHECK(std::abs(green(1e-8, a, b) - green(0.0, a, b)) < 1e-9);
  CHECK_THROWS_AS(green(1.0, a, a), QuadratureError);
}

TEST_CASE("gradient factor matches a finite difference") {
  const cd kappa(2.5, -0.3);
  const Vec3 x(0.3, -0.2, 0.5), y(-0.4, 0.1, 0.0);
  const double r = (x - y).norm();
  for (int m = 0; m < 3; ++m) {
    Vec3 dx = Vec3::Zero();
    dx[m] = 1e-6;
    const cd fd = (green(kappa, x + dx, y) - green(kappa, x - dx, y)) / 2e-6;
    CHECK(std::abs(fd - green_gradient_factor(kappa, r) * (x - y)[m]) < 1e-8);
  }
}

TEST_CASE("pair classification") {
  CHECK(near_singular_split(tri, tri).relation == PairRelation::Identical);
  CHECK(near_singular_split(tri, edge_nb).relation == PairRelation::Edge);
  CHECK(near_singular_split(tri, vertex_nb).relation == PairRelation::Vertex);
  CHECK(near_singular_split(tri, near_nb).relation == PairRelation::Near);
  CHECK(near_singular_split(tri, far_nb).relation == PairRelation::Far);

  // An oppositely oriented copy is still identical after vertex matching.
  const Corners flipped{tri[0], tri[2], tri[1]};
  const auto c = near_singular_split(tri, flipped);
  CHECK(c.relation == PairRelation::Identical);
  for (int i = 0; i < 3; ++i) CHECK(tri[c.order_a[i]] == flipped[c.order_b[i]]);

  const auto e = near_singular_split(tri, edge_nb);
  for (int i = 0; i < 2; ++i) CHECK(tri[e.order_a[i]] == edge_nb[e.order_b[i]]);

  // Centroid distance 10h is far for any h.
  Corners shifted = tri;
  for (auto& p : shifted) p.x() += 10.0;
  CHECK(near_singular_split(tri, shifted, 1.0).relation == PairRelation::Far);
}

TEST_CASE("regularizing transforms integrate polynomials exactly") {
  auto ref = [](int a, int b) { return 1.0 / ((b + 1.0) * (a + b + 2.0)); };
  for (auto rel : {PairRelation::Identical, PairRelation::Edge, PairRelation::Vertex}) {
    const auto r = sauter_schwab_rule(rel, 6);
    double measure = 0.0;
    for (double w : r.w) measure += w;
    CHECK(measure == doctest::Approx(0.25).epsilon(1e-13));
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; b <= 2 - a; ++b)
        for (int c = 0; c <= 2; ++c)
          for (int d = 0; d <= 2 - c; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i < r.w.size(); ++i) {
              s += r.w[i] * std::pow(r.x[i][0], a) * std::pow(r.x[i][1], b) * std::pow(r.y[i][0], c) *
                   std::pow(r.y[i][1], d);
            }
            CHECK(s == doctest::Approx(ref(a, b) * ref(c, d)).epsilon(1e-12));
          }
  }
}

TEST_CASE("far pairs agree with a high-order tensor rule") {
  const auto reference = oracle::tensor(tri, far_nb, cd(2.0, 0.0), 14);
  CHECK(rel(library(tri, far_nb, cd(2.0, 0.0), {4, 14, 14}), reference) < 1e-10);
  // Default orders are accurate to a few digits only.
  CHECK(rel(library(tri, far_nb, cd(2.0, 0.0), {}), reference) < 1e-2);
}

TEST_CASE("far-pair error decreases with order") {
  const auto reference = oracle::tensor(tri, far_nb, 1.0, 14);
  double previous = 1.0;
  for (int d : {1, 2, 4, 6, 8}) {
    const double err = rel(library(tri, far_nb, 1.0, {4, d, d}), reference);
    CHECK((err < 0.5 * previous || err < 1e-12));
    previous = err;
  }
}

TEST_CASE("singular classes agree with the subdivision oracle") {
  // Static kernel: the oracle converges cleanly here.
  for (const Corners* other : {&tri, &edge_nb, &vertex_nb, &near_nb}) {
    const auto reference = oracle::extrapolated(tri, *other, 0.0, 0, 5);
    const auto relation = near_singular_split(tri, *other).relation;
    CAPTURE(to_string(relation));
    CHECK(rel(library(tri, *other, 0.0, {8, 14, 2}), reference) < 1e-6);
    CHECK(rel(library(tri, *other, 0.0, {}), reference) < 1e-3);
  }
}

TEST_CASE("oscillatory singular integrals agree with the subdivision oracle") {
  const cd kappa(3.0, -0.2);
  for (const Corners* other : {&tri, &edge_nb, &vertex_nb}) {
    const auto reference = oracle::extrapolated(tri, *other, kappa, 0, 5);
    CAPTURE(to_string(near_singular_split(tri, *other).relation));
    CHECK(rel(library(tri, *other, kappa, {8, 14, 2}), reference) < 1e-6);
  }
}

TEST_CASE("swapping test and trial reproduces the symmetric single layer") {
  for (const Corners* other : {&tri, &edge_nb, &vertex_nb, &near_nb, &far_nb}) {
    const auto ab = library(tri, *other, cd(1.5, -0.1), {});
    const auto ba = library(*other, tri, cd(1.5, -0.1), {});
    CHECK(std::abs(ab.D - ba.D) < 1e-12 * std::abs(ab.D));
    CHECK((ab.S - ba.S.transpose()).cwiseAbs().maxCoeff() < 1e-12 * ab.S.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("double layer vanishes on a flat self pair and is antisymmetric on swap") {
  CHECK(library(tri, tri, 2.0, {}).K.cwiseAbs().maxCoeff() == 0.0);
  // Under x <-> y both the kernel gradient and the cross product flip sign.
  const auto ab = library(tri, far_nb, 2.0, {4, 6, 6});
  const auto ba = library(far_nb, tri, 2.0, {4, 6, 6});
  CHECK((ab.K - ba.K.transpose()).cwiseAbs().maxCoeff() < 1e-12 * ab.K.cwiseAbs().maxCoeff());
}

TEST_CASE("non-finite results raise a quadrature breakdown") {
  const Corners bad{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(std::nan(""), 1, 0)};
  try {
    library(tri, bad, 1.0, {});
    FAIL("expected an error");
  } catch (const QuadratureError& e) {
    CHECK(std::string(e.what()).find("quadrature breakdown") != std::string::npos);
  }
}
