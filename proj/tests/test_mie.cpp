#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mtbem/error.hpp"
#include "mtbem/mie.hpp"

using namespace mtbem;

namespace {

constexpr double kPi = std::numbers::pi;

double pattern_norm(const FarFieldPattern& p) {
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) s += std::norm(p.e_theta[i]) + std::norm(p.e_phi[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("series order") {
  CHECK(mie_order(6.0) == 16);
  CHECK(mie_order(0.06) == 4);
  CHECK(mie_order(1.0) == 7);
}

TEST_CASE("no contrast scatters nothing") {
  const auto dirs = far_field_cut(0.3, 19);
  const FarFieldPattern p = mie_far_field(1.0, 1.0, 1.0, 2.0, dirs);
  CHECK(pattern_norm(p) < 1e-14);
}

TEST_CASE("Rayleigh limit matches the electric dipole") {
  const double a = 1.0, k = 0.01, eps = 3.0;
  const std::vector<Direction> d{{0.0, 0.0}, {kPi, 0.0}};
  const FarFieldPattern p = mie_far_field(a, eps, 1.0, k, d);
  const double dipole = k * k * a * a * a * (eps - 1.0) / (eps + 2.0);
  CHECK(std::abs(p.e_theta[0] - dipole) < 0.01 * dipole);
  // Backward theta-hat at phi = 0 is -x, so the co-polar amplitude flips.
  CHECK(std::abs(std::abs(p.e_theta[1]) / std::abs(p.e_theta[0]) - 1.0) < 0.01);
  CHECK(p.e_theta[1].real() < 0.0);
}

TEST_CASE("pattern is stable when the order doubles") {
  const auto dirs = far_field_cut(0.0, 37);
  const int n = mie_order(6.0);
  const FarFieldPattern p1 = mie_far_field(1.0, 3.0, 1.0, 6.0, dirs, n);
  const FarFieldPattern p2 = mie_far_field(1.0, 3.0, 1.0, 6.0, dirs, 2 * n);
  double diff = 0.0;
  for (int i = 0; i < p1.size(); ++i) diff = std::max(diff, std::abs(p1.e_theta[i] - p2.e_theta[i]));
  CHECK(diff < 1e-10 * pattern_norm(p2));
  const FarFieldPattern automatic = mie_far_field(1.0, 3.0, 1.0, 6.0, dirs);
  for (int i = 0; i < p1.size(); ++i) CHECK(std::abs(automatic.e_theta[i] - p2.e_theta[i]) < 1e-10);
}

TEST_CASE("azimuthal symmetry of the x-polarized pattern") {
  std::vector<Direction> d, shifted;
  for (int i = 0; i < 9; ++i) {
    d.push_back({0.1 + 0.3 * i, 0.4});
    shifted.push_back({0.1 + 0.3 * i, 0.4 + kPi});
  }
  const FarFieldPattern p = mie_far_field(1.0, 2.5, 1.0, 3.0, d);
  const FarFieldPattern q = mie_far_field(1.0, 2.5, 1.0, 3.0, shifted);
  for (int i = 0; i < p.size(); ++i) {
    CHECK(std::abs(p.e_theta[i] + q.e_theta[i]) < 1e-12);
    CHECK(std::abs(p.e_phi[i] + q.e_phi[i]) < 1e-12);
  }
}

TEST_CASE("optical theorem") {
  for (double k : {0.5, 2.0, 6.0}) {
    const SphereRule rule = sphere_rule(60, 64);
    const FarFieldPattern p = mie_far_field(1.0, 3.0, 1.0, k, rule.directions);
    const double sca = scattering_cross_section(p, rule);
    const std::vector<Direction> fwd{{0.0, 0.0}};
    const double ext = extinction_cross_section(mie_far_field(1.0, 3.0, 1.0, k, fwd).e_theta[0], k);
    CHECK(sca == doctest::Approx(ext).epsilon(1e-8));
  }
}

TEST_CASE("impedance-matched sphere has no backscatter") {
  const std::vector<Direction> back{{kPi, 0.0}}, fwd{{0.0, 0.0}};
  const FarFieldPattern b = mie_far_field(1.0, 2.0, 2.0, 2.0, back);
  const FarFieldPattern f = mie_far_field(1.0, 2.0, 2.0, 2.0, fwd);
  CHECK(std::abs(b.e_theta[0]) < 1e-12 * std::abs(f.e_theta[0]));
}

TEST_CASE("invalid parameters") {
  const std::vector<Direction> d{{0.0, 0.0}};
  CHECK_THROWS_AS(mie_far_field(0.0, 3.0, 1.0, 1.0, d), Error);
  CHECK_THROWS_AS(mie_far_field(1.0, -3.0, 1.0, 1.0, d), Error);
  CHECK_THROWS_AS(mie_far_field(1.0, 3.0, 1.0, 0.0, d), Error);
}
