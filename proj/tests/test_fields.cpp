#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "mtbem/error.hpp"
#include "mtbem/fields.hpp"
#include "mtbem/mie.hpp"
#include "mtbem/solve.hpp"

using namespace mtbem;

namespace {

constexpr double kPi = std::numbers::pi;

Scatterer sphere(int subdivisions, double eps, double kappa0, double mu = 1.0) {
  return make_scatterer(make_multimesh({generate_sphere(1.0, subdivisions)}), {Medium{eps, mu}}, Medium{}, kappa0);
}

TraceVector solve_traces(const Scatterer& s, Formulation f, Eigen::VectorXcd* x = nullptr) {
  const BlockSystem sys = assemble_system(s, f);
  const Eigen::VectorXcd sol = solve_direct(sys.matrix, assemble_rhs(s, sys, make_plane_wave(s))).x;
  if (x != nullptr) *x = sol;
  return TraceVector::from_solution(sys, sol);
}

TraceVector random_traces(const Scatterer& s, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  TraceVector t = TraceVector::zeros(s);
  for (int k = 0; k < t.size(); ++k) {
    for (Eigen::Index i = 0; i < t.m[k].size(); ++i) {
      t.m[k](i) = cd(d(rng), d(rng));
      t.j[k](i) = cd(d(rng), d(rng));
    }
  }
  return t;
}

double max_abs(const FarFieldPattern& p) {
  double m = 0.0;
  for (int i = 0; i < p.size(); ++i) m = std::max({m, std::abs(p.e_theta[i]), std::abs(p.e_phi[i])});
  return m;
}

// Pointwise error of the projected incident traces at triangle centroids.
double projection_error(const Scatterer& s, const PlaneWave& w) {
  const TraceVector inc = incident_traces(s, w);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < s.size(); ++k) {
    const TraceSpace rwg = build_rwg(s.boundaries[k]);
    const Mesh& mesh = rwg.mesh();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const Vec3 c = mesh.centroid(t);
      const Vec3c n = mesh.normal(t).cast<cd>();
      Vec3c v = Vec3c::Zero();
      for (const auto& term : rwg.terms(t)) v += inc.m[k](term.dof) * rwg.evaluate(term.dof, t, c).cast<cd>();
      const Vec3c e = w.e(c);
      const Vec3c exact(e[1] * n[2] - e[2] * n[1], e[2] * n[0] - e[0] * n[2], e[0] * n[1] - e[1] * n[0]);
      num += (v - exact).squaredNorm();
      den += exact.squaredNorm();
    }
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("plane wave fields") {
  PlaneWave w{2.0};
  const Vec3 x(0.1, -0.4, 0.7);
  const cd phase = std::exp(cd(0.0, -2.0 * 0.7));
  CHECK((w.e(x) - phase * Vec3c(1, 0, 0)).norm() < 1e-15);
  CHECK((w.h(x, 0.5) - phase * Vec3c(0, 2, 0)).norm() < 1e-15);

  PlaneWave bad{1.0, Vec3::UnitZ(), Vec3(1.0, 0.0, 0.1).normalized()};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = PlaneWave{1.0, Vec3(0.0, 0.0, 2.0)};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = PlaneWave{-1.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("excitation must match the background wavenumber") {
  const Scatterer s = sphere(1, 3.0, 1.0);
  const BlockSystem sys = assemble_mt_pmchwt(s);
  CHECK_THROWS_AS(assemble_rhs(s, sys, PlaneWave{2.0}), Error);
  CHECK_NOTHROW(assemble_rhs(s, sys, PlaneWave{1.0}));
}

TEST_CASE("right-hand sides") {
  const Scatterer s = sphere(1, 3.0, 1.0);
  const BlockSystem m = assemble_mt_mueller(s);
  PlaneWave off = make_plane_wave(s);
  off.amplitude = 0.0;
  CHECK(assemble_rhs(s, m, off).norm() == 0.0);

  // Scaling the background by c scales the Mueller right-hand side by c.
  const double c = 2.0;
  const Scatterer scaled = make_scatterer(make_multimesh({generate_sphere(1.0, 1)}), {Medium{3.0 * c, c}},
                                          Medium{c, c}, 1.0 / c);
  const BlockSystem ms = assemble_mt_mueller(scaled);
  const Eigen::VectorXcd b1 = assemble_rhs(s, m, make_plane_wave(s));
  const Eigen::VectorXcd b2 = assemble_rhs(scaled, ms, make_plane_wave(scaled));
  CHECK((b2 - c * b1).norm() < 1e-12 * b2.norm());

  // PMCHWT tests with RWG and carries the opposite sign.
  const BlockSystem p = assemble_mt_pmchwt(s);
  const Eigen::VectorXcd bp = assemble_rhs(s, p, make_plane_wave(s));
  CHECK(bp.size() == p.size());
  CHECK(bp.norm() > 0.0);
}

TEST_CASE("projected incident traces converge at first order") {
  std::vector<double> err;
  for (double h : {0.5, 0.25, 0.125}) {
    const Scatterer s = make_scatterer(generate_cube_stack(1.0, 1, h), {Medium{}}, Medium{}, 1.0);
    err.push_back(projection_error(s, make_plane_wave(s)));
  }
  MESSAGE("projection errors " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(err[0] / err[1] > 1.8);
  CHECK(err[1] / err[2] > 1.8);
  CHECK(err[2] < 0.025);
}

TEST_CASE("trivial medium returns the incident traces") {
  const Scatterer s = make_scatterer(generate_cube_stack(1.0, 2, 0.5), {Medium{}, Medium{}}, Medium{}, 1.0);
  const PlaneWave w = make_plane_wave(s);
  const BlockSystem sys = assemble_mt_mueller(s);
  const Eigen::VectorXcd b = assemble_rhs(s, sys, w);
  const Eigen::VectorXcd inc = incident_traces(s, w).stacked();
  CHECK((solve_direct(sys.matrix, b).x - inc).norm() < 1e-12 * inc.norm());
  CHECK((solve_gmres(sys.matrix, b).x - inc).norm() < 1e-5 * inc.norm());
}

TEST_CASE("zero traces produce no fields") {
  const Scatterer s = sphere(1, 3.0, 1.0);
  const TraceVector zero = TraceVector::zeros(s);
  const auto dirs = far_field_cut(0.0, 7);
  CHECK(max_abs(far_field(s, zero, dirs)) == 0.0);
  const std::vector<Vec3> pts{{0.0, 0.0, 0.0}, {0.0, 0.0, 3.0}};
  const FieldSample f = region_field(s, zero, make_plane_wave(s), 1, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(f.e[i].norm() + f.h[i].norm() == 0.0);
  const std::vector<std::vector<Vec3>> probes{{}, {}};
  const auto r = extinction_residual(s, zero, make_plane_wave(s), probes);
  CHECK(r == std::vector<double>{0.0, 0.0});
}

TEST_CASE("far field is linear in the traces") {
  const Scatterer s = sphere(1, 3.0, 2.0);
  const TraceVector a = random_traces(s, 1), b = random_traces(s, 2);
  TraceVector sum = a;
  const cd alpha(0.3, -1.2);
  for (int k = 0; k < s.size(); ++k) {
    sum.m[k] = a.m[k] + alpha * b.m[k];
    sum.j[k] = a.j[k] + alpha * b.j[k];
  }
  const auto dirs = far_field_cut(0.7, 11);
  const FarFieldPattern fa = far_field(s, a, dirs), fb = far_field(s, b, dirs), fs = far_field(s, sum, dirs);
  for (int i = 0; i < fs.size(); ++i) {
    CHECK(std::abs(fs.e_theta[i] - fa.e_theta[i] - alpha * fb.e_theta[i]) < 1e-12 * max_abs(fs));
    CHECK(std::abs(fs.e_phi[i] - fa.e_phi[i] - alpha * fb.e_phi[i]) < 1e-12 * max_abs(fs));
  }
}

TEST_CASE("potentials of the incident traces reproduce the incident field inside only") {
  const Scatterer s = sphere(2, 1.0, 1.0);
  const PlaneWave w = make_plane_wave(s);
  const TraceVector inc = incident_traces(s, w);
  const std::vector<Vec3> inside{{0.0, 0.0, 0.0}, {0.3, 0.2, -0.1}};
  const std::vector<Vec3> outside{{0.0, 0.0, 2.0}, {1.5, 0.5, 0.0}};
  const FieldSample fi = region_field(s, inc, w, 1, inside);
  const FieldSample fo = region_field(s, inc, w, 1, outside);
  for (std::size_t i = 0; i < inside.size(); ++i) {
    CHECK((fi.e[i] - w.e(inside[i])).norm() < 1e-3);
    CHECK((fi.h[i] - w.h(inside[i], 1.0)).norm() < 1e-3);
    CHECK(fo.e[i].norm() < 1e-3);
  }
  // Region 0 carries the incident field outside and cancels it inside.
  const FieldSample gi = region_field(s, inc, w, 0, inside);
  const FieldSample go = region_field(s, inc, w, 0, outside);
  for (std::size_t i = 0; i < inside.size(); ++i) {
    CHECK(gi.e[i].norm() < 1e-3);
    CHECK((go.e[i] - w.e(outside[i])).norm() < 1e-3);
  }
}

TEST_CASE("potentials approach the far field") {
  const Scatterer s = sphere(1, 3.0, 2.0);
  const TraceVector t = random_traces(s, 4);
  const Direction d{0.9, 0.4};
  const Vec3 xh(std::sin(d.theta) * std::cos(d.phi), std::sin(d.theta) * std::sin(d.phi), std::cos(d.theta));
  const double r = 2000.0;
  const std::vector<Vec3> pts{r * xh};
  FieldOptions opts;
  opts.guard = 0.0;
  PlaneWave w = make_plane_wave(s);
  w.amplitude = 0.0;
  const FieldSample f = region_field(s, t, w, 0, pts, opts);
  const std::vector<Direction> dirs{d};
  const FarFieldPattern p = far_field(s, t, dirs);
  const cd scale = std::exp(cd(0.0, 2.0 * r)) * r;
  const Vec3 th(std::cos(d.theta) * std::cos(d.phi), std::cos(d.theta) * std::sin(d.phi), -std::sin(d.theta));
  const cd e_theta = scale * th.cast<cd>().dot(f.e[0]);
  CHECK(std::abs(e_theta - p.e_theta[0]) < 2e-3 * std::abs(p.e_theta[0]));
}

TEST_CASE("dielectric sphere against the Mie series") {
  for (Formulation f : {Formulation::MtMueller, Formulation::MtPmchwt}) {
    const Scatterer s = sphere(2, 3.0, 1.0);
    const TraceVector t = solve_traces(s, f);
    for (double phi : {0.0, kPi / 2}) {
      const auto dirs = far_field_cut(phi, 37);
      const double err = relative_l2_error(far_field(s, t, dirs), mie_far_field(1.0, 3.0, 1.0, 1.0, dirs));
      MESSAGE(std::string(to_string(f)) << " phi " << phi << " error " << err);
      CHECK(err < 0.05);
    }
  }
}

TEST_CASE("magnetic sphere against the Mie series") {
  const Scatterer s = sphere(2, 2.0, 1.0, 1.5);
  const TraceVector t = solve_traces(s, Formulation::MtMueller);
  const auto dirs = far_field_cut(0.0, 37);
  const double err = relative_l2_error(far_field(s, t, dirs), mie_far_field(1.0, 2.0, 1.5, 1.0, dirs));
  MESSAGE("error " << err);
  CHECK(err < 0.05);
}

TEST_CASE("optical theorem for the discrete solution") {
  const Scatterer s = sphere(2, 3.0, 1.0);
  const TraceVector t = solve_traces(s, Formulation::MtMueller);
  const SphereRule rule = sphere_rule(24, 32);
  const double sca = scattering_cross_section(far_field(s, t, rule.directions), rule);
  const std::vector<Direction> fwd{{0.0, 0.0}};
  const double ext = extinction_cross_section(far_field(s, t, fwd).e_theta[0], 1.0);
  CHECK(sca == doctest::Approx(ext).epsilon(0.05));
}

TEST_CASE("sphere rule integrates constants and cos^2") {
  const SphereRule r = sphere_rule(8, 8);
  double one = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < r.weights.size(); ++i) {
    one += r.weights[i];
    c2 += r.weights[i] * std::pow(std::cos(r.directions[i].theta), 2);
  }
  CHECK(one == doctest::Approx(4.0 * kPi).epsilon(1e-13));
  CHECK(c2 == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-13));
  CHECK_THROWS_AS(far_field_cut(0.0, 1), Error);
}

TEST_CASE("region membership, guard band and probes") {
  const MultiMesh cubes = generate_cube_stack(1.0, 2, 0.5);
  const std::vector<Vec3> pts{{0.5, 0.5, 0.5}, {0.5, 0.5, 1.5}, {0.5, 0.5, 2.5}, {-1.0, 0.0, 0.0}};
  CHECK(region_of(cubes, pts) == std::vector<int>{1, 2, 0, 0});
  CHECK(surface_distance(cubes, Vec3(0.5, 0.5, 0.5)) == doctest::Approx(0.5));
  CHECK(surface_distance(cubes, Vec3(0.5, 0.5, 3.0)) == doctest::Approx(1.0));

  const Scatterer s = make_scatterer(cubes, {Medium{2.0, 1.0}, Medium{3.0, 1.0}}, Medium{}, 1.0);
  const std::vector<Vec3> near{{0.5, 0.5, 1.0 + 0.01}, {0.5, 0.5, 1.0 + 0.2}};
  const FieldSample f = region_field(s, TraceVector::zeros(s), make_plane_wave(s), 0, near);
  CHECK_FALSE(f.valid[0]);
  CHECK(f.valid[1]);
  CHECK(f.e[0].norm() == 0.0);

  for (int region = 0; region <= 2; ++region) {
    const auto probes = extinction_probes(cubes, region, 0.25, 0.25);
    REQUIRE_FALSE(probes.empty());
    const auto r = region_of(cubes, probes);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      CHECK(r[i] != region);
      CHECK(surface_distance(cubes, probes[i]) >= 0.25);
    }
  }
}

TEST_CASE("extinction and continuity on stacked cubes") {
  const Scatterer s =
      make_scatterer(generate_cube_stack(1.0, 2, 0.5), {Medium{2.0, 1.0}, Medium{3.0, 1.0}}, Medium{}, 1.0);
  std::vector<std::vector<Vec3>> probes;
  for (int r = 0; r <= 2; ++r) probes.push_back(extinction_probes(s.geometry, r, r == 0 ? 0.25 : 0.5, 0.5));
  for (Formulation f : {Formulation::MtMueller, Formulation::MtPmchwt}) {
    const TraceVector t = solve_traces(s, f);
    const auto res = extinction_residual(s, t, make_plane_wave(s), probes);
    const auto cont = surface_current_continuity(s, t);
    MESSAGE(std::string(to_string(f)) << " extinction " << res[0] << " " << res[1] << " " << res[2] << " continuity "
                         << cont.at(0).mismatch);
    for (double r : res) CHECK(r < 0.05);
    REQUIRE(cont.size() == 1);
    CHECK(cont[0].mismatch < 0.1);
    CHECK_FALSE(cont[0].degenerate);
  }
  const auto zero = surface_current_continuity(s, TraceVector::zeros(s));
  CHECK(zero.at(0).degenerate);
  CHECK(zero.at(0).mismatch == 0.0);
}

TEST_CASE("trivial medium continuity is the projection error") {
  std::vector<double> m;
  for (double h : {0.5, 0.25}) {
    const Scatterer s = make_scatterer(generate_cube_stack(1.0, 2, h), {Medium{}, Medium{}}, Medium{}, 1.0);
    m.push_back(surface_current_continuity(s, incident_traces(s, make_plane_wave(s))).at(0).mismatch);
  }
  CHECK(m[0] < 0.05);
  CHECK(m[1] < m[0]);
}

TEST_CASE("far-field CSV round trip") {
  const Scatterer s = sphere(1, 3.0, 1.0);
  const auto dirs = far_field_cut(0.0, 5);
  const FarFieldPattern p = far_field(s, random_traces(s, 9), dirs);
  write_far_field_csv(p, "fields_test_far.csv");
  std::ifstream in("fields_test_far.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.find(kFarFieldSchema) != std::string::npos);
  std::getline(in, line);
  CHECK(line == "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi");
  const FarFieldPattern q = read_far_field_csv("fields_test_far.csv");
  REQUIRE(q.size() == p.size());
  CHECK(relative_l2_error(q, p) < 1e-15);
  CHECK(q.directions[4].theta == doctest::Approx(kPi));
}

TEST_CASE("near-field JSON") {
  const Scatterer s = sphere(1, 3.0, 1.0);
  GridSpec g;
  g.origin = Vec3(-2.0, 0.0, -2.0);
  g.u = Vec3(4.0, 0.0, 0.0);
  g.v = Vec3(0.0, 0.0, 4.0);
  g.nu = 5;
  g.nv = 5;
  const NearField nf = compute_near_field(s, solve_traces(s, Formulation::MtMueller), make_plane_wave(s), g);
  CHECK(nf.points.size() == 25);
  CHECK(nf.regions.size() == 2);
  CHECK(nf.region[12] == 1);
  CHECK(nf.region[0] == 0);
  write_near_field_json(nf, "fields_test_near.json");
  std::ifstream in("fields_test_near.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["schema"] == kNearFieldSchema);
  CHECK(j["regions"].size() == 2);
  CHECK(j["total"]["e"].size() == 25);
  CHECK(j["grid"]["nu"] == 5);
}
