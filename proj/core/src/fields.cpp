#include "mtbem/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mtbem/error.hpp"

namespace mtbem {

namespace {

constexpr cd I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

void check_wave(const Scatterer& s, const PlaneWave& wave) {
  wave.validate();
  const double k0 = s.background.kappa(s.omega).real();
  if (std::abs(wave.kappa0 - k0) > 1e-10 * k0) {
    throw Error("plane wave kappa0 " + std::to_string(wave.kappa0) + " differs from the background wavenumber " +
                std::to_string(k0));
  }
}

Vec3 at(const Corners& c, const Eigen::Vector3d& b) { return b[0] * c[0] + b[1] * c[1] + b[2] * c[2]; }

// Value and divergence of one basis combination on a triangle from its
// local shape coefficients.
Vec3 shape_value(const Corners& c, double area, const Eigen::Vector3d& coeffs, const Vec3& x) {
  Vec3 v = Vec3::Zero();
  for (int l = 0; l < 3; ++l) v += coeffs[l] * (x - c[l]);
  return v / (2.0 * area);
}

double shape_divergence(double area, const Eigen::Vector3d& coeffs) { return coeffs.sum() / area; }

// Trace value on a triangle of the space's mesh.
template <class Coeffs>
Vec3c trace_value(const TraceSpace& space, int t, const Corners& c, double area, const Coeffs& x, const Vec3& y) {
  Vec3c v = Vec3c::Zero();
  for (const auto& term : space.terms(t)) v += x(term.dof) * shape_value(c, area, term.coeffs, y).cast<cd>();
  return v;
}

template <class Coeffs>
cd trace_divergence(const TraceSpace& space, int t, double area, const Coeffs& x) {
  cd d = 0.0;
  for (const auto& term : space.terms(t)) d += x(term.dof) * shape_divergence(area, term.coeffs);
  return d;
}

// b_i = int (n x f_i) . g over the test space.
template <class F>
Eigen::VectorXcd rotated_moments(const TraceSpace& test, const F& g, int degree) {
  const Mesh& mesh = test.mesh();
  const TriangleRule rule = triangle_rule(degree);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(test.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& terms = test.terms(t);
    if (terms.empty()) continue;
    const Corners c = mesh.corners(t);
    const double area = mesh.area(t);
    const Vec3& n = mesh.normal(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 x = at(c, rule.points[q]);
      const Vec3c gx = g(x, n);
      const double w = rule.weights[q] * area;
      for (const auto& term : terms) {
        const Vec3 f = n.cross(shape_value(c, area, term.coeffs, x));
        b(term.dof) += w * f.cast<cd>().dot(gx);
      }
    }
  }
  return b;
}

// Eigen's complex cross product conjugates; these do not.
Vec3c cross(const Vec3c& a, const Vec3c& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3c cross(const Vec3& a, const Vec3c& b) { return cross(Vec3c(a.cast<cd>()), b); }

template <class Body>
void parallel_for(std::size_t n, int threads, const Body& body) {
  const std::size_t workers = std::clamp<std::size_t>(threads > 0 ? static_cast<std::size_t>(threads) : 1, 1,
                                                      std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Quadrature samples of surface currents, weights included.
struct Source {
  Vec3 y;
  Vec3c m;
  Vec3c j;
  cd div_m;
  cd div_j;
};

struct SourceTriangle {
  Corners corners;
  Vec3 centroid;
  double diameter = 0.0;
  std::vector<Source> regular;
  std::vector<Source> near;
};

struct SourceSet {
  std::vector<SourceTriangle> triangles;
};

void add_sources(SourceSet& set, const TraceSpace& rwg, const Eigen::VectorXcd& m, const Eigen::VectorXcd& j,
                 double sign, const FieldOptions& options) {
  const Mesh& mesh = rwg.mesh();
  const TriangleRule regular = triangle_rule(options.degree);
  const TriangleRule near = collapsed_gauss_rule(options.near_points);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    SourceTriangle st;
    st.corners = mesh.corners(t);
    st.centroid = mesh.centroid(t);
    st.diameter = mesh.diameter(t);
    const double area = mesh.area(t);
    const cd dm = sign * trace_divergence(rwg, t, area, m);
    const cd dj = sign * trace_divergence(rwg, t, area, j);
    auto fill = [&](const TriangleRule& rule, std::vector<Source>& out) {
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec3 y = at(st.corners, rule.points[q]);
        const double w = rule.weights[q] * area;
        out.push_back({y, w * sign * trace_value(rwg, t, st.corners, area, m, y),
                       w * sign * trace_value(rwg, t, st.corners, area, j, y), w * dm, w * dj});
      }
    };
    fill(regular, st.regular);
    fill(near, st.near);
    set.triangles.push_back(std::move(st));
  }
}

// (e, h) of the potentials applied to the sources.
std::pair<Vec3c, Vec3c> potentials_at(const SourceSet& set, cd kappa, double eta, const Vec3& x,
                                      double near_factor) {
  Vec3c sm = Vec3c::Zero(), sj = Vec3c::Zero(), gm = Vec3c::Zero(), gj = Vec3c::Zero();
  Vec3c cm = Vec3c::Zero(), cj = Vec3c::Zero();
  for (const auto& st : set.triangles) {
    const bool close = (x - st.centroid).norm() < near_factor * st.diameter;
    for (const auto& src : close ? st.near : st.regular) {
      const Vec3 rv = x - src.y;
      const double r = rv.norm();
      const cd g = std::exp(-I * kappa * r) / (4.0 * kPi * r);
      const cd f = g * (-I * kappa - 1.0 / r) / r;
      const Vec3c grad = f * rv.cast<cd>();
      sm += g * src.m;
      sj += g * src.j;
      gm += src.div_m * grad;
      gj += src.div_j * grad;
      cm += cross(grad, src.m);
      cj += cross(grad, src.j);
    }
  }
  const Vec3c tm = -I * kappa * sm + gm / (I * kappa);
  const Vec3c tj = -I * kappa * sj + gj / (I * kappa);
  return {cm - eta * tj, -(tm / eta + cj)};
}

double point_triangle_distance(const Vec3& p, const Corners& c) {
  // Closest point by Voronoi regions of the triangle.
  const Vec3 ab = c[1] - c[0], ac = c[2] - c[0], ap = p - c[0];
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();
  const Vec3 bp = p - c[1];
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (c[0] + ab * (d1 / (d1 - d3)))).norm();
  const Vec3 cp = p - c[2];
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (c[0] + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return (p - (c[1] + (c[2] - c[1]) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (c[0] + ab * (vb * denom) + ac * (vc * denom))).norm();
}

// Solid angle of a triangle seen from p (Van Oosterom and Strackee).
double solid_angle(const Vec3& p, const Corners& c) {
  const Vec3 a = c[0] - p, b = c[1] - p, d = c[2] - p;
  const double la = a.norm(), lb = b.norm(), ld = d.norm();
  const double num = a.dot(b.cross(d));
  const double den = la * lb * ld + a.dot(b) * ld + a.dot(d) * lb + b.dot(d) * la;
  return 2.0 * std::atan2(num, den);
}

bool inside(const Mesh& mesh, const Vec3& p) {
  double omega = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) omega += solid_angle(p, mesh.corners(t));
  return omega > 2.0 * kPi;
}

// Masks points within guard x h of any surface of the scatterer.
std::vector<bool> guard_mask(const MultiMesh& geometry, std::span<const Vec3> points, double guard) {
  std::vector<bool> valid(points.size(), true);
  for (const Mesh& mesh : geometry.meshes) {
    const double band = guard * mesh.characteristic_size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!valid[i]) continue;
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        if ((points[i] - mesh.centroid(t)).norm() > mesh.diameter(t) + band) continue;
        if (point_triangle_distance(points[i], mesh.corners(t)) < band) {
          valid[i] = false;
          break;
        }
      }
    }
  }
  return valid;
}

FieldSample evaluate_sources(const SourceSet& set, cd kappa, double eta, std::span<const Vec3> points,
                             std::vector<bool> valid, const FieldOptions& options) {
  FieldSample out;
  out.e.assign(points.size(), Vec3c::Zero());
  out.h.assign(points.size(), Vec3c::Zero());
  parallel_for(points.size(), options.threads, [&](std::size_t i) {
    if (!valid[i]) return;
    std::tie(out.e[i], out.h[i]) = potentials_at(set, kappa, eta, points[i], options.near_factor);
  });
  out.valid = std::move(valid);
  return out;
}

void check_traces(const Scatterer& s, const TraceVector& traces) {
  if (traces.size() != s.size() || static_cast<int>(traces.j.size()) != s.size()) {
    throw Error("trace vector has " + std::to_string(traces.size()) + " subdomains, scatterer has " +
                std::to_string(s.size()));
  }
  for (int k = 0; k < s.size(); ++k) {
    const Eigen::Index n = s.boundaries[k]->primal.num_edges();
    if (traces.m[k].size() != n || traces.j[k].size() != n) {
      throw Error("trace vector of subdomain " + std::to_string(k) + " does not match its RWG space");
    }
  }
}

Vec3 unit_direction(const Direction& d) {
  return {std::sin(d.theta) * std::cos(d.phi), std::sin(d.theta) * std::sin(d.phi), std::cos(d.theta)};
}

Vec3 theta_hat(const Direction& d) {
  return {std::cos(d.theta) * std::cos(d.phi), std::cos(d.theta) * std::sin(d.phi), -std::sin(d.theta)};
}

Vec3 phi_hat(const Direction& d) { return {-std::sin(d.phi), std::cos(d.phi), 0.0}; }

nlohmann::json complex_vector(const Vec3c& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

nlohmann::json sample_json(const FieldSample& f) {
  nlohmann::json e = nlohmann::json::array(), h = nlohmann::json::array();
  for (std::size_t i = 0; i < f.e.size(); ++i) {
    if (f.valid[i]) {
      e.push_back(complex_vector(f.e[i]));
      h.push_back(complex_vector(f.h[i]));
    } else {
      e.push_back(nullptr);
      h.push_back(nullptr);
    }
  }
  return {{"e", e}, {"h", h}};
}

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

void PlaneWave::validate() const {
  if (!(kappa0 > 0.0)) throw Error("plane wave kappa0 must be positive");
  if (std::abs(direction.norm() - 1.0) > 1e-12 || std::abs(polarization.norm() - 1.0) > 1e-12) {
    throw Error("plane wave direction and polarization must be unit vectors");
  }
  if (std::abs(direction.dot(polarization)) > 1e-12) {
    throw Error("plane wave polarization must be orthogonal to the direction");
  }
}

Vec3c PlaneWave::e(const Vec3& x) const {
  return amplitude * std::exp(-I * kappa0 * direction.dot(x)) * polarization.cast<cd>();
}

Vec3c PlaneWave::h(const Vec3& x, double eta0) const { return cross(direction, e(x)) / eta0; }

PlaneWave make_plane_wave(const Scatterer& s, const Vec3& direction, const Vec3& polarization, cd amplitude) {
  PlaneWave w{s.background.kappa(s.omega).real(), direction, polarization, amplitude};
  w.validate();
  return w;
}

TraceVector TraceVector::from_solution(const BlockSystem& system, const Eigen::VectorXcd& x) {
  if (x.size() != system.size()) throw Error("solution length does not match the system");
  TraceVector t;
  for (std::size_t k = 0; k < system.offset.size(); ++k) {
    t.m.push_back(x.segment(system.offset[k], system.dofs[k]));
    t.j.push_back(x.segment(system.offset[k] + system.dofs[k], system.dofs[k]));
  }
  return t;
}

TraceVector TraceVector::zeros(const Scatterer& s) {
  TraceVector t;
  for (const auto& b : s.boundaries) {
    t.m.push_back(Eigen::VectorXcd::Zero(b->primal.num_edges()));
    t.j.push_back(Eigen::VectorXcd::Zero(b->primal.num_edges()));
  }
  return t;
}

Eigen::VectorXcd TraceVector::stacked() const {
  Eigen::Index n = 0;
  for (std::size_t k = 0; k < m.size(); ++k) n += m[k].size() + j[k].size();
  Eigen::VectorXcd x(n);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    x.segment(at, m[k].size()) = m[k];
    at += m[k].size();
    x.segment(at, j[k].size()) = j[k];
    at += j[k].size();
  }
  return x;
}

Eigen::VectorXcd assemble_rhs(const Scatterer& s, const BlockSystem& system, const PlaneWave& wave, int degree) {
  check_wave(s, wave);
  const double eta0 = s.background.eta();
  double scale_e = -1.0, scale_h = -1.0;
  if (system.formulation == Formulation::MtMueller) {
    scale_e = s.background.eps;
    scale_h = s.background.mu;
  }
  Eigen::VectorXcd b(system.size());
  for (std::size_t k = 0; k < system.offset.size(); ++k) {
    const TraceSpace& test = system.test[k];
    const auto m_inc = [&](const Vec3& x, const Vec3& n) -> Vec3c { return -cross(n, wave.e(x)); };
    const auto j_inc = [&](const Vec3& x, const Vec3& n) -> Vec3c { return cross(n, wave.h(x, eta0)); };
    b.segment(system.offset[k], system.dofs[k]) = scale_e * rotated_moments(test, m_inc, degree);
    b.segment(system.offset[k] + system.dofs[k], system.dofs[k]) = scale_h * rotated_moments(test, j_inc, degree);
  }
  return b;
}

TraceVector incident_traces(const Scatterer& s, const PlaneWave& wave, int degree) {
  check_wave(s, wave);
  const double eta0 = s.background.eta();
  TraceVector t;
  for (const auto& boundary : s.boundaries) {
    const TraceSpace rwg = build_rwg(boundary);
    const TraceSpace bc = build_bc(boundary);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    const Eigen::SparseMatrix<double> g = assemble_gram(bc, rwg);
    lu.compute(g);
    if (lu.info() != Eigen::Success) throw SolverError(SolverError::Kind::Singular, "mixed Gram matrix is singular");
    const auto solve = [&](const Eigen::VectorXcd& b) -> Eigen::VectorXcd {
      const Eigen::VectorXd re = lu.solve(Eigen::VectorXd(b.real()));
      const Eigen::VectorXd im = lu.solve(Eigen::VectorXd(b.imag()));
      return re.cast<cd>() + I * im.cast<cd>();
    };
    t.m.push_back(solve(rotated_moments(
        bc, [&](const Vec3& x, const Vec3& n) -> Vec3c { return -cross(n, wave.e(x)); }, degree)));
    t.j.push_back(solve(rotated_moments(
        bc, [&](const Vec3& x, const Vec3& n) -> Vec3c { return cross(n, wave.h(x, eta0)); }, degree)));
  }
  return t;
}

FieldSample evaluate_potentials(const Medium& medium, double omega, const TraceSpace& rwg,
                                const Eigen::VectorXcd& m, const Eigen::VectorXcd& j,
                                std::span<const Vec3> points, const FieldOptions& options) {
  if (m.size() != rwg.size() || j.size() != rwg.size()) throw Error("trace length does not match the space");
  SourceSet set;
  add_sources(set, rwg, m, j, 1.0, options);
  MultiMesh own;
  own.meshes.push_back(rwg.mesh());
  return evaluate_sources(set, medium.kappa(omega), medium.eta(), points, guard_mask(own, points, options.guard),
                          options);
}

FieldSample region_field(const Scatterer& s, const TraceVector& traces, const PlaneWave& wave, int region,
                         std::span<const Vec3> points, const FieldOptions& options) {
  check_wave(s, wave);
  check_traces(s, traces);
  if (region < 0 || region > s.size()) throw Error("region " + std::to_string(region) + " out of range");
  SourceSet set;
  Medium medium = s.background;
  if (region == 0) {
    for (int k = 0; k < s.size(); ++k) add_sources(set, build_rwg(s.boundaries[k]), traces.m[k], traces.j[k], -1.0, options);
  } else {
    medium = s.media[region - 1];
    add_sources(set, build_rwg(s.boundaries[region - 1]), traces.m[region - 1], traces.j[region - 1], 1.0, options);
  }
  FieldSample f = evaluate_sources(set, medium.kappa(s.omega), medium.eta(), points,
                                   guard_mask(s.geometry, points, options.guard), options);
  if (region == 0) {
    const double eta0 = s.background.eta();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!f.valid[i]) continue;
      f.e[i] += wave.e(points[i]);
      f.h[i] += wave.h(points[i], eta0);
    }
  }
  return f;
}

std::vector<int> region_of(const MultiMesh& geometry, std::span<const Vec3> points) {
  std::vector<int> r(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < geometry.size(); ++k) {
      if (inside(geometry.meshes[k], points[i])) {
        r[i] = k + 1;
        break;
      }
    }
  }
  return r;
}

double surface_distance(const MultiMesh& geometry, const Vec3& x) {
  double d = std::numeric_limits<double>::infinity();
  for (const Mesh& mesh : geometry.meshes)
    for (int t = 0; t < mesh.num_triangles(); ++t) d = std::min(d, point_triangle_distance(x, mesh.corners(t)));
  return d;
}

std::vector<Vec3> extinction_probes(const MultiMesh& geometry, int region, double distance, double spacing) {
  if (!(spacing > 0.0)) throw Error("probe spacing must be positive");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Mesh& mesh : geometry.meshes) {
    for (const Vec3& v : mesh.vertices()) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  lo.array() -= 2.0 * distance;
  hi.array() += 2.0 * distance;
  std::vector<Vec3> candidates;
  const Eigen::Array3i n = ((hi - lo) / spacing).array().floor().cast<int>() + 1;
  for (int a = 0; a < n[0]; ++a)
    for (int b = 0; b < n[1]; ++b)
      for (int c = 0; c < n[2]; ++c) candidates.push_back(lo + spacing * Vec3(a, b, c));
  const std::vector<int> r = region_of(geometry, candidates);
  std::vector<Vec3> probes;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (r[i] != region && surface_distance(geometry, candidates[i]) >= distance) probes.push_back(candidates[i]);
  }
  return probes;
}

std::vector<double> extinction_residual(const Scatterer& s, const TraceVector& traces, const PlaneWave& wave,
                                        std::span<const std::vector<Vec3>> probes, const FieldOptions& options) {
  if (static_cast<int>(probes.size()) != s.size() + 1) throw Error("extinction probes needed for every region");
  const double eta0 = s.background.eta();
  std::vector<double> out;
  for (int r = 0; r <= s.size(); ++r) {
    const auto& pts = probes[r];
    if (pts.empty()) {
      out.push_back(0.0);
      continue;
    }
    const FieldSample f = region_field(s, traces, wave, r, pts, options);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!f.valid[i]) continue;
      num += f.e[i].squaredNorm() + eta0 * eta0 * f.h[i].squaredNorm();
      den += wave.e(pts[i]).squaredNorm() + eta0 * eta0 * wave.h(pts[i], eta0).squaredNorm();
    }
    out.push_back(den > 0.0 ? std::sqrt(num / den) : 0.0);
  }
  return out;
}

std::vector<Direction> far_field_cut(double phi, int samples) {
  if (samples < 2) throw Error("a far-field cut needs at least two samples");
  std::vector<Direction> d;
  for (int i = 0; i < samples; ++i) d.push_back({kPi * i / (samples - 1), phi});
  return d;
}

FarFieldPattern far_field(const Scatterer& s, const TraceVector& traces, std::span<const Direction> directions,
                          int degree) {
  check_traces(s, traces);
  const double k0 = s.background.kappa(s.omega).real();
  const double eta0 = s.background.eta();
  const TriangleRule rule = triangle_rule(degree);
  // Background-facing traces are -u_k.
  std::vector<Vec3> y;
  std::vector<Vec3c> wm, wj;
  for (int k = 0; k < s.size(); ++k) {
    const TraceSpace rwg = build_rwg(s.boundaries[k]);
    const Mesh& mesh = rwg.mesh();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const Corners c = mesh.corners(t);
      const double area = mesh.area(t);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec3 x = at(c, rule.points[q]);
        const double w = -rule.weights[q] * area;
        y.push_back(x);
        wm.push_back(w * trace_value(rwg, t, c, area, traces.m[k], x));
        wj.push_back(w * trace_value(rwg, t, c, area, traces.j[k], x));
      }
    }
  }
  FarFieldPattern p;
  p.directions.assign(directions.begin(), directions.end());
  for (const Direction& d : directions) {
    const Vec3 xh = unit_direction(d);
    Vec3c M = Vec3c::Zero(), J = Vec3c::Zero();
    for (std::size_t q = 0; q < y.size(); ++q) {
      const cd phase = std::exp(I * k0 * xh.dot(y[q]));
      M += phase * wm[q];
      J += phase * wj[q];
    }
    const Vec3c e = (-I * k0 / (4.0 * kPi)) * (cross(xh, M) - eta0 * J);
    p.e_theta.push_back(theta_hat(d).cast<cd>().dot(e));
    p.e_phi.push_back(phi_hat(d).cast<cd>().dot(e));
  }
  return p;
}

double relative_l2_error(const FarFieldPattern& a, const FarFieldPattern& reference) {
  if (a.size() != reference.size()) throw Error("far-field patterns have different sample counts");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    num += std::norm(a.e_theta[i] - reference.e_theta[i]) + std::norm(a.e_phi[i] - reference.e_phi[i]);
    den += std::norm(reference.e_theta[i]) + std::norm(reference.e_phi[i]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

SphereRule sphere_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw Error("sphere rule needs positive sample counts");
  const LineRule gl = gauss_legendre(n_theta);
  SphereRule r;
  for (std::size_t i = 0; i < gl.points.size(); ++i) {
    const double theta = std::acos(1.0 - 2.0 * gl.points[i]);
    for (int k = 0; k < n_phi; ++k) {
      r.directions.push_back({theta, 2.0 * kPi * k / n_phi});
      r.weights.push_back(2.0 * gl.weights[i] * 2.0 * kPi / n_phi);
    }
  }
  return r;
}

double scattering_cross_section(const FarFieldPattern& pattern, const SphereRule& rule) {
  if (pattern.size() != static_cast<int>(rule.weights.size())) throw Error("pattern does not match the sphere rule");
  double s = 0.0;
  for (int i = 0; i < pattern.size(); ++i) {
    s += rule.weights[i] * (std::norm(pattern.e_theta[i]) + std::norm(pattern.e_phi[i]));
  }
  return s;
}

double extinction_cross_section(cd forward_copolar, double kappa0) {
  return -4.0 * kPi / kappa0 * forward_copolar.imag();
}

std::vector<ContinuityResult> surface_current_continuity(const Scatterer& s, const TraceVector& traces,
                                                         int degree) {
  check_traces(s, traces);
  const TriangleRule rule = triangle_rule(degree);
  std::vector<TraceSpace> rwg;
  for (const auto& b : s.boundaries) rwg.push_back(build_rwg(b));
  std::vector<ContinuityResult> out;
  for (const InterfacePair& pair : s.geometry.interface_pairs) {
    const Mesh& mj = rwg[pair.j].mesh();
    const Mesh& mk = rwg[pair.k].mesh();
    double num = 0.0, den = 0.0;
    for (const auto& [tj, tk] : pair.triangles) {
      const Corners cj = mj.corners(tj), ck = mk.corners(tk);
      const double area = mj.area(tj);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec3 x = at(cj, rule.points[q]);
        const double w = rule.weights[q] * area;
        const Vec3c m1 = trace_value(rwg[pair.j], tj, cj, area, traces.m[pair.j], x);
        const Vec3c j1 = trace_value(rwg[pair.j], tj, cj, area, traces.j[pair.j], x);
        const Vec3c m2 = trace_value(rwg[pair.k], tk, ck, mk.area(tk), traces.m[pair.k], x);
        const Vec3c j2 = trace_value(rwg[pair.k], tk, ck, mk.area(tk), traces.j[pair.k], x);
        num += w * ((m1 + m2).squaredNorm() + (j1 + j2).squaredNorm());
        den += w * 0.5 * (m1.squaredNorm() + m2.squaredNorm() + j1.squaredNorm() + j2.squaredNorm());
      }
    }
    ContinuityResult r{pair.j, pair.k, 0.0, den == 0.0};
    if (den > 0.0) r.mismatch = std::sqrt(num / den);
    out.push_back(r);
  }
  return out;
}

std::vector<Vec3> GridSpec::points() const {
  if (nu < 1 || nv < 1) throw Error("grid needs positive sample counts");
  std::vector<Vec3> p;
  for (int b = 0; b < nv; ++b) {
    for (int a = 0; a < nu; ++a) {
      const double sa = nu > 1 ? static_cast<double>(a) / (nu - 1) : 0.0;
      const double sb = nv > 1 ? static_cast<double>(b) / (nv - 1) : 0.0;
      p.push_back(origin + sa * u + sb * v);
    }
  }
  return p;
}

NearField compute_near_field(const Scatterer& s, const TraceVector& traces, const PlaneWave& wave,
                             const GridSpec& grid, const FieldOptions& options) {
  NearField nf;
  nf.grid = grid;
  nf.points = grid.points();
  nf.region = region_of(s.geometry, nf.points);
  for (int r = 0; r <= s.size(); ++r) nf.regions.push_back(region_field(s, traces, wave, r, nf.points, options));
  nf.total.valid = nf.regions.front().valid;
  nf.total.e.assign(nf.points.size(), Vec3c::Zero());
  nf.total.h.assign(nf.points.size(), Vec3c::Zero());
  for (const FieldSample& f : nf.regions) {
    for (std::size_t i = 0; i < nf.points.size(); ++i) {
      nf.total.e[i] += f.e[i];
      nf.total.h[i] += f.h[i];
    }
  }
  for (bool v : nf.total.valid) nf.masked.push_back(!v);
  return nf;
}

void write_far_field_csv(const FarFieldPattern& pattern, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "# schema=" << kFarFieldSchema << " normalization=lim_r r*exp(+i*kappa0*r)*E_scat time=exp(+i*omega*t)\n";
  out << "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi\n";
  out.precision(17);
  for (int i = 0; i < pattern.size(); ++i) {
    const Direction& d = pattern.directions[i];
    out << d.theta * 180.0 / kPi << ',' << d.phi * 180.0 / kPi << ',' << pattern.e_theta[i].real() << ','
        << pattern.e_theta[i].imag() << ',' << pattern.e_phi[i].real() << ',' << pattern.e_phi[i].imag() << '\n';
  }
}

FarFieldPattern read_far_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  FarFieldPattern p;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double th, ph, a, b, c, d;
    if (!(row >> th >> ph >> a >> b >> c >> d)) throw Error("malformed far-field row: " + line);
    p.directions.push_back({th * kPi / 180.0, ph * kPi / 180.0});
    p.e_theta.emplace_back(a, b);
    p.e_phi.emplace_back(c, d);
  }
  return p;
}

void write_near_field_json(const NearField& field, const std::filesystem::path& path) {
  nlohmann::json j;
  j["schema"] = kNearFieldSchema;
  j["grid"] = {{"origin", vec_json(field.grid.origin)},
               {"u", vec_json(field.grid.u)},
               {"v", vec_json(field.grid.v)},
               {"nu", field.grid.nu},
               {"nv", field.grid.nv}};
  j["region"] = field.region;
  j["masked"] = field.masked;
  nlohmann::json regions = nlohmann::json::array();
  for (std::size_t r = 0; r < field.regions.size(); ++r) {
    nlohmann::json e = sample_json(field.regions[r]);
    e["region"] = r;
    regions.push_back(std::move(e));
  }
  j["regions"] = std::move(regions);
  j["total"] = sample_json(field.total);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump() << '\n';
}

}  // namespace mtbem
