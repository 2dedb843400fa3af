#pragma once

// Excitation, right-hand sides and post-processing of solved traces.
//
// Regions are numbered 0 (background) to N, region r >= 1 being subdomain
// r - 1 of the scatterer. Time convention exp(+i w t).

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtbem/operators.hpp"

namespace mtbem {

using Vec3c = Eigen::Vector3cd;

inline constexpr const char* kFarFieldSchema = "mtbem.farfield.v1";
inline constexpr const char* kNearFieldSchema = "mtbem.nearfield.v1";

struct PlaneWave {
  double kappa0 = 1.0;
  Vec3 direction = Vec3::UnitZ();
  Vec3 polarization = Vec3::UnitX();
  cd amplitude = 1.0;

  // Throws Error unless both vectors are unit length and orthogonal and
  // kappa0 > 0.
  void validate() const;
  Vec3c e(const Vec3& x) const;
  // (1 / eta0) d x e, the curl of e scaled by -1 / (i kappa0 eta0).
  Vec3c h(const Vec3& x, double eta0) const;
};

// Plane wave at the background wavenumber of `s`.
PlaneWave make_plane_wave(const Scatterer& s, const Vec3& direction = Vec3::UnitZ(),
                          const Vec3& polarization = Vec3::UnitX(), cd amplitude = 1.0);

// RWG coefficients of (e x n_k, n_k x h) for every subdomain.
struct TraceVector {
  std::vector<Eigen::VectorXcd> m;
  std::vector<Eigen::VectorXcd> j;

  int size() const { return static_cast<int>(m.size()); }
  static TraceVector from_solution(const BlockSystem& system, const Eigen::VectorXcd& x);
  static TraceVector zeros(const Scatterer& s);
  Eigen::VectorXcd stacked() const;
};

// Right-hand side of `system`: B0 <n x f, u_inc> for Mt-Mueller (BC tests),
// -<n x f, u_inc> for the PMCHWT variants (RWG tests).
Eigen::VectorXcd assemble_rhs(const Scatterer& s, const BlockSystem& system, const PlaneWave& wave,
                              int degree = 4);

// Incident traces projected onto RWG through the mixed RWG/BC Gram matrix.
TraceVector incident_traces(const Scatterer& s, const PlaneWave& wave, int degree = 4);

struct FieldOptions {
  // Points closer than guard x h to a surface are masked.
  double guard = 0.1;
  int degree = 4;
  // Collapsed Gauss points per direction for triangles within near_factor
  // diameters of the evaluation point.
  int near_points = 8;
  double near_factor = 3.0;
  int threads = 1;
};

struct FieldSample {
  std::vector<Vec3c> e;
  std::vector<Vec3c> h;
  // False where the point lies in a guard band; e and h are zero there.
  std::vector<bool> valid;
};

// (e, h) from the potentials of `medium` applied to traces (m, j) on the
// RWG space: inside the region bounded by the surface with outward normal
// they reproduce the fields, outside they vanish.
FieldSample evaluate_potentials(const Medium& medium, double omega, const TraceSpace& rwg,
                                const Eigen::VectorXcd& m, const Eigen::VectorXcd& j,
                                std::span<const Vec3> points, const FieldOptions& options = {});

// Field reconstructed with the potentials of one region. Region 0 includes
// the incident field, so the sum over all regions is the total field and
// each term vanishes outside its region.
FieldSample region_field(const Scatterer& s, const TraceVector& traces, const PlaneWave& wave, int region,
                         std::span<const Vec3> points, const FieldOptions& options = {});

// Region containing each point by winding number, 0 for the background.
std::vector<int> region_of(const MultiMesh& geometry, std::span<const Vec3> points);

double surface_distance(const MultiMesh& geometry, const Vec3& x);

// Lattice points with spacing `spacing` outside `region` (in any other region)
// at distance >= `distance` from every surface.
std::vector<Vec3> extinction_probes(const MultiMesh& geometry, int region, double distance, double spacing);

// Per region r: ||F_r|| / ||F_inc|| over probes[r], with F = (e, eta0 h)
// and F_r the reconstruction of region r. probes.size() must be N + 1;
// empty probe sets give 0.
std::vector<double> extinction_residual(const Scatterer& s, const TraceVector& traces, const PlaneWave& wave,
                                        std::span<const std::vector<Vec3>> probes,
                                        const FieldOptions& options = {});

struct Direction {
  double theta = 0.0;  // radians
  double phi = 0.0;
};

// theta in [0, pi] at fixed phi, `samples` >= 2 points.
std::vector<Direction> far_field_cut(double phi, int samples);

struct FarFieldPattern {
  std::vector<Direction> directions;
  std::vector<cd> e_theta;
  std::vector<cd> e_phi;

  int size() const { return static_cast<int>(directions.size()); }
};

// lim r exp(+i kappa0 r) e_scat along each direction, from region-0 traces.
FarFieldPattern far_field(const Scatterer& s, const TraceVector& traces, std::span<const Direction> directions,
                          int degree = 4);

// ||a - reference|| / ||reference|| over all samples and both components.
double relative_l2_error(const FarFieldPattern& a, const FarFieldPattern& reference);

// Gauss-Legendre in cos(theta) times a uniform phi rule.
struct SphereRule {
  std::vector<Direction> directions;
  std::vector<double> weights;
};

SphereRule sphere_rule(int n_theta, int n_phi);

// Integral of |e_far|^2 over the sphere for a plane wave of unit amplitude.
double scattering_cross_section(const FarFieldPattern& pattern, const SphereRule& rule);

// Optical theorem: -(4 pi / kappa0) Im(p . e_far(d)) for forward
// co-polarized amplitude p . e_far(d) and unit incident amplitude.
double extinction_cross_section(cd forward_copolar, double kappa0);

struct ContinuityResult {
  int j = 0;
  int k = 0;
  double mismatch = 0.0;
  // Both sides vanish: mismatch is reported as 0.
  bool degenerate = false;
};

// Relative L2 mismatch of u_j + u_k over matched interface triangles (the
// normals are opposite, so continuous traces cancel).
std::vector<ContinuityResult> surface_current_continuity(const Scatterer& s, const TraceVector& traces,
                                                         int degree = 4);

// Planar grid origin + a u / (nu - 1) + b v / (nv - 1).
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitZ();
  int nu = 2;
  int nv = 2;

  std::vector<Vec3> points() const;
};

struct NearField {
  GridSpec grid;
  std::vector<Vec3> points;
  std::vector<int> region;
  std::vector<bool> masked;
  // One entry per region, then `total`.
  std::vector<FieldSample> regions;
  FieldSample total;
};

NearField compute_near_field(const Scatterer& s, const TraceVector& traces, const PlaneWave& wave,
                             const GridSpec& grid, const FieldOptions& options = {});

// Columns theta_deg, phi_deg, re_etheta, im_etheta, re_ephi, im_ephi after a
// "# schema=..." comment line.
void write_far_field_csv(const FarFieldPattern& pattern, const std::filesystem::path& path);
FarFieldPattern read_far_field_csv(const std::filesystem::path& path);

void write_near_field_json(const NearField& field, const std::filesystem::path& path);

}  // namespace mtbem
