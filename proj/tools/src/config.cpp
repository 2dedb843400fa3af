#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace mtbem::driver {

namespace {

using nlohmann::json;

// Typed access to one JSON object with pointer-qualified errors.
class Node {
 public:
  Node(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {
    if (!value_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(pointer_.empty() ? "/" : pointer_, message); }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, v] : value_.items()) {
      if (!allowed.contains(key)) throw ConfigError(child(key), "unknown key");
    }
  }

  bool has(const char* key) const { return value_.contains(key); }
  std::string child(const std::string& key) const { return pointer_ + "/" + key; }
  const json& raw(const char* key) const { return value_.at(key); }

  Node object(const char* key) const {
    if (!has(key)) fail(std::string("missing key '") + key + "'");
    return Node(value_.at(key), child(key));
  }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(std::string("missing key '") + key + "'");
    }
    const json& v = value_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(child(key), "expected a finite number");
    return d;
  }

  double positive(const char* key, std::optional<double> fallback = std::nullopt) const {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(child(key), "must be positive");
    return d;
  }

  int integer(const char* key, std::optional<int> fallback = std::nullopt, int minimum = 0) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(std::string("missing key '") + key + "'");
    }
    const json& v = value_.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    const int i = v.get<int>();
    if (i < minimum) throw ConfigError(child(key), "must be at least " + std::to_string(minimum));
    return i;
  }

  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(std::string("missing key '") + key + "'");
    }
    const json& v = value_.at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v.get<bool>();
  }

  Vec3 vec3(const char* key, const Vec3& fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_array() || v.size() != 3) throw ConfigError(child(key), "expected an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigError(child(key) + "/" + std::to_string(i), "expected a number");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_array()) throw ConfigError(child(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(child(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  const std::string& pointer() const { return pointer_; }

 private:
  const json& value_;
  std::string pointer_;
};

Medium parse_medium(const Node& n) {
  n.allow({"eps_r", "mu_r"});
  return Medium{n.positive("eps_r", 1.0), n.positive("mu_r", 1.0)};
}

GeometrySpec parse_geometry(const Node& n) {
  GeometrySpec g;
  g.generator = n.string("generator");
  if (g.generator == "sphere") {
    n.allow({"generator", "radius", "subdivisions"});
    g.radius = n.positive("radius", 1.0);
    g.subdivisions = n.integer("subdivisions", 2);
  } else if (g.generator == "cube-stack") {
    n.allow({"generator", "side", "count", "h"});
    g.side = n.positive("side", 1.0);
    g.count = n.integer("count", 2, 1);
    g.h = n.positive("h");
  } else if (g.generator == "torus") {
    n.allow({"generator", "outer", "inner", "height", "h"});
    g.outer = n.positive("outer", 1.0);
    g.inner = n.positive("inner", 0.5);
    g.height = n.positive("height", 0.5);
    g.h = n.positive("h");
    if (!(g.inner < g.outer)) throw ConfigError(n.child("inner"), "must be smaller than outer");
  } else if (g.generator == "import") {
    n.allow({"generator", "path", "format"});
    g.path = n.string("path");
    g.format = n.string("format", "gmsh");
    try {
      mesh_format_from_string(g.format);
    } catch (const MeshError& e) {
      throw ConfigError(n.child("format"), e.what());
    }
  } else {
    throw ConfigError(n.child("generator"), "unknown generator '" + g.generator +
                                                "' (expected sphere, cube-stack, torus or import)");
  }
  return g;
}

int subdomain_count(const GeometrySpec& g) {
  if (g.generator == "cube-stack") return g.count;
  if (g.generator == "import") return -1;
  return 1;
}

SolverSpec parse_solver(const Node& n) {
  n.allow({"method", "tol", "restart", "max_iter"});
  SolverSpec s;
  const std::string method = n.string("method", "gmres");
  if (method == "direct") {
    s.method = Method::Direct;
  } else if (method == "gmres") {
    s.method = Method::Gmres;
  } else {
    throw ConfigError(n.child("method"), "expected 'direct' or 'gmres'");
  }
  s.tol = n.positive("tol", 1e-6);
  s.restart = n.integer("restart", 0);
  s.max_iter = n.integer("max_iter", 1000, 1);
  return s;
}

QuadratureOrders parse_quadrature(const Node& n) {
  n.allow({"singular", "near", "far", "refined_far"});
  QuadratureOrders q;
  q.singular = n.integer("singular", q.singular, 1);
  q.near = n.integer("near", q.near, 1);
  q.far = n.integer("far", q.far, 1);
  q.refined_far = n.integer("refined_far", q.refined_far, 1);
  return q;
}

OutputSpec parse_outputs(const Node& n) {
  n.allow({"farfield", "nearfield", "condition", "timing", "continuity", "extinction", "residuals"});
  OutputSpec o;
  if (n.has("farfield")) {
    const Node f = n.object("farfield");
    f.allow({"phi_deg", "samples", "mie_reference"});
    FarFieldSpec spec;
    spec.phi_deg = f.numbers("phi_deg", spec.phi_deg);
    if (spec.phi_deg.empty()) throw ConfigError(f.child("phi_deg"), "needs at least one cut");
    spec.samples = f.integer("samples", spec.samples, 2);
    spec.mie_reference = f.boolean("mie_reference", false);
    o.farfield = spec;
  }
  if (n.has("nearfield")) {
    const Node f = n.object("nearfield");
    f.allow({"origin", "u", "v", "nu", "nv"});
    GridSpec g;
    g.origin = f.vec3("origin", g.origin);
    g.u = f.vec3("u", g.u);
    g.v = f.vec3("v", g.v);
    g.nu = f.integer("nu", 21, 1);
    g.nv = f.integer("nv", 21, 1);
    o.nearfield = g;
  }
  if (n.has("condition")) {
    ConditionSpec c;
    if (n.raw("condition").is_boolean()) {
      if (n.boolean("condition", false)) o.condition = c;
    } else {
      const Node f = n.object("condition");
      f.allow({"rhs"});
      c.rhs = f.string("rhs", c.rhs);
      if (c.rhs != "plane-wave" && c.rhs != "random") {
        throw ConfigError(f.child("rhs"), "expected 'plane-wave' or 'random'");
      }
      o.condition = c;
    }
  }
  o.timing = n.boolean("timing", false);
  o.continuity = n.boolean("continuity", false);
  o.residuals = n.boolean("residuals", false);
  if (n.has("extinction")) {
    const Node f = n.object("extinction");
    f.allow({"exterior_distance", "interior_distance", "spacing"});
    ExtinctionSpec e;
    e.exterior_distance = f.positive("exterior_distance", e.exterior_distance);
    e.interior_distance = f.positive("interior_distance", e.interior_distance);
    e.spacing = f.positive("spacing", e.spacing);
    o.extinction = e;
  }
  return o;
}

Thresholds parse_thresholds(const Node& n) {
  n.allow({"mie_error", "extinction", "continuity"});
  Thresholds t;
  if (n.has("mie_error")) t.mie_error = n.positive("mie_error");
  if (n.has("extinction")) t.extinction = n.positive("extinction");
  if (n.has("continuity")) t.continuity = n.positive("continuity");
  return t;
}

void check_scene(const SceneConfig& c) {
  const int n = subdomain_count(c.geometry);
  if (n >= 0 && static_cast<int>(c.media.size()) != n) {
    throw ConfigError("/media", "expected " + std::to_string(n) + " media for the geometry, got " +
                                    std::to_string(c.media.size()));
  }
  if (c.outputs.farfield && c.outputs.farfield->mie_reference && c.geometry.generator != "sphere") {
    throw ConfigError("/outputs/farfield/mie_reference", "requires the sphere generator");
  }
  if (c.outputs.farfield && c.outputs.farfield->mie_reference &&
      (c.excitation.direction != Vec3::UnitZ() || c.excitation.polarization != Vec3::UnitX())) {
    throw ConfigError("/outputs/farfield/mie_reference", "requires incidence along +z with x polarization");
  }
  const Vec3& d = c.excitation.direction;
  const Vec3& p = c.excitation.polarization;
  if (std::abs(d.norm() - 1.0) > 1e-12) throw ConfigError("/excitation/direction", "must be a unit vector");
  if (std::abs(p.norm() - 1.0) > 1e-12) throw ConfigError("/excitation/polarization", "must be a unit vector");
  if (std::abs(d.dot(p)) > 1e-12) throw ConfigError("/excitation/polarization", "must be orthogonal to the direction");
}

}  // namespace

Formulation parse_formulation(const std::string& name) {
  if (name == "mueller" || name == "mt-mueller") return Formulation::MtMueller;
  if (name == "pmchwt" || name == "mt-pmchwt") return Formulation::MtPmchwt;
  if (name == "cp-pmchwt" || name == "cp-mt-pmchwt") return Formulation::CpMtPmchwt;
  throw Error("unknown formulation '" + name + "' (expected mueller, pmchwt or cp-pmchwt)");
}

SceneConfig parse_config(const json& doc) {
  const Node root(doc, "");
  root.allow({"name", "geometry", "media", "background", "excitation", "formulation", "solver", "quadrature",
              "outputs", "thresholds", "sweep"});
  SceneConfig c;
  c.name = root.string("name");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("/name", "must be a non-empty file name");
  }
  c.geometry = parse_geometry(root.object("geometry"));

  if (!root.has("media") || !root.raw("media").is_array()) throw ConfigError("/media", "expected an array of media");
  const json& media = root.raw("media");
  for (std::size_t i = 0; i < media.size(); ++i) c.media.push_back(parse_medium(Node(media[i], "/media/" + std::to_string(i))));
  if (root.has("background")) c.background = parse_medium(root.object("background"));

  const Node ex = root.object("excitation");
  ex.allow({"kappa0", "direction", "polarization", "amplitude"});
  c.excitation.kappa0 = ex.positive("kappa0");
  c.excitation.direction = ex.vec3("direction", c.excitation.direction);
  c.excitation.polarization = ex.vec3("polarization", c.excitation.polarization);
  c.excitation.amplitude = ex.number("amplitude", 1.0);

  if (!root.has("formulation")) throw ConfigError("/formulation", "missing key 'formulation'");
  const json& f = root.raw("formulation");
  std::vector<std::string> names;
  if (f.is_string()) {
    names.push_back(f.get<std::string>());
  } else if (f.is_array() && !f.empty() && std::all_of(f.begin(), f.end(), [](const json& x) { return x.is_string(); })) {
    for (const json& x : f) names.push_back(x.get<std::string>());
  } else {
    throw ConfigError("/formulation", "expected a formulation name or a non-empty array of names");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    try {
      c.formulations.push_back(parse_formulation(names[i]));
    } catch (const Error& e) {
      throw ConfigError(f.is_string() ? "/formulation" : "/formulation/" + std::to_string(i), e.what());
    }
  }

  if (root.has("solver")) c.solver = parse_solver(root.object("solver"));
  if (root.has("quadrature")) c.quadrature = parse_quadrature(root.object("quadrature"));
  if (root.has("outputs")) c.outputs = parse_outputs(root.object("outputs"));
  if (root.has("thresholds")) c.thresholds = parse_thresholds(root.object("thresholds"));
  if (root.has("sweep")) {
    const Node s = root.object("sweep");
    s.allow({"parameter", "values"});
    SweepSpec spec{s.string("parameter"), s.numbers("values", {})};
    try {
      validate_sweep(spec);
    } catch (const ConfigError& e) {
      throw e.prefixed("/sweep");
    }
    c.sweep = spec;
  }
  check_scene(c);
  return c;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", path.string() + ": " + e.what());
  }
}

SceneConfig load_config(const std::filesystem::path& path) { return parse_config(read_json(path)); }

void validate_sweep(const SweepSpec& sweep) {
  if (sweep.parameter != "h" && sweep.parameter != "kappa0" && sweep.parameter != "N") {
    throw ConfigError("/parameter", "unknown sweep parameter '" + sweep.parameter + "' (expected h, kappa0 or N)");
  }
  if (sweep.values.empty()) throw ConfigError("/values", "sweep needs at least one value");
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    if (!(sweep.values[i] > 0.0)) throw ConfigError("/values/" + std::to_string(i), "must be positive");
    if (sweep.parameter == "N" && sweep.values[i] != std::floor(sweep.values[i])) {
      throw ConfigError("/values/" + std::to_string(i), "N must be an integer");
    }
  }
}

SceneConfig with_parameter(const SceneConfig& base, const std::string& parameter, double value) {
  SceneConfig c = base;
  if (parameter == "kappa0") {
    c.excitation.kappa0 = value;
  } else if (parameter == "h") {
    if (c.geometry.generator != "cube-stack" && c.geometry.generator != "torus") {
      throw ConfigError("/geometry/h", "an h sweep needs the cube-stack or torus generator");
    }
    c.geometry.h = value;
  } else if (parameter == "N") {
    if (c.geometry.generator != "cube-stack") throw ConfigError("/geometry/count", "an N sweep needs the cube-stack generator");
    const int n = static_cast<int>(value);
    c.geometry.count = n;
    // Extra media are dropped, missing ones repeat the last.
    c.media.resize(static_cast<std::size_t>(n), c.media.empty() ? Medium{} : c.media.back());
  } else {
    throw ConfigError("/sweep/parameter", "unknown sweep parameter '" + parameter + "'");
  }
  check_scene(c);
  return c;
}

MultiMesh build_geometry(const GeometrySpec& g) {
  if (g.generator == "sphere") return make_multimesh({generate_sphere(g.radius, g.subdivisions)});
  if (g.generator == "cube-stack") return generate_cube_stack(g.side, g.count, g.h);
  if (g.generator == "torus") return make_multimesh({generate_square_torus(g.outer, g.inner, g.height, g.h)});
  return import_mesh(g.path, mesh_format_from_string(g.format));
}

Scatterer build_scatterer(const SceneConfig& c) {
  MultiMesh mm = build_geometry(c.geometry);
  if (mm.size() != static_cast<int>(c.media.size())) {
    throw ConfigError("/media", "expected " + std::to_string(mm.size()) + " media for the geometry, got " +
                                    std::to_string(c.media.size()));
  }
  const double omega = c.excitation.kappa0 / std::sqrt(c.background.eps * c.background.mu);
  return make_scatterer(std::move(mm), c.media, c.background, omega);
}

PlaneWave build_plane_wave(const SceneConfig& c, const Scatterer& s) {
  return make_plane_wave(s, c.excitation.direction, c.excitation.polarization, c.excitation.amplitude);
}

}  // namespace mtbem::driver
