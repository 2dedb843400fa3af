#include "driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Core>

#include "mtbem/mie.hpp"
#include "mtbem/report.hpp"
#include "mtbem/solve.hpp"

#ifndef MTBEM_VERSION
#define MTBEM_VERSION "unknown"
#endif

namespace mtbem::driver {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestSchema = "mtbem.manifest.v1";
constexpr const char* kReportSchema = "mtbem.report.v1";
constexpr const char* kSweepSchema = "mtbem.sweep.v1";
constexpr const char* kDeterminism =
    "bit-identical: every file except the wall-time fields of manifest.json, report.json, timing.csv and "
    "sweep.csv is reproduced byte for byte from the same config, seed and inputs, for any --threads value";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return s.str();
}

std::string value_label(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

json quadrature_json(const QuadratureOrders& q) {
  return {{"singular", q.singular}, {"near", q.near}, {"far", q.far}, {"refined_far", q.refined_far}};
}

json solver_json(const SolverSpec& s) {
  return {{"method", s.method == Method::Direct ? "direct" : "gmres"},
          {"tol", s.tol},
          {"restart", s.restart},
          {"max_iter", s.max_iter}};
}

std::vector<Direction> cut_directions(const FarFieldSpec& spec) {
  std::vector<Direction> dirs;
  for (double phi : spec.phi_deg) {
    const auto cut = far_field_cut(phi * std::numbers::pi / 180.0, spec.samples);
    dirs.insert(dirs.end(), cut.begin(), cut.end());
  }
  return dirs;
}

Eigen::VectorXcd random_rhs(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = cd(d(rng), d(rng));
  return b;
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

struct SceneResult {
  json report;
  std::vector<ConditionRow> condition;
  std::vector<TimingRow> timing;
  std::vector<std::vector<int>> dofs;
  bool thresholds_met = true;
};

SceneResult run_scene(const SceneConfig& c, const fs::path& dir, const RunOptions& o) {
  fs::create_directories(dir);
  const Scatterer s = build_scatterer(c);
  const PlaneWave wave = build_plane_wave(c, s);
  AssemblyOptions ao;
  ao.orders = c.quadrature;
  ao.threads = o.threads;
  FieldOptions fo;
  fo.threads = o.threads;

  GmresOptions go;
  go.tol = c.solver.tol;
  go.restart = c.solver.restart;
  go.max_iterations = c.solver.max_iter;

  SceneResult out;
  json& rep = out.report;
  rep["schema"] = kReportSchema;
  rep["name"] = c.name;
  rep["kappa0"] = c.excitation.kappa0;
  rep["h"] = c.geometry.h;
  rep["subdomains"] = s.size();
  rep["formulations"] = json::object();

  std::vector<Direction> dirs;
  std::optional<FarFieldPattern> mie;
  if (c.outputs.farfield) {
    dirs = cut_directions(*c.outputs.farfield);
    if (c.outputs.farfield->mie_reference) {
      const Medium& m = c.media.front();
      mie = mie_far_field(c.geometry.radius, m.eps / c.background.eps, m.mu / c.background.mu, c.excitation.kappa0,
                          dirs);
      write_far_field_csv(*mie, dir / "mie_reference.csv");
    }
  }

  std::vector<double> mie_errors, extinction, continuity;
  for (Formulation f : c.formulations) {
    const std::string name = to_string(f);
    json entry;
    const auto t0 = Clock::now();
    const BlockSystem sys = assemble_system(s, f, ao);
    const double assembly_s = seconds_since(t0);
    std::optional<CalderonPreconditioner> cp;
    double preconditioner_s = 0.0;
    if (f == Formulation::CpMtPmchwt && c.solver.method == Method::Gmres) {
      const auto t1 = Clock::now();
      cp.emplace(s, ao);
      preconditioner_s = seconds_since(t1);
    }
    const Eigen::VectorXcd b = assemble_rhs(s, sys, wave);
    const SolveResult r = c.solver.method == Method::Direct
                              ? solve_direct(sys.matrix, b)
                              : solve_gmres(sys.matrix, b, go, cp ? &*cp : nullptr);
    const TraceVector traces = TraceVector::from_solution(sys, r.x);

    entry["dofs"] = sys.size();
    entry["dofs_per_subdomain"] = sys.dofs;
    entry["method"] = to_string(r.report.method);
    entry["iterations"] = r.report.iterations;
    entry["relative_residual"] = r.report.relative_residual;
    entry["converged"] = r.report.converged;
    entry["assembly_s"] = assembly_s;
    entry["preconditioner_s"] = preconditioner_s;
    entry["solve_s"] = r.report.seconds;
    std::vector<int> dofs(sys.dofs.begin(), sys.dofs.end());
    out.dofs.push_back(dofs);

    if (c.outputs.residuals && c.solver.method == Method::Gmres) {
      write_residual_csv(r.report, dir / ("residuals_" + name + ".csv"));
    }
    if (c.outputs.farfield) {
      const FarFieldPattern p = far_field(s, traces, dirs);
      write_far_field_csv(p, dir / ("farfield_" + name + ".csv"));
      if (mie) {
        const double err = relative_l2_error(p, *mie);
        entry["mie_error"] = err;
        mie_errors.push_back(err);
      }
    }
    if (c.outputs.nearfield) {
      write_near_field_json(compute_near_field(s, traces, wave, *c.outputs.nearfield, fo),
                            dir / ("nearfield_" + name + ".json"));
    }
    if (c.outputs.extinction) {
      const ExtinctionSpec& e = *c.outputs.extinction;
      std::vector<std::vector<Vec3>> probes;
      for (int region = 0; region <= s.size(); ++region) {
        probes.push_back(extinction_probes(s.geometry, region, region == 0 ? e.exterior_distance : e.interior_distance,
                                           e.spacing));
      }
      const std::vector<double> res = extinction_residual(s, traces, wave, probes, fo);
      entry["extinction_residual"] = res;
      extinction.push_back(max_of(res));
    }
    if (c.outputs.continuity) {
      json list = json::array();
      for (const ContinuityResult& cr : surface_current_continuity(s, traces)) {
        list.push_back({{"j", cr.j}, {"k", cr.k}, {"mismatch", cr.mismatch}, {"degenerate", cr.degenerate}});
        continuity.push_back(cr.mismatch);
      }
      entry["continuity"] = list;
    }
    if (c.outputs.condition) {
      ConditionRow row;
      row.formulation = name;
      row.kappa0 = c.excitation.kappa0;
      row.h = c.geometry.h;
      row.geometry = c.geometry.generator;
      row.cond = condition_number(sys.matrix);
      row.cond_gram = f == Formulation::MtMueller ? gram_condition_number(sys) : std::nan("");
      if (c.outputs.condition->rhs == "plane-wave" && c.solver.method == Method::Gmres) {
        row.gmres_iters = r.report.iterations;
        row.converged = r.report.converged;
      } else {
        GmresOptions probe = go;
        probe.throw_on_failure = false;
        std::optional<CalderonPreconditioner> pc;
        if (f == Formulation::CpMtPmchwt) pc.emplace(s, ao);
        const Eigen::VectorXcd rhs = c.outputs.condition->rhs == "random" ? random_rhs(sys.size(), o.seed) : b;
        const SolveResult g = solve_gmres(sys.matrix, rhs, probe, pc ? &*pc : nullptr);
        row.gmres_iters = g.report.iterations;
        row.converged = g.report.converged;
      }
      entry["cond"] = row.cond;
      if (!std::isnan(row.cond_gram)) entry["cond_gram"] = row.cond_gram;
      entry["condition_gmres_iterations"] = row.gmres_iters;
      out.condition.push_back(row);
    }
    if (c.outputs.timing) {
      TimingRow row;
      row.formulation = name;
      row.subdomains = s.size();
      row.dofs = static_cast<long>(sys.size());
      row.kappa0 = c.excitation.kappa0;
      row.h = c.geometry.h;
      row.assembly_s = assembly_s + preconditioner_s;
      row.solve_s = r.report.seconds;
      row.gmres_iters = r.report.iterations;
      row.converged = r.report.converged;
      out.timing.push_back(row);
    }
    rep["formulations"][name] = entry;
  }

  json checks = json::object();
  const auto check = [&](const char* key, const std::optional<double>& limit, const std::vector<double>& values) {
    if (!limit || values.empty()) return;
    const double worst = max_of(values);
    const bool ok = worst < *limit;
    checks[key] = {{"value", worst}, {"limit", *limit}, {"pass", ok}};
    out.thresholds_met = out.thresholds_met && ok;
  };
  check("mie_error", c.thresholds.mie_error, mie_errors);
  check("extinction", c.thresholds.extinction, extinction);
  check("continuity", c.thresholds.continuity, continuity);
  rep["thresholds"] = checks;
  rep["thresholds_met"] = out.thresholds_met;

  if (c.outputs.condition) write_condition_csv(out.condition, dir / "condition.csv");
  if (c.outputs.timing) write_timing_csv(out.timing, dir / "timing.csv");
  std::ofstream(dir / "report.json") << rep.dump(2) << '\n';
  return out;
}

json manifest(const SceneConfig& c, const json& document, const RunOptions& o, const fs::path& dir,
              double wall_s) {
  json m;
  m["schema"] = kManifestSchema;
  m["name"] = c.name;
  m["config_hash"] = config_hash(document);
  m["config"] = document;
  m["versions"] = {{"mtbem", MTBEM_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  json names = json::array();
  for (Formulation f : c.formulations) names.push_back(to_string(f));
  m["formulations"] = names;
  m["quadrature"] = quadrature_json(c.quadrature);
  m["solver"] = solver_json(c.solver);
  m["threads"] = o.threads;
  m["seed"] = o.seed;
  m["determinism"] = kDeterminism;
  m["wall_time_s"] = wall_s;
  json files = json::array();
  std::vector<std::string> found;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) found.push_back(fs::relative(e.path(), dir).generic_string());
  }
  std::sort(found.begin(), found.end());
  for (const auto& f : found) files.push_back(f);
  files.push_back("manifest.json");
  m["files"] = files;
  return m;
}

void write_manifest(const json& m, const fs::path& dir) { std::ofstream(dir / "manifest.json") << m.dump(2) << '\n'; }

}  // namespace

std::string config_hash(const json& doc) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

fs::path make_run_directory(const fs::path& out_root, const std::string& name) {
  const fs::path base = out_root / name;
  fs::create_directories(base);
  const std::string stamp = utc_stamp();
  fs::path dir = base / stamp;
  for (int i = 1; fs::exists(dir); ++i) dir = base / (stamp + "-" + std::to_string(i));
  fs::create_directories(dir);
  const fs::path latest = base / "latest";
  std::error_code ec;
  fs::remove(latest, ec);
  fs::create_directory_symlink(dir.filename(), latest, ec);
  if (ec) std::ofstream(latest) << dir.filename().string() << '\n';
  return dir;
}

RunSummary run(const SceneConfig& config, const json& document, const RunOptions& options) {
  const auto t0 = Clock::now();
  RunSummary summary;
  summary.directory = make_run_directory(options.out_root, config.name);
  const SceneResult r = run_scene(config, summary.directory, options);
  json m = manifest(config, document, options, summary.directory, seconds_since(t0));
  m["dofs_per_subdomain"] = r.dofs.empty() ? json::array() : json(r.dofs.front());
  write_manifest(m, summary.directory);
  summary.report = r.report;
  summary.thresholds_met = r.thresholds_met;
  return summary;
}

RunSummary sweep(const SceneConfig& config, const json& document, const SweepSpec& spec, const RunOptions& options) {
  validate_sweep(spec);
  std::vector<SceneConfig> scenes;
  for (double v : spec.values) scenes.push_back(with_parameter(config, spec.parameter, v));

  const auto t0 = Clock::now();
  RunSummary summary;
  summary.directory = make_run_directory(options.out_root, config.name);
  std::vector<ConditionRow> condition;
  std::vector<TimingRow> timing;
  json runs = json::array();
  json dofs = json::array();
  int failed = 0;

  std::ofstream table(summary.directory / "sweep.csv");
  table.precision(17);
  table << "# schema=" << kSweepSchema << '\n'
        << "parameter,value,formulation,dofs,assembly_s,solve_s,gmres_iters,relative_residual,cond,mie_error,status\n";
  std::map<std::string, std::vector<std::pair<double, double>>> cond_by;
  std::map<std::string, std::vector<int>> iters_by;

  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const double v = spec.values[i];
    const std::string label = spec.parameter + "-" + value_label(v);
    try {
      SceneResult r = run_scene(scenes[i], summary.directory / label, options);
      summary.thresholds_met = summary.thresholds_met && r.thresholds_met;
      for (const auto& [name, e] : r.report["formulations"].items()) {
        table << spec.parameter << ',' << v << ',' << name << ',' << e["dofs"] << ',' << e["assembly_s"].get<double>()
              << ',' << e["solve_s"].get<double>() << ',' << e["iterations"] << ','
              << e["relative_residual"].get<double>() << ',';
        if (e.contains("cond")) table << e["cond"].get<double>();
        table << ',';
        if (e.contains("mie_error")) table << e["mie_error"].get<double>();
        table << ",ok\n";
        if (e.contains("cond")) {
          cond_by[name].emplace_back(v, e["cond"].get<double>());
          iters_by[name].push_back(e["condition_gmres_iterations"].get<int>());
        }
      }
      condition.insert(condition.end(), r.condition.begin(), r.condition.end());
      timing.insert(timing.end(), r.timing.begin(), r.timing.end());
      dofs.push_back(r.dofs.empty() ? json::array() : json(r.dofs.front()));
      runs.push_back({{"value", v}, {"directory", label}, {"status", "ok"}});
    } catch (const Error& e) {
      ++failed;
      std::string message = e.what();
      std::replace(message.begin(), message.end(), ',', ';');
      std::replace(message.begin(), message.end(), '\n', ' ');
      table << spec.parameter << ',' << v << ",,,,,,,,,failed: " << message << '\n';
      dofs.push_back(json::array());
      runs.push_back({{"value", v}, {"directory", label}, {"status", "failed"}, {"error", e.what()}});
    }
  }
  table.close();
  if (config.outputs.condition) write_condition_csv(condition, summary.directory / "condition.csv");
  if (config.outputs.timing) write_timing_csv(timing, summary.directory / "timing.csv");

  // Monotonicity diagnostics per formulation, in sweep order.
  json diagnostics = json::object();
  for (const auto& [name, values] : cond_by) {
    double lo = values.front().second, hi = lo;
    bool cond_increasing = true;
    for (std::size_t i = 0; i < values.size(); ++i) {
      lo = std::min(lo, values[i].second);
      hi = std::max(hi, values[i].second);
      if (i > 0 && !(values[i].second > values[i - 1].second)) cond_increasing = false;
    }
    const std::vector<int>& it = iters_by[name];
    bool iters_increasing = true;
    for (std::size_t i = 1; i < it.size(); ++i) iters_increasing = iters_increasing && it[i] > it[i - 1];
    const auto [imin, imax] = std::minmax_element(it.begin(), it.end());
    diagnostics[name] = {{"cond_ratio", hi / lo},
                         {"cond_strictly_increasing", cond_increasing},
                         {"gmres_iterations", it},
                         {"iterations_spread", *imax - *imin},
                         {"iterations_strictly_increasing", iters_increasing}};
  }

  json& rep = summary.report;
  rep["schema"] = kReportSchema;
  rep["name"] = config.name;
  rep["parameter"] = spec.parameter;
  rep["values"] = spec.values;
  rep["runs"] = runs;
  rep["failed"] = failed;
  rep["diagnostics"] = diagnostics;
  rep["thresholds_met"] = summary.thresholds_met;
  std::ofstream(summary.directory / "report.json") << rep.dump(2) << '\n';

  json m = manifest(config, document, options, summary.directory, seconds_since(t0));
  m["sweep"] = {{"parameter", spec.parameter}, {"values", spec.values}};
  m["dofs_per_subdomain"] = dofs;
  write_manifest(m, summary.directory);
  return summary;
}

std::vector<fs::path> export_matrices(const SceneConfig& config, const fs::path& out, const RunOptions& options) {
  fs::create_directories(out);
  const Scatterer s = build_scatterer(config);
  AssemblyOptions ao;
  ao.orders = config.quadrature;
  ao.threads = options.threads;
  std::vector<fs::path> written;
  for (Formulation f : config.formulations) {
    const fs::path path = out / (std::string(to_string(f)) + ".mtx");
    write_matrix_market(assemble_system(s, f, ao).matrix, path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace mtbem::driver
