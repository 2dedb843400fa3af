#pragma once

// Scene configuration for the driver: one JSON document per experiment.
// configs/README.md documents the keys.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtbem/fields.hpp"
#include "mtbem/operators.hpp"

namespace mtbem::driver {

// Validation failure at a JSON pointer into the config document.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, std::string message)
      : Error(pointer + ": " + message), pointer_(std::move(pointer)), message_(std::move(message)) {}
  const std::string& pointer() const noexcept { return pointer_; }
  const std::string& message() const noexcept { return message_; }
  // Same error relocated under `prefix`.
  ConfigError prefixed(const std::string& prefix) const { return {prefix + pointer_, message_}; }

 private:
  std::string pointer_;
  std::string message_;
};

struct GeometrySpec {
  // "sphere", "cube-stack", "torus" or "import".
  std::string generator = "sphere";
  double radius = 1.0;
  int subdivisions = 2;
  double side = 1.0;
  int count = 2;
  double h = 0.25;
  double outer = 1.0;
  double inner = 0.5;
  double height = 0.5;
  std::filesystem::path path;
  std::string format = "gmsh";
};

struct ExcitationSpec {
  double kappa0 = 1.0;
  Vec3 direction = Vec3::UnitZ();
  Vec3 polarization = Vec3::UnitX();
  double amplitude = 1.0;
};

enum class Method { Direct, Gmres };

struct SolverSpec {
  Method method = Method::Gmres;
  double tol = 1e-6;
  int restart = 0;
  int max_iter = 1000;
};

struct FarFieldSpec {
  std::vector<double> phi_deg{0.0, 90.0};
  int samples = 181;
  // Adds mie_reference.csv and the relative error; sphere geometry only.
  bool mie_reference = false;
};

struct ExtinctionSpec {
  double exterior_distance = 0.25;
  double interior_distance = 0.5;
  double spacing = 0.25;
};

struct ConditionSpec {
  // "plane-wave" or "random"; the random right-hand side uses --seed.
  std::string rhs = "plane-wave";
};

struct OutputSpec {
  std::optional<FarFieldSpec> farfield;
  std::optional<GridSpec> nearfield;
  std::optional<ConditionSpec> condition;
  bool timing = false;
  bool continuity = false;
  std::optional<ExtinctionSpec> extinction;
  bool residuals = false;
};

// Limits checked after a run; exceeding one gives exit code 4.
struct Thresholds {
  std::optional<double> mie_error;
  std::optional<double> extinction;
  std::optional<double> continuity;
};

struct SweepSpec {
  // "h", "kappa0" or "N".
  std::string parameter;
  std::vector<double> values;
};

struct SceneConfig {
  std::string name;
  GeometrySpec geometry;
  std::vector<Medium> media;
  Medium background;
  ExcitationSpec excitation;
  std::vector<Formulation> formulations;
  SolverSpec solver;
  QuadratureOrders quadrature;
  OutputSpec outputs;
  Thresholds thresholds;
  std::optional<SweepSpec> sweep;
};

// Throws ConfigError.
SceneConfig parse_config(const nlohmann::json& doc);
SceneConfig load_config(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Applies one sweep value; throws ConfigError for unknown parameters or
// values that break the scene.
SceneConfig with_parameter(const SceneConfig& base, const std::string& parameter, double value);
void validate_sweep(const SweepSpec& sweep);

// "mueller", "pmchwt", "cp-pmchwt" and the mt- prefixed spellings.
Formulation parse_formulation(const std::string& name);

MultiMesh build_geometry(const GeometrySpec& g);
Scatterer build_scatterer(const SceneConfig& c);
PlaneWave build_plane_wave(const SceneConfig& c, const Scatterer& s);

}  // namespace mtbem::driver
