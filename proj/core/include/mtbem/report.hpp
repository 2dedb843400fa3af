#pragma once

// Tabular outputs shared by the driver and the acceptance suite. Each file
// starts with a "# schema=..." line followed by a CSV header.

#include <filesystem>
#include <string>
#include <vector>

namespace mtbem {

inline constexpr const char* kConditionSchema = "mtbem.condition.v1";
inline constexpr const char* kTimingSchema = "mtbem.timing.v1";

struct ConditionRow {
  std::string formulation;
  double kappa0 = 0.0;
  double h = 0.0;
  double cond = 0.0;
  // NaN when not applicable.
  double cond_gram = 0.0;
  int gmres_iters = 0;
  bool converged = true;
  std::string geometry;
};

struct TimingRow {
  std::string formulation;
  int subdomains = 0;
  long dofs = 0;
  double kappa0 = 0.0;
  double h = 0.0;
  double assembly_s = 0.0;
  double solve_s = 0.0;
  int gmres_iters = 0;
  bool converged = true;
};

void write_condition_csv(const std::vector<ConditionRow>& rows, const std::filesystem::path& path);
void write_timing_csv(const std::vector<TimingRow>& rows, const std::filesystem::path& path);

}  // namespace mtbem
