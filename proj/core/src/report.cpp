#include "mtbem/report.hpp"

#include <cmath>
#include <fstream>

#include "mtbem/error.hpp"

namespace mtbem {

namespace {

std::ofstream open_table(const std::filesystem::path& path, const char* schema, const char* header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "# schema=" << schema << '\n' << header << '\n';
  return out;
}

}  // namespace

void write_condition_csv(const std::vector<ConditionRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_table(path, kConditionSchema,
                                 "formulation,kappa0,h,cond,gmres_iters,cond_gram,converged,geometry");
  for (const ConditionRow& r : rows) {
    out << r.formulation << ',' << r.kappa0 << ',' << r.h << ',' << r.cond << ',' << r.gmres_iters << ',';
    if (!std::isnan(r.cond_gram)) out << r.cond_gram;
    out << ',' << (r.converged ? 1 : 0) << ',' << r.geometry << '\n';
  }
}

void write_timing_csv(const std::vector<TimingRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_table(path, kTimingSchema,
                                 "formulation,subdomains,dofs,kappa0,h,assembly_s,solve_s,gmres_iters,converged");
  for (const TimingRow& r : rows) {
    out << r.formulation << ',' << r.subdomains << ',' << r.dofs << ',' << r.kappa0 << ',' << r.h << ','
        << r.assembly_s << ',' << r.solve_s << ',' << r.gmres_iters << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

}  // namespace mtbem
