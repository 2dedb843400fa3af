#include <vector>

#include <benchmark/benchmark.h>

#include "mtbem/fields.hpp"
#include "mtbem/operators.hpp"
#include "mtbem/quadrature.hpp"
#include "mtbem/solve.hpp"

using namespace mtbem;

namespace {

Scatterer sphere(int subdivisions, double kappa0) {
  return make_scatterer(make_multimesh({generate_sphere(1.0, subdivisions)}), {Medium{3.0, 1.0}}, Medium{},
                        kappa0);
}

void BM_LocalPair(benchmark::State& state) {
  const auto relation = static_cast<PairRelation>(state.range(0));
  const Corners a{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  Corners b = a;
  if (relation == PairRelation::Edge) b = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.3, -0.8, 0.1)};
  if (relation == PairRelation::Vertex) b = {Vec3(0, 0, 0), Vec3(-1, 0, 0.2), Vec3(-0.2, -1, 0)};
  if (relation == PairRelation::Far) b = {Vec3(0, 0, 5), Vec3(1, 0, 5), Vec3(0, 1, 5)};
  const PairClass cls = near_singular_split(a, b);
  const PairQuadrature quad;
  const std::vector<cd> kappas{cd(1.0), cd(1.7)};
  PairPoints scratch;
  std::vector<LocalInteraction> out;
  for (auto _ : state) {
    integrate_local(a, b, cls, kappas, {}, quad, scratch, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(to_string(cls.relation));
}
BENCHMARK(BM_LocalPair)
    ->Arg(static_cast<int>(PairRelation::Identical))
    ->Arg(static_cast<int>(PairRelation::Edge))
    ->Arg(static_cast<int>(PairRelation::Vertex))
    ->Arg(static_cast<int>(PairRelation::Far));

void BM_Assemble(benchmark::State& state) {
  const Scatterer s = sphere(static_cast<int>(state.range(1)), 1.0);
  const auto f = static_cast<Formulation>(state.range(0));
  Eigen::Index n = 0;
  for (auto _ : state) {
    const BlockSystem sys = assemble_system(s, f);
    n = sys.size();
    benchmark::DoNotOptimize(sys.matrix.data());
  }
  state.counters["dofs"] = static_cast<double>(n);
  state.SetLabel(to_string(f));
}
BENCHMARK(BM_Assemble)
    ->ArgsProduct({{static_cast<int>(Formulation::MtMueller), static_cast<int>(Formulation::MtPmchwt)}, {1, 2}})
    ->Unit(benchmark::kMillisecond);

void BM_Gmres(benchmark::State& state) {
  const Scatterer s = sphere(2, 1.0);
  const auto f = static_cast<Formulation>(state.range(0));
  const BlockSystem sys = assemble_system(s, f);
  const Eigen::VectorXcd b = assemble_rhs(s, sys, make_plane_wave(s));
  int iterations = 0;
  for (auto _ : state) {
    const SolveResult r = solve_gmres(sys.matrix, b);
    iterations = r.report.iterations;
    benchmark::DoNotOptimize(r.x.data());
  }
  state.counters["iterations"] = iterations;
  state.SetLabel(to_string(f));
}
BENCHMARK(BM_Gmres)
    ->Arg(static_cast<int>(Formulation::MtMueller))
    ->Arg(static_cast<int>(Formulation::MtPmchwt))
    ->Unit(benchmark::kMillisecond);

void BM_FarField(benchmark::State& state) {
  const Scatterer s = sphere(2, 1.0);
  const TraceVector traces = incident_traces(s, make_plane_wave(s));
  const auto dirs = far_field_cut(0.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const FarFieldPattern p = far_field(s, traces, dirs);
    benchmark::DoNotOptimize(p.e_theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FarField)->Arg(37)->Arg(181)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
