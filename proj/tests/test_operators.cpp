#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/SVD>

#include "doctest.h"
#include "mtbem/operators.hpp"

using namespace mtbem;

namespace {

BoundaryPtr boundary(Mesh m) { return std::make_shared<const Boundary>(std::move(m)); }

Mesh translated(const Mesh& m, const Vec3& shift) {
  std::vector<Vec3> v = m.vertices();
  for (auto& x : v) x += shift;
  return Mesh(std::move(v), m.triangles());
}

double rel_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).norm() / std::max(a.norm(), 1e-300);
}

double cond(const Eigen::MatrixXd& m) {
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// Smallest singular value of (G/2 + K) with BC test and RWG trial.
double smallest_second_kind(const BoundaryPtr& b, double kappa) {
  const TraceSpace rwg = build_rwg(b);
  const TraceSpace bc = build_bc(b);
  const Eigen::MatrixXcd m = 0.5 * Eigen::MatrixXd(assemble_gram(bc, rwg)).cast<cd>() +
                             assemble_double_layer(kappa, bc, rwg);
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().tail(1)(0);
}

std::set<int> interface_triangles(const InterfacePair& p, bool first) {
  std::set<int> out;
  for (const auto& [a, b] : p.triangles) out.insert(first ? a : b);
  return out;
}

bool touches(const TraceSpace& s, int dof, const std::set<int>& tris) {
  for (const auto& c : s.function(dof).cells)
    if (tris.count(s.parent(c.triangle))) return true;
  return false;
}

Scatterer two_cubes(Medium a, Medium b, double h = 0.5) {
  return make_scatterer(generate_cube_stack(1.0, 2, h), {a, b}, Medium{}, 1.0);
}

}  // namespace

TEST_CASE("media derive wavenumber and impedance") {
  const Medium m{4.0, 1.0};
  CHECK(m.kappa(2.0).real() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(m.eta() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("zero wavenumber is rejected") {
  const auto b = boundary(generate_sphere(1.0, 0));
  const TraceSpace rwg = build_rwg(b);
  CHECK_THROWS_AS(assemble_single_layer(0.0, rwg, rwg), SolverError);
  CHECK_THROWS_AS(assemble_double_layer(0.0, rwg, rwg), SolverError);
  CHECK_THROWS_AS(make_scatterer(generate_cube_stack(1.0, 1, 1.0), {Medium{}}, Medium{}, 0.0), SolverError);
}

TEST_CASE("single layer is Galerkin symmetric on RWG") {
  const auto b = boundary(generate_sphere(1.0, 1));
  const TraceSpace rwg = build_rwg(b);
  const Eigen::MatrixXcd t = assemble_single_layer(cd(1.3, 0.0), rwg, rwg);
  CHECK(rel_diff(t, t.transpose()) < 1e-10);
}

TEST_CASE("Yukawa single layer has a definite symmetric part") {
  const auto b = boundary(generate_sphere(1.0, 1));
  const TraceSpace rwg = build_rwg(b);
  const Eigen::MatrixXcd t = assemble_single_layer(cd(0.0, -1.0), rwg, rwg);
  const Eigen::MatrixXcd sym = 0.5 * (t + t.adjoint());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(sym);
  CHECK(eig.eigenvalues().maxCoeff() < 0.0);
}

TEST_CASE("far interaction decay") {
  const Mesh small = generate_sphere(0.2, 1);
  const auto a = boundary(small);
  const TraceSpace ta = build_rwg(a);
  auto entry = [&](double kappa, double d) {
    const auto b = boundary(translated(small, Vec3(d, 0, 0)));
    return max_abs(assemble_single_layer(kappa, ta, build_rwg(b)));
  };
  // Radiative regime: 1/d.
  CHECK(entry(2.0, 16.0) / entry(2.0, 8.0) == doctest::Approx(0.5).epsilon(0.1));
  // Low frequency: the divergence part dominates and couples like dipoles.
  CHECK(entry(1e-3, 8.0) / entry(1e-3, 4.0) == doctest::Approx(0.125).epsilon(0.1));
}

TEST_CASE("disjoint operator blocks are finite") {
  const auto a = boundary(generate_sphere(0.5, 1));
  const auto b = boundary(translated(generate_sphere(0.5, 1), Vec3(2, 0, 0)));
  const OperatorBlock blk = assemble_A_block(Medium{2.0, 1.0}, 1.0, build_rwg(a), build_rwg(b));
  CHECK(blk.K.allFinite());
  CHECK(blk.T.allFinite());
}

TEST_CASE("A block layout") {
  const auto b = boundary(generate_sphere(1.0, 0));
  const TraceSpace rwg = build_rwg(b);
  const Medium m{4.0, 1.0};
  const OperatorBlock blk = assemble_A_block(m, 1.0, rwg, rwg);
  const Eigen::MatrixXcd d = blk.dense();
  const Eigen::Index n = rwg.size();
  CHECK(rel_diff(d.topRightCorner(n, n), -m.eta() * blk.T) < 1e-15);
  CHECK(rel_diff(d.bottomLeftCorner(n, n), blk.T / m.eta()) < 1e-15);
  CHECK(rel_diff(d.topLeftCorner(n, n), d.bottomRightCorner(n, n)) == 0.0);
  const OperatorBlock unit = assemble_A_block(Medium{2.0, 2.0}, 1.0, rwg, rwg);
  CHECK(rel_diff(unit.dense().topRightCorner(n, n), -unit.dense().bottomLeftCorner(n, n)) == 0.0);
}

TEST_CASE("RWG rotated Gram is antisymmetric") {
  const auto b = boundary(generate_sphere(1.0, 1));
  const TraceSpace rwg = build_rwg(b);
  const Eigen::MatrixXd g(assemble_gram(rwg, rwg));
  CHECK(g.diagonal().cwiseAbs().maxCoeff() < 1e-14);
  CHECK((g + g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(g.norm() > 1.0);
}

TEST_CASE("mixed Gram is well conditioned") {
  for (double h : {0.3, 0.2, 0.15}) {
    const auto b = boundary(generate_cube_stack(1.0, 1, h).meshes[0]);
    const TraceSpace rwg = build_rwg(b);
    const TraceSpace bc = build_bc(b);
    const Eigen::MatrixXd g(assemble_gram(bc, rwg));
    CHECK(g.diagonal().minCoeff() > 0.0);
    CHECK(cond(g) < 100.0);
  }
}

TEST_CASE("Gram rejects spaces on different boundaries") {
  const auto a = boundary(generate_sphere(1.0, 0));
  const auto b = boundary(generate_sphere(1.0, 0));
  CHECK_THROWS_AS(assemble_gram(build_rwg(a), build_rwg(b)), MeshError);
}

TEST_CASE("Gram entries vanish for disjoint supports") {
  const auto b = boundary(generate_sphere(1.0, 1));
  const TraceSpace rwg = build_rwg(b);
  const auto g = assemble_gram(rwg, rwg);
  for (int outer = 0; outer < g.outerSize(); ++outer) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(g, outer); it; ++it) {
      std::set<int> ta, tb;
      for (const auto& c : rwg.function(static_cast<int>(it.row())).cells) ta.insert(c.triangle);
      bool shared = false;
      for (const auto& c : rwg.function(static_cast<int>(it.col())).cells) shared |= ta.count(c.triangle) > 0;
      CHECK(shared);
    }
  }
}

TEST_CASE("second-kind operator has a near nullspace on the torus only") {
  const auto torus = boundary(generate_square_torus(1.0, 0.5, 0.25, 0.125));
  const auto sphere = boundary(generate_sphere(1.0, 2));
  const double st = smallest_second_kind(torus, 1e-4);
  const double ss = smallest_second_kind(sphere, 1e-4);
  CHECK(st * 100.0 < ss);
}

TEST_CASE("cross identity on disjoint boundaries is empty") {
  const Mesh a = generate_sphere(0.5, 0);
  const MultiMesh mm = make_multimesh({a, translated(a, Vec3(2, 0, 0))});
  const TraceSpace ta = build_rwg(boundary(mm.meshes[0]));
  const TraceSpace tb = build_rwg(boundary(mm.meshes[1]));
  CHECK(assemble_cross_identity(ta, tb, mm.find_interface(0, 1), true).nonZeros() == 0);
}

TEST_CASE("cross identity on stacked cubes") {
  const MultiMesh mm = generate_cube_stack(1.0, 2, 0.5);
  const InterfacePair* pair = mm.find_interface(0, 1);
  REQUIRE(pair != nullptr);
  const auto b0 = boundary(mm.meshes[0]);
  const auto b1 = boundary(mm.meshes[1]);
  const TraceSpace r0 = build_rwg(b0), r1 = build_rwg(b1);
  const auto i01 = assemble_cross_identity(r0, r1, pair, true);
  const auto i10 = assemble_cross_identity(r1, r0, pair, false);
  REQUIRE(i01.nonZeros() > 0);
  const auto face0 = interface_triangles(*pair, true);
  const auto face1 = interface_triangles(*pair, false);
  for (int outer = 0; outer < i01.outerSize(); ++outer) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(i01, outer); it; ++it) {
      CHECK(touches(r0, static_cast<int>(it.row()), face0));
      CHECK(touches(r1, static_cast<int>(it.col()), face1));
    }
  }
  // n_1 = -n_0 on the shared face turns the swapped pairing into the transpose.
  CHECK((Eigen::MatrixXd(i10) - Eigen::MatrixXd(i01).transpose()).cwiseAbs().maxCoeff() < 1e-14);

  // Mixed levels: BC test against RWG trial.
  const TraceSpace bc0 = build_bc(b0);
  const auto m01 = assemble_cross_identity(bc0, r1, pair, true);
  CHECK(m01.nonZeros() > 0);
  CHECK(Eigen::MatrixXd(m01).allFinite());
}

TEST_CASE("single Mueller block equals the classical operator") {
  const Medium inner{2.5, 1.5};
  const Medium outer{1.0, 1.0};
  const double omega = 0.8;
  const Scatterer s = make_scatterer(make_multimesh({generate_sphere(1.0, 1)}), {inner}, outer, omega);
  const BlockSystem sys = assemble_mt_mueller(s);
  const TraceSpace rwg = build_rwg(s.boundaries[0]);
  const TraceSpace bc = build_bc(s.boundaries[0]);
  const Eigen::Index n = rwg.size();
  REQUIRE(sys.size() == 2 * n);

  const Eigen::MatrixXcd a1 = assemble_A_block(inner, omega, bc, rwg).dense();
  const Eigen::MatrixXcd a0 = assemble_A_block(outer, omega, bc, rwg).dense();
  const Eigen::MatrixXcd g = Eigen::MatrixXd(assemble_gram(bc, rwg)).cast<cd>();
  Eigen::MatrixXcd expected(2 * n, 2 * n);
  expected.topRows(n) = inner.eps * a1.topRows(n) - outer.eps * a0.topRows(n);
  expected.bottomRows(n) = inner.mu * a1.bottomRows(n) - outer.mu * a0.bottomRows(n);
  expected.topLeftCorner(n, n) += 0.5 * (inner.eps + outer.eps) * g;
  expected.bottomRightCorner(n, n) += 0.5 * (inner.mu + outer.mu) * g;
  CHECK(rel_diff(sys.matrix, expected) < 1e-12);
}

TEST_CASE("background-filled component decouples in the Mueller system") {
  const Scatterer s = two_cubes(Medium{3.0, 1.0}, Medium{});
  const BlockSystem sys = assemble_mt_mueller(s);
  const Eigen::Index o1 = sys.offset[1], n1 = 2 * sys.dofs[1];
  // Column 1 off-diagonal block vanishes exactly.
  CHECK(sys.matrix.block(0, o1, o1, n1).cwiseAbs().maxCoeff() == 0.0);
  // Diagonal block is the scaled Gram.
  const Eigen::MatrixXd g(assemble_gram(sys.test[1], sys.trial[1]));
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(n1, n1);
  expected.topLeftCorner(n1 / 2, n1 / 2) = g.cast<cd>();
  expected.bottomRightCorner(n1 / 2, n1 / 2) = g.cast<cd>();
  CHECK(rel_diff(sys.matrix.block(o1, o1, n1, n1), expected) < 1e-14);
  // Column 0 still couples.
  CHECK(sys.matrix.block(o1, 0, n1, o1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("all-background Mueller system is the scaled Gram") {
  const Medium bg{2.0, 1.5};
  const Scatterer s = make_scatterer(generate_cube_stack(1.0, 2, 0.5), {bg, bg}, bg, 0.7);
  const BlockSystem sys = assemble_mt_mueller(s);
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(sys.size(), sys.size());
  for (int k = 0; k < 2; ++k) {
    const Eigen::MatrixXd g(assemble_gram(sys.test[k], sys.trial[k]));
    expected.block(sys.offset[k], sys.offset[k], sys.dofs[k], sys.dofs[k]) = bg.eps * g.cast<cd>();
    expected.block(sys.offset[k] + sys.dofs[k], sys.offset[k] + sys.dofs[k], sys.dofs[k], sys.dofs[k]) =
        bg.mu * g.cast<cd>();
  }
  CHECK(rel_diff(sys.matrix, expected) < 1e-14);
}

TEST_CASE("PMCHWT system structure") {
  const Scatterer s = two_cubes(Medium{3.0, 1.0}, Medium{2.0, 1.0});
  const BlockSystem sys = assemble_mt_pmchwt(s);
  CHECK(sys.test[0].kind() == SpaceKind::Rwg);
  CHECK(sys.size() == 2 * (sys.dofs[0] + sys.dofs[1]));
  // First kind: no identity on the diagonal blocks, so the diagonal of the
  // (e, m) slot is the sum of two double layers with zero self terms.
  const Eigen::Index n = sys.dofs[0];
  const OperatorBlock a0 = assemble_A_block(s.background, s.omega, sys.test[0], sys.trial[0]);
  const OperatorBlock a1 = assemble_A_block(s.media[0], s.omega, sys.test[0], sys.trial[0]);
  CHECK(rel_diff(sys.matrix.topLeftCorner(2 * n, 2 * n), a0.dense() + a1.dense()) < 1e-12);
}

TEST_CASE("Mueller and PMCHWT scale linearly with the material values") {
  // Scaling every eps and mu by c and omega by 1/c keeps all wavenumbers and
  // impedances, so only the beta weights change.
  const double c = 3.0;
  const Scatterer s1 = two_cubes(Medium{3.0, 1.0}, Medium{2.0, 1.5});
  Scatterer s2 = make_scatterer(generate_cube_stack(1.0, 2, 0.5), {Medium{3.0 * c, 1.0 * c}, Medium{2.0 * c, 1.5 * c}},
                                Medium{c, c}, 1.0 / c);
  const BlockSystem m1 = assemble_mt_mueller(s1), m2 = assemble_mt_mueller(s2);
  CHECK(rel_diff(m2.matrix, c * m1.matrix) < 1e-12);
  const BlockSystem p1 = assemble_mt_pmchwt(s1), p2 = assemble_mt_pmchwt(s2);
  CHECK(rel_diff(p2.matrix, p1.matrix) < 1e-12);
}

TEST_CASE("Yukawa preconditioner blocks are real symmetric") {
  const Scatterer s = make_scatterer(make_multimesh({generate_sphere(1.0, 1)}), {Medium{2.0, 1.0}}, Medium{}, 1.0);
  const CalderonPreconditioner cp(s);
  const Eigen::MatrixXd& t = cp.yukawa()[0];
  CHECK((t - t.transpose()).norm() / t.norm() < 1e-10);
  CHECK(cp.gram()[0].rows() == build_rwg(s.boundaries[0]).size());

  // Applying the preconditioner solves per subdomain only.
  const Eigen::VectorXcd x = Eigen::VectorXcd::Random(2 * t.rows());
  const Eigen::VectorXcd y = cp.apply(x);
  const Eigen::Index n = t.rows();
  const Eigen::MatrixXd g(cp.gram()[0]);
  const Eigen::VectorXcd zj = Eigen::MatrixXcd(g.cast<cd>()).partialPivLu().solve(x.tail(n));
  CHECK((y.head(n) - t.cast<cd>() * zj).norm() < 1e-10 * y.norm());
}

TEST_CASE("naive weighting keeps the hypersingular part off the diagonal") {
  // Differences at one point pair only cancel with the extinction-augmented
  // blocks: the naive block grows like 1/h while the Mueller block stays at
  // the size of its identity term.
  double naive_prev = 0.0, mueller_prev = 0.0;
  for (double h : {0.5, 0.25}) {
    const Scatterer s = make_scatterer(generate_cube_stack(1.0, 2, h), {Medium{3.0, 1.0}, Medium{2.0, 1.0}},
                                       Medium{}, 0.1);
    const BlockSystem sys = assemble_mt_mueller(s);
    const double mueller = max_abs(sys.matrix.block(sys.offset[1], 0, 2 * sys.dofs[1], 2 * sys.dofs[0]));
    const double diagonal = max_abs(sys.matrix.block(0, 0, 2 * sys.dofs[0], 2 * sys.dofs[0]));
    const double naive = max_abs(assemble_naive_mueller_block(s, 1, 0));
    CHECK(mueller < diagonal);
    if (naive_prev > 0.0) {
      CHECK(naive / naive_prev > 1.5);
      CHECK(mueller / mueller_prev < 1.1);
      CHECK((naive / mueller) / (naive_prev / mueller_prev) > 1.5);
    }
    naive_prev = naive;
    mueller_prev = mueller;
  }
}

TEST_CASE("matrix market export") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 3);
  m(0, 1) = cd(1.5, -2.0);
  m(1, 2) = 3.0;
  const std::string path = "operators_test_matrix.mtx";
  write_matrix_market(m, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "%%MatrixMarket matrix coordinate complex general");
  int r, c, nnz;
  in >> r >> c >> nnz;
  CHECK(r == 2);
  CHECK(c == 3);
  CHECK(nnz == 2);
  int i, j;
  double re, im;
  in >> i >> j >> re >> im;
  CHECK(i == 1);
  CHECK(j == 2);
  CHECK(re == 1.5);
  CHECK(im == -2.0);
}
