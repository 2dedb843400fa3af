#include <algorithm>
#include <cmath>
#include <thread>

#include "mtbem/operators.hpp"

namespace mtbem {

namespace {

struct Cell {
  Corners corners;
  std::vector<TraceSpace::Term> terms;
};

// Cells of a space grouped by primal triangle: `leaf` at the space's own level,
// `fine` always on the refined mesh (primal coefficients mapped to children).
struct SideCells {
  std::vector<std::vector<Cell>> leaf;
  std::vector<std::array<Cell, 6>> fine;
  std::vector<Corners> primal;
};

SideCells side_cells(const TraceSpace& space) {
  const Boundary& b = space.boundary();
  const Mesh& coarse = b.primal;
  const Mesh& refined = b.refinement.mesh;
  const int nt = coarse.num_triangles();
  SideCells out;
  out.leaf.resize(nt);
  out.fine.resize(nt);
  out.primal.resize(nt);
  for (int t = 0; t < nt; ++t) {
    out.primal[t] = coarse.corners(t);
    for (int c = 0; c < 6; ++c) {
      const int child = b.refinement.children[t][c];
      Cell& cell = out.fine[t][c];
      cell.corners = refined.corners(child);
      if (space.level() == Level::Refined) {
        cell.terms = space.terms(child);
      } else {
        for (const auto& term : space.terms(t)) {
          cell.terms.push_back({term.dof, b.refinement.child_shape[t][c] * term.coeffs});
        }
      }
    }
    if (space.level() == Level::Primal) {
      out.leaf[t].push_back({out.primal[t], space.terms(t)});
    } else {
      out.leaf[t].assign(out.fine[t].begin(), out.fine[t].end());
    }
  }
  return out;
}

// Greedy colouring of test triangles so that no two triangles of one colour
// share a test function.
std::vector<std::vector<int>> colour(const SideCells& test, int num_dofs) {
  std::vector<std::vector<int>> colours;
  std::vector<std::vector<char>> used;
  std::vector<int> dofs;
  for (int t = 0; t < static_cast<int>(test.leaf.size()); ++t) {
    dofs.clear();
    for (const auto& cell : test.leaf[t])
      for (const auto& term : cell.terms) dofs.push_back(term.dof);
    std::size_t c = 0;
    for (; c < colours.size(); ++c) {
      if (std::none_of(dofs.begin(), dofs.end(), [&](int d) { return used[c][d]; })) break;
    }
    if (c == colours.size()) {
      colours.emplace_back();
      used.emplace_back(static_cast<std::size_t>(num_dofs), 0);
    }
    colours[c].push_back(t);
    for (int d : dofs) used[c][d] = 1;
  }
  return colours;
}

class Engine {
 public:
  Engine(const TraceSpace& test, const TraceSpace& trial, std::span<const cd> kappas,
         std::span<const OperatorTarget> targets, const AssemblyOptions& options)
      : test_(side_cells(test)),
        trial_(side_cells(trial)),
        both_primal_(test.level() == Level::Primal && trial.level() == Level::Primal),
        quad_(options.orders),
        test_rule_(test.level() == Level::Refined ? &quad_.refined_far_rule() : &quad_.far_rule()),
        trial_rule_(trial.level() == Level::Refined ? &quad_.refined_far_rule() : &quad_.far_rule()) {
    // Terms on equal wavenumbers are merged first, so background-matched media
    // cancel exactly and each distinct wavenumber is integrated once.
    std::vector<int> unique_index;
    for (cd k : kappas) {
      const auto it = std::find(kappas_.begin(), kappas_.end(), k);
      unique_index.push_back(static_cast<int>(it - kappas_.begin()));
      if (it == kappas_.end()) kappas_.push_back(k);
    }
    for (const auto& t : targets) {
      if (t.matrix == nullptr || t.row + test.size() > t.matrix->rows() ||
          t.col + trial.size() > t.matrix->cols()) {
        throw SolverError(SolverError::Kind::InvalidArgument, "operator target block is out of range");
      }
      OperatorTarget merged{{}, t.matrix, t.row, t.col};
      for (const auto& term : t.terms) {
        if (term.wavenumber < 0 || term.wavenumber >= static_cast<int>(kappas.size())) {
          throw SolverError(SolverError::Kind::InvalidArgument, "kernel term refers to a missing wavenumber");
        }
        const int u = unique_index[term.wavenumber];
        auto it = std::find_if(merged.terms.begin(), merged.terms.end(),
                               [u](const KernelTerm& m) { return m.wavenumber == u; });
        if (it == merged.terms.end()) {
          merged.terms.push_back({u, term.s, term.d, term.k});
        } else {
          it->s += term.s;
          it->d += term.d;
          it->k += term.k;
        }
      }
      std::erase_if(merged.terms, [](const KernelTerm& m) { return m.s == 0.0 && m.d == 0.0 && m.k == 0.0; });
      for (const auto& term : merged.terms) {
        if (term.s != 0.0 || term.d != 0.0) request_.single_layer = true;
        if (term.k != 0.0) request_.double_layer = true;
      }
      if (!merged.terms.empty()) targets_.push_back(std::move(merged));
    }
    colours_ = colour(test_, test.size());
  }

  bool empty() const { return targets_.empty(); }

  void run(int threads) {
    threads = std::max(1, threads);
    for (const auto& group : colours_) {
      const int n = static_cast<int>(group.size());
      const int workers = std::min(threads, n);
      if (workers <= 1) {
        Worker w;
        for (int t : group) test_triangle(t, w);
        continue;
      }
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (int i = 0; i < workers; ++i) {
        pool.emplace_back([&, i] {
          try {
            Worker w;
            for (int idx = i; idx < n; idx += workers) test_triangle(group[idx], w);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
  }

 private:
  struct Worker {
    PairPoints scratch;
    std::vector<LocalInteraction> local;
    std::vector<Eigen::Vector3cd> trial_images;
  };

  void test_triangle(int t, Worker& w) {
    for (int u = 0; u < static_cast<int>(trial_.primal.size()); ++u) {
      const PairClass cls = near_singular_split(test_.primal[t], trial_.primal[u]);
      if (both_primal_) {
        interact(test_.leaf[t][0], trial_.leaf[u][0], cls, w);
      } else if (cls.relation == PairRelation::Far) {
        for (const auto& a : test_.leaf[t]) {
          for (const auto& b : trial_.leaf[u]) {
            if (a.terms.empty() || b.terms.empty()) continue;
            tensor_points(a.corners, *test_rule_, b.corners, *trial_rule_, w.scratch);
            integrate_local_points(a.corners, b.corners, PairRelation::Far, w.scratch, kappas_, request_, w.local);
            scatter(a, b, w);
          }
        }
      } else {
        for (const auto& a : test_.fine[t])
          for (const auto& b : trial_.fine[u]) interact(a, b, near_singular_split(a.corners, b.corners), w);
      }
    }
  }

  void interact(const Cell& a, const Cell& b, const PairClass& cls, Worker& w) {
    if (a.terms.empty() || b.terms.empty()) return;
    integrate_local(a.corners, b.corners, cls, kappas_, request_, quad_, w.scratch, w.local);
    scatter(a, b, w);
  }

  void scatter(const Cell& a, const Cell& b, Worker& w) {
    for (const auto& target : targets_) {
      Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
      for (const auto& term : target.terms) {
        const LocalInteraction& li = w.local[term.wavenumber];
        if (term.s != 0.0) m += term.s * li.S;
        if (term.d != 0.0) m.array() += term.d * li.D;
        if (term.k != 0.0) m += term.k * li.K;
      }
      w.trial_images.resize(b.terms.size());
      for (std::size_t j = 0; j < b.terms.size(); ++j) {
        w.trial_images[j] = m * b.terms[j].coeffs.cast<cd>();
      }
      auto& out = *target.matrix;
      for (const auto& ta : a.terms) {
        const Eigen::Index row = target.row + ta.dof;
        for (std::size_t j = 0; j < b.terms.size(); ++j) {
          out(row, target.col + b.terms[j].dof) += ta.coeffs.cast<cd>().dot(w.trial_images[j]);
        }
      }
    }
  }

  SideCells test_;
  SideCells trial_;
  bool both_primal_;
  std::vector<cd> kappas_;
  std::vector<OperatorTarget> targets_;
  PairQuadrature quad_;
  // Rules for leaf cells of far primal pairs.
  const TriangleRule* test_rule_;
  const TriangleRule* trial_rule_;
  LocalRequest request_{false, false};
  std::vector<std::vector<int>> colours_;
};

void check_kappa(cd kappa) {
  if (kappa == 0.0) {
    throw SolverError(SolverError::Kind::InvalidArgument,
                      "wavenumber 0 is not supported; use a small positive value");
  }
}

// Local rotated Gram block on one triangle: test shapes at corners p, trial
// shapes at corners q (same triangle, any vertex order), normal n.
Eigen::Matrix3d local_gram(const Corners& p, const Corners& q, const Vec3& n) {
  const Vec3 c = (p[0] + p[1] + p[2]) / 3.0;
  const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
  Eigen::Matrix3d g;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) g(a, b) = n.dot(c.cross(p[a] - q[b]) + p[a].cross(q[b])) / (4.0 * area);
  return g;
}

void add_gram(const Cell& a, const Cell& b, const Vec3& n, std::vector<Eigen::Triplet<double>>& out) {
  if (a.terms.empty() || b.terms.empty()) return;
  const Eigen::Matrix3d g = local_gram(a.corners, b.corners, n);
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      const double v = ta.coeffs.dot(g * tb.coeffs);
      if (v != 0.0) out.emplace_back(ta.dof, tb.dof, v);
    }
  }
}

Vec3 centroid(const Corners& c) { return (c[0] + c[1] + c[2]) / 3.0; }

// Gram contributions of two coincident primal triangles.
void gram_pair(const SideCells& test, int t, const SideCells& trial, int u, bool both_primal,
               const Vec3& n, std::vector<Eigen::Triplet<double>>& out) {
  if (both_primal) {
    add_gram(test.leaf[t][0], trial.leaf[u][0], n, out);
    return;
  }
  const double tol = 1e-8 * (test.primal[t][1] - test.primal[t][0]).norm();
  for (const auto& a : test.fine[t]) {
    const Vec3 ca = centroid(a.corners);
    for (const auto& b : trial.fine[u]) {
      if ((centroid(b.corners) - ca).norm() <= tol) add_gram(a, b, n, out);
    }
  }
}

}  // namespace

void assemble_operators(const TraceSpace& test, const TraceSpace& trial, std::span<const cd> kappas,
                        std::span<const OperatorTarget> targets, const AssemblyOptions& options) {
  for (cd k : kappas) check_kappa(k);
  if (targets.empty()) return;
  Engine engine(test, trial, kappas, targets, options);
  if (!engine.empty()) engine.run(options.threads);
}

Eigen::MatrixXcd assemble_single_layer(cd kappa, const TraceSpace& test, const TraceSpace& trial,
                                       const AssemblyOptions& options) {
  check_kappa(kappa);
  const cd i(0.0, 1.0);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(test.size(), trial.size());
  const OperatorTarget t{{{0, -i * kappa, -1.0 / (i * kappa), 0.0}}, &m, 0, 0};
  assemble_operators(test, trial, std::span(&kappa, 1), std::span(&t, 1), options);
  return m;
}

Eigen::MatrixXcd assemble_double_layer(cd kappa, const TraceSpace& test, const TraceSpace& trial,
                                       const AssemblyOptions& options) {
  check_kappa(kappa);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(test.size(), trial.size());
  const OperatorTarget t{{{0, 0.0, 0.0, 1.0}}, &m, 0, 0};
  assemble_operators(test, trial, std::span(&kappa, 1), std::span(&t, 1), options);
  return m;
}

Eigen::SparseMatrix<double> assemble_gram(const TraceSpace& test, const TraceSpace& trial) {
  if (&test.boundary() != &trial.boundary()) {
    throw MeshError(MeshError::Kind::InvalidArgument, "Gram matrix needs both spaces on the same boundary");
  }
  const SideCells a = side_cells(test);
  const SideCells b = side_cells(trial);
  const bool both_primal = test.level() == Level::Primal && trial.level() == Level::Primal;
  const Mesh& mesh = test.boundary().primal;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (both_primal) {
      add_gram(a.leaf[t][0], b.leaf[t][0], mesh.normal(t), triplets);
    } else {
      for (int c = 0; c < 6; ++c) add_gram(a.fine[t][c], b.fine[t][c], mesh.normal(t), triplets);
    }
  }
  Eigen::SparseMatrix<double> g(test.size(), trial.size());
  g.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

Eigen::SparseMatrix<double> assemble_cross_identity(const TraceSpace& test, const TraceSpace& trial,
                                                    const InterfacePair* pair, bool test_is_first) {
  Eigen::SparseMatrix<double> out(test.size(), trial.size());
  if (pair == nullptr || pair->triangles.empty()) return out;
  const SideCells a = side_cells(test);
  const SideCells b = side_cells(trial);
  const bool both_primal = test.level() == Level::Primal && trial.level() == Level::Primal;
  const Mesh& test_mesh = test.boundary().primal;
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& [first, second] : pair->triangles) {
    const int t = test_is_first ? first : second;
    const int u = test_is_first ? second : first;
    gram_pair(a, t, b, u, both_primal, test_mesh.normal(t), triplets);
  }
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Eigen::MatrixXcd OperatorBlock::dense() const {
  const Eigen::Index r = K.rows(), c = K.cols();
  Eigen::MatrixXcd m(2 * r, 2 * c);
  m << K, -eta * T, T / eta, K;
  return m;
}

OperatorBlock assemble_A_block(const Medium& medium, double omega, const TraceSpace& test,
                               const TraceSpace& trial, const AssemblyOptions& options) {
  const cd kappa = medium.kappa(omega);
  check_kappa(kappa);
  const cd i(0.0, 1.0);
  OperatorBlock block;
  block.eta = medium.eta();
  block.K = Eigen::MatrixXcd::Zero(test.size(), trial.size());
  block.T = Eigen::MatrixXcd::Zero(test.size(), trial.size());
  const std::array<OperatorTarget, 2> targets{{
      {{{0, 0.0, 0.0, 1.0}}, &block.K, 0, 0},
      {{{0, -i * kappa, -1.0 / (i * kappa), 0.0}}, &block.T, 0, 0},
  }};
  assemble_operators(test, trial, std::span(&kappa, 1), targets, options);
  return block;
}

}  // namespace mtbem
