#include <cmath>

#include "mtbem/operators.hpp"

namespace mtbem {

namespace {

const cd I(0.0, 1.0);

// Slots of one (j, k) block: (e, m), (e, j), (h, m), (h, j).
struct BlockTargets {
  std::array<OperatorTarget, 4> slot;

  BlockTargets(Eigen::MatrixXcd* m, Eigen::Index row, int test_dofs, Eigen::Index col, int trial_dofs) {
    slot[0] = {{}, m, row, col};
    slot[1] = {{}, m, row, col + trial_dofs};
    slot[2] = {{}, m, row + test_dofs, col};
    slot[3] = {{}, m, row + test_dofs, col + trial_dofs};
  }

  // Adds [[we K, -we eta T], [wh T / eta, wh K]] for wavenumber index wn.
  void add_A(int wn, cd kappa, double eta, double we, double wh) {
    const cd s = -I * kappa;
    const cd d = -1.0 / (I * kappa);
    slot[0].terms.push_back({wn, 0.0, 0.0, we});
    slot[1].terms.push_back({wn, -we * eta * s, -we * eta * d, 0.0});
    slot[2].terms.push_back({wn, wh / eta * s, wh / eta * d, 0.0});
    slot[3].terms.push_back({wn, 0.0, 0.0, wh});
  }
};

void add_sparse(Eigen::MatrixXcd& m, Eigen::Index row, Eigen::Index col, const Eigen::SparseMatrix<double>& s,
                double scale) {
  if (scale == 0.0) return;
  for (int outer = 0; outer < s.outerSize(); ++outer) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(s, outer); it; ++it) {
      m(row + it.row(), col + it.col()) += scale * it.value();
    }
  }
}

// Adds scale_e * g to the (e, m) slot and scale_h * g to the (h, j) slot.
void add_identity(BlockSystem& sys, int j, int k, const Eigen::SparseMatrix<double>& g, double scale_e,
                  double scale_h) {
  const Eigen::Index row = sys.offset[j];
  const Eigen::Index col = sys.offset[k];
  add_sparse(sys.matrix, row, col, g, scale_e);
  add_sparse(sys.matrix, row + sys.dofs[j], col + sys.dofs[k], g, scale_h);
}

BlockSystem empty_system(const Scatterer& s, Formulation f) {
  BlockSystem sys;
  sys.formulation = f;
  Eigen::Index n = 0;
  for (const auto& b : s.boundaries) {
    sys.trial.push_back(build_rwg(b));
    sys.test.push_back(f == Formulation::MtMueller ? build_bc(b) : build_rwg(b));
    sys.offset.push_back(n);
    sys.dofs.push_back(sys.trial.back().size());
    n += 2 * sys.dofs.back();
  }
  sys.matrix = Eigen::MatrixXcd::Zero(n, n);
  return sys;
}

const InterfacePair* interface(const Scatterer& s, int j, int k) {
  return s.geometry.find_interface(std::min(j, k), std::max(j, k));
}

Eigen::SparseMatrix<double> cross_identity(const Scatterer& s, const TraceSpace& test, const TraceSpace& trial,
                                           int j, int k) {
  return assemble_cross_identity(test, trial, interface(s, j, k), j < k);
}

}  // namespace

const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::MtMueller: return "mt-mueller";
    case Formulation::MtPmchwt: return "mt-pmchwt";
    case Formulation::CpMtPmchwt: return "cp-mt-pmchwt";
  }
  return "unknown";
}

Formulation formulation_from_string(const std::string& name) {
  if (name == "mt-mueller") return Formulation::MtMueller;
  if (name == "mt-pmchwt") return Formulation::MtPmchwt;
  if (name == "cp-mt-pmchwt") return Formulation::CpMtPmchwt;
  throw SolverError(SolverError::Kind::InvalidArgument,
                    "unknown formulation '" + name + "' (expected mt-mueller, mt-pmchwt or cp-mt-pmchwt)");
}

Scatterer make_scatterer(MultiMesh geometry, std::vector<Medium> media, Medium background, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw SolverError(SolverError::Kind::InvalidArgument, "angular frequency must be positive");
  }
  if (static_cast<int>(media.size()) != geometry.size()) {
    throw SolverError(SolverError::Kind::InvalidArgument,
                      "expected " + std::to_string(geometry.size()) + " media, got " + std::to_string(media.size()));
  }
  auto check = [](const Medium& m) {
    if (!(m.eps > 0.0) || !(m.mu > 0.0) || !std::isfinite(m.eps) || !std::isfinite(m.mu)) {
      throw SolverError(SolverError::Kind::InvalidArgument, "permittivity and permeability must be positive");
    }
  };
  for (const auto& m : media) check(m);
  check(background);
  Scatterer s;
  for (const auto& mesh : geometry.meshes) s.boundaries.push_back(std::make_shared<const Boundary>(mesh));
  s.geometry = std::move(geometry);
  s.media = std::move(media);
  s.background = background;
  s.omega = omega;
  return s;
}

BlockSystem assemble_mt_mueller(const Scatterer& s, const AssemblyOptions& options) {
  BlockSystem sys = empty_system(s, Formulation::MtMueller);
  const Medium& b0 = s.background;
  const cd k0 = b0.kappa(s.omega);
  for (int j = 0; j < s.size(); ++j) {
    for (int k = 0; k < s.size(); ++k) {
      const Medium& bk = s.media[k];
      const std::array<cd, 2> kappas{bk.kappa(s.omega), k0};
      BlockTargets t(&sys.matrix, sys.offset[j], sys.dofs[j], sys.offset[k], sys.dofs[k]);
      t.add_A(0, kappas[0], bk.eta(), bk.eps, bk.mu);
      t.add_A(1, k0, b0.eta(), -b0.eps, -b0.mu);
      assemble_operators(sys.test[j], sys.trial[k], kappas, t.slot, options);
      if (j == k) {
        const auto g = assemble_gram(sys.test[k], sys.trial[k]);
        add_identity(sys, k, k, g, 0.5 * (bk.eps + b0.eps), 0.5 * (bk.mu + b0.mu));
      } else {
        const auto g = cross_identity(s, sys.test[j], sys.trial[k], j, k);
        add_identity(sys, j, k, g, 0.5 * (b0.eps - bk.eps), 0.5 * (b0.mu - bk.mu));
      }
    }
  }
  return sys;
}

BlockSystem assemble_mt_pmchwt(const Scatterer& s, const AssemblyOptions& options) {
  BlockSystem sys = empty_system(s, Formulation::MtPmchwt);
  const Medium& b0 = s.background;
  const cd k0 = b0.kappa(s.omega);
  for (int j = 0; j < s.size(); ++j) {
    for (int k = 0; k < s.size(); ++k) {
      BlockTargets t(&sys.matrix, sys.offset[j], sys.dofs[j], sys.offset[k], sys.dofs[k]);
      std::vector<cd> kappas{k0};
      t.add_A(0, k0, b0.eta(), 1.0, 1.0);
      if (j == k) {
        const Medium& bk = s.media[k];
        kappas.push_back(bk.kappa(s.omega));
        t.add_A(1, kappas[1], bk.eta(), 1.0, 1.0);
      }
      assemble_operators(sys.test[j], sys.trial[k], kappas, t.slot, options);
      if (j != k) {
        const auto g = cross_identity(s, sys.test[j], sys.trial[k], j, k);
        add_identity(sys, j, k, g, -0.5, -0.5);
      }
    }
  }
  return sys;
}

BlockSystem assemble_system(const Scatterer& s, Formulation f, const AssemblyOptions& options) {
  if (f == Formulation::MtMueller) return assemble_mt_mueller(s, options);
  BlockSystem sys = assemble_mt_pmchwt(s, options);
  sys.formulation = f;
  return sys;
}

Eigen::MatrixXcd assemble_naive_mueller_block(const Scatterer& s, int j, int k, const AssemblyOptions& options) {
  if (j == k || j < 0 || k < 0 || j >= s.size() || k >= s.size()) {
    throw SolverError(SolverError::Kind::InvalidArgument, "naive block needs two distinct subdomains");
  }
  const TraceSpace test = build_bc(s.boundaries[j]);
  const TraceSpace trial = build_rwg(s.boundaries[k]);
  const Medium& b0 = s.background;
  const cd k0 = b0.kappa(s.omega);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * test.size(), 2 * trial.size());
  BlockTargets t(&m, 0, test.size(), 0, trial.size());
  t.add_A(0, k0, b0.eta(), -b0.eps, -b0.mu);
  assemble_operators(test, trial, std::span(&k0, 1), t.slot, options);
  const auto g = cross_identity(s, test, trial, j, k);
  add_sparse(m, 0, 0, g, 0.5 * b0.eps);
  add_sparse(m, test.size(), trial.size(), g, 0.5 * b0.mu);
  return m;
}

CalderonPreconditioner::CalderonPreconditioner(const Scatterer& s, const AssemblyOptions& options) {
  const cd yukawa = -I * s.background.kappa(s.omega);
  Eigen::Index n = 0;
  for (const auto& b : s.boundaries) {
    const TraceSpace bc = build_bc(b);
    const TraceSpace rwg = build_rwg(b);
    offset_.push_back(n);
    n += 2 * rwg.size();
    T_.push_back(assemble_single_layer(yukawa, bc, bc, options).real());
    G_.push_back(assemble_gram(rwg, bc));
    G_.back().makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(G_.back());
    if (lu->info() != Eigen::Success) {
      throw SolverError(SolverError::Kind::Singular, "mixed Gram matrix is singular: " + lu->lastErrorMessage());
    }
    lu_.push_back(std::move(lu));
  }
}

Eigen::MatrixXcd CalderonPreconditioner::apply(const Eigen::MatrixXcd& x) const {
  Eigen::MatrixXcd y(x.rows(), x.cols());
  for (std::size_t k = 0; k < T_.size(); ++k) {
    const Eigen::Index n = T_[k].rows();
    const Eigen::Index o = offset_[k];
    // Real operators act on real and imaginary parts separately.
    auto tg = [&](Eigen::Index start) {
      const Eigen::MatrixXd re = T_[k] * lu_[k]->solve(Eigen::MatrixXd(x.middleRows(start, n).real()));
      const Eigen::MatrixXd im = T_[k] * lu_[k]->solve(Eigen::MatrixXd(x.middleRows(start, n).imag()));
      Eigen::MatrixXcd z(n, x.cols());
      z.real() = re;
      z.imag() = im;
      return z;
    };
    y.middleRows(o, n) = tg(o + n);
    y.middleRows(o + n, n) = -tg(o);
  }
  return y;
}

Eigen::VectorXcd CalderonPreconditioner::apply(const Eigen::VectorXcd& x) const {
  return apply(Eigen::MatrixXcd(x)).col(0);
}

}  // namespace mtbem
