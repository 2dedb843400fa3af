#pragma once

// Galerkin matrices of the boundary integral operators and the block systems
// built from them.
//
// Units are normalized so that the vacuum permittivity and permeability are
// one; a Medium holds relative values and the angular frequency equals the
// vacuum wavenumber.
//
// Weak forms, for test f and trial g under the rotated pairing
// <p, u> = int (n x p) . u:
//   <f, T g> = -i kappa int int G f . g - 1/(i kappa) int int G div f div g
//   <f, K g> = int int grad_x G . (g x f)
// Identity terms are never folded into K; they appear as Gram matrices.
//
// Per subdomain the unknown vector is (m, j): magnetic then electric surface
// current coefficients. Test rows are (e, h): the electric and magnetic trace
// equations.

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mtbem/quadrature.hpp"
#include "mtbem/spaces.hpp"

namespace mtbem {

struct Medium {
  double eps = 1.0;
  double mu = 1.0;

  cd kappa(double omega) const { return omega * std::sqrt(eps * mu); }
  double eta() const { return std::sqrt(mu / eps); }
};

struct AssemblyOptions {
  QuadratureOrders orders;
  // Worker threads; results do not depend on the count.
  int threads = 1;
};

// sum_i (s_i S_i + d_i D_i + k_i K_i) over wavenumbers i, where S, D, K are the
// local integrals of quadrature.hpp.
struct KernelTerm {
  int wavenumber = 0;
  cd s = 0.0;
  cd d = 0.0;
  cd k = 0.0;
};

struct OperatorTarget {
  std::vector<KernelTerm> terms;
  Eigen::MatrixXcd* matrix = nullptr;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
};

// Adds each combination, tested with `test` and applied to `trial`, into its
// target block. All wavenumbers share quadrature points, so differences of
// combinations cancel exactly where their coefficients do. Targets sharing a
// matrix must be disjoint blocks.
void assemble_operators(const TraceSpace& test, const TraceSpace& trial, std::span<const cd> kappas,
                        std::span<const OperatorTarget> targets, const AssemblyOptions& options);

// Throws SolverError::InvalidArgument for kappa == 0.
Eigen::MatrixXcd assemble_single_layer(cd kappa, const TraceSpace& test, const TraceSpace& trial,
                                       const AssemblyOptions& options = {});
Eigen::MatrixXcd assemble_double_layer(cd kappa, const TraceSpace& test, const TraceSpace& trial,
                                       const AssemblyOptions& options = {});

// <n x test_m, trial_n> on a single boundary. Throws MeshError when the
// spaces live on different boundaries.
Eigen::SparseMatrix<double> assemble_gram(const TraceSpace& test, const TraceSpace& trial);

// <n_j x test_m, trial_n> over coincident interface triangles, with test on
// boundary j and trial on boundary k. Empty when `pair` is null.
Eigen::SparseMatrix<double> assemble_cross_identity(const TraceSpace& test, const TraceSpace& trial,
                                                    const InterfacePair* pair, bool test_is_first);

// [[K, -eta T], [T / eta, K]] tested against `test`.
struct OperatorBlock {
  Eigen::MatrixXcd K;
  Eigen::MatrixXcd T;
  double eta = 1.0;

  Eigen::MatrixXcd dense() const;
};

OperatorBlock assemble_A_block(const Medium& medium, double omega, const TraceSpace& test,
                               const TraceSpace& trial, const AssemblyOptions& options = {});

// Problem description shared by the formulations.
struct Scatterer {
  MultiMesh geometry;
  std::vector<BoundaryPtr> boundaries;
  std::vector<Medium> media;  // one per subdomain
  Medium background;
  double omega = 1.0;

  int size() const { return static_cast<int>(boundaries.size()); }
};

// Validates media against the geometry and builds the refinements. Throws
// SolverError::InvalidArgument for omega <= 0 or non-positive material values.
Scatterer make_scatterer(MultiMesh geometry, std::vector<Medium> media, Medium background,
                         double omega);

enum class Formulation { MtMueller, MtPmchwt, CpMtPmchwt };

const char* to_string(Formulation f);
Formulation formulation_from_string(const std::string& name);

struct BlockSystem {
  Formulation formulation = Formulation::MtMueller;
  Eigen::MatrixXcd matrix;
  // Subdomain k occupies [offset[k], offset[k] + 2 n_k): m then j.
  std::vector<Eigen::Index> offset;
  std::vector<int> dofs;
  std::vector<TraceSpace> trial;
  std::vector<TraceSpace> test;

  Eigen::Index size() const { return matrix.rows(); }
};

// Mt-Mueller: RWG trial, BC test.
//   [M]_kk = (beta_k + beta_0)/2 G_k + beta_k A^(k)_kk - beta_0 A^(0)_kk
//   [M]_jk = (beta_0 - beta_k)/2 I_jk + beta_k A^(k)_jk - beta_0 A^(0)_jk
// with beta = diag(eps, mu) scaling the (e, h) rows.
BlockSystem assemble_mt_mueller(const Scatterer& s, const AssemblyOptions& options = {});

// Mt-PMCHWT: RWG trial and test.
//   [P]_kk = A^(0)_kk + A^(k)_kk,  [P]_jk = A^(0)_jk - I_jk / 2
BlockSystem assemble_mt_pmchwt(const Scatterer& s, const AssemblyOptions& options = {});

// Off-diagonal block (j != k) of the naively weighted combination without
// the extinction augmentation, beta_0 I_jk / 2 - beta_0 A^(0)_jk, BC-tested.
// Its single layers keep their hypersingular part; diagnostics only.
Eigen::MatrixXcd assemble_naive_mueller_block(const Scatterer& s, int j, int k,
                                              const AssemblyOptions& options = {});

// Dispatches on the formulation; CpMtPmchwt yields the Mt-PMCHWT matrix, to be
// paired with a CalderonPreconditioner.
BlockSystem assemble_system(const Scatterer& s, Formulation f, const AssemblyOptions& options = {});

// Block-diagonal Calderon preconditioner T G^-1 for the Mt-PMCHWT system,
// with T_k the Yukawa single layer (kappa -> -i kappa_0) on BC functions and
// G_k = <n x RWG, BC>.
class CalderonPreconditioner {
 public:
  CalderonPreconditioner(const Scatterer& s, const AssemblyOptions& options = {});

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& x) const;

  const std::vector<Eigen::MatrixXd>& yukawa() const { return T_; }
  const std::vector<Eigen::SparseMatrix<double>>& gram() const { return G_; }

 private:
  std::vector<Eigen::Index> offset_;
  std::vector<Eigen::MatrixXd> T_;
  std::vector<Eigen::SparseMatrix<double>> G_;
  std::vector<std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>> lu_;
};

// Coordinate-format Matrix Market export of a complex matrix.
void write_matrix_market(const Eigen::MatrixXcd& m, const std::string& path, double drop_below = 0.0);

}  // namespace mtbem
