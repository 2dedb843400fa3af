#pragma once

// Dense direct solves, GMRES and singular-value diagnostics.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtbem/operators.hpp"

namespace mtbem {

enum class SolveMethod { Direct, Gmres, GmresPreconditioned };

const char* to_string(SolveMethod m);

struct SolveReport {
  SolveMethod method = SolveMethod::Direct;
  int iterations = 0;
  // Relative residual after each iteration, starting with iteration 0. For a
  // preconditioned solve these are residuals of the preconditioned system.
  std::vector<double> residuals;
  // Recomputed at exit: ||b - A x|| / ||b|| (preconditioned when applicable).
  double relative_residual = 0.0;
  double seconds = 0.0;
  bool converged = true;
};

struct SolveResult {
  Eigen::VectorXcd x;
  SolveReport report;
};

// LU factorization with partial pivoting, reusable across right-hand sides.
// Throws SolverError::Singular when a pivot falls below 1e-14 x max |A|.
class DirectSolver {
 public:
  explicit DirectSolver(const Eigen::MatrixXcd& a);

  SolveResult solve(const Eigen::VectorXcd& b) const;
  double factor_seconds() const { return factor_seconds_; }

 private:
  const Eigen::MatrixXcd* a_;
  Eigen::MatrixXcd lu_;
  std::vector<int> pivots_;
  double factor_seconds_ = 0.0;
};

SolveResult solve_direct(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b);

using LinearOperator = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

struct GmresOptions {
  double tol = 1e-6;
  // 0 disables restarting.
  int restart = 0;
  int max_iterations = 1000;
  // Stagnation: no decrease of the residual over this many iterations.
  int stagnation_window = 50;
  // When false, failures return with report.converged = false.
  bool throw_on_failure = true;
};

// Solves M A x = M b from x0 = 0, with M the identity when `preconditioner`
// is empty. Throws SolverError::MaxIterations or SolverError::Stagnation.
SolveResult solve_gmres(const LinearOperator& a, const Eigen::VectorXcd& b, const GmresOptions& options = {},
                        const LinearOperator& preconditioner = {});

SolveResult solve_gmres(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, const GmresOptions& options = {},
                        const CalderonPreconditioner* preconditioner = nullptr);

// Singular values in decreasing order (LAPACK divide and conquer). Throws
// SolverError::SvdFailure.
Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a);

double condition_number(const Eigen::MatrixXcd& a);

// Condition number of G^-1 A with G the block-diagonal Gram matrix of the
// system's test and trial spaces. Throws SolverError::InvalidArgument unless every
// test space is BC (the Mt-Mueller system).
double gram_condition_number(const BlockSystem& system);

// CSV with header "iteration,residual".
void write_residual_csv(const SolveReport& report, const std::filesystem::path& path);

}  // namespace mtbem
