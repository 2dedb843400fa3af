#include "mtbem/solve.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace mtbem {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void require_square(const Eigen::MatrixXcd& a, Eigen::Index rhs_rows) {
  if (a.rows() != a.cols()) throw SolverError(SolverError::Kind::InvalidArgument, "system matrix is not square");
  if (rhs_rows != a.rows()) {
    throw SolverError(SolverError::Kind::InvalidArgument, "right-hand side length does not match the system");
  }
}

}  // namespace

const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::Direct: return "direct";
    case SolveMethod::Gmres: return "gmres";
    case SolveMethod::GmresPreconditioned: return "gmres+precond";
  }
  return "unknown";
}

// `a` must outlive the solver; it is used for residual reports.
DirectSolver::DirectSolver(const Eigen::MatrixXcd& a) : a_(&a), lu_(a) {
  require_square(a, a.rows());
  const auto start = Clock::now();
  const int n = static_cast<int>(a.rows());
  pivots_.resize(static_cast<std::size_t>(n));
  const int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lu_.data(), n, pivots_.data());
  if (info < 0) throw SolverError(SolverError::Kind::InvalidArgument, "zgetrf rejected its arguments");
  const double scale = a.cwiseAbs().maxCoeff();
  const double smallest = n > 0 ? lu_.diagonal().cwiseAbs().minCoeff() : 1.0;
  if (info > 0 || !(smallest >= 1e-14 * scale)) {
    throw SolverError(SolverError::Kind::Singular, "system matrix is numerically singular (pivot " +
                                                       std::to_string(smallest) + ", scale " +
                                                       std::to_string(scale) + ")");
  }
  factor_seconds_ = since(start);
}

SolveResult DirectSolver::solve(const Eigen::VectorXcd& b) const {
  require_square(*a_, b.size());
  const auto start = Clock::now();
  SolveResult out;
  out.x = b;
  const int n = static_cast<int>(lu_.rows());
  const int info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, 1, lu_.data(), n, pivots_.data(), out.x.data(), n);
  if (info != 0) throw SolverError(SolverError::Kind::InvalidArgument, "zgetrs rejected its arguments");
  out.report.method = SolveMethod::Direct;
  const double bn = b.norm();
  out.report.relative_residual = bn > 0.0 ? (b - *a_ * out.x).norm() / bn : 0.0;
  out.report.residuals = {out.report.relative_residual};
  out.report.seconds = factor_seconds_ + since(start);
  return out;
}

SolveResult solve_direct(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b) {
  require_square(a, b.size());
  return DirectSolver(a).solve(b);
}

SolveResult solve_gmres(const LinearOperator& a, const Eigen::VectorXcd& b, const GmresOptions& options,
                        const LinearOperator& preconditioner) {
  if (!(options.tol > 0.0)) throw SolverError(SolverError::Kind::InvalidArgument, "GMRES tolerance must be positive");
  if (options.max_iterations < 1 || options.restart < 0) {
    throw SolverError(SolverError::Kind::InvalidArgument, "invalid GMRES iteration limits");
  }
  const auto start = Clock::now();
  auto op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return preconditioner ? preconditioner(a(v)) : a(v);
  };
  const Eigen::VectorXcd rhs = preconditioner ? preconditioner(b) : b;
  const Eigen::Index n = rhs.size();
  const double bnorm = rhs.norm();

  SolveResult out;
  SolveReport& rep = out.report;
  rep.method = preconditioner ? SolveMethod::GmresPreconditioned : SolveMethod::Gmres;
  out.x = Eigen::VectorXcd::Zero(n);
  rep.residuals.push_back(bnorm > 0.0 ? 1.0 : 0.0);
  if (bnorm == 0.0) {
    rep.seconds = since(start);
    return out;
  }

  enum class Status { Running, Converged, Stagnated, Exhausted } status = Status::Running;
  const int cycle = options.restart > 0 ? options.restart : options.max_iterations;
  Eigen::VectorXcd r = rhs;
  double beta = bnorm;
  while (status == Status::Running) {
    std::vector<Eigen::VectorXcd> v{r / beta};
    // Columns of the rotated Hessenberg matrix; column j has j + 2 entries.
    std::vector<Eigen::VectorXcd> h;
    std::vector<double> cs;
    std::vector<cd> sn;
    std::vector<cd> g{beta};
    int j = 0;
    while (j < cycle) {
      Eigen::VectorXcd w = op(v[j]);
      Eigen::VectorXcd col(j + 2);
      for (int i = 0; i <= j; ++i) {
        col(i) = v[i].dot(w);
        w -= col(i) * v[i];
      }
      const double wn = w.norm();
      col(j + 1) = wn;
      for (int i = 0; i < j; ++i) {
        const cd t = cs[i] * col(i) + sn[i] * col(i + 1);
        col(i + 1) = -std::conj(sn[i]) * col(i) + cs[i] * col(i + 1);
        col(i) = t;
      }
      // Rotation zeroing col(j + 1).
      const double a_abs = std::abs(col(j));
      const double denom = std::hypot(a_abs, wn);
      double c = 0.0;
      cd s = 1.0;
      if (a_abs > 0.0) {
        c = a_abs / denom;
        s = (col(j) / a_abs) * wn / denom;
      }
      cs.push_back(c);
      sn.push_back(s);
      col(j) = c * col(j) + s * wn;
      col(j + 1) = 0.0;
      h.push_back(std::move(col));
      g.push_back(-std::conj(s) * g[j]);
      g[j] = c * g[j];
      ++j;
      ++rep.iterations;

      const double rel = std::abs(g[j]) / bnorm;
      rep.residuals.push_back(rel);
      if (rel <= options.tol) {
        status = Status::Converged;
        break;
      }
      const int window = options.stagnation_window;
      if (window > 0 && rep.iterations >= window && rel >= rep.residuals[rep.iterations - window] * (1.0 - 1e-12)) {
        status = Status::Stagnated;
        break;
      }
      if (rep.iterations >= options.max_iterations) {
        status = Status::Exhausted;
        break;
      }
      if (wn == 0.0) {
        // Invariant subspace: the least-squares solution is exact.
        status = Status::Converged;
        break;
      }
      v.push_back(w / wn);
    }
    std::vector<cd> y(g.begin(), g.begin() + j);
    for (int i = j - 1; i >= 0; --i) {
      for (int k = i + 1; k < j; ++k) y[i] -= h[k](i) * y[k];
      y[i] /= h[i](i);
    }
    for (int i = 0; i < j; ++i) out.x += y[i] * v[i];
    if (status == Status::Running) {
      r = rhs - op(out.x);
      beta = r.norm();
      if (beta / bnorm <= options.tol) status = Status::Converged;
    }
  }

  rep.relative_residual = (rhs - op(out.x)).norm() / bnorm;
  rep.seconds = since(start);
  rep.converged = status == Status::Converged;
  if (!rep.converged && options.throw_on_failure) {
    const std::string at = " after " + std::to_string(rep.iterations) + " iterations (relative residual " +
                           std::to_string(rep.residuals.back()) + ")";
    if (status == Status::Stagnated) throw SolverError(SolverError::Kind::Stagnation, "GMRES stagnated" + at);
    throw SolverError(SolverError::Kind::MaxIterations, "GMRES did not converge" + at);
  }
  return out;
}

SolveResult solve_gmres(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, const GmresOptions& options,
                        const CalderonPreconditioner* preconditioner) {
  require_square(a, b.size());
  const LinearOperator op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return a * v; };
  LinearOperator pre;
  if (preconditioner != nullptr) {
    pre = [preconditioner](const Eigen::VectorXcd& v) { return preconditioner->apply(v); };
  }
  return solve_gmres(op, b, options, pre);
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a) {
  Eigen::MatrixXcd work = a;
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Eigen::VectorXd s(std::min(m, n));
  if (s.size() == 0) return s;
  lapack_complex_double dummy{};
  const int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), std::max(1, m), s.data(), &dummy, 1,
                                  &dummy, 1);
  if (info != 0) throw SolverError(SolverError::Kind::SvdFailure, "zgesdd failed with info " + std::to_string(info));
  return s;
}

double condition_number(const Eigen::MatrixXcd& a) {
  const Eigen::VectorXd s = singular_values(a);
  if (s.size() == 0) throw SolverError(SolverError::Kind::InvalidArgument, "empty matrix");
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

double gram_condition_number(const BlockSystem& system) {
  for (const TraceSpace& t : system.test) {
    if (t.kind() != SpaceKind::Bc) {
      throw SolverError(SolverError::Kind::InvalidArgument, "Gram scaling needs BC test functions");
    }
  }
  Eigen::MatrixXcd scaled(system.matrix.rows(), system.matrix.cols());
  for (std::size_t k = 0; k < system.offset.size(); ++k) {
    const Eigen::MatrixXd g(assemble_gram(system.test[k], system.trial[k]));
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(g.cast<cd>());
    const Eigen::Index n = system.dofs[k];
    for (Eigen::Index slot : {system.offset[k], system.offset[k] + n}) {
      scaled.middleRows(slot, n) = lu.solve(system.matrix.middleRows(slot, n));
    }
  }
  return condition_number(scaled);
}

void write_residual_csv(const SolveReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "iteration,residual\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.residuals.size(); ++i) out << i << ',' << report.residuals[i] << '\n';
}

}  // namespace mtbem
