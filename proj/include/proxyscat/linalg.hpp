#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace proxyscat {

using cplx = std::complex<double>;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

/// Partial-pivoting LU of a square complex matrix.
class LuFactor {
 public:
  explicit LuFactor(const CMatrix& a, double warn_rcond = 1e-12);

  CMatrix solve(const CMatrix& b) const;
  CVector solve(const CVector& b) const;
  Eigen::Index size() const { return lu_.rows(); }
  /// Reciprocal condition number estimate (1-norm).
  double rcond() const { return rcond_; }
  bool ill_conditioned() const { return ill_conditioned_; }

 private:
  Eigen::PartialPivLU<CMatrix> lu_;
  double rcond_ = 0.0;
  bool ill_conditioned_ = false;
};

CMatrix lu_solve(const CMatrix& a, const CMatrix& b);

/// y = op(x); y is resized by the caller.
using LinearOperator = std::function<void(const CVector& x, CVector& y)>;

struct GmresOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  int restart = 0;  // 0: full orthogonalization, no restart
};

struct GmresResult {
  CVector x;
  int iterations = 0;
  /// Relative residual estimates, starting with 1 for the zero initial guess.
  std::vector<double> history;
  /// ||b - op(x)|| / ||b|| recomputed after the last iteration.
  double true_residual = 0.0;
};

/// Throws ConvergenceError (carrying the history) if tol is not reached.
GmresResult gmres(const LinearOperator& op, const CVector& b, const GmresOptions& opt);

}  // namespace proxyscat
