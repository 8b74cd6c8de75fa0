#include "proxyscat/linalg.hpp"

#include <cmath>
#include <limits>
#include <iostream>
#include <string>

#include "proxyscat/errors.hpp"

namespace proxyscat {

LuFactor::LuFactor(const CMatrix& a, double warn_rcond) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LuFactor: matrix must be square");
  if (a.rows() == 0) throw std::invalid_argument("LuFactor: empty matrix");
  lu_.compute(a);
  const auto& u = lu_.matrixLU();
  const double scale = a.cwiseAbs().maxCoeff();
  const double tiny = scale * 1e-300 + std::numeric_limits<double>::min();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double piv = std::abs(u(i, i));
    if (!(piv > tiny * static_cast<double>(u.rows())) || !std::isfinite(piv))
      throw SingularMatrixError("LU: zero pivot at index " + std::to_string(i), i);
  }
  rcond_ = lu_.rcond();
  if (rcond_ < warn_rcond) {
    ill_conditioned_ = true;
    std::clog << "warning: LU factorization is ill-conditioned (rcond ~ " << rcond_ << ")\n";
  }
}

CMatrix LuFactor::solve(const CMatrix& b) const {
  if (b.rows() != lu_.rows()) throw std::invalid_argument("LuFactor::solve: dimension mismatch");
  return lu_.solve(b);
}

CVector LuFactor::solve(const CVector& b) const {
  if (b.rows() != lu_.rows()) throw std::invalid_argument("LuFactor::solve: dimension mismatch");
  return lu_.solve(b);
}

CMatrix lu_solve(const CMatrix& a, const CMatrix& b) { return LuFactor(a).solve(b); }

namespace {

// Givens rotation zeroing b in (a, b).
void givens(cplx a, cplx b, double& c, cplx& s) {
  const double aa = std::abs(a), bb = std::abs(b);
  if (bb == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (aa == 0.0) {
    c = 0.0;
    s = std::conj(b) / bb;
    return;
  }
  const double r = std::hypot(aa, bb);
  c = aa / r;
  s = (a / aa) * std::conj(b) / r;
}

}  // namespace

GmresResult gmres(const LinearOperator& op, const CVector& b, const GmresOptions& opt) {
  if (opt.max_iter < 1) throw std::invalid_argument("gmres: max_iter must be positive");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("gmres: tol must be positive");
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = CVector::Zero(n);
  const double bnorm = b.norm();
  res.history.push_back(1.0);
  if (bnorm == 0.0) {
    res.history.back() = 0.0;
    return res;
  }
  const int m_max = opt.restart > 0 ? opt.restart : opt.max_iter;
  CVector r = b;
  CVector w(n);
  double rel = 1.0;

  while (res.iterations < opt.max_iter) {
    const int m = std::min(m_max, opt.max_iter - res.iterations);
    CMatrix v(n, m + 1);
    CMatrix h = CMatrix::Zero(m + 1, m);
    std::vector<double> cs(m);
    std::vector<cplx> sn(m);
    CVector g = CVector::Zero(m + 1);
    const double beta = r.norm();
    v.col(0) = r / beta;
    g(0) = beta;
    int j = 0;
    bool done = false;
    for (; j < m; ++j) {
      op(v.col(j), w);
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const cplx hij = v.col(i).dot(w);
          h(i, j) += hij;
          w -= hij * v.col(i);
        }
      }
      const double hnext = w.norm();
      h(j + 1, j) = hnext;
      for (int i = 0; i < j; ++i) {
        const cplx t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -std::conj(sn[i]) * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      givens(h(j, j), h(j + 1, j), cs[j], sn[j]);
      h(j, j) = cs[j] * h(j, j) + sn[j] * h(j + 1, j);
      h(j + 1, j) = 0.0;
      g(j + 1) = -std::conj(sn[j]) * g(j);
      g(j) = cs[j] * g(j);
      ++res.iterations;
      rel = std::abs(g(j + 1)) / bnorm;
      res.history.push_back(rel);
      const bool breakdown = hnext <= 1e-14 * beta;
      if (rel <= opt.tol || breakdown) {
        ++j;
        done = true;
        break;
      }
      v.col(j + 1) = w / hnext;
    }
    // x += V y with H y = g on the leading j x j block
    CVector y = g.head(j);
    for (int i = j - 1; i >= 0; --i) {
      for (int l = i + 1; l < j; ++l) y(i) -= h(i, l) * y(l);
      y(i) /= h(i, i);
    }
    res.x += v.leftCols(j) * y;
    op(res.x, w);
    r = b - w;
    res.true_residual = r.norm() / bnorm;
    if (done) {
      if (rel <= opt.tol) return res;
      throw ConvergenceError("gmres: breakdown before reaching tolerance", res.history);
    }
  }
  throw ConvergenceError("gmres: no convergence in " + std::to_string(opt.max_iter) +
                             " iterations (relative residual " + std::to_string(rel) + ")",
                         res.history);
}

}  // namespace proxyscat
