#pragma once

// Symmetric CSR matrices over the free dofs, a Jacobi-preconditioned
// conjugate gradient solver, and a dense Cholesky fallback for small
// systems.  Deterministic: fixed orderings, no reordering heuristics.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pxfem/core.hpp"

namespace pxfem {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class CsrMatrix {
 public:
  // adjacency[i] must contain i itself; entries get sorted and deduplicated.
  static CsrMatrix from_pattern(std::vector<std::vector<int>> adjacency) {
    CsrMatrix m;
    m.n_ = static_cast<int>(adjacency.size());
    m.row_ptr_.assign(m.n_ + 1, 0);
    for (int i = 0; i < m.n_; ++i) {
      auto& row = adjacency[i];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      m.row_ptr_[i + 1] = m.row_ptr_[i] + static_cast<int>(row.size());
    }
    m.col_.reserve(m.row_ptr_[m.n_]);
    for (const auto& row : adjacency)
      m.col_.insert(m.col_.end(), row.begin(), row.end());
    m.val_.assign(m.col_.size(), 0.0);
    return m;
  }

  int size() const { return n_; }

  void clear_values() { std::fill(val_.begin(), val_.end(), 0.0); }

  double& at(int i, int j) {
    int lo = row_ptr_[i], hi = row_ptr_[i + 1];
    auto it = std::lower_bound(col_.begin() + lo, col_.begin() + hi, j);
    if (it == col_.begin() + hi || *it != j)
      throw PreconditionError("entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") outside sparsity");
    return val_[it - col_.begin()];
  }

  double get(int i, int j) const {
    int lo = row_ptr_[i], hi = row_ptr_[i + 1];
    auto it = std::lower_bound(col_.begin() + lo, col_.begin() + hi, j);
    return (it == col_.begin() + hi || *it != j) ? 0.0
                                                 : val_[it - col_.begin()];
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        s += val_[k] * x[col_[k]];
      y[i] = s;
    }
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : val_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_symmetric(double rel_tol = 1e-12) const {
    double scale = max_abs();
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (std::abs(val_[k] - get(col_[k], i)) > rel_tol * scale)
          return false;
    return true;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_);
    for (int i = 0; i < n_; ++i) d[i] = get(i, i);
    return d;
  }

  std::vector<double> dense() const {
    std::vector<double> m(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        m[static_cast<std::size_t>(i) * n_ + col_[k]] = val_[k];
    return m;
  }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_, col_;
  std::vector<double> val_;
};

struct LinearSolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool direct = false;
};

// Jacobi-preconditioned CG; breakdown (nonpositive curvature) signals an
// indefinite matrix and throws.
inline LinearSolveStats cg_jacobi(const CsrMatrix& m,
                                  const std::vector<double>& b,
                                  std::vector<double>& x,
                                  double rel_tol = 1e-12,
                                  int max_iter = 100000) {
  const int n = m.size();
  x.assign(n, 0.0);
  double b_norm = 0.0;
  for (double v : b) b_norm += v * v;
  b_norm = std::sqrt(b_norm);
  if (b_norm == 0.0) return {0, 0.0, false};

  std::vector<double> inv_d = m.diagonal();
  for (double& d : inv_d) {
    if (!(d > 0.0)) throw SolverError("nonpositive diagonal entry in CG");
    d = 1.0 / d;
  }
  std::vector<double> r = b, z(n), p(n), ap;
  for (int i = 0; i < n; ++i) z[i] = inv_d[i] * r[i];
  p = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];
  LinearSolveStats stats;
  for (int it = 1; it <= max_iter; ++it) {
    ap = m.apply(p);
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (!(pap > 0.0))
      throw SolverError("CG breakdown: matrix not positive definite");
    double alpha = rz / pap;
    double r_norm = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      r_norm += r[i] * r[i];
    }
    r_norm = std::sqrt(r_norm);
    stats.iterations = it;
    stats.rel_residual = r_norm / b_norm;
    if (stats.rel_residual <= rel_tol) return stats;
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = inv_d[i] * r[i];
      rz_new += r[i] * z[i];
    }
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("CG failed to reach tolerance " + std::to_string(rel_tol) +
                    " in " + std::to_string(max_iter) + " iterations");
}

// In-place dense Cholesky solve; throws on loss of positive definiteness.
inline LinearSolveStats dense_cholesky_solve(const CsrMatrix& m,
                                             const std::vector<double>& b,
                                             std::vector<double>& x) {
  const int n = m.size();
  std::vector<double> a = m.dense();
  for (int j = 0; j < n; ++j) {
    double d = a[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      double l = a[static_cast<std::size_t>(j) * n + k];
      d -= l * l;
    }
    if (!(d > 0.0))
      throw SolverError("dense factorization: matrix not positive definite");
    d = std::sqrt(d);
    a[static_cast<std::size_t>(j) * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      double s = a[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        s -= a[static_cast<std::size_t>(i) * n + k] *
             a[static_cast<std::size_t>(j) * n + k];
      a[static_cast<std::size_t>(i) * n + j] = s / d;
    }
  }
  x = b;
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k)
      s -= a[static_cast<std::size_t>(i) * n + k] * x[k];
    x[i] = s / a[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k)
      s -= a[static_cast<std::size_t>(k) * n + i] * x[k];
    x[i] = s / a[static_cast<std::size_t>(i) * n + i];
  }
  return {0, 0.0, true};
}

}  // namespace pxfem
