#include "sosmatch/lp.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace sosmatch {

SquareSolver::SquareSolver(const std::vector<std::vector<double>>& a, double tol)
    : n_(static_cast<int>(a.size())), lu_(n_ * n_), perm_(n_) {
  for (int i = 0; i < n_; ++i) {
    if (static_cast<int>(a[i].size()) != n_) {
      throw std::invalid_argument("SquareSolver: matrix is not square");
    }
    for (int j = 0; j < n_; ++j) lu_[i * n_ + j] = a[i][j];
    perm_[i] = i;
  }
  // Doolittle LU with partial pivoting.
  for (int k = 0; k < n_; ++k) {
    int pivot = k;
    double best = std::abs(lu_[perm_[k] * n_ + k]);
    for (int i = k + 1; i < n_; ++i) {
      const double v = std::abs(lu_[perm_[i] * n_ + k]);
      if (v > best) {
        best = v;
        pivot = i;
      }
    }
    if (best <= tol) throw std::runtime_error("SquareSolver: singular matrix");
    std::swap(perm_[k], perm_[pivot]);
    const int pk = perm_[k];
    for (int i = k + 1; i < n_; ++i) {
      const int pi = perm_[i];
      const double f = lu_[pi * n_ + k] / lu_[pk * n_ + k];
      lu_[pi * n_ + k] = f;
      for (int j = k + 1; j < n_; ++j) lu_[pi * n_ + j] -= f * lu_[pk * n_ + j];
    }
  }
}

std::vector<double> SquareSolver::solve(const std::vector<double>& b) const {
  std::vector<double> y(n_), x(n_);
  for (int i = 0; i < n_; ++i) {
    double s = b[perm_[i]];
    for (int j = 0; j < i; ++j) s -= lu_[perm_[i] * n_ + j] * y[j];
    y[i] = s;
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int j = i + 1; j < n_; ++j) s -= lu_[perm_[i] * n_ + j] * x[j];
    x[i] = s / lu_[perm_[i] * n_ + i];
  }
  return x;
}

std::vector<double> SquareSolver::solve_transposed(const std::vector<double>& b) const {
  // Solve U^T z = b, then L^T w = z, then undo the row permutation.
  std::vector<double> z(n_), w(n_), x(n_);
  for (int i = 0; i < n_; ++i) {
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= lu_[perm_[j] * n_ + i] * z[j];
    z[i] = s / lu_[perm_[i] * n_ + i];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = z[i];
    for (int j = i + 1; j < n_; ++j) s -= lu_[perm_[j] * n_ + i] * w[j];
    w[i] = s;
  }
  for (int i = 0; i < n_; ++i) x[perm_[i]] = w[i];
  return x;
}

namespace {

struct SimplexProblem {
  int rows = 0;
  int real_cols = 0;
  int total_cols = 0;  // real columns + one artificial per row
  const std::vector<std::vector<double>>* a = nullptr;
  std::vector<double> b;

  double entry(int i, int j) const {
    if (j < real_cols) return (*a)[i][j];
    return (j - real_cols) == i ? 1.0 : 0.0;
  }
  std::vector<double> column(int j) const {
    std::vector<double> col(rows);
    for (int i = 0; i < rows; ++i) col[i] = entry(i, j);
    return col;
  }
};

// One simplex phase over the given objective. `allow` masks columns that may
// enter the basis. Returns false if an unbounded improving ray was found.
bool run_phase(const SimplexProblem& p, const std::vector<double>& obj,
               const std::vector<bool>& allow, std::vector<int>& basis,
               std::vector<double>& x_basic, std::vector<double>& dual,
               double tol, long long& iterations) {
  const long long max_iterations = 20000 + 200LL * (p.rows + p.total_cols);
  while (true) {
    if (++iterations > max_iterations) {
      throw std::runtime_error("simplex: iteration limit exceeded");
    }
    std::vector<std::vector<double>> bmat(p.rows, std::vector<double>(p.rows));
    for (int i = 0; i < p.rows; ++i) {
      for (int k = 0; k < p.rows; ++k) bmat[i][k] = p.entry(i, basis[k]);
    }
    SquareSolver factor(bmat);
    x_basic = factor.solve(p.b);
    std::vector<double> cb(p.rows);
    for (int k = 0; k < p.rows; ++k) cb[k] = obj[basis[k]];
    dual = factor.solve_transposed(cb);

    // Bland: enter the lowest-index column with positive reduced profit.
    int entering = -1;
    std::vector<bool> in_basis(p.total_cols, false);
    for (int k = 0; k < p.rows; ++k) in_basis[basis[k]] = true;
    for (int j = 0; j < p.total_cols; ++j) {
      if (in_basis[j] || !allow[j]) continue;
      double reduced = obj[j];
      for (int i = 0; i < p.rows; ++i) reduced -= dual[i] * p.entry(i, j);
      if (reduced > tol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return true;  // optimal for this phase

    const std::vector<double> direction = factor.solve(p.column(entering));
    int leaving = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < p.rows; ++i) {
      if (direction[i] > tol) {
        const double ratio = x_basic[i] / direction[i];
        if (leaving < 0 || ratio < best_ratio - tol ||
            (ratio < best_ratio + tol && basis[i] < basis[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
    }
    if (leaving < 0) return false;  // unbounded ray
    basis[leaving] = entering;
  }
}

}  // namespace

LpResult solve_equality_lp(const std::vector<std::vector<double>>& a,
                           const std::vector<double>& b,
                           const std::vector<double>& c, double tol) {
  const int rows = static_cast<int>(a.size());
  const int cols = rows > 0 ? static_cast<int>(a[0].size()) : 0;
  if (static_cast<int>(b.size()) != rows || static_cast<int>(c.size()) != cols) {
    throw std::invalid_argument("solve_equality_lp: dimension mismatch");
  }
  for (int i = 0; i < rows; ++i) {
    if (b[i] < -tol) {
      throw std::invalid_argument("solve_equality_lp: right-hand side must be nonnegative");
    }
  }

  SimplexProblem p;
  p.rows = rows;
  p.real_cols = cols;
  p.total_cols = cols + rows;
  p.a = &a;
  p.b = b;
  for (double& v : p.b) {
    if (v < 0.0) v = 0.0;  // clamp tiny negatives admitted by tol
  }

  LpResult result;
  std::vector<int> basis(rows);
  for (int i = 0; i < rows; ++i) basis[i] = cols + i;  // start on artificials

  // Phase 1: maximize -(sum of artificials).
  std::vector<double> phase1_obj(p.total_cols, 0.0);
  for (int j = cols; j < p.total_cols; ++j) phase1_obj[j] = -1.0;
  std::vector<bool> allow_all(p.total_cols, true);
  std::vector<double> x_basic, dual;
  if (!run_phase(p, phase1_obj, allow_all, basis, x_basic, dual, tol,
                 result.iterations)) {
    throw std::runtime_error("simplex: phase 1 reported unbounded");
  }
  double infeasibility = 0.0;
  for (int i = 0; i < rows; ++i) {
    if (basis[i] >= cols) infeasibility += x_basic[i];
  }
  if (infeasibility > tol * (1.0 + rows)) {
    result.status = LpResult::Status::Infeasible;
    return result;
  }

  // Drive zero-level artificials out of the basis where possible.
  for (int i = 0; i < rows; ++i) {
    if (basis[i] < cols) continue;
    std::vector<std::vector<double>> bmat(rows, std::vector<double>(rows));
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < rows; ++k) bmat[r][k] = p.entry(r, basis[k]);
    }
    SquareSolver factor(bmat);
    std::vector<bool> in_basis(p.total_cols, false);
    for (int k = 0; k < rows; ++k) in_basis[basis[k]] = true;
    for (int j = 0; j < cols; ++j) {
      if (in_basis[j]) continue;
      const std::vector<double> direction = factor.solve(p.column(j));
      if (std::abs(direction[i]) > 1e-7) {
        basis[i] = j;
        break;
      }
    }
    // If no replacement exists the row is linearly dependent; the artificial
    // stays basic at level zero and is barred from re-entering below.
  }

  // Phase 2: maximize the real objective; artificials may not enter.
  std::vector<double> phase2_obj(p.total_cols, 0.0);
  for (int j = 0; j < cols; ++j) phase2_obj[j] = c[j];
  std::vector<bool> allow_real(p.total_cols, false);
  for (int j = 0; j < cols; ++j) allow_real[j] = true;
  if (!run_phase(p, phase2_obj, allow_real, basis, x_basic, dual, tol,
                 result.iterations)) {
    result.status = LpResult::Status::Unbounded;
    return result;
  }

  result.status = LpResult::Status::Optimal;
  result.basis = basis;
  result.dual = dual;
  result.x.assign(cols, 0.0);
  result.objective = 0.0;
  for (int i = 0; i < rows; ++i) {
    if (basis[i] < cols) {
      result.x[basis[i]] = x_basic[i];
      result.objective += c[basis[i]] * x_basic[i];
    }
  }
  return result;
}

}  // namespace sosmatch
