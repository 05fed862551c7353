#pragma once

#include <vector>

namespace sosmatch {

// Dense linear algebra helpers shared by the LP solver and the planning layer.
// Row-major n x n systems, partial-pivot LU, sized for the small instances this
// library targets (tens of rows, not thousands).
class SquareSolver {
 public:
  // Factorizes a (row-major, n x n). Throws std::runtime_error if singular
  // relative to `tol`.
  SquareSolver(const std::vector<std::vector<double>>& a, double tol = 1e-11);

  // Solve A x = b.
  std::vector<double> solve(const std::vector<double>& b) const;
  // Solve A^T x = b.
  std::vector<double> solve_transposed(const std::vector<double>& b) const;

  int size() const { return n_; }

 private:
  int n_;
  std::vector<double> lu_;    // packed LU factors
  std::vector<int> perm_;     // row permutation
};

// Result of maximizing c'x subject to A x = b, x >= 0.
struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;      // primal solution, size = #columns
  std::vector<int> basis;     // basic column per row, size = #rows
  std::vector<double> dual;   // y = A_B^{-T} c_B for the final basis
  long long iterations = 0;
};

// Two-phase dense simplex with Bland's anti-cycling rule. Deterministic: the
// entering column is always the lowest-index improving column and the leaving
// row breaks ratio ties toward the lowest basic column index, so degenerate
// and alternate-optimal instances always resolve the same way.
//
// Requires b >= 0 (callers with negative entries must negate rows first) and
// rectangular a (rows x cols). `tol` is the feasibility/optimality tolerance.
LpResult solve_equality_lp(const std::vector<std::vector<double>>& a,
                           const std::vector<double>& b,
                           const std::vector<double>& c,
                           double tol = 1e-9);

}  // namespace sosmatch
