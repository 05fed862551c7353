#include "sosmatch/spp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sosmatch/lp.hpp"

namespace sosmatch {

namespace {

constexpr double kStrictnessTol = 1e-7;
constexpr double kFeasibilityTol = 1e-9;

std::vector<std::vector<double>> dense_matrix(const MatchingInstance& inst) {
  std::vector<std::vector<double>> a(inst.n, std::vector<double>(inst.d()));
  for (int i = 0; i < inst.n; ++i) {
    for (int m = 0; m < inst.d(); ++m) a[i][m] = static_cast<double>(inst.mult(i, m));
  }
  return a;
}

std::vector<std::vector<double>> basis_matrix(const MatchingInstance& inst,
                                              const std::vector<int>& basis) {
  if (static_cast<int>(basis.size()) != inst.n) {
    throw std::invalid_argument("basis size must equal the number of resources");
  }
  std::vector<std::vector<double>> b(inst.n, std::vector<double>(inst.n));
  for (int i = 0; i < inst.n; ++i) {
    for (int k = 0; k < inst.n; ++k) b[i][k] = static_cast<double>(inst.mult(i, basis[k]));
  }
  return b;
}

}  // namespace

SppSolution solve_spp(const MatchingInstance& inst, const std::vector<double>& lambda) {
  if (static_cast<int>(lambda.size()) != inst.n) {
    throw std::invalid_argument("solve_spp: lambda length != n");
  }
  const LpResult lp = solve_equality_lp(dense_matrix(inst), lambda, inst.rewards);
  if (lp.status == LpResult::Status::Infeasible) {
    throw std::runtime_error("solve_spp: planning LP is infeasible for these rates");
  }
  if (lp.status == LpResult::Status::Unbounded) {
    throw std::runtime_error("solve_spp: planning LP is unbounded");
  }
  SppSolution sol;
  sol.x_star = lp.x;
  sol.basis = lp.basis;
  for (int m : sol.basis) {
    if (m >= inst.d()) {
      throw std::runtime_error(
          "solve_spp: constraint matrix is rank-deficient; no configuration basis exists");
    }
  }
  std::sort(sol.basis.begin(), sol.basis.end());
  sol.alpha_star = dual_from_basis(inst, sol.basis);
  sol.opt_value = lp.objective;
  return sol;
}

std::vector<double> dual_from_basis(const MatchingInstance& inst,
                                    const std::vector<int>& basis) {
  SquareSolver factor(basis_matrix(inst, basis));
  std::vector<double> r_basis(inst.n);
  for (int k = 0; k < inst.n; ++k) r_basis[k] = inst.rewards[basis[k]];
  return factor.solve_transposed(r_basis);
}

GpgReport check_gpg(const MatchingInstance& inst, const std::vector<double>& lambda,
                    const SppSolution& sol, double epsilon) {
  GpgReport report;
  report.epsilon = epsilon;

  // Strictness of the optimal solution on its basis coordinates.
  for (int k = 0; k < inst.n; ++k) {
    const int m = sol.basis[k];
    if (sol.x_star[m] > kStrictnessTol) continue;
    bool forced_by_lambda = false;
    if (inst.is_discard(m)) {
      const auto sup = inst.support(m);
      forced_by_lambda = lambda[sup[0]] <= kStrictnessTol;
    }
    if (!forced_by_lambda) {
      report.failing_direction =
          "degenerate basis coordinate x[" + std::to_string(m) + "]";
      return report;
    }
  }

  // Extreme points of the TV ball: move min(epsilon, lambda_j) mass j -> i.
  SquareSolver factor(basis_matrix(inst, sol.basis));
  for (int j = 0; j < inst.n; ++j) {
    const double shift = std::min(epsilon, lambda[j]);
    if (shift <= 0.0) continue;
    for (int i = 0; i < inst.n; ++i) {
      if (i == j) continue;
      std::vector<double> perturbed(lambda);
      perturbed[i] += shift;
      perturbed[j] -= shift;
      const std::vector<double> x_basis = factor.solve(perturbed);
      for (int k = 0; k < inst.n; ++k) {
        if (x_basis[k] < -kFeasibilityTol) {
          report.failing_direction = "shift " + std::to_string(shift) +
                                     " mass from resource " + std::to_string(j) +
                                     " to resource " + std::to_string(i);
          return report;
        }
      }
    }
  }
  report.holds = true;
  return report;
}

double estimate_epsilon0(const MatchingInstance& inst, const std::vector<double>& lambda,
                         const SppSolution& sol) {
  if (!check_gpg(inst, lambda, sol, 0.0).holds) return 0.0;
  if (check_gpg(inst, lambda, sol, 1.0).holds) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    if (check_gpg(inst, lambda, sol, mid).holds) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

std::optional<double> hindsight_opt(const MatchingInstance& inst,
                                    const std::vector<double>& counts,
                                    const BallCertificate* certificate) {
  if (certificate != nullptr) {
    double total = 0.0;
    for (double v : counts) total += v;
    if (total > 0.0) {
      std::vector<double> empirical(counts);
      for (double& v : empirical) v /= total;
      if (tv_distance(empirical, certificate->lambda_bar) <= certificate->radius) {
        double value = 0.0;
        for (int i = 0; i < inst.n; ++i) value += certificate->alpha_star[i] * counts[i];
        return value;
      }
    }
  }
  const LpResult lp = solve_equality_lp(dense_matrix(inst), counts, inst.rewards);
  if (lp.status != LpResult::Status::Optimal) return std::nullopt;
  return lp.objective;
}

std::optional<double> hindsight_opt(const MatchingInstance& inst,
                                    const std::vector<long long>& counts,
                                    const BallCertificate* certificate) {
  std::vector<double> as_double(counts.begin(), counts.end());
  return hindsight_opt(inst, as_double, certificate);
}

}  // namespace sosmatch
