#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sosmatch/instance.hpp"

namespace sosmatch {

// Solution of the static planning LP
//     maximize  r'x   subject to  M x = lambda,  x >= 0,
// whose optimal basis drives every runtime policy decision.
struct SppSolution {
  std::vector<double> x_star;     // size d, optimal activity levels
  std::vector<int> basis;         // n configuration indices, ascending
  std::vector<double> alpha_star; // size n, dual prices from the basis
  double opt_value = 0.0;
};

// Solves the planning LP with a deterministic dense simplex (Bland's rule).
// Throws std::runtime_error if the LP is infeasible, unbounded, or its
// constraint matrix is rank-deficient (no all-configuration basis exists).
SppSolution solve_spp(const MatchingInstance& instance, const std::vector<double>& lambda);

// Dual prices for a given ordered basis: solves M_B' alpha = r_B.
std::vector<double> dual_from_basis(const MatchingInstance& instance,
                                    const std::vector<int>& basis);

// Outcome of a general-position-gap check at one radius.
struct GpgReport {
  bool holds = false;
  double epsilon = 0.0;           // the radius that was checked
  std::string failing_direction;  // human-readable witness when holds == false
};

// Checks that the optimal basis stays uniquely optimal on the whole
// total-variation ball of radius `epsilon` around lambda. Two parts:
//  - strictness: every basis coordinate of x* exceeds 1e-7 (a coordinate forced
//    to zero by lambda itself -- a discard column whose resource has zero
//    rate -- is exempt);
//  - ball coverage: for every ordered resource pair (i, j) the extreme
//    perturbation moving min(epsilon, lambda_j) mass from j to i keeps the
//    basis solution nonnegative. Dual feasibility is radius-independent, so
//    these vertex checks certify optimality across the ball.
GpgReport check_gpg(const MatchingInstance& instance, const std::vector<double>& lambda,
                    const SppSolution& solution, double epsilon);

// Largest radius at which check_gpg holds, located by bisection on [0, 1] to
// absolute precision 1e-4. Returns 0 when even the degenerate radius fails.
double estimate_epsilon0(const MatchingInstance& instance, const std::vector<double>& lambda,
                         const SppSolution& solution);

// Certificate that lets hindsight evaluation skip the LP: if counts/t lies in
// the TV ball of `radius` around `lambda_bar`, the optimum is alpha'counts.
struct BallCertificate {
  std::vector<double> lambda_bar;
  std::vector<double> alpha_star;
  double radius = 0.0;
};

// Offline optimum for a realized arrival-count vector: value of the planning
// LP with right-hand side `counts`. Returns nullopt when that LP is infeasible
// (possible only for no-discard instances whose counts leave the pattern
// cone). With a certificate, in-ball counts take the O(n) fast path.
std::optional<double> hindsight_opt(const MatchingInstance& instance,
                                    const std::vector<double>& counts,
                                    const BallCertificate* certificate = nullptr);
std::optional<double> hindsight_opt(const MatchingInstance& instance,
                                    const std::vector<long long>& counts,
                                    const BallCertificate* certificate = nullptr);

// Total-variation distance between two nonnegative vectors of equal length.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sosmatch
