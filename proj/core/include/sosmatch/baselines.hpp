#pragma once

#include <cstdint>
#include <vector>

#include "sosmatch/arrivals.hpp"
#include "sosmatch/instance.hpp"
#include "sosmatch/trace.hpp"

namespace sosmatch {

// ---------------------------------------------------------------------------
// Level-based bin-packing heuristic: state is the count of open bins at each
// fill level, and each item goes wherever the resulting sum of squared level
// counts is smallest.
// ---------------------------------------------------------------------------

struct LevelState {
  std::vector<long long> open;     // open[h] = open bins at fill level h, 0 < h < B
  long long bins_opened = 0;       // every bin ever opened (closed + still open)
  long long volume_packed = 0;     // total item volume placed so far
};

// Fill levels in (0, B) from which no multiset of item sizes tops the bin up
// to exactly B; ascending.
std::vector<int> dead_end_levels(int bin_capacity, const std::vector<int>& sizes);

// Places one item: the candidate moves are "open a new bin" and "add to an
// open bin at level h" for every h with open[h] > 0 and h + size <= B. The
// move minimizing the resulting sum of squared level counts wins; ties go to
// the highest resulting level (closing a bin beats everything at equal cost).
// With `forbid_dead_ends`, moves whose resulting level is a dead end are
// excluded unless every move is, in which case the restriction is waived for
// this item. Returns the resulting level (bin_capacity means a bin closed).
int csirik_place(LevelState& state, int size, int bin_capacity,
                 bool forbid_dead_ends, const std::vector<int>& dead_ends);

// Unused capacity across the open bins (closed bins are exactly full).
double level_waste(const LevelState& state, int bin_capacity);

// Runs the heuristic over a bin-packing arrival stream. The trace has no basis
// and no queue columns; reward is -1 per opened bin, and the waste and bins
// columns carry the packing quality.
Trace simulate_csirik(const MatchingInstance& inst, ArrivalProcess& process,
                      bool forbid_dead_ends, long long record_every);

// ---------------------------------------------------------------------------
// Exact dynamic program for single-queue pairing instances: one queueable
// resource feeding pairwise configurations with nonqueueable resources. The
// only decisions are match-or-pass on nonqueueable arrivals, so the state is
// (steps left, queue length) and the table is exact up to the queue cap.
// ---------------------------------------------------------------------------

struct DpPolicyTable {
  long long horizon = 0;
  int q_cap = 0;
  int onq_resource = -1;
  std::vector<int> nq_resources;   // ascending resource indices
  std::vector<int> nq_config;      // the pairing configuration of each
  std::vector<double> lambda;      // per-resource arrival rates
  std::vector<double> v0;          // V[0][q]: optimal value before step 1
  std::vector<bool> action;        // match decisions, see match()
  std::vector<double> full_v;      // (horizon+1) x (q_cap+1), small runs only
  bool has_full_v = false;

  double value_at_start() const { return v0.empty() ? 0.0 : v0[0]; }
  // Whether the optimal policy matches nonqueueable arrival j at step t
  // (1-based) when the queue held q units just before the arrival. q == 0
  // never matches.
  bool match(long long t, long long q, int j) const;
  double v(long long t, long long q) const;  // requires has_full_v
};

// Builds the table by backward induction. Queue lengths are capped at q_cap
// (transitions above the cap saturate); the cap is far above anything the
// optimal policy reaches at the supported scales. Throws std::invalid_argument
// if the instance is not of the supported shape (exactly one queueable
// resource; every nonqueueable resource in exactly one configuration, pairing
// one unit of it with one unit of the queueable resource; any other
// configuration a discard; no offline resources).
DpPolicyTable dp_policy_build(const MatchingInstance& inst,
                              const std::vector<double>& lambda, long long horizon,
                              int q_cap = 256);

// Reference value computed by plain recursion over the same Bellman equation
// (exponential in horizon; only for tiny cross-check cases).
double dp_value_bruteforce(const MatchingInstance& inst, const std::vector<double>& lambda,
                           long long horizon, int q_cap);

// Runs the tabled policy over an arrival stream. Queue lengths above the cap
// are clamped for lookup (a warning is printed once if that happens).
Trace simulate_dp(const MatchingInstance& inst, ArrivalProcess& process,
                  const DpPolicyTable& table, long long record_every);

// ---------------------------------------------------------------------------
// Naive greedy pool baseline: every unit that can wait (queueable or offline
// inventory) sits in one undifferentiated pool; each arrival completes the
// highest-reward positively-rewarded configuration that the pool plus the
// arrival can fully pay for, ties to the lowest configuration index, and
// otherwise the arrival pools (or is lost if nonqueueable).
// ---------------------------------------------------------------------------

Trace simulate_naive(const MatchingInstance& inst, ArrivalProcess& process,
                     long long record_every);

}  // namespace sosmatch
