#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sosmatch/arrivals.hpp"
#include "sosmatch/instance.hpp"
#include "sosmatch/trace.hpp"

namespace sosmatch {

// Mutable per-run state of the commit-to-configuration simulation. Queues are
// kept only for the basis configurations (slot k is configuration basis[k]) and
// only for the resources in each configuration's support, in ascending resource
// order — that ascending order is also the fixed cycle used by the potential.
//
// Two queue families per (slot, support position):
//   virtual queue  vq = committed − virtual_matches * multiplicity  (may go
//     negative for offline resources and in configurations containing a
//     nonqueueable resource);
//   true queue     tq = committed − true_matches * multiplicity  (negative only
//     for offline resources, whose units may be spent before they arrive).
struct SimState {
  const MatchingInstance* inst = nullptr;

  std::vector<int> basis;                      // ascending configuration indices
  std::vector<std::vector<int>> support;       // slot -> resources, ascending
  std::vector<std::vector<int>> mult;          // slot -> multiplicity per support pos
  std::vector<std::vector<std::pair<int, int>>> slots_of_resource;  // i -> (slot, pos)

  long long t = 0;
  std::vector<long long> arrivals;             // per resource
  std::vector<long long> x_true;               // per slot
  std::vector<long long> x_virtual;            // per slot
  std::vector<std::vector<long long>> vq;      // virtual queues
  std::vector<std::vector<long long>> tq;      // true queues
  std::vector<std::vector<long long>> min_vq;  // running min of vq over all steps
  std::vector<long long> offline_budget;       // per resource; 0 for online
  std::vector<long long> offline_used;         // per resource: sum of x_true * mult
  double phi = 0.0;                            // incrementally maintained potential

  int slot_of_config(int config) const;        // -1 if config not in basis
  double true_reward() const;                  // sum of rewards over true matches
  double virtual_reward() const;               // sum of rewards over virtual matches
};

// Fresh state for a run: offline budgets are mean_rates[i] * horizon rounded to
// the nearest integer for offline resources.
SimState make_sim_state(const MatchingInstance& inst, const std::vector<int>& basis,
                        const std::vector<double>& mean_rates, long long horizon);

// Cyclic sum-of-squares potential of one configuration: squared differences of
// consecutive scaled queues (queue / multiplicity) around the cycle, in the
// given order. A single-resource configuration always scores 0.
double phi_config(const std::vector<long long>& queues, const std::vector<int>& mults);

// Full potential recomputed from scratch (the incremental state.phi is
// cross-checked against this at checkpoints).
double phi_total(const SimState& state);

// Change in the configuration's potential if `resource` were committed to
// `config` right now. O(1) closed form on the cyclic neighbors; whether the
// commit completes a virtual match does not matter because the completion
// shifts all scaled queues of the configuration by the same amount.
double delta_phi(const SimState& state, int config, int resource);

// As above, for a raw queue vector in support order (test entry point).
double delta_phi_config(const std::vector<long long>& queues, const std::vector<int>& mults,
                        int pos);

// Whether committing `resource` to `config` completes a virtual match:
// always for a nonqueueable arrival; for configurations containing no
// nonqueueable resource, exactly when the virtual queues plus the arrival cover
// one full match. Configurations with a nonqueueable resource never complete on
// other arrivals (the nonqueueable unit cannot wait in a queue).
// Single-resource discard configurations always complete.
bool virtual_feasible(const SimState& state, int config, int resource);

// Whether the completed match is physically realizable: every offline resource
// in the configuration must fit within its global remaining budget (units may
// be used before they arrive — the budget is the whole-horizon inventory), and
// every online resource must have enough units in this configuration's true
// queue, counting the arrival itself. Discards are always realizable.
bool true_feasible(const SimState& state, int config, int resource);

// Commits the arrival: bumps the committed count, completes the virtual match
// when feasible, and nests the true-match check inside — a commit whose virtual
// match fires without a realizable true match is lost for good; there is no
// later catch-up.
struct CommitResult {
  bool virtual_fired = false;
  bool true_fired = false;
  double phi_before = 0.0;
  double phi_after = 0.0;
};
CommitResult apply_commit(SimState& state, int resource, int config);

class Policy {
 public:
  virtual ~Policy() = default;
  // Returns the configuration (must be a basis configuration containing the
  // resource) the arrival is committed to.
  virtual int choose(const SimState& state, int resource) = 0;
  virtual const char* name() const = 0;
};

// The greedy policy: commit to the eligible basis configuration with the
// smallest potential change, ties to the lowest configuration index.
std::unique_ptr<Policy> make_ss_policy();

struct StepRecord {
  long long t = 0;
  int resource = 0;
  int config = 0;
  CommitResult commit;
};
using StepObserver = std::function<void(const StepRecord&, const SimState&)>;

struct SimOptions {
  long long record_every = 1;   // trace row cadence; the final step always records
  long long check_every = 0;    // full invariant audit cadence; 0 = only at the end
  StepObserver observer;        // called after every step when set
  bool keep_rows = true;        // false: run for the observer only, store no rows
};

// Runs the process to exhaustion under the policy, recording a trace. Throws
// std::runtime_error if the policy returns a configuration outside the basis or
// not containing the arrival, and on any failed invariant audit.
Trace simulate(const MatchingInstance& inst, const std::vector<int>& basis,
               ArrivalProcess& process, Policy& policy, const SimOptions& opts);

// Audits every structural invariant of the state (match-count ordering, queue
// signs, conservation, the some-queue-short property, incremental phi vs
// recomputation); returns one message per violation.
std::vector<std::string> check_state_invariants(const SimState& state);

// Unused capacity in the open partial bins of one bin-packing configuration:
// items in the true queues sit in the fewest bins the pattern allows (each open
// bin is filled before the next opens), so the bin count is the largest
// ceil(queue / multiplicity) over the pattern's sizes.
double config_waste(const MatchingInstance& inst, int config,
                    const std::vector<long long>& true_queues);

// Total waste over basis configurations plus the physical bin count
// (completed patterns + open bins), for bin-packing instances.
struct BinStats {
  double waste = 0.0;
  long long bins = 0;
};
BinStats bin_stats(const SimState& state);

}  // namespace sosmatch
