#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sosmatch/instance.hpp"
#include "sosmatch/rng.hpp"

namespace sosmatch {

struct ArrivalEvent {
  long long t = 0;   // 1-based step index
  int resource = 0;  // arriving resource type
};

// A finite stream of arrival events. horizon() is the total number of steps
// the stream will emit; next() returns std::nullopt once exhausted.
// mean_rates() is the per-step arrival frequency of each resource over the
// full stream, which downstream consumers use as the planning rates.
class ArrivalProcess {
 public:
  virtual ~ArrivalProcess() = default;
  virtual std::optional<ArrivalEvent> next() = 0;
  virtual long long horizon() const = 0;
  virtual const std::vector<double>& mean_rates() const = 0;
  virtual const char* name() const = 0;
};

// One i.i.d. draw from `rates.lambda` per step for `rates.horizon` steps.
// Requires an instance without offline resources (their inventory does not
// arrive by sampling; use make_emulated instead).
std::unique_ptr<ArrivalProcess> make_iid(const MatchingInstance& instance,
                                         const ArrivalRates& rates, uint64_t seed);

// Interleaves offline inventory into the online stream so that a single
// unified sequence serves both: the horizon stretches to
// T = horizon * (1 + sum of offline lambda), each offline resource arrives
// exactly lambda[i] * rates.horizon times, and each step picks the most
// behind-schedule class (offline resources individually, online arrivals as
// one pooled class) by largest deficit against its prorated target. Ties
// prefer the lowest offline index and fall back to the online pool last. The
// schedule is computed in exact integer arithmetic, so the within-run
// discrepancy bounds and the terminal inventories are exact, not approximate.
// When the picked class is the online pool, the concrete resource is an
// i.i.d. draw from the online entries of lambda.
std::unique_ptr<ArrivalProcess> make_emulated(const MatchingInstance& instance,
                                              const ArrivalRates& rates, uint64_t seed);

// The stretched horizon make_emulated will use (equals rates.horizon when the
// instance has no offline resources).
long long emulated_horizon(const MatchingInstance& instance, const ArrivalRates& rates);

// An i.i.d. sequence reshuffled uniformly within consecutive blocks of
// `block_size` steps. Same constraints as make_iid; block_size >= 1. With
// block_size == 1 this is exactly make_iid.
std::unique_ptr<ArrivalProcess> make_locally_permuted(const MatchingInstance& instance,
                                                      const ArrivalRates& rates,
                                                      long long block_size, uint64_t seed);

// Replays a fixed sequence of resource indices (0-based). mean_rates() is the
// empirical frequency of each resource in the sequence.
std::unique_ptr<ArrivalProcess> make_scripted(const MatchingInstance& instance,
                                              std::vector<int> sequence);

// Reads one 0-based resource index per line (blank lines and '#' comments
// ignored) and wraps it in make_scripted.
std::unique_ptr<ArrivalProcess> make_scripted_from_file(const MatchingInstance& instance,
                                                        const std::string& path);

// Replays the emulated schedule for (instance, rates, seed) and audits it:
// every class deficit must stay within [-n_off, 1] at every step, and every
// emulated class must land exactly on its integer target at the end.
struct DiscrepancyReport {
  bool within_bounds = true;
  bool terminal_exact = true;
  double worst_upper = 0.0;  // max over steps/classes of count - target rate * t
  double worst_lower = 0.0;  // min over steps/classes of the same quantity
};

DiscrepancyReport discrepancy_bounds_check(const MatchingInstance& instance,
                                           const ArrivalRates& rates, uint64_t seed);

}  // namespace sosmatch
