#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sosmatch {

// How a resource type enters the system.
//   Offline:            full inventory known up front, injected at a steady
//                       emulated rate by the arrival layer.
//   OnlineQueueable:    arrives over time, may wait in a buffer.
//   OnlineNonqueueable: arrives over time, must be used on arrival or is lost.
enum class ResourceClass { Offline, OnlineQueueable, OnlineNonqueueable };

const char* to_string(ResourceClass c);

// An immutable matching problem: n resource types, d configurations. Column m
// of `multiplicity` says how many units of each resource one match of
// configuration m consumes; completing it earns rewards[m]. Multiplicities are
// 0/1 except in bin-packing mode (no_discard), where general nonnegative
// integers are allowed. Construct via the free functions below or the JSON
// loader, then treat as read-only.
struct MatchingInstance {
  int n = 0;
  std::vector<ResourceClass> classes;            // size n
  std::vector<std::vector<int>> multiplicity;    // n rows x d columns
  std::vector<double> rewards;                   // size d
  bool no_discard = false;
  std::vector<int> discard_config;               // resource -> discard column, -1 if none

  // Bin-packing annotations (empty/0 outside bin-packing mode). Resource i is
  // an item of size item_sizes[i]; every configuration is one bin's contents.
  int bin_capacity = 0;
  std::vector<int> item_sizes;

  int d() const { return n > 0 ? static_cast<int>(multiplicity[0].size()) : 0; }
  int mult(int resource, int config) const { return multiplicity[resource][config]; }

  // Resources with positive multiplicity in `config`, ascending. This ascending
  // order is also the fixed cycle order used by the potential function.
  std::vector<int> support(int config) const;
  int support_size(int config) const;
  bool config_contains(int config, int resource) const {
    return multiplicity[resource][config] > 0;
  }
  bool config_has_nonqueueable(int config) const;
  bool is_discard(int config) const;  // single-resource column with unit multiplicity

  bool has_offline() const;
  bool is_bin_packing() const { return bin_capacity > 0; }

  // Stable content hash (FNV-1a over a canonical serialization); identical
  // instances hash identically across platforms and runs.
  uint64_t hash() const;
};

// Arrival intensities for one experiment. `lambda[i]` is the sampling
// probability for online resources; for offline resources it is the inventory
// rate, i.e. inventory = lambda[i] * horizon. `horizon` is the nominal horizon
// before offline emulation stretches it (equal to the number of simulated
// steps when no offline resources are present).
struct ArrivalRates {
  std::vector<double> lambda;
  long long horizon = 0;
};

// Report-style validation: returns one message per violated invariant, empty
// if the instance (and rates, for the two-argument form) are well formed.
std::vector<std::string> validate(const MatchingInstance& instance);
std::vector<std::string> validate(const MatchingInstance& instance,
                                  const ArrivalRates& rates);

// Builds the matching view of a bin-packing problem: one resource per distinct
// item size, one configuration per multiset of sizes that fills a bin of
// capacity `bin_capacity` exactly (reward -1 per bin). When rejection_reward
// is given, a per-size singleton configuration with that reward is appended,
// modeling packing an item alone / rejecting it. Throws std::invalid_argument
// on empty or oversized size lists or when no exact packing exists.
MatchingInstance binpacking_instance(int bin_capacity, const std::vector<int>& sizes,
                                     std::optional<double> rejection_reward = std::nullopt);

// JSON instance files. Schema (all arrays row-major):
//   {
//     "classes": ["off" | "onq" | "onnq", ...],       // n entries
//     "matrix": [[...], ...],                         // n rows x d columns
//     "rewards": [...],                               // d entries
//     "lambda": [...],                                // n entries
//     "horizon": N,
//     "no_discard": false,                            // optional, default false
//     "bin_capacity": B, "item_sizes": [...]          // optional, bin-packing mode
//   }
struct InstanceFile {
  MatchingInstance instance;
  ArrivalRates rates;
};

InstanceFile load_instance_file(const std::string& path);
std::string instance_to_json(const MatchingInstance& instance, const ArrivalRates& rates);
void save_instance_file(const std::string& path, const MatchingInstance& instance,
                        const ArrivalRates& rates);

}  // namespace sosmatch
