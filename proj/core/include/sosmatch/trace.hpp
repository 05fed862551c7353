#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace sosmatch {

// One simulation's recorded history. The CSV serialization is deterministic
// byte for byte (fixed column order, shortest round-trip float formatting), so
// identical (configuration, seed) runs produce identical files.
struct TraceHeader {
  std::string instance_label = "custom";  // preset name or instance file path
  uint64_t instance_hash = 0;
  std::string policy;
  std::string process;
  uint64_t seed = 0;
  long long horizon = 0;
  long long record_every = 1;
  std::vector<int> basis;                 // empty for level-/pool-based policies
  std::string sigma = "ascending-support";
  double tau = 0.0;                       // smoothing window (reporting only)
  std::vector<double> lambda_bar;         // planning rates over the run
  bool has_waste = false;                 // bin-packing runs carry waste + bins
  // Identity of the queue columns, flattened (configuration-major, support
  // ascending): (resource, configuration) per column.
  std::vector<std::pair<int, int>> queue_cols;
};

struct TraceRow {
  long long t = 0;
  int arrival = -1;
  int committed_config = -1;
  double true_reward = 0.0;
  double virtual_reward = 0.0;
  double hindsight_opt = std::numeric_limits<double>::quiet_NaN();
  double regret = std::numeric_limits<double>::quiet_NaN();
  double phi = 0.0;
  std::vector<long long> arrival_counts;  // per resource
  std::vector<long long> x_true;          // per basis configuration
  std::vector<long long> x_virtual;       // per basis configuration
  std::vector<long long> min_vq;          // per queue column: running min
  std::vector<long long> vq;              // per queue column: current value
  double waste = std::numeric_limits<double>::quiet_NaN();  // bin packing only
  long long bins = 0;  // physical bins: completed + open (bin packing only)
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRow> rows;

  // Row with the largest t <= target (index), or -1 if none.
  int row_at_or_before(long long target) const;
};

void write_trace(const Trace& trace, const std::string& path);
Trace read_trace(const std::string& path);

}  // namespace sosmatch
