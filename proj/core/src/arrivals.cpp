#include "sosmatch/arrivals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sosmatch {

namespace {

void require_online_only(const MatchingInstance& inst, const char* process) {
  if (inst.has_offline()) {
    throw std::invalid_argument(std::string(process) +
                                ": instance has offline resources; their inventory must be "
                                "scheduled with the emulated process");
  }
}

void require_rates_shape(const MatchingInstance& inst, const ArrivalRates& rates,
                         const char* process) {
  if (static_cast<int>(rates.lambda.size()) != inst.n) {
    throw std::invalid_argument(std::string(process) + ": lambda length != n");
  }
  if (rates.horizon < 1) {
    throw std::invalid_argument(std::string(process) + ": horizon must be >= 1");
  }
}

class IidProcess final : public ArrivalProcess {
 public:
  IidProcess(std::vector<double> lambda, long long horizon, uint64_t seed)
      : lambda_(std::move(lambda)), horizon_(horizon), rng_(seed) {}

  std::optional<ArrivalEvent> next() override {
    if (t_ >= horizon_) return std::nullopt;
    ++t_;
    return ArrivalEvent{t_, rng_.sample_weighted(lambda_)};
  }

  long long horizon() const override { return horizon_; }
  const std::vector<double>& mean_rates() const override { return lambda_; }
  const char* name() const override { return "iid"; }

 private:
  std::vector<double> lambda_;
  long long horizon_ = 0;
  long long t_ = 0;
  Rng rng_;
};

// Integer schedule data shared by the emulated process and its auditor.
// Class k < offline.size() is offline resource offline[k]; the last class is
// the pooled online arrival. target[k] is the exact number of arrivals class k
// makes over the stretched horizon `total`.
struct EmulationPlan {
  std::vector<int> offline;         // offline resource indices, ascending
  std::vector<long long> target;    // per class, size offline.size() + 1
  long long base = 0;               // nominal horizon before stretching
  long long total = 0;              // stretched horizon = sum of targets
  std::vector<double> online_weights;  // lambda restricted to online entries
  std::vector<double> mean_rates;      // per-resource frequency over `total`
};

EmulationPlan build_emulation_plan(const MatchingInstance& inst, const ArrivalRates& rates) {
  require_rates_shape(inst, rates, "emulated arrivals");
  EmulationPlan plan;
  plan.base = rates.horizon;
  plan.online_weights.assign(inst.n, 0.0);
  for (int i = 0; i < inst.n; ++i) {
    if (inst.classes[i] == ResourceClass::Offline) {
      const double inventory = rates.lambda[i] * static_cast<double>(rates.horizon);
      const long long units = std::llround(inventory);
      if (std::abs(inventory - static_cast<double>(units)) > 1e-6) {
        throw std::invalid_argument(
            "emulated arrivals: offline inventory lambda[" + std::to_string(i) +
            "] * horizon is not an integer");
      }
      plan.offline.push_back(i);
      plan.target.push_back(units);
    } else {
      plan.online_weights[i] = rates.lambda[i];
    }
  }
  plan.target.push_back(plan.base);  // pooled online class, one arrival per nominal step
  plan.total = 0;
  for (long long units : plan.target) plan.total += units;

  plan.mean_rates.assign(inst.n, 0.0);
  for (size_t k = 0; k < plan.offline.size(); ++k) {
    plan.mean_rates[plan.offline[k]] =
        static_cast<double>(plan.target[k]) / static_cast<double>(plan.total);
  }
  for (int i = 0; i < inst.n; ++i) {
    if (inst.classes[i] != ResourceClass::Offline) {
      plan.mean_rates[i] = rates.lambda[i] * static_cast<double>(plan.base) /
                           static_cast<double>(plan.total);
    }
  }
  return plan;
}

// Picks the next class of the deficit schedule. Deficits are compared as exact
// integers scaled by `total`: class k is behind schedule when
// count[k] * total - target[k] * (t - 1) is minimal. The scan order (offline
// ascending, online pool last) is the tie-break.
int pick_scheduled_class(const std::vector<long long>& counts,
                         const std::vector<long long>& targets, long long total,
                         long long t) {
  int best = -1;
  long long best_deficit = 0;
  for (size_t k = 0; k < counts.size(); ++k) {
    const long long deficit = counts[k] * total - targets[k] * (t - 1);
    if (best < 0 || deficit < best_deficit) {
      best = static_cast<int>(k);
      best_deficit = deficit;
    }
  }
  return best;
}

class EmulatedProcess final : public ArrivalProcess {
 public:
  EmulatedProcess(EmulationPlan plan, uint64_t seed)
      : plan_(std::move(plan)),
        counts_(plan_.target.size(), 0),
        rng_(seed),
        has_online_(false) {
    for (double w : plan_.online_weights) has_online_ |= (w > 0.0);
  }

  std::optional<ArrivalEvent> next() override {
    if (t_ >= plan_.total) return std::nullopt;
    ++t_;
    const int cls = pick_scheduled_class(counts_, plan_.target, plan_.total, t_);
    ++counts_[cls];
    int resource;
    if (cls < static_cast<int>(plan_.offline.size())) {
      resource = plan_.offline[cls];
    } else {
      if (!has_online_) {
        throw std::logic_error("emulated arrivals: online class scheduled with zero mass");
      }
      resource = rng_.sample_weighted(plan_.online_weights);
    }
    return ArrivalEvent{t_, resource};
  }

  long long horizon() const override { return plan_.total; }
  const std::vector<double>& mean_rates() const override { return plan_.mean_rates; }
  const char* name() const override { return "emulated"; }

 private:
  EmulationPlan plan_;
  std::vector<long long> counts_;
  long long t_ = 0;
  Rng rng_;
  bool has_online_;
};

class ScriptedProcess final : public ArrivalProcess {
 public:
  ScriptedProcess(std::vector<int> sequence, int n, const char* name)
      : sequence_(std::move(sequence)), name_(name) {
    for (int v : sequence_) {
      if (v < 0 || v >= n) {
        throw std::invalid_argument(std::string(name_) + ": resource index " +
                                    std::to_string(v) + " out of range [0, " +
                                    std::to_string(n) + ")");
      }
    }
    rates_.assign(n, 0.0);
    if (!sequence_.empty()) {
      for (int v : sequence_) rates_[v] += 1.0;
      for (double& r : rates_) r /= static_cast<double>(sequence_.size());
    }
  }

  std::optional<ArrivalEvent> next() override {
    if (t_ >= static_cast<long long>(sequence_.size())) return std::nullopt;
    const int resource = sequence_[t_];
    ++t_;
    return ArrivalEvent{t_, resource};
  }

  long long horizon() const override { return static_cast<long long>(sequence_.size()); }
  const std::vector<double>& mean_rates() const override { return rates_; }
  const char* name() const override { return name_; }

 private:
  std::vector<int> sequence_;
  std::vector<double> rates_;
  long long t_ = 0;
  const char* name_;
};

}  // namespace

std::unique_ptr<ArrivalProcess> make_iid(const MatchingInstance& inst,
                                         const ArrivalRates& rates, uint64_t seed) {
  require_online_only(inst, "iid arrivals");
  require_rates_shape(inst, rates, "iid arrivals");
  return std::make_unique<IidProcess>(rates.lambda, rates.horizon, seed);
}

std::unique_ptr<ArrivalProcess> make_emulated(const MatchingInstance& inst,
                                              const ArrivalRates& rates, uint64_t seed) {
  return std::make_unique<EmulatedProcess>(build_emulation_plan(inst, rates), seed);
}

long long emulated_horizon(const MatchingInstance& inst, const ArrivalRates& rates) {
  return build_emulation_plan(inst, rates).total;
}

std::unique_ptr<ArrivalProcess> make_locally_permuted(const MatchingInstance& inst,
                                                      const ArrivalRates& rates,
                                                      long long block_size, uint64_t seed) {
  require_online_only(inst, "locally permuted arrivals");
  require_rates_shape(inst, rates, "locally permuted arrivals");
  if (block_size < 1) {
    throw std::invalid_argument("locally permuted arrivals: block_size must be >= 1");
  }
  Rng rng(seed);
  std::vector<int> sequence(static_cast<size_t>(rates.horizon));
  for (auto& v : sequence) v = rng.sample_weighted(rates.lambda);
  for (long long start = 0; start < rates.horizon; start += block_size) {
    const long long end = std::min(start + block_size, rates.horizon);
    for (long long i = end - 1; i > start; --i) {
      const long long j = start + static_cast<long long>(rng.next_below(
                                      static_cast<uint64_t>(i - start + 1)));
      std::swap(sequence[static_cast<size_t>(i)], sequence[static_cast<size_t>(j)]);
    }
  }
  return std::make_unique<ScriptedProcess>(std::move(sequence), inst.n, "locally_permuted");
}

std::unique_ptr<ArrivalProcess> make_scripted(const MatchingInstance& inst,
                                              std::vector<int> sequence) {
  return std::make_unique<ScriptedProcess>(std::move(sequence), inst.n, "scripted");
}

std::unique_ptr<ArrivalProcess> make_scripted_from_file(const MatchingInstance& inst,
                                                        const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open arrival script: " + path);
  }
  std::vector<int> sequence;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    std::string token;
    if (!(row >> token)) continue;
    try {
      sequence.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw std::runtime_error("bad arrival script line " + std::to_string(line_no) +
                               " in " + path + ": '" + token + "'");
    }
  }
  return make_scripted(inst, std::move(sequence));
}

DiscrepancyReport discrepancy_bounds_check(const MatchingInstance& inst,
                                           const ArrivalRates& rates, uint64_t seed) {
  const EmulationPlan plan = build_emulation_plan(inst, rates);
  EmulatedProcess process(plan, seed);
  const size_t classes = plan.target.size();
  const long long n_off = static_cast<long long>(plan.offline.size());
  std::vector<long long> counts(classes, 0);
  // resource index -> class index (online resources all map to the pool).
  std::vector<int> class_of(inst.n, static_cast<int>(classes) - 1);
  for (size_t k = 0; k < plan.offline.size(); ++k) class_of[plan.offline[k]] = static_cast<int>(k);

  DiscrepancyReport report;
  while (auto event = process.next()) {
    ++counts[class_of[event->resource]];
    for (size_t k = 0; k < classes; ++k) {
      // Scaled deviation: counts[k] - target_rate_k * t, times plan.total.
      const long long scaled = counts[k] * plan.total - plan.target[k] * event->t;
      const double deviation = static_cast<double>(scaled) / static_cast<double>(plan.total);
      report.worst_upper = std::max(report.worst_upper, deviation);
      report.worst_lower = std::min(report.worst_lower, deviation);
      if (scaled > plan.total || scaled < -n_off * plan.total) report.within_bounds = false;
    }
  }
  for (size_t k = 0; k < classes; ++k) {
    if (counts[k] != plan.target[k]) report.terminal_exact = false;
  }
  return report;
}

}  // namespace sosmatch
