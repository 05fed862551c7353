#include "sosmatch/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sosmatch {
namespace {

// Position of `resource` in slot's ascending support, -1 if absent.
int find_pos(const std::vector<int>& support, int resource) {
  auto it = std::lower_bound(support.begin(), support.end(), resource);
  if (it != support.end() && *it == resource)
    return static_cast<int>(it - support.begin());
  return -1;
}

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("engine: " + msg);
}

}  // namespace

int SimState::slot_of_config(int config) const {
  auto it = std::lower_bound(basis.begin(), basis.end(), config);
  if (it != basis.end() && *it == config)
    return static_cast<int>(it - basis.begin());
  return -1;
}

double SimState::true_reward() const {
  double sum = 0.0;
  for (size_t k = 0; k < basis.size(); ++k)
    sum += inst->rewards[basis[k]] * static_cast<double>(x_true[k]);
  return sum;
}

double SimState::virtual_reward() const {
  double sum = 0.0;
  for (size_t k = 0; k < basis.size(); ++k)
    sum += inst->rewards[basis[k]] * static_cast<double>(x_virtual[k]);
  return sum;
}

SimState make_sim_state(const MatchingInstance& inst, const std::vector<int>& basis,
                        const std::vector<double>& mean_rates, long long horizon) {
  if (basis.empty()) fail("empty basis");
  if (static_cast<int>(mean_rates.size()) != inst.n)
    fail("mean_rates size does not match resource count");
  for (size_t k = 0; k < basis.size(); ++k) {
    if (basis[k] < 0 || basis[k] >= inst.d())
      fail("basis configuration index out of range: " + std::to_string(basis[k]));
    if (k > 0 && basis[k] <= basis[k - 1])
      fail("basis configuration indices must be strictly ascending");
  }

  SimState s;
  s.inst = &inst;
  s.basis = basis;
  const size_t slots = basis.size();
  s.support.resize(slots);
  s.mult.resize(slots);
  s.vq.resize(slots);
  s.tq.resize(slots);
  s.min_vq.resize(slots);
  s.x_true.assign(slots, 0);
  s.x_virtual.assign(slots, 0);
  s.slots_of_resource.resize(inst.n);
  for (size_t k = 0; k < slots; ++k) {
    s.support[k] = inst.support(basis[k]);
    if (s.support[k].empty())
      fail("basis configuration " + std::to_string(basis[k]) + " has empty support");
    s.mult[k].reserve(s.support[k].size());
    for (int i : s.support[k]) {
      s.mult[k].push_back(inst.mult(i, basis[k]));
      s.slots_of_resource[i].emplace_back(static_cast<int>(k),
                                          static_cast<int>(s.mult[k].size()) - 1);
    }
    s.vq[k].assign(s.support[k].size(), 0);
    s.tq[k].assign(s.support[k].size(), 0);
    s.min_vq[k].assign(s.support[k].size(), 0);
  }
  s.arrivals.assign(inst.n, 0);
  s.offline_budget.assign(inst.n, 0);
  s.offline_used.assign(inst.n, 0);
  for (int i = 0; i < inst.n; ++i)
    if (inst.classes[i] == ResourceClass::Offline)
      s.offline_budget[i] =
          std::llround(mean_rates[i] * static_cast<double>(horizon));
  return s;
}

double phi_config(const std::vector<long long>& queues, const std::vector<int>& mults) {
  const size_t ell = queues.size();
  if (ell < 2) return 0.0;
  double sum = 0.0;
  for (size_t k = 0; k < ell; ++k) {
    const size_t prev = (k + ell - 1) % ell;
    const double diff = static_cast<double>(queues[k]) / mults[k] -
                        static_cast<double>(queues[prev]) / mults[prev];
    sum += diff * diff;
  }
  return sum;
}

double phi_total(const SimState& state) {
  double sum = 0.0;
  for (size_t k = 0; k < state.basis.size(); ++k)
    sum += phi_config(state.vq[k], state.mult[k]);
  return sum;
}

double delta_phi_config(const std::vector<long long>& queues,
                        const std::vector<int>& mults, int pos) {
  const size_t ell = queues.size();
  if (pos < 0 || static_cast<size_t>(pos) >= ell)
    fail("delta_phi position out of range");
  double delta = 0.0;
  if (ell >= 2) {
    const size_t p = static_cast<size_t>(pos);
    const size_t prev = (p + ell - 1) % ell;
    const size_t next = (p + 1) % ell;
    const double u = 1.0 / mults[p];
    const double di = static_cast<double>(queues[p]) / mults[p];
    const double dp = static_cast<double>(queues[prev]) / mults[prev];
    const double dn = static_cast<double>(queues[next]) / mults[next];
    delta = 2.0 * u * (2.0 * di - dp - dn) + 2.0 * u * u;
  }
#ifdef SOSMATCH_DEBUG_CHECKS
  {
    std::vector<long long> bumped = queues;
    bumped[static_cast<size_t>(pos)] += 1;
    const double direct = phi_config(bumped, mults) - phi_config(queues, mults);
    if (std::fabs(direct - delta) > 1e-9)
      fail("incremental potential change disagrees with recomputation");
  }
#endif
  return delta;
}

double delta_phi(const SimState& state, int config, int resource) {
  const int slot = state.slot_of_config(config);
  if (slot < 0) fail("configuration not in basis");
  const int pos = find_pos(state.support[slot], resource);
  if (pos < 0) fail("resource not in configuration support");
  return delta_phi_config(state.vq[slot], state.mult[slot], pos);
}

bool virtual_feasible(const SimState& state, int config, int resource) {
  const MatchingInstance& inst = *state.inst;
  if (inst.classes[resource] == ResourceClass::OnlineNonqueueable) return true;
  if (inst.config_has_nonqueueable(config)) return false;
  const int slot = state.slot_of_config(config);
  if (slot < 0) fail("configuration not in basis");
  const auto& support = state.support[slot];
  for (size_t p = 0; p < support.size(); ++p) {
    const long long have =
        state.vq[slot][p] + (support[p] == resource ? 1 : 0);
    if (have < state.mult[slot][p]) return false;
  }
  return true;
}

bool true_feasible(const SimState& state, int config, int resource) {
  const MatchingInstance& inst = *state.inst;
  const int slot = state.slot_of_config(config);
  if (slot < 0) fail("configuration not in basis");
  const auto& support = state.support[slot];
  for (size_t p = 0; p < support.size(); ++p) {
    const int i = support[p];
    const long long need = state.mult[slot][p];
    if (inst.classes[i] == ResourceClass::Offline) {
      // Whole-horizon inventory: units may be spent before they arrive, but
      // total consumption can never exceed the inventory.
      if (state.offline_used[i] + need > state.offline_budget[i]) return false;
    } else {
      const long long have = state.tq[slot][p] + (i == resource ? 1 : 0);
      if (have < need) return false;
    }
  }
  return true;
}

CommitResult apply_commit(SimState& state, int resource, int config) {
  const MatchingInstance& inst = *state.inst;
  const int slot = state.slot_of_config(config);
  if (slot < 0) fail("commit to configuration outside the basis");
  const int pos = find_pos(state.support[slot], resource);
  if (pos < 0) fail("commit of a resource the configuration does not use");

  CommitResult res;
  res.phi_before = state.phi;
  // Feasibility is evaluated on the pre-commit state (the arrival itself is
  // accounted for inside the predicates). A commit whose virtual match fires
  // without a realizable true match is lost permanently.
  res.virtual_fired = virtual_feasible(state, config, resource);
  res.true_fired = res.virtual_fired && true_feasible(state, config, resource);
  const double dphi = delta_phi(state, config, resource);

  state.arrivals[resource] += 1;
  state.vq[slot][pos] += 1;
  state.tq[slot][pos] += 1;
  if (res.virtual_fired) {
    state.x_virtual[slot] += 1;
    for (size_t p = 0; p < state.support[slot].size(); ++p)
      state.vq[slot][p] -= state.mult[slot][p];
  }
  if (res.true_fired) {
    state.x_true[slot] += 1;
    for (size_t p = 0; p < state.support[slot].size(); ++p) {
      state.tq[slot][p] -= state.mult[slot][p];
      const int i = state.support[slot][p];
      if (inst.classes[i] == ResourceClass::Offline)
        state.offline_used[i] += state.mult[slot][p];
    }
  } else if (inst.classes[resource] == ResourceClass::OnlineNonqueueable) {
    // A nonqueueable unit exists only at its arrival instant: if no true match
    // fires right now, the unit evaporates instead of waiting in the queue.
    state.tq[slot][pos] -= 1;
  }
  state.phi += dphi;
  for (size_t p = 0; p < state.support[slot].size(); ++p)
    state.min_vq[slot][p] = std::min(state.min_vq[slot][p], state.vq[slot][p]);

  res.phi_after = state.phi;
  return res;
}

namespace {

class SsPolicy final : public Policy {
 public:
  int choose(const SimState& state, int resource) override {
    const auto& slots = state.slots_of_resource[resource];
    if (slots.empty())
      fail("no basis configuration contains resource " + std::to_string(resource));
    int best_config = -1;
    double best = std::numeric_limits<double>::infinity();
    // Slots are visited in ascending configuration order, and a strict
    // improvement is required to switch, so ties resolve to the lowest
    // configuration index.
    for (auto [slot, pos] : slots) {
      const double score =
          delta_phi_config(state.vq[slot], state.mult[slot], pos);
      if (score < best) {
        best = score;
        best_config = state.basis[slot];
      }
    }
    return best_config;
  }
  const char* name() const override { return "ss"; }
};

}  // namespace

std::unique_ptr<Policy> make_ss_policy() { return std::make_unique<SsPolicy>(); }

Trace simulate(const MatchingInstance& inst, const std::vector<int>& basis,
               ArrivalProcess& process, Policy& policy, const SimOptions& opts) {
  const long long horizon = process.horizon();
  SimState state = make_sim_state(inst, basis, process.mean_rates(), horizon);

  Trace trace;
  trace.header.policy = policy.name();
  trace.header.process = process.name();
  trace.header.horizon = horizon;
  trace.header.record_every = std::max<long long>(1, opts.record_every);
  trace.header.basis = basis;
  trace.header.lambda_bar = process.mean_rates();
  trace.header.instance_hash = inst.hash();
  trace.header.has_waste = inst.is_bin_packing();
  for (size_t k = 0; k < state.basis.size(); ++k)
    for (int i : state.support[k])
      trace.header.queue_cols.emplace_back(i, state.basis[k]);

  const long long rec = trace.header.record_every;
  long long chk = opts.check_every;
#ifdef SOSMATCH_DEBUG_CHECKS
  if (chk <= 0) chk = 1;
#endif

  auto audit = [&](long long step) {
    std::vector<std::string> problems = check_state_invariants(state);
    if (!problems.empty()) {
      std::ostringstream msg;
      msg << "invariant audit failed at step " << step << ":";
      for (const std::string& p : problems) msg << " [" << p << "]";
      fail(msg.str());
    }
  };

  while (std::optional<ArrivalEvent> ev = process.next()) {
    const int config = policy.choose(state, ev->resource);
    const int slot = state.slot_of_config(config);
    if (slot < 0)
      fail("policy chose configuration " + std::to_string(config) +
           ", which is not in the basis");
    if (find_pos(state.support[slot], ev->resource) < 0)
      fail("policy chose configuration " + std::to_string(config) +
           ", which does not use resource " + std::to_string(ev->resource));

    const CommitResult commit = apply_commit(state, ev->resource, config);
    state.t = ev->t;

    if (opts.observer) {
      StepRecord record{ev->t, ev->resource, config, commit};
      opts.observer(record, state);
    }
    if (chk > 0 && ev->t % chk == 0) audit(ev->t);

    if (opts.keep_rows && (ev->t % rec == 0 || ev->t == horizon)) {
      TraceRow row;
      row.t = ev->t;
      row.arrival = ev->resource;
      row.committed_config = config;
      row.true_reward = state.true_reward();
      row.virtual_reward = state.virtual_reward();
      row.phi = state.phi;
      row.arrival_counts = state.arrivals;
      row.x_true = state.x_true;
      row.x_virtual = state.x_virtual;
      row.min_vq.reserve(trace.header.queue_cols.size());
      row.vq.reserve(trace.header.queue_cols.size());
      for (size_t k = 0; k < state.basis.size(); ++k) {
        row.min_vq.insert(row.min_vq.end(), state.min_vq[k].begin(),
                          state.min_vq[k].end());
        row.vq.insert(row.vq.end(), state.vq[k].begin(), state.vq[k].end());
      }
      if (trace.header.has_waste) {
        const BinStats stats = bin_stats(state);
        row.waste = stats.waste;
        row.bins = stats.bins;
      }
      trace.rows.push_back(std::move(row));
    }
  }

  if (state.t != horizon)
    fail("arrival process ended at step " + std::to_string(state.t) +
         ", expected " + std::to_string(horizon));
  if (horizon > 0) audit(horizon);
  return trace;
}

std::vector<std::string> check_state_invariants(const SimState& state) {
  std::vector<std::string> problems;
  const MatchingInstance& inst = *state.inst;
  auto report = [&problems](const std::string& msg) { problems.push_back(msg); };

  long long total_arrivals = 0;
  for (long long a : state.arrivals) total_arrivals += a;
  if (total_arrivals != state.t)
    report("arrival counts sum to " + std::to_string(total_arrivals) +
           " but step counter is " + std::to_string(state.t));

  for (size_t k = 0; k < state.basis.size(); ++k) {
    const int m = state.basis[k];
    const std::string cfg = "configuration " + std::to_string(m);
    if (state.x_true[k] < 0 || state.x_virtual[k] < 0 ||
        state.x_true[k] > state.x_virtual[k])
      report(cfg + ": true matches " + std::to_string(state.x_true[k]) +
             " exceed virtual matches " + std::to_string(state.x_virtual[k]));
    const bool has_nq = inst.config_has_nonqueueable(m);
    bool some_short = false;
    for (size_t p = 0; p < state.support[k].size(); ++p) {
      const int i = state.support[k][p];
      const long long vq = state.vq[k][p];
      const long long tq = state.tq[k][p];
      const std::string coord =
          cfg + " resource " + std::to_string(i);
      if (tq < vq)
        report(coord + ": true queue " + std::to_string(tq) +
               " below virtual queue " + std::to_string(vq));
      if (inst.classes[i] != ResourceClass::Offline && tq < 0)
        report(coord + ": negative true queue for an online resource");
      if (inst.classes[i] == ResourceClass::OnlineNonqueueable && vq != 0)
        report(coord + ": nonqueueable resource has nonzero virtual queue " +
               std::to_string(vq));
      if (!has_nq && vq < 0)
        report(coord + ": negative virtual queue in a configuration without "
                       "nonqueueable resources");
      if (state.min_vq[k][p] > vq)
        report(coord + ": running virtual-queue minimum above current value");
      if (vq < state.mult[k][p]) some_short = true;
    }
    if (!has_nq && !some_short)
      report(cfg + ": every virtual queue covers a full match, so one should "
                   "have been completed");
  }

  for (int i = 0; i < inst.n; ++i) {
    long long committed = 0;
    for (auto [slot, pos] : state.slots_of_resource[i])
      committed += state.vq[slot][pos] +
                   state.x_virtual[slot] * state.mult[slot][pos];
    if (committed != state.arrivals[i])
      report("resource " + std::to_string(i) + ": " +
             std::to_string(state.arrivals[i]) + " arrivals but " +
             std::to_string(committed) + " units accounted across queues and "
                                         "virtual matches");
    if (inst.classes[i] == ResourceClass::Offline) {
      long long used = 0;
      for (auto [slot, pos] : state.slots_of_resource[i])
        used += state.x_true[slot] * state.mult[slot][pos];
      if (used != state.offline_used[i])
        report("resource " + std::to_string(i) + ": offline usage counter " +
               std::to_string(state.offline_used[i]) +
               " does not match true matches " + std::to_string(used));
      if (state.offline_used[i] > state.offline_budget[i])
        report("resource " + std::to_string(i) + ": offline usage " +
               std::to_string(state.offline_used[i]) + " exceeds inventory " +
               std::to_string(state.offline_budget[i]));
    } else if (state.offline_used[i] != 0 || state.offline_budget[i] != 0) {
      report("resource " + std::to_string(i) +
             ": online resource carries offline inventory counters");
    }
  }

  const double recomputed = phi_total(state);
  if (std::fabs(recomputed - state.phi) > 1e-6)
    report("incremental potential " + std::to_string(state.phi) +
           " drifted from recomputed " + std::to_string(recomputed));

  return problems;
}

double config_waste(const MatchingInstance& inst, int config,
                    const std::vector<long long>& true_queues) {
  if (!inst.is_bin_packing()) fail("waste is defined only for bin packing");
  const std::vector<int> support = inst.support(config);
  if (support.size() != true_queues.size())
    fail("queue vector does not match configuration support");
  long long open_bins = 0;
  long long queued_volume = 0;
  for (size_t p = 0; p < support.size(); ++p) {
    const long long q = true_queues[p];
    if (q < 0) fail("negative queue in waste computation");
    const long long m = inst.mult(support[p], config);
    open_bins = std::max(open_bins, (q + m - 1) / m);
    queued_volume += static_cast<long long>(inst.item_sizes[support[p]]) * q;
  }
  return static_cast<double>(open_bins * inst.bin_capacity - queued_volume);
}

BinStats bin_stats(const SimState& state) {
  const MatchingInstance& inst = *state.inst;
  if (!inst.is_bin_packing()) fail("bin stats are defined only for bin packing");
  BinStats stats;
  const long long cap = inst.bin_capacity;
  for (size_t k = 0; k < state.basis.size(); ++k) {
    long long open_bins = 0;
    long long volume = 0;  // item volume sitting in this configuration's bins
    for (size_t p = 0; p < state.support[k].size(); ++p) {
      const long long q = state.tq[k][p];
      const long long m = state.mult[k][p];
      open_bins = std::max(open_bins, (q + m - 1) / m);
      volume += static_cast<long long>(inst.item_sizes[state.support[k][p]]) *
                (q + state.x_true[k] * m);
    }
    const long long bins = state.x_true[k] + open_bins;
    stats.bins += bins;
    stats.waste += static_cast<double>(bins * cap - volume);
  }
  return stats;
}

}  // namespace sosmatch
