#include "sosmatch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sosmatch {
namespace {

[[noreturn]] void fail_arg(const std::string& msg) {
  throw std::invalid_argument("baselines: " + msg);
}

void require_bin_packing(const MatchingInstance& inst) {
  if (!inst.is_bin_packing())
    fail_arg("the level heuristic needs a bin-packing instance");
}

}  // namespace

std::vector<int> dead_end_levels(int bin_capacity, const std::vector<int>& sizes) {
  if (bin_capacity <= 0) fail_arg("bin capacity must be positive");
  // can_complete[h]: some multiset of item sizes tops level h up to exactly B.
  std::vector<char> can_complete(static_cast<size_t>(bin_capacity) + 1, 0);
  can_complete[static_cast<size_t>(bin_capacity)] = 1;
  for (int h = bin_capacity - 1; h >= 1; --h)
    for (int s : sizes)
      if (h + s <= bin_capacity && can_complete[static_cast<size_t>(h + s)]) {
        can_complete[static_cast<size_t>(h)] = 1;
        break;
      }
  std::vector<int> dead;
  for (int h = 1; h < bin_capacity; ++h)
    if (!can_complete[static_cast<size_t>(h)]) dead.push_back(h);
  return dead;
}

int csirik_place(LevelState& state, int size, int bin_capacity,
                 bool forbid_dead_ends, const std::vector<int>& dead_ends) {
  const int B = bin_capacity;
  if (size <= 0 || size > B) fail_arg("item size outside (0, capacity]");
  if (state.open.size() != static_cast<size_t>(B))
    state.open.resize(static_cast<size_t>(B), 0);

  auto is_dead = [&](int level) {
    return level < B &&
           std::binary_search(dead_ends.begin(), dead_ends.end(), level);
  };

  // A candidate move: source level (-1 = fresh bin) and resulting level.
  // cost = change in the sum of squared level counts; closed bins leave the
  // level state, so a move resulting in level B only removes.
  struct Move {
    long long cost;
    int result;
    int source;
  };
  auto cost_of = [&](int source, int result) {
    long long cost = 0;
    if (source >= 0) cost += -2 * state.open[static_cast<size_t>(source)] + 1;
    if (result < B) cost += 2 * state.open[static_cast<size_t>(result)] + 1;
    return cost;
  };
  auto better = [](const Move& a, const Move& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.result != b.result) return a.result > b.result;
    return a.source > b.source;  // prefer topping an existing bin at a full tie
  };

  Move best{0, 0, 0};
  bool have_best = false;
  Move best_allowed{0, 0, 0};
  bool have_allowed = false;
  auto consider = [&](int source, int result) {
    Move move{cost_of(source, result), result, source};
    if (!have_best || better(move, best)) {
      best = move;
      have_best = true;
    }
    if (!is_dead(result) && (!have_allowed || better(move, best_allowed))) {
      best_allowed = move;
      have_allowed = true;
    }
  };

  consider(-1, size);
  for (int h = 1; h < B; ++h)
    if (state.open[static_cast<size_t>(h)] > 0 && h + size <= B)
      consider(h, h + size);

  // When every move lands on a dead end the restriction is waived: the item
  // must go somewhere.
  const Move chosen = (forbid_dead_ends && have_allowed) ? best_allowed : best;

  if (chosen.source < 0) state.bins_opened += 1;
  else state.open[static_cast<size_t>(chosen.source)] -= 1;
  if (chosen.result < B) state.open[static_cast<size_t>(chosen.result)] += 1;
  state.volume_packed += size;
  return chosen.result;
}

double level_waste(const LevelState& state, int bin_capacity) {
  double waste = 0.0;
  for (size_t h = 1; h < state.open.size(); ++h)
    waste += static_cast<double>(state.open[h]) *
             static_cast<double>(bin_capacity - static_cast<int>(h));
  return waste;
}

Trace simulate_csirik(const MatchingInstance& inst, ArrivalProcess& process,
                      bool forbid_dead_ends, long long record_every) {
  require_bin_packing(inst);
  const long long horizon = process.horizon();
  const std::vector<int> dead = dead_end_levels(inst.bin_capacity, inst.item_sizes);

  Trace trace;
  trace.header.policy = forbid_dead_ends ? "csirik_nodead" : "csirik";
  trace.header.process = process.name();
  trace.header.horizon = horizon;
  trace.header.record_every = std::max<long long>(1, record_every);
  trace.header.lambda_bar = process.mean_rates();
  trace.header.instance_hash = inst.hash();
  trace.header.has_waste = true;
  const long long rec = trace.header.record_every;

  LevelState state;
  state.open.assign(static_cast<size_t>(inst.bin_capacity), 0);
  std::vector<long long> arrivals(static_cast<size_t>(inst.n), 0);

  while (std::optional<ArrivalEvent> ev = process.next()) {
    arrivals[static_cast<size_t>(ev->resource)] += 1;
    csirik_place(state, inst.item_sizes[ev->resource], inst.bin_capacity,
                 forbid_dead_ends, dead);
    if (ev->t % rec == 0 || ev->t == horizon) {
      TraceRow row;
      row.t = ev->t;
      row.arrival = ev->resource;
      row.committed_config = -1;
      row.true_reward = -static_cast<double>(state.bins_opened);
      row.virtual_reward = row.true_reward;
      double sq = 0.0;  // the heuristic's own potential: squared level counts
      for (size_t h = 1; h < state.open.size(); ++h)
        sq += static_cast<double>(state.open[h]) * static_cast<double>(state.open[h]);
      row.phi = sq;
      row.arrival_counts = arrivals;
      row.waste = level_waste(state, inst.bin_capacity);
      row.bins = state.bins_opened;
      trace.rows.push_back(std::move(row));
    }
  }

  // Volume conservation: every opened bin is item volume plus open-bin slack.
  const double slack = level_waste(state, inst.bin_capacity);
  const double lhs = static_cast<double>(inst.bin_capacity) *
                     static_cast<double>(state.bins_opened);
  if (std::fabs(lhs - (static_cast<double>(state.volume_packed) + slack)) > 1e-6)
    throw std::runtime_error("baselines: level-state volume accounting broke");
  return trace;
}

bool DpPolicyTable::match(long long t, long long q, int j) const {
  if (q <= 0) return false;
  if (t < 1 || t > horizon || j < 0 || j >= static_cast<int>(nq_resources.size()))
    throw std::out_of_range("dp table lookup outside the built range");
  const long long qc = std::min<long long>(q, q_cap);
  const size_t idx =
      (static_cast<size_t>(t - 1) * static_cast<size_t>(q_cap) +
       static_cast<size_t>(qc - 1)) *
          nq_resources.size() +
      static_cast<size_t>(j);
  return action[idx];
}

double DpPolicyTable::v(long long t, long long q) const {
  if (!has_full_v)
    throw std::logic_error("full value table was not kept at this horizon");
  if (t < 0 || t > horizon || q < 0 || q > q_cap)
    throw std::out_of_range("dp value lookup outside the built range");
  return full_v[static_cast<size_t>(t) * static_cast<size_t>(q_cap + 1) +
                static_cast<size_t>(q)];
}

namespace {

// Shared shape analysis for the dynamic program.
struct DpShape {
  int onq = -1;
  std::vector<int> nq;         // paired nonqueueable resources, ascending
  std::vector<int> nq_cfg;     // their pairing configurations
  std::vector<int> unpaired;   // nonqueueable resources with no pairing config
};

DpShape analyze_dp_shape(const MatchingInstance& inst) {
  DpShape shape;
  for (int i = 0; i < inst.n; ++i) {
    switch (inst.classes[i]) {
      case ResourceClass::Offline:
        fail_arg("the dynamic program does not support offline resources");
      case ResourceClass::OnlineQueueable:
        if (shape.onq >= 0)
          fail_arg("the dynamic program needs exactly one queueable resource");
        shape.onq = i;
        break;
      case ResourceClass::OnlineNonqueueable:
        break;
    }
  }
  if (shape.onq < 0) fail_arg("the dynamic program needs a queueable resource");

  std::vector<int> pairing_of(static_cast<size_t>(inst.n), -1);
  for (int m = 0; m < inst.d(); ++m) {
    if (inst.is_discard(m)) continue;
    const std::vector<int> support = inst.support(m);
    if (support.size() != 2 || support[0] != shape.onq ||
        inst.mult(support[0], m) != 1 || inst.mult(support[1], m) != 1 ||
        inst.classes[support[1]] != ResourceClass::OnlineNonqueueable)
      fail_arg("configuration " + std::to_string(m) +
               " is not a queueable/nonqueueable pairing");
    if (pairing_of[static_cast<size_t>(support[1])] >= 0)
      fail_arg("resource " + std::to_string(support[1]) +
               " appears in more than one pairing configuration");
    pairing_of[static_cast<size_t>(support[1])] = m;
  }
  for (int i = 0; i < inst.n; ++i) {
    if (inst.classes[i] != ResourceClass::OnlineNonqueueable) continue;
    if (pairing_of[static_cast<size_t>(i)] >= 0) {
      shape.nq.push_back(i);
      shape.nq_cfg.push_back(pairing_of[static_cast<size_t>(i)]);
    } else {
      shape.unpaired.push_back(i);
    }
  }
  return shape;
}

}  // namespace

DpPolicyTable dp_policy_build(const MatchingInstance& inst,
                              const std::vector<double>& lambda, long long horizon,
                              int q_cap) {
  if (static_cast<int>(lambda.size()) != inst.n)
    fail_arg("lambda length does not match the resource count");
  if (horizon < 0) fail_arg("horizon must be nonnegative");
  if (q_cap < 1) fail_arg("queue cap must be at least 1");
  const DpShape shape = analyze_dp_shape(inst);

  DpPolicyTable table;
  table.horizon = horizon;
  table.q_cap = q_cap;
  table.onq_resource = shape.onq;
  table.nq_resources = shape.nq;
  table.nq_config = shape.nq_cfg;
  table.lambda = lambda;
  const size_t width = static_cast<size_t>(q_cap) + 1;
  const size_t n_nq = shape.nq.size();
  table.action.assign(static_cast<size_t>(horizon) * static_cast<size_t>(q_cap) * n_nq,
                      false);
  table.has_full_v = (static_cast<size_t>(horizon + 1) * width <= 2000000);
  if (table.has_full_v)
    table.full_v.assign(static_cast<size_t>(horizon + 1) * width, 0.0);

  std::vector<double> v_next(width, 0.0);  // V[t]
  std::vector<double> v_here(width, 0.0);  // V[t-1]
  if (table.has_full_v)
    std::copy(v_next.begin(), v_next.end(),
              table.full_v.begin() + static_cast<size_t>(horizon) * width);

  for (long long t = horizon; t >= 1; --t) {
    for (long long q = 0; q <= q_cap; ++q) {
      double value = 0.0;
      // Fixed ascending-resource summation order keeps the arithmetic
      // reproducible against the recursive reference.
      for (int i = 0; i < inst.n; ++i) {
        double term;
        if (i == shape.onq) {
          term = v_next[static_cast<size_t>(std::min<long long>(q + 1, q_cap))];
        } else {
          const auto it = std::lower_bound(shape.nq.begin(), shape.nq.end(), i);
          if (it != shape.nq.end() && *it == i) {
            const size_t j = static_cast<size_t>(it - shape.nq.begin());
            const double r = inst.rewards[shape.nq_cfg[j]];
            if (q > 0) {
              const double matched = r + v_next[static_cast<size_t>(q - 1)];
              const double passed = v_next[static_cast<size_t>(q)];
              term = std::max(matched, passed);
              if (matched >= passed) {  // ties match
                const size_t idx =
                    (static_cast<size_t>(t - 1) * static_cast<size_t>(q_cap) +
                     static_cast<size_t>(q - 1)) *
                        n_nq +
                    j;
                table.action[idx] = true;
              }
            } else {
              term = v_next[0];
            }
          } else {
            term = v_next[static_cast<size_t>(q)];  // unmatchable arrival
          }
        }
        value += lambda[static_cast<size_t>(i)] * term;
      }
      v_here[static_cast<size_t>(q)] = value;
    }
    for (long long q = 0; q <= q_cap; ++q) {
      if (q > 0 && v_here[static_cast<size_t>(q)] <
                       v_here[static_cast<size_t>(q - 1)] - 1e-9)
        throw std::logic_error("dp build: value decreased in queue length");
      if (v_here[static_cast<size_t>(q)] < v_next[static_cast<size_t>(q)] - 1e-9)
        throw std::logic_error("dp build: value decreased with more steps left");
    }
    std::swap(v_here, v_next);
    if (table.has_full_v)
      std::copy(v_next.begin(), v_next.end(),
                table.full_v.begin() + static_cast<size_t>(t - 1) * width);
  }
  table.v0.assign(v_next.begin(), v_next.end());
  return table;
}

namespace {

double dp_value_recursive(const MatchingInstance& inst, const DpShape& shape,
                          const std::vector<double>& lambda, long long horizon,
                          int q_cap, long long t, long long q) {
  if (t > horizon) return 0.0;
  double value = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    double term;
    if (i == shape.onq) {
      term = dp_value_recursive(inst, shape, lambda, horizon, q_cap, t + 1,
                                std::min<long long>(q + 1, q_cap));
    } else {
      const auto it = std::lower_bound(shape.nq.begin(), shape.nq.end(), i);
      if (it != shape.nq.end() && *it == i) {
        const size_t j = static_cast<size_t>(it - shape.nq.begin());
        const double r = inst.rewards[shape.nq_cfg[j]];
        if (q > 0) {
          const double matched =
              r + dp_value_recursive(inst, shape, lambda, horizon, q_cap, t + 1, q - 1);
          const double passed =
              dp_value_recursive(inst, shape, lambda, horizon, q_cap, t + 1, q);
          term = std::max(matched, passed);
        } else {
          term = dp_value_recursive(inst, shape, lambda, horizon, q_cap, t + 1, q);
        }
      } else {
        term = dp_value_recursive(inst, shape, lambda, horizon, q_cap, t + 1, q);
      }
    }
    value += lambda[static_cast<size_t>(i)] * term;
  }
  return value;
}

}  // namespace

double dp_value_bruteforce(const MatchingInstance& inst, const std::vector<double>& lambda,
                           long long horizon, int q_cap) {
  if (horizon > 12) fail_arg("the recursive reference is exponential; keep horizon <= 12");
  const DpShape shape = analyze_dp_shape(inst);
  return dp_value_recursive(inst, shape, lambda, horizon, q_cap, 1, 0);
}

Trace simulate_dp(const MatchingInstance& inst, ArrivalProcess& process,
                  const DpPolicyTable& table, long long record_every) {
  if (process.horizon() != table.horizon)
    fail_arg("dp table horizon does not match the arrival process");
  const long long horizon = process.horizon();

  Trace trace;
  trace.header.policy = "dp";
  trace.header.process = process.name();
  trace.header.horizon = horizon;
  trace.header.record_every = std::max<long long>(1, record_every);
  trace.header.lambda_bar = process.mean_rates();
  trace.header.instance_hash = inst.hash();
  trace.header.has_waste = inst.is_bin_packing();
  const long long rec = trace.header.record_every;

  std::vector<long long> arrivals(static_cast<size_t>(inst.n), 0);
  long long queue = 0;
  double reward = 0.0;
  bool warned_cap = false;

  while (std::optional<ArrivalEvent> ev = process.next()) {
    arrivals[static_cast<size_t>(ev->resource)] += 1;
    int committed = -1;
    if (ev->resource == table.onq_resource) {
      queue += 1;
      if (queue > table.q_cap && !warned_cap) {
        std::fprintf(stderr,
                     "warning: dp queue exceeded the table cap (%d); decisions "
                     "are clamped\n",
                     table.q_cap);
        warned_cap = true;
      }
    } else {
      const auto it = std::lower_bound(table.nq_resources.begin(),
                                       table.nq_resources.end(), ev->resource);
      if (it != table.nq_resources.end() && *it == ev->resource) {
        const int j = static_cast<int>(it - table.nq_resources.begin());
        if (table.match(ev->t, queue, j)) {
          queue -= 1;
          committed = table.nq_config[static_cast<size_t>(j)];
          reward += inst.rewards[static_cast<size_t>(committed)];
        }
      }
      if (committed < 0 && inst.discard_config[static_cast<size_t>(ev->resource)] >= 0)
        committed = inst.discard_config[static_cast<size_t>(ev->resource)];
    }
    if (ev->t % rec == 0 || ev->t == horizon) {
      TraceRow row;
      row.t = ev->t;
      row.arrival = ev->resource;
      row.committed_config = committed;
      row.true_reward = reward;
      row.virtual_reward = reward;
      row.phi = 0.0;
      row.arrival_counts = arrivals;
      trace.rows.push_back(std::move(row));
    }
  }
  return trace;
}

Trace simulate_naive(const MatchingInstance& inst, ArrivalProcess& process,
                     long long record_every) {
  const long long horizon = process.horizon();

  Trace trace;
  trace.header.policy = "naive";
  trace.header.process = process.name();
  trace.header.horizon = horizon;
  trace.header.record_every = std::max<long long>(1, record_every);
  trace.header.lambda_bar = process.mean_rates();
  trace.header.instance_hash = inst.hash();
  trace.header.has_waste = inst.is_bin_packing();
  const long long rec = trace.header.record_every;

  // Positively rewarded configurations, best paying first, index ascending
  // within equal pay.
  std::vector<int> order;
  for (int m = 0; m < inst.d(); ++m)
    if (inst.rewards[static_cast<size_t>(m)] > 0) order.push_back(m);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return inst.rewards[static_cast<size_t>(a)] > inst.rewards[static_cast<size_t>(b)];
  });

  std::vector<long long> pool(static_cast<size_t>(inst.n), 0);
  std::vector<long long> arrivals(static_cast<size_t>(inst.n), 0);
  double reward = 0.0;

  while (std::optional<ArrivalEvent> ev = process.next()) {
    const int r = ev->resource;
    arrivals[static_cast<size_t>(r)] += 1;
    int committed = -1;
    for (int m : order) {
      bool feasible = true;
      for (int i : inst.support(m)) {
        const long long have = pool[static_cast<size_t>(i)] + (i == r ? 1 : 0);
        if (have < inst.mult(i, m)) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;
      for (int i : inst.support(m))
        pool[static_cast<size_t>(i)] -= inst.mult(i, m) - (i == r ? 1 : 0);
      reward += inst.rewards[static_cast<size_t>(m)];
      committed = m;
      break;
    }
    if (committed < 0) {
      if (inst.classes[static_cast<size_t>(r)] != ResourceClass::OnlineNonqueueable)
        pool[static_cast<size_t>(r)] += 1;  // wait for a better partner
      else if (inst.discard_config[static_cast<size_t>(r)] >= 0)
        committed = inst.discard_config[static_cast<size_t>(r)];
    }
    if (ev->t % rec == 0 || ev->t == horizon) {
      TraceRow row;
      row.t = ev->t;
      row.arrival = r;
      row.committed_config = committed;
      row.true_reward = reward;
      row.virtual_reward = reward;
      row.phi = 0.0;
      row.arrival_counts = arrivals;
      trace.rows.push_back(std::move(row));
    }
  }
  return trace;
}

}  // namespace sosmatch
