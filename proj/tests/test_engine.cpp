#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "sosmatch/arrivals.hpp"
#include "sosmatch/engine.hpp"
#include "sosmatch/harness.hpp"
#include "sosmatch/instance.hpp"
#include "sosmatch/rng.hpp"

using namespace sosmatch;

namespace {

// Column of `inst` equal to `want`, or -1.
int find_column(const MatchingInstance& inst, const std::vector<int>& want) {
  for (int m = 0; m < inst.d(); ++m) {
    bool same = true;
    for (int i = 0; i < inst.n && same; ++i) same = inst.multiplicity[i][m] == want[i];
    if (same) return m;
  }
  return -1;
}

struct StepLog {
  std::vector<int> configs;
  std::vector<bool> virtual_fired;
  std::vector<bool> true_fired;
  // snapshots of the final observed state
  std::vector<long long> x_true, x_virtual;
  std::vector<std::vector<long long>> vq, tq, min_vq;
  double phi = 0.0;
};

SimOptions logging_options(StepLog& log) {
  SimOptions opts;
  opts.check_every = 1;
  opts.observer = [&log](const StepRecord& rec, const SimState& state) {
    log.configs.push_back(rec.config);
    log.virtual_fired.push_back(rec.commit.virtual_fired);
    log.true_fired.push_back(rec.commit.true_fired);
    log.x_true = state.x_true;
    log.x_virtual = state.x_virtual;
    log.vq = state.vq;
    log.tq = state.tq;
    log.min_vq = state.min_vq;
    log.phi = state.phi;
  };
  return opts;
}

Trace run_script(const MatchingInstance& inst, const std::vector<int>& basis,
                 const std::vector<int>& script, StepLog& log) {
  auto process = make_scripted(inst, script);
  auto policy = make_ss_policy();
  return simulate(inst, basis, *process, *policy, logging_options(log));
}

}  // namespace

TEST_CASE("potential closed form on a two-resource configuration") {
  CHECK(phi_config({3, 1}, {1, 1}) == doctest::Approx(8.0));
  CHECK(phi_config({0, 0}, {1, 1}) == doctest::Approx(0.0));
  CHECK(phi_config({5}, {1}) == doctest::Approx(0.0));  // single resource
  CHECK(phi_config({-1, 0}, {1, 1}) == doctest::Approx(2.0));
  // scaled by multiplicity: queues (4,1) over multiplicities (3,1)
  CHECK(phi_config({4, 1}, {3, 1}) == doctest::Approx(2.0 / 9.0));
}

TEST_CASE("potential delta closed form matches the finite difference") {
  CHECK(delta_phi_config({3, 1}, {1, 1}, 0) == doctest::Approx(10.0));
  CHECK(delta_phi_config({3, 1}, {1, 1}, 1) == doctest::Approx(-6.0));
  CHECK(delta_phi_config({7}, {1}, 0) == doctest::Approx(0.0));

  Rng rng(314);
  for (int trial = 0; trial < 500; ++trial) {
    const int len = 1 + static_cast<int>(rng.next_below(5));
    std::vector<long long> q(static_cast<size_t>(len));
    std::vector<int> m(static_cast<size_t>(len));
    for (int p = 0; p < len; ++p) {
      q[static_cast<size_t>(p)] = static_cast<long long>(rng.next_below(10)) - 3;
      m[static_cast<size_t>(p)] = 1 + static_cast<int>(rng.next_below(3));
    }
    const int pos = static_cast<int>(rng.next_below(static_cast<uint64_t>(len)));
    std::vector<long long> q_after = q;
    q_after[static_cast<size_t>(pos)] += 1;
    const double diff = phi_config(q_after, m) - phi_config(q, m);
    CHECK(delta_phi_config(q, m, pos) == doctest::Approx(diff).epsilon(1e-9));
    // completing a match shifts every scaled queue equally: potential unchanged
    std::vector<long long> q_completed = q_after;
    for (int p = 0; p < len; ++p) q_completed[static_cast<size_t>(p)] -= m[static_cast<size_t>(p)];
    CHECK(phi_config(q_completed, m) == doctest::Approx(phi_config(q_after, m)).epsilon(1e-9));
  }
}

TEST_CASE("state construction validates the basis") {
  const Preset p = make_preset("instance2_default");
  const std::vector<double> rates = p.rates.lambda;
  CHECK_NOTHROW(make_sim_state(p.instance, {0, 1, 4}, rates, 100));
  CHECK_THROWS(make_sim_state(p.instance, {1, 0, 4}, rates, 100));  // not ascending
  CHECK_THROWS(make_sim_state(p.instance, {0, 1, 9}, rates, 100));  // out of range
  CHECK_THROWS(make_sim_state(p.instance, {0, 1, 1}, rates, 100));  // duplicate

  const SimState st = make_sim_state(p.instance, {0, 1, 4}, rates, 100);
  CHECK(st.slot_of_config(0) == 0);
  CHECK(st.slot_of_config(1) == 1);
  CHECK(st.slot_of_config(4) == 2);
  CHECK(st.slot_of_config(2) == -1);
  REQUIRE(st.support.size() == 3);
  CHECK(st.support[0] == std::vector<int>{0, 1});
  CHECK(st.support[1] == std::vector<int>{0, 2});
  CHECK(st.support[2] == std::vector<int>{2});
}

// The next five cases walk the greedy policy through hand-checked scripts on
// the three-resource preset with basis {0, 1, 4}: configurations {0,1} at
// reward 5, {0,2} at reward 1, and the discard of resource 2.

TEST_CASE("script (0,1): tie goes to the lowest configuration, match completes") {
  const Preset p = make_preset("instance2_default");
  StepLog log;
  const Trace tr = run_script(p.instance, {0, 1, 4}, {0, 1}, log);
  CHECK(log.configs == std::vector<int>{0, 0});
  CHECK(log.virtual_fired == std::vector<bool>{false, true});
  CHECK(log.true_fired == std::vector<bool>{false, true});
  CHECK(log.x_true == std::vector<long long>{1, 0, 0});
  CHECK(log.x_virtual == std::vector<long long>{1, 0, 0});
  CHECK(log.vq[0] == std::vector<long long>{0, 0});
  CHECK(log.phi == doctest::Approx(0.0));
  REQUIRE(!tr.rows.empty());
  const TraceRow& last = tr.rows.back();
  CHECK(last.true_reward == doctest::Approx(5.0));
  CHECK(last.virtual_reward == doctest::Approx(5.0));
}

TEST_CASE("script (2): free discard beats a positive-delta match") {
  const Preset p = make_preset("instance2_default");
  StepLog log;
  run_script(p.instance, {0, 1, 4}, {2}, log);
  CHECK(log.configs == std::vector<int>{4});
  CHECK(log.virtual_fired == std::vector<bool>{true});
  CHECK(log.true_fired == std::vector<bool>{true});
  CHECK(log.x_true == std::vector<long long>{0, 0, 1});
}

TEST_CASE("script (0,0,2): second queueable arrival spills to the cheaper slot") {
  const Preset p = make_preset("instance2_default");
  StepLog log;
  const Trace tr = run_script(p.instance, {0, 1, 4}, {0, 0, 2}, log);
  CHECK(log.configs == std::vector<int>{0, 1, 1});
  CHECK(log.x_true == std::vector<long long>{0, 1, 0});
  CHECK(log.vq[0] == std::vector<long long>{1, 0});
  CHECK(log.vq[1] == std::vector<long long>{0, 0});
  CHECK(log.phi == doctest::Approx(2.0));
  CHECK(tr.rows.back().true_reward == doctest::Approx(1.0));
}

TEST_CASE("script (1): nonqueueable arrival fires virtually but is lost") {
  const Preset p = make_preset("instance2_default");
  StepLog log;
  const Trace tr = run_script(p.instance, {0, 1, 4}, {1}, log);
  CHECK(log.configs == std::vector<int>{0});
  CHECK(log.virtual_fired == std::vector<bool>{true});
  CHECK(log.true_fired == std::vector<bool>{false});
  CHECK(log.x_virtual == std::vector<long long>{1, 0, 0});
  CHECK(log.x_true == std::vector<long long>{0, 0, 0});
  CHECK(log.vq[0] == std::vector<long long>{-1, 0});
  CHECK(log.min_vq[0] == std::vector<long long>{-1, 0});
  CHECK(log.phi == doctest::Approx(2.0));
  CHECK(tr.rows.back().true_reward == doctest::Approx(0.0));
  CHECK(tr.rows.back().virtual_reward == doctest::Approx(5.0));
}

TEST_CASE("script (1,0,1): the debt is repaid and the second match completes") {
  const Preset p = make_preset("instance2_default");
  StepLog log;
  const Trace tr = run_script(p.instance, {0, 1, 4}, {1, 0, 1}, log);
  CHECK(log.configs == std::vector<int>{0, 0, 0});
  CHECK(log.true_fired == std::vector<bool>{false, false, true});
  CHECK(log.x_virtual == std::vector<long long>{2, 0, 0});
  CHECK(log.x_true == std::vector<long long>{1, 0, 0});
  CHECK(log.vq[0] == std::vector<long long>{-1, 0});
  // the lost first arrival evaporated, the third was consumed by its match
  CHECK(log.tq[0] == std::vector<long long>{0, 0});
  CHECK(log.min_vq[0] == std::vector<long long>{-1, 0});
  CHECK(tr.rows.back().true_reward == doctest::Approx(5.0));
  CHECK(tr.rows.back().virtual_reward == doctest::Approx(10.0));
}

TEST_CASE("offline inventory can be spent before it arrives") {
  // offline resource 0 pairs with a nonqueueable resource 1: the match fires
  // on the nonqueueable arrival and borrows inventory; once the whole-horizon
  // budget is spent, further virtual completions are lost.
  MatchingInstance inst;
  inst.n = 2;
  inst.classes = {ResourceClass::Offline, ResourceClass::OnlineNonqueueable};
  inst.multiplicity = {{1, 1, 0}, {1, 0, 1}};
  inst.rewards = {10.0, 0.0, 0.0};
  inst.discard_config = {1, 2};

  StepLog log;
  // script (1,1,0): empirical rates (1/3, 2/3), so the offline budget is 1
  const Trace tr = run_script(inst, {0, 1}, {1, 1, 0}, log);
  CHECK(log.configs == std::vector<int>{0, 0, 0});
  CHECK(log.virtual_fired == std::vector<bool>{true, true, false});
  CHECK(log.true_fired == std::vector<bool>{true, false, false});
  CHECK(log.x_virtual == std::vector<long long>{2, 0});
  CHECK(log.x_true == std::vector<long long>{1, 0});
  CHECK(log.vq[0] == std::vector<long long>{-1, 0});
  // the second nonqueueable arrival found the budget exhausted and evaporated
  CHECK(log.tq[0] == std::vector<long long>{0, 0});
  CHECK(log.min_vq[0] == std::vector<long long>{-2, 0});
  CHECK(log.phi == doctest::Approx(2.0));
  CHECK(tr.rows.back().true_reward == doctest::Approx(10.0));
  CHECK(tr.rows.back().virtual_reward == doctest::Approx(20.0));
}

TEST_CASE("offline inventory is exactly consumed on the emulated schedule") {
  MatchingInstance inst;
  inst.n = 2;
  inst.classes = {ResourceClass::Offline, ResourceClass::OnlineQueueable};
  inst.multiplicity = {{1, 1, 0}, {1, 0, 1}};
  inst.rewards = {1.0, 0.0, 0.0};
  inst.discard_config = {1, 2};
  const ArrivalRates rates{{0.5, 1.0}, 4};

  auto process = make_emulated(inst, rates, 5);
  auto policy = make_ss_policy();
  StepLog log;
  const Trace tr = simulate(inst, {0, 2}, *process, *policy, logging_options(log));
  // schedule (0,1,1,0,1,1): each inventory unit matches with the next arrival
  CHECK(log.configs == std::vector<int>{0, 0, 2, 0, 0, 2});
  CHECK(log.x_true == std::vector<long long>{2, 2});
  CHECK(log.x_virtual == std::vector<long long>{2, 2});
  CHECK(tr.rows.back().true_reward == doctest::Approx(2.0));
}

TEST_CASE("invariant audit flags corrupted states") {
  const Preset p = make_preset("instance2_default");
  SimState st = make_sim_state(p.instance, {0, 1, 4}, p.rates.lambda, 100);
  st.t = 2;
  apply_commit(st, 0, 0);
  apply_commit(st, 0, 1);
  CHECK(check_state_invariants(st).empty());

  SimState bad_phi = st;
  bad_phi.phi += 1.0;
  CHECK(!check_state_invariants(bad_phi).empty());

  SimState bad_counts = st;
  bad_counts.arrivals[0] -= 1;
  CHECK(!check_state_invariants(bad_counts).empty());

  SimState bad_matches = st;
  bad_matches.x_true[0] += 1;
  CHECK(!check_state_invariants(bad_matches).empty());
}

TEST_CASE("simulate rejects a policy that leaves the basis") {
  class BadPolicy final : public Policy {
   public:
    int choose(const SimState&, int) override { return 2; }  // not in basis
    const char* name() const override { return "bad"; }
  };
  const Preset p = make_preset("instance2_default");
  auto process = make_scripted(p.instance, {0});
  BadPolicy policy;
  SimOptions opts;
  CHECK_THROWS_AS(simulate(p.instance, {0, 1, 4}, *process, policy, opts),
                  std::runtime_error);
}

TEST_CASE("row cadence and keep_rows") {
  const Preset p = make_preset("instance2_default");
  ArrivalRates rates = p.rates;
  rates.horizon = 10;
  auto policy = make_ss_policy();

  SimOptions opts;
  opts.record_every = 3;
  auto process = make_iid(p.instance, rates, 3);
  const Trace tr = simulate(p.instance, {0, 1, 4}, *process, *policy, opts);
  REQUIRE(tr.rows.size() == 4);
  CHECK(tr.rows[0].t == 3);
  CHECK(tr.rows[1].t == 6);
  CHECK(tr.rows[2].t == 9);
  CHECK(tr.rows[3].t == 10);  // the final step always records

  SimOptions no_rows;
  no_rows.keep_rows = false;
  int steps = 0;
  no_rows.observer = [&steps](const StepRecord&, const SimState&) { ++steps; };
  auto process2 = make_iid(p.instance, rates, 3);
  const Trace empty = simulate(p.instance, {0, 1, 4}, *process2, *policy, no_rows);
  CHECK(empty.rows.empty());
  CHECK(steps == 10);
  CHECK(empty.header.horizon == 10);
}

TEST_CASE("simulation is deterministic per seed") {
  const Preset p = make_preset("instance2_default");
  ArrivalRates rates = p.rates;
  rates.horizon = 2000;
  auto policy = make_ss_policy();
  SimOptions opts;
  opts.record_every = 100;

  auto run = [&]() {
    auto process = make_iid(p.instance, rates, 99);
    return simulate(p.instance, {0, 1, 4}, *process, *policy, opts);
  };
  const Trace a = run();
  const Trace b = run();
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t r = 0; r < a.rows.size(); ++r) {
    CHECK(a.rows[r].t == b.rows[r].t);
    CHECK(a.rows[r].arrival == b.rows[r].arrival);
    CHECK(a.rows[r].committed_config == b.rows[r].committed_config);
    CHECK(a.rows[r].true_reward == b.rows[r].true_reward);
    CHECK(a.rows[r].virtual_reward == b.rows[r].virtual_reward);
    CHECK(a.rows[r].phi == b.rows[r].phi);
    CHECK(a.rows[r].arrival_counts == b.rows[r].arrival_counts);
    CHECK(a.rows[r].x_true == b.rows[r].x_true);
    CHECK(a.rows[r].x_virtual == b.rows[r].x_virtual);
    CHECK(a.rows[r].min_vq == b.rows[r].min_vq);
    CHECK(a.rows[r].vq == b.rows[r].vq);
  }
}

TEST_CASE("long runs keep every invariant under frequent audits") {
  const Preset p = make_preset("instance2_default");
  ArrivalRates rates = p.rates;
  rates.horizon = 3000;
  auto policy = make_ss_policy();
  SimOptions opts;
  opts.check_every = 1;
  opts.keep_rows = false;
  auto process = make_iid(p.instance, rates, 2024);
  CHECK_NOTHROW(simulate(p.instance, {0, 1, 4}, *process, *policy, opts));

  const Preset p1 = make_preset("instance1_standin");
  ArrivalRates rates1 = p1.rates;
  rates1.horizon = 3000;
  auto process1 = make_iid(p1.instance, rates1, 2025);
  CHECK_NOTHROW(simulate(p1.instance, {0, 1, 2, 6, 7}, *process1, *policy, opts));
}

TEST_CASE("open-bin waste of one packing pattern") {
  const MatchingInstance inst = binpacking_instance(9, {2, 3});
  const int cfg = find_column(inst, {3, 1});
  REQUIRE(cfg >= 0);
  // four size-2 items and one size-3 item need two open bins of the pattern:
  // 2*9 capacity minus 11 packed volume
  CHECK(config_waste(inst, cfg, {4, 1}) == doctest::Approx(7.0));
  CHECK(config_waste(inst, cfg, {0, 0}) == doctest::Approx(0.0));
  // a full pattern's worth of items exactly fills one bin: 9 capacity - 9 volume
  CHECK(config_waste(inst, cfg, {3, 1}) == doctest::Approx(0.0));
}

TEST_CASE("bin statistics combine completed patterns and open bins") {
  const MatchingInstance inst = binpacking_instance(9, {2, 3});
  const int cfg_a = find_column(inst, {3, 1});
  const int cfg_b = find_column(inst, {0, 3});
  REQUIRE(cfg_a >= 0);
  REQUIRE(cfg_b >= 0);
  std::vector<int> basis{cfg_a, cfg_b};
  std::sort(basis.begin(), basis.end());

  SimState st = make_sim_state(inst, basis, {5.0 / 8, 3.0 / 8}, 8);
  st.t = 5;
  // three 2s and one 3 complete the first pattern; a fourth 2 opens a new bin
  apply_commit(st, 0, cfg_a);
  apply_commit(st, 0, cfg_a);
  apply_commit(st, 0, cfg_a);
  apply_commit(st, 1, cfg_a);
  apply_commit(st, 0, cfg_a);
  CHECK(check_state_invariants(st).empty());

  const BinStats stats = bin_stats(st);
  CHECK(stats.bins == 2);
  CHECK(stats.waste == doctest::Approx(7.0));
  // conservation: capacity * bins = packed volume + waste
  CHECK(9.0 * stats.bins == doctest::Approx(11.0 + stats.waste));
}
