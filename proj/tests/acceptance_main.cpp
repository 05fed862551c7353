// Acceptance gate for the library: twelve numbered criteria, each printing one
//   [criterion NN] PASS|FAIL (elapsed) detail
// line. Run with --criterion N for a single criterion, or no arguments for the
// whole battery. The process exits nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sosmatch/arrivals.hpp"
#include "sosmatch/baselines.hpp"
#include "sosmatch/engine.hpp"
#include "sosmatch/harness.hpp"
#include "sosmatch/instance.hpp"
#include "sosmatch/lp.hpp"
#include "sosmatch/rng.hpp"
#include "sosmatch/spp.hpp"
#include "test_util.hpp"

namespace {

using namespace sosmatch;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// index of the grid point exactly at step `t`, or -1
int grid_index(const std::vector<long long>& ts, long long t) {
  const auto it = std::find(ts.begin(), ts.end(), t);
  return it == ts.end() ? -1 : static_cast<int>(it - ts.begin());
}

ExperimentConfig preset_config(const std::string& name, long long horizon, int seeds,
                               const std::vector<std::string>& policies) {
  const Preset p = make_preset(name);
  ExperimentConfig cfg;
  cfg.instance = p.instance;
  cfg.rates = p.rates;
  cfg.rates.horizon = horizon;
  cfg.instance_label = p.name;
  cfg.process = p.process;
  cfg.block_size = p.block_size;
  cfg.policies = policies;
  cfg.seeds = seeds;
  cfg.seed0 = 1;
  return cfg;
}

// --- criterion 1: planning LP vs exhaustive vertex enumeration ---------------
Outcome criterion_1() {
  Rng rng(777);
  int solved = 0, rejected = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> lambda;
    const MatchingInstance inst = testutil::random_instance(rng, lambda);
    bool threw = false;
    double value = 0.0;
    try {
      value = solve_spp(inst, lambda).opt_value;
    } catch (const std::runtime_error&) {
      threw = true;
    }
    const auto brute = testutil::brute_force_best_vertex(inst, lambda);
    if (threw != !brute.has_value()) {
      return {false, "trial " + std::to_string(trial) + ": solver " +
                         (threw ? "rejected" : "accepted") +
                         " but enumeration says the opposite"};
    }
    if (threw) {
      ++rejected;
      continue;
    }
    ++solved;
    if (std::fabs(value - *brute) > 1e-9) {
      return {false, "trial " + std::to_string(trial) + ": solver value " + fmt(value) +
                         " vs enumerated optimum " + fmt(*brute)};
    }
  }
  return {true, std::to_string(solved) + " solved + " + std::to_string(rejected) +
                    " rejected instances agree with enumeration"};
}

// --- criterion 2: negative-reward packing LP with rejection columns ----------
Outcome criterion_2() {
  const MatchingInstance inst = binpacking_instance(10, {2, 6, 7}, -1.0);
  const SppSolution sol = solve_spp(inst, {0.2, 0.4, 0.4});
  if (sol.basis != std::vector<int>{1, 3, 4})
    return {false, "unexpected optimal basis"};
  const double alpha_want[3] = {0.0, -1.0, -1.0};
  for (int i = 0; i < 3; ++i)
    if (std::fabs(sol.alpha_star[static_cast<size_t>(i)] - alpha_want[i]) > 1e-15)
      return {false, "dual price " + std::to_string(i) + " = " +
                         fmt(sol.alpha_star[static_cast<size_t>(i)])};
  if (std::fabs(sol.opt_value - -0.8) > 1e-12)
    return {false, "optimal value " + fmt(sol.opt_value) + " != -0.8"};
  return {true, "basis {1,3,4}, duals (0,-1,-1), value -0.8"};
}

// --- criterion 3: mixed-queueability preset activity levels ------------------
Outcome criterion_3() {
  const Preset p = make_preset("instance2_default");
  const SppSolution sol = solve_spp(p.instance, p.rates.lambda);
  if (std::fabs(sol.x_star[0] - 0.30) > 1e-9 || std::fabs(sol.x_star[1] - 0.05) > 1e-9)
    return {false, "x = (" + fmt(sol.x_star[0]) + ", " + fmt(sol.x_star[1]) + ")"};
  return {true, "x = (0.30, 0.05) within 1e-9"};
}

// --- criterion 4: emulated inventory schedules stay within exact bounds ------
Outcome criterion_4() {
  Rng rng(4040);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n_off = 1 + static_cast<int>(rng.next_below(3));
    const int n_on = 1 + static_cast<int>(rng.next_below(3));
    const int n = n_off + n_on;
    MatchingInstance inst;
    inst.n = n;
    inst.classes.assign(static_cast<size_t>(n), ResourceClass::OnlineQueueable);
    for (int i = 0; i < n_off; ++i) inst.classes[static_cast<size_t>(i)] = ResourceClass::Offline;
    inst.multiplicity.assign(static_cast<size_t>(n), {1});
    inst.rewards = {1.0};
    inst.discard_config.assign(static_cast<size_t>(n), -1);

    const long long horizon = 100 + static_cast<long long>(rng.next_below(9901));
    ArrivalRates rates;
    rates.horizon = horizon;
    rates.lambda.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n_off; ++i) {
      const long long units = 1 + static_cast<long long>(
                                      rng.next_below(static_cast<uint64_t>(horizon - 1)));
      rates.lambda[static_cast<size_t>(i)] =
          static_cast<double>(units) / static_cast<double>(horizon);
    }
    double online_total = 0.0;
    for (int i = n_off; i < n; ++i) {
      rates.lambda[static_cast<size_t>(i)] = 0.05 + rng.next_double();
      online_total += rates.lambda[static_cast<size_t>(i)];
    }
    for (int i = n_off; i < n; ++i) rates.lambda[static_cast<size_t>(i)] /= online_total;

    const auto rep = discrepancy_bounds_check(inst, rates, rng.next_u64());
    if (!rep.within_bounds)
      return {false, "trial " + std::to_string(trial) + ": deficit left [" +
                         fmt(rep.worst_lower) + ", " + fmt(rep.worst_upper) +
                         "] exceeded the bound"};
    if (!rep.terminal_exact)
      return {false, "trial " + std::to_string(trial) + ": terminal inventory mismatch"};
    ++checked;
  }
  return {true, std::to_string(checked) + " random schedules within bounds, terminals exact"};
}

// --- criterion 5: dual accounting identity on certified rows -----------------
Outcome criterion_5() {
  double worst = 0.0;
  for (const std::string name : {"instance2_default", "binpack_eps8"}) {
    ExperimentConfig cfg = preset_config(name, 10000, 20, {"ss"});
    const ExperimentResult res = run_experiment(cfg, /*keep_traces=*/true);
    for (const Trace& tr : res.policies[0].traces) {
      const double residual =
          identity_max_residual(tr, cfg.instance, res.spp, res.epsilon0);
      worst = std::max(worst, residual);
      if (residual > 1e-6)
        return {false, name + " seed " + std::to_string(tr.header.seed) +
                           ": identity residual " + fmt(residual)};
    }
  }
  return {true, "max identity residual " + fmt(worst) + " over 40 runs"};
}

// --- criterion 6: bounded regret on the all-queueable preset -----------------
Outcome criterion_6() {
  ExperimentConfig cfg = preset_config("instance1_standin", 100000, 20, {"ss"});
  const ExperimentResult res = run_experiment(cfg);
  const PolicyResult& pol = res.policies[0];
  const int half = grid_index(pol.ts, 50000);
  const int full = grid_index(pol.ts, 100000);
  if (half < 0 || full < 0) return {false, "required grid points missing"};
  const double r_half = pol.mean_regret[static_cast<size_t>(half)];
  const double r_full = pol.mean_regret[static_cast<size_t>(full)];
  if (r_full > 1.25 * r_half + 1e-9)
    return {false, "mean regret grew " + fmt(r_half) + " -> " + fmt(r_full)};
  std::vector<double> ts(pol.ts.begin(), pol.ts.end());
  const SeriesFit fit = regret_growth_fit(ts, pol.mean_regret);
  if (fit.slope_vs_t > 1e-4)
    return {false, "linear trend " + fmt(fit.slope_vs_t) + " per step"};
  return {true, "mean regret " + fmt(r_half) + " -> " + fmt(r_full) +
                    ", linear trend " + fmt(fit.slope_vs_t)};
}

// --- criterion 7: logarithmic regret with nonqueueable resources -------------
Outcome criterion_7() {
  ExperimentConfig cfg = preset_config("instance2_default", 100000, 50, {"ss"});
  const ExperimentResult res = run_experiment(cfg);
  const PolicyResult& pol = res.policies[0];
  std::vector<double> ts(pol.ts.begin(), pol.ts.end());
  const SeriesFit fit = regret_growth_fit(ts, pol.mean_regret);
  if (fit.r_squared_log < 0.8)
    return {false, "log fit r^2 = " + fmt(fit.r_squared_log)};
  if (fit.slope_vs_logt <= 0.0)
    return {false, "log slope " + fmt(fit.slope_vs_logt) + " not positive"};
  if (fit.slope_vs_t > 1e-4)
    return {false, "linear trend " + fmt(fit.slope_vs_t) + " per step"};
  const int lo = grid_index(pol.ts, 1000);
  const int hi = grid_index(pol.ts, 100000);
  if (lo < 0 || hi < 0) return {false, "required grid points missing"};
  const double ratio = pol.mean_regret[static_cast<size_t>(hi)] /
                       pol.mean_regret[static_cast<size_t>(lo)];
  if (ratio < 1.2 || ratio > 3.5)
    return {false, "regret(1e5)/regret(1e3) = " + fmt(ratio)};
  return {true, "r^2 " + fmt(fit.r_squared_log) + ", log slope " +
                    fmt(fit.slope_vs_logt) + ", growth ratio " + fmt(ratio)};
}

// --- criterion 8: waste growth split across packing policies -----------------
Outcome criterion_8() {
  ExperimentConfig cfg =
      preset_config("binpack_eps64", 100000, 20, {"ss", "csirik", "csirik_nodead"});
  const ExperimentResult res = run_experiment(cfg);
  std::string summary;
  for (const PolicyResult& pol : res.policies) {
    const int tenth = grid_index(pol.ts, 10000);
    const int full = grid_index(pol.ts, 100000);
    if (tenth < 0 || full < 0) return {false, "required grid points missing"};
    const double w_tenth = pol.mean_waste[static_cast<size_t>(tenth)];
    const double w_full = pol.mean_waste[static_cast<size_t>(full)];
    if (pol.policy == "csirik") {
      if (w_full < w_tenth + 3.0)
        return {false, "unrestricted level heuristic stalled: waste " + fmt(w_tenth) +
                           " -> " + fmt(w_full)};
    } else {
      if (w_full > 1.5 * w_tenth)
        return {false, pol.policy + " waste kept growing: " + fmt(w_tenth) + " -> " +
                           fmt(w_full)};
    }
    summary += pol.policy + " " + fmt(w_tenth) + "->" + fmt(w_full) + "  ";
  }
  return {true, summary};
}

// --- criterion 9: per-step potential drift is bounded ------------------------
Outcome criterion_9() {
  const Preset p = make_preset("instance1_standin");
  ArrivalRates rates = p.rates;
  rates.horizon = 1000000;
  const SppSolution sol = solve_spp(p.instance, rates.lambda);
  auto process = make_iid(p.instance, rates, 1);
  auto policy = make_ss_policy();
  SimOptions opts;
  opts.keep_rows = false;
  double worst = 0.0;
  opts.observer = [&worst](const StepRecord& rec, const SimState&) {
    const double step = std::fabs(std::sqrt(std::max(0.0, rec.commit.phi_after)) -
                                  std::sqrt(std::max(0.0, rec.commit.phi_before)));
    worst = std::max(worst, step);
  };
  simulate(p.instance, sol.basis, *process, *policy, opts);
  const double bound = std::sqrt(2.0) + 1e-12;
  if (worst > bound)
    return {false, "max |d sqrt(potential)| = " + fmt(worst) + " > sqrt(2)"};
  return {true, "max |d sqrt(potential)| = " + fmt(worst) + " <= sqrt(2) over 1e6 steps"};
}

// --- criterion 10: supercritical potential drifts downward -------------------
Outcome criterion_10() {
  const Preset p = make_preset("instance2_default");
  ArrivalRates rates = p.rates;
  rates.horizon = 1000000;
  const SppSolution sol = solve_spp(p.instance, rates.lambda);
  const double eps0 = estimate_epsilon0(p.instance, rates.lambda, sol);
  const double n2 = 4.0 * static_cast<double>(p.instance.n) * static_cast<double>(p.instance.n);
  const double threshold = n2 / eps0;  // sqrt(potential) above this is supercritical

  auto process = make_iid(p.instance, rates, 1);
  auto policy = make_ss_policy();
  SimOptions opts;
  opts.keep_rows = false;
  long long events = 0;
  double sum = 0.0, sumsq = 0.0;
  opts.observer = [&](const StepRecord& rec, const SimState&) {
    const double before = std::sqrt(std::max(0.0, rec.commit.phi_before));
    if (before < threshold) return;
    const double step = std::sqrt(std::max(0.0, rec.commit.phi_after)) - before;
    ++events;
    sum += step;
    sumsq += step * step;
  };
  simulate(p.instance, sol.basis, *process, *policy, opts);

  if (events < 10000) {
    return {true, "vacuous: " + std::to_string(events) +
                      " supercritical steps (threshold " + fmt(threshold) +
                      "); drift bound untested at this scale"};
  }
  const double mean = sum / static_cast<double>(events);
  const double var =
      (sumsq - sum * mean) / static_cast<double>(events - 1);
  const double half_width = 2.326 * std::sqrt(std::max(0.0, var) / static_cast<double>(events));
  const double target = -eps0 / n2;
  if (mean + half_width > target)
    return {false, "supercritical drift " + fmt(mean) + " +- " + fmt(half_width) +
                       " not below " + fmt(target)};
  return {true, std::to_string(events) + " events, drift " + fmt(mean) + " below " +
                    fmt(target)};
}

// --- criterion 11: DP table equals direct recursion exactly ------------------
namespace dp_ref {
// Plain top-down evaluation of the same Bellman operator, summing resources in
// ascending order so equal results must be bit-identical.
double value(const MatchingInstance& inst, const std::vector<double>& lambda,
             const std::vector<int>& nq, const std::vector<int>& nq_cfg, int onq,
             long long horizon, int q_cap, long long t, long long q) {
  if (t > horizon) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    double term;
    if (i == onq) {
      term = value(inst, lambda, nq, nq_cfg, onq, horizon, q_cap, t + 1,
                   std::min<long long>(q + 1, q_cap));
    } else {
      const auto it = std::lower_bound(nq.begin(), nq.end(), i);
      if (it != nq.end() && *it == i) {
        const double r = inst.rewards[static_cast<size_t>(
            nq_cfg[static_cast<size_t>(it - nq.begin())])];
        if (q > 0) {
          const double matched =
              r + value(inst, lambda, nq, nq_cfg, onq, horizon, q_cap, t + 1, q - 1);
          const double passed =
              value(inst, lambda, nq, nq_cfg, onq, horizon, q_cap, t + 1, q);
          term = std::max(matched, passed);
        } else {
          term = value(inst, lambda, nq, nq_cfg, onq, horizon, q_cap, t + 1, q);
        }
      } else {
        term = value(inst, lambda, nq, nq_cfg, onq, horizon, q_cap, t + 1, q);
      }
    }
    acc += lambda[static_cast<size_t>(i)] * term;
  }
  return acc;
}
}  // namespace dp_ref

Outcome criterion_11() {
  const Preset p = make_preset("instance2_default");
  for (long long horizon = 1; horizon <= 8; ++horizon) {
    const DpPolicyTable table = dp_policy_build(p.instance, p.rates.lambda, horizon, 8);
    const double brute = dp_value_bruteforce(p.instance, p.rates.lambda, horizon, 8);
    if (table.value_at_start() != brute)
      return {false, "horizon " + std::to_string(horizon) + ": table " +
                         fmt(table.value_at_start()) + " != recursion " + fmt(brute)};
    for (long long q = 0; q <= 2; ++q) {
      const double ref =
          dp_ref::value(p.instance, p.rates.lambda, table.nq_resources, table.nq_config,
                        table.onq_resource, horizon, 8, 1, q);
      if (table.v0[static_cast<size_t>(q)] != ref)
        return {false, "horizon " + std::to_string(horizon) + ", start queue " +
                           std::to_string(q) + ": table " +
                           fmt(table.v0[static_cast<size_t>(q)]) + " != recursion " +
                           fmt(ref)};
    }
  }
  return {true, "table equals direct recursion bit-exactly, horizons 1..8, queues 0..2"};
}

// --- criterion 12: identical configurations produce identical trace bytes ----
Outcome criterion_12() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "sosmatch_acceptance_c12";
  fs::remove_all(base);
  const fs::path dir_a = base / "a";
  const fs::path dir_b = base / "b";
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);

  auto run_into = [&](const fs::path& dir) {
    ExperimentConfig cfg = preset_config("instance2_default", 5000, 2, {"ss"});
    cfg.record_every = 100;
    cfg.out_dir = dir.string();
    run_experiment(cfg);
  };
  run_into(dir_a);
  run_into(dir_b);

  auto bytes = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const fs::path other = dir_b / entry.path().filename();
    if (!fs::exists(other))
      return {false, "missing counterpart for " + entry.path().filename().string()};
    if (bytes(entry.path()) != bytes(other))
      return {false, entry.path().filename().string() + " differs between runs"};
    ++compared;
  }
  fs::remove_all(base);
  if (compared < 3) return {false, "expected trace and summary files, found " +
                                       std::to_string(compared)};
  return {true, std::to_string(compared) + " files byte-identical across reruns"};
}

struct Criterion {
  int number;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--criterion" && a + 1 < argc) {
      only = std::atoi(argv[++a]);
    } else if (arg.rfind("--criterion=", 0) == 0) {
      only = std::atoi(arg.c_str() + 12);
    } else if (arg == "--help" || arg == "-h") {
      std::printf("usage: acceptance [--criterion N]\n");
      return 0;
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", arg.c_str());
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, 5.0, criterion_1},    {2, 1.0, criterion_2},   {3, 10.0, criterion_3},
      {4, 10.0, criterion_4},   {5, 300.0, criterion_5}, {6, 120.0, criterion_6},
      {7, 300.0, criterion_7},  {8, 180.0, criterion_8}, {9, 120.0, criterion_9},
      {10, 300.0, criterion_10}, {11, 60.0, criterion_11}, {12, 60.0, criterion_12},
  };

  int failures = 0;
  bool matched = false;
  for (const Criterion& crit : criteria) {
    if (only != 0 && crit.number != only) continue;
    matched = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = crit.run();
    } catch (const std::exception& err) {
      outcome = {false, std::string("exception: ") + err.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.pass && elapsed > crit.budget_seconds) {
      outcome.pass = false;
      outcome.detail += " [time budget " + fmt(crit.budget_seconds) + "s exceeded]";
    }
    std::printf("[criterion %02d] %s (%.2fs) %s\n", crit.number,
                outcome.pass ? "PASS" : "FAIL", elapsed, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (only != 0 && !matched) {
    std::fprintf(stderr, "no criterion numbered %d\n", only);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
