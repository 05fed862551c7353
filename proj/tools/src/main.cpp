// Command-line front end: planning-LP solves, stability-radius checks,
// experiment runs, trace diagnostics, and growth fits.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sosmatch/baselines.hpp"
#include "sosmatch/engine.hpp"
#include "sosmatch/harness.hpp"
#include "sosmatch/instance.hpp"
#include "sosmatch/spp.hpp"
#include "sosmatch/trace.hpp"

namespace {

using namespace sosmatch;

void print_vector(const char* label, const std::vector<double>& v) {
  std::printf("%s", label);
  for (double x : v) std::printf(" %.12g", x);
  std::printf("\n");
}

void print_solution(const MatchingInstance& inst, const std::vector<double>& lambda,
                    const SppSolution& sol) {
  std::printf("value %.12g\n", sol.opt_value);
  std::printf("basis");
  for (int m : sol.basis) std::printf(" %d", m);
  std::printf("\n");
  print_vector("alpha", sol.alpha_star);
  std::printf("activity (nonzero):\n");
  for (int m = 0; m < inst.d(); ++m)
    if (sol.x_star[m] > 1e-12)
      std::printf("  config %d: x = %.12g  reward %.12g\n", m, sol.x_star[m],
                  inst.rewards[m]);
  (void)lambda;
}

struct CheckReport {
  int fails = 0;
  int total = 0;
  void line(bool ok, const std::string& name, const std::string& detail = "") {
    ++total;
    if (!ok) ++fails;
    std::printf("[%s] %s%s%s\n", ok ? " ok " : "FAIL", name.c_str(),
                detail.empty() ? "" : ": ", detail.c_str());
  }
  void skip(const std::string& name, const std::string& why) {
    std::printf("[skip] %s: %s\n", name.c_str(), why.c_str());
  }
};

int diagnose_trace(const Trace& trace, const MatchingInstance* inst) {
  CheckReport rep;
  const TraceHeader& h = trace.header;
  std::printf("trace: instance=%s policy=%s process=%s seed=%llu horizon=%lld "
              "rows=%zu\n",
              h.instance_label.c_str(), h.policy.c_str(), h.process.c_str(),
              static_cast<unsigned long long>(h.seed), h.horizon,
              trace.rows.size());

  if (trace.rows.empty()) {
    rep.line(h.horizon == 0, "empty trace only at zero horizon",
             "horizon=" + std::to_string(h.horizon));
    return rep.fails ? 1 : 0;
  }

  bool increasing = true, within = true, counts_ok = true, monotone_counts = true;
  bool order_ok = true, min_ok = true, phi_ok = true;
  long long prev_t = 0;
  std::vector<long long> prev_counts(trace.rows.front().arrival_counts.size(), 0);
  for (const TraceRow& row : trace.rows) {
    increasing = increasing && row.t > prev_t;
    within = within && row.t <= h.horizon;
    prev_t = row.t;
    long long total = 0;
    for (size_t i = 0; i < row.arrival_counts.size(); ++i) {
      total += row.arrival_counts[i];
      monotone_counts = monotone_counts && row.arrival_counts[i] >= prev_counts[i];
      prev_counts[i] = row.arrival_counts[i];
    }
    counts_ok = counts_ok && total == row.t;
    for (size_t k = 0; k < row.x_true.size(); ++k)
      order_ok = order_ok && row.x_true[k] >= 0 && row.x_true[k] <= row.x_virtual[k];
    for (size_t c = 0; c < row.min_vq.size(); ++c)
      min_ok = min_ok && row.min_vq[c] <= row.vq[c];
    phi_ok = phi_ok && row.phi >= -1e-9;
  }
  rep.line(increasing, "steps strictly increasing");
  rep.line(within, "steps within the declared horizon");
  rep.line(trace.rows.back().t == h.horizon, "final step recorded",
           "last t=" + std::to_string(trace.rows.back().t));
  rep.line(counts_ok, "arrival counts sum to the step index");
  rep.line(monotone_counts, "arrival counts never decrease");
  if (!h.basis.empty()) {
    rep.line(order_ok, "true matches within virtual matches");
    rep.line(min_ok, "queue minima below current queues");
    rep.line(phi_ok, "potential nonnegative");
  } else {
    rep.skip("queue checks", "trace has no basis columns");
  }

  bool regret_def_ok = true, regret_sign_ok = true;
  for (const TraceRow& row : trace.rows) {
    if (std::isnan(row.regret)) continue;
    if (h.has_waste) {
      regret_sign_ok = regret_sign_ok && row.regret >= -1e-6;
    } else if (!std::isnan(row.hindsight_opt)) {
      regret_def_ok = regret_def_ok &&
                      std::fabs(row.regret - (row.hindsight_opt - row.true_reward)) <=
                          1e-9;
    }
  }
  if (h.has_waste) {
    bool waste_ok = true, bins_ok = true;
    long long prev_bins = 0;
    for (const TraceRow& row : trace.rows) {
      waste_ok = waste_ok && !(row.waste < -1e-9);
      bins_ok = bins_ok && row.bins >= prev_bins;
      prev_bins = row.bins;
    }
    rep.line(waste_ok, "waste nonnegative");
    rep.line(bins_ok, "bin count never decreases");
    rep.line(regret_sign_ok, "regret never below the volume bound");
  } else {
    rep.line(regret_def_ok, "regret equals hindsight optimum minus reward");
  }

  if (inst) {
    rep.line(inst->hash() == h.instance_hash, "instance hash matches the trace");
    if (!h.basis.empty()) {
      std::map<int, int> slot_of;
      for (size_t k = 0; k < h.basis.size(); ++k)
        slot_of[h.basis[k]] = static_cast<int>(k);
      bool conserve_ok = true, reward_ok = true;
      for (const TraceRow& row : trace.rows) {
        std::vector<long long> committed(row.arrival_counts.size(), 0);
        for (size_t c = 0; c < h.queue_cols.size(); ++c) {
          const auto [i, m] = h.queue_cols[c];
          committed[i] += row.vq[c] + row.x_virtual[slot_of.at(m)] * inst->mult(i, m);
        }
        for (size_t i = 0; i < committed.size(); ++i)
          conserve_ok = conserve_ok && committed[i] == row.arrival_counts[i];
        double reward = 0.0, vreward = 0.0;
        for (size_t k = 0; k < h.basis.size(); ++k) {
          reward += inst->rewards[h.basis[k]] * static_cast<double>(row.x_true[k]);
          vreward += inst->rewards[h.basis[k]] * static_cast<double>(row.x_virtual[k]);
        }
        reward_ok = reward_ok && std::fabs(reward - row.true_reward) <= 1e-9 &&
                    std::fabs(vreward - row.virtual_reward) <= 1e-9;
      }
      rep.line(conserve_ok, "every arrival accounted in queues plus matches");
      rep.line(reward_ok, "reward columns match completion counts");
    }
  } else {
    rep.skip("instance cross-checks", "pass --instance to enable");
  }

  std::printf("%d/%d checks passed\n", rep.total - rep.fails, rep.total);
  return rep.fails ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiway matching planner, simulator, and diagnostics"};
  app.require_subcommand(1);

  std::string instance_path, preset_name, out_path, script_path;
  std::vector<double> lambda_override;
  double epsilon = -1.0;

  auto* solve = app.add_subcommand("solve", "solve the planning LP of an instance file");
  solve->add_option("instance", instance_path, "instance JSON file")->required();
  solve->add_option("--lambda", lambda_override, "override arrival rates");

  auto* gpg = app.add_subcommand(
      "gpg", "check or estimate the stability radius of the planning solution");
  gpg->add_option("instance", instance_path, "instance JSON file")->required();
  gpg->add_option("--lambda", lambda_override, "override arrival rates");
  gpg->add_option("--epsilon", epsilon, "check this radius instead of estimating");

  auto* sim = app.add_subcommand("simulate", "run policies over seeded arrival streams");
  std::vector<std::string> policies;
  std::string process_override;
  long long horizon_override = 0, record_every = 0, check_every = 0, block_size = 0;
  int seeds = 20;
  uint64_t seed0 = 1;
  sim->add_option("--preset", preset_name, "built-in experiment preset");
  sim->add_option("--instance", instance_path, "instance JSON file");
  sim->add_option("--policy", policies,
                  "policies to run (ss, dp, naive, csirik, csirik_nodead)");
  sim->add_option("--process", process_override, "iid, emulated, permuted, scripted");
  sim->add_option("--script", script_path, "arrival script file (scripted process)");
  sim->add_option("--horizon", horizon_override, "override the nominal horizon");
  sim->add_option("--seeds", seeds, "number of seeded runs per policy");
  sim->add_option("--seed0", seed0, "first seed");
  sim->add_option("--record-every", record_every,
                  "trace row cadence (default horizon/1000)");
  sim->add_option("--check-every", check_every,
                  "invariant audit cadence (default: end of run only)");
  sim->add_option("--block-size", block_size, "block length for the permuted process");
  sim->add_option("--out", out_path, "directory for trace and summary files");

  auto* diag = app.add_subcommand("diagnose", "validate a recorded trace file");
  std::string trace_path;
  diag->add_option("trace", trace_path, "trace CSV file")->required();
  diag->add_option("--instance", instance_path, "instance JSON for cross-checks");

  auto* fit = app.add_subcommand("fit", "fit growth of a summary column");
  std::string summary_path, column = "mean_regret";
  double tmin = 0.0;
  fit->add_option("summary", summary_path, "summary CSV file")->required();
  fit->add_option("--column", column, "column to fit (default mean_regret)");
  fit->add_option("--tmin", tmin, "ignore rows with t below this");

  auto* exp = app.add_subcommand("export", "write a built-in preset as a JSON file");
  exp->add_option("--preset", preset_name, "preset name")->required();
  exp->add_option("--out", out_path, "output JSON path")->required();

  auto* presets = app.add_subcommand("presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve || *gpg) {
      InstanceFile file = load_instance_file(instance_path);
      std::vector<double> lambda =
          lambda_override.empty() ? file.rates.lambda : lambda_override;
      if (static_cast<int>(lambda.size()) != file.instance.n)
        throw std::invalid_argument("lambda override length != resource count");
      const SppSolution sol = solve_spp(file.instance, lambda);
      print_solution(file.instance, lambda, sol);
      if (*gpg) {
        if (epsilon >= 0.0) {
          const GpgReport report = check_gpg(file.instance, lambda, sol, epsilon);
          std::printf("radius %.12g: %s\n", epsilon, report.holds ? "holds" : "fails");
          if (!report.holds) std::printf("witness: %s\n", report.failing_direction.c_str());
          return report.holds ? 0 : 1;
        }
        std::printf("epsilon0 %.12g\n",
                    estimate_epsilon0(file.instance, lambda, sol));
      }
      return 0;
    }

    if (*sim) {
      ExperimentConfig config;
      if (!preset_name.empty()) {
        Preset preset = make_preset(preset_name);
        config.instance = std::move(preset.instance);
        config.rates = preset.rates;
        config.instance_label = preset.name;
        config.process = preset.process;
        config.block_size = preset.block_size;
        config.policies = preset.policies;
      } else if (!instance_path.empty()) {
        InstanceFile file = load_instance_file(instance_path);
        config.instance = std::move(file.instance);
        config.rates = file.rates;
        config.instance_label = instance_path;
        config.process = config.instance.has_offline() ? "emulated" : "iid";
      } else {
        std::fprintf(stderr, "simulate needs --preset or --instance\n");
        return 2;
      }
      if (!policies.empty()) config.policies = policies;
      if (!process_override.empty()) config.process = process_override;
      if (horizon_override > 0) config.rates.horizon = horizon_override;
      if (block_size > 0) config.block_size = block_size;
      config.script_path = script_path;
      config.seeds = seeds;
      config.seed0 = seed0;
      config.record_every = record_every;
      config.check_every = check_every;
      config.out_dir = out_path;

      const ExperimentResult result = run_experiment(config);
      std::printf("planning value %.12g  basis", result.spp.opt_value);
      for (int m : result.spp.basis) std::printf(" %d", m);
      std::printf("\nepsilon0 %.12g  horizon %lld  tau %.12g  workers %d\n",
                  result.epsilon0, result.horizon, result.tau, worker_count());
      for (const PolicyResult& pr : result.policies) {
        const size_t last = pr.ts.empty() ? 0 : pr.ts.size() - 1;
        std::printf("policy %-14s", pr.policy.c_str());
        if (!pr.ts.empty()) {
          std::printf(" final mean regret %.6g (std %.6g)",
                      pr.mean_regret[last], pr.std_regret[last]);
          if (!pr.mean_waste.empty())
            std::printf("  final mean waste %.6g (std %.6g)",
                        pr.mean_waste[last], pr.std_waste[last]);
          std::vector<double> ts(pr.ts.begin(), pr.ts.end());
          const SeriesFit growth = regret_growth_fit(ts, pr.mean_regret);
          std::printf("  slope/logt %.6g (r2 %.3f)  slope/t %.3g",
                      growth.slope_vs_logt, growth.r_squared_log,
                      growth.slope_vs_t);
        }
        std::printf("\n");
      }
      if (!out_path.empty()) std::printf("files written under %s\n", out_path.c_str());
      return 0;
    }

    if (*diag) {
      const Trace trace = read_trace(trace_path);
      std::optional<InstanceFile> file;
      if (!instance_path.empty()) file = load_instance_file(instance_path);
      return diagnose_trace(trace, file ? &file->instance : nullptr);
    }

    if (*fit) {
      const SummaryTable table = read_summary(summary_path);
      const int tcol = table.col("t");
      const int ycol = table.col(column);
      if (tcol < 0 || ycol < 0) {
        std::fprintf(stderr, "summary lacks column 't' or '%s'\n", column.c_str());
        return 2;
      }
      std::vector<double> ts, ys;
      for (const std::vector<double>& row : table.rows) {
        if (row[tcol] < tmin) continue;
        ts.push_back(row[tcol]);
        ys.push_back(row[ycol]);
      }
      const SeriesFit growth = regret_growth_fit(ts, ys);
      std::printf("points %zu\nslope vs log t %.12g\nr2 (log fit) %.12g\n"
                  "slope vs t %.12g\n",
                  ts.size(), growth.slope_vs_logt, growth.r_squared_log,
                  growth.slope_vs_t);
      return 0;
    }

    if (*exp) {
      const Preset preset = make_preset(preset_name);
      save_instance_file(out_path, preset.instance, preset.rates);
      std::printf("wrote %s\n", out_path.c_str());
      return 0;
    }

    if (*presets) {
      for (const std::string& name : preset_names()) {
        const Preset preset = make_preset(name);
        std::printf("%-22s n=%d d=%d horizon=%lld process=%s policies=",
                    name.c_str(), preset.instance.n, preset.instance.d(),
                    preset.rates.horizon, preset.process.c_str());
        for (size_t k = 0; k < preset.policies.size(); ++k)
          std::printf("%s%s", k ? "," : "", preset.policies[k].c_str());
        std::printf("\n");
      }
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
