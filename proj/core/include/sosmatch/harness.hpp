#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sosmatch/arrivals.hpp"
#include "sosmatch/instance.hpp"
#include "sosmatch/spp.hpp"
#include "sosmatch/trace.hpp"

namespace sosmatch {

// A named, ready-to-run experiment setup built in code. The same setups ship
// as JSON files under instances/ for the file-based CLI path.
struct Preset {
  std::string name;
  MatchingInstance instance;
  ArrivalRates rates;
  std::string process = "iid";        // iid | emulated | permuted
  long long block_size = 64;          // permuted only
  std::vector<std::string> policies;  // default policy set for the runner
};

Preset make_preset(const std::string& name);
std::vector<std::string> preset_names();

struct ExperimentConfig {
  MatchingInstance instance;
  ArrivalRates rates;
  std::string instance_label = "custom";
  std::string process = "iid";   // iid | emulated | permuted | scripted
  long long block_size = 64;     // permuted only
  std::string script_path;       // scripted only
  std::vector<std::string> policies{"ss"};
  int seeds = 20;
  uint64_t seed0 = 1;
  long long record_every = 0;    // 0: max(1, horizon / 1000)
  long long check_every = 0;     // forwarded to the engine audits (0: end only)
  std::string out_dir;           // empty: in-memory only, no files
};

// Joint least-squares fit y ~ a + slope_vs_logt * ln(t) + slope_vs_t * t.
// Fitting both regressors together separates a logarithmic trend from a
// residual linear one: a pure c*ln(t) series reports slope_vs_t ~ 0 no matter
// how large c is, while a linear series reports its per-step slope.
struct SeriesFit {
  double slope_vs_logt = 0.0;
  double slope_vs_t = 0.0;
  double r_squared_log = 0.0;    // coefficient of determination of the joint fit
};
SeriesFit regret_growth_fit(const std::vector<double>& ts, const std::vector<double>& ys);

struct PolicyResult {
  std::string policy;
  std::vector<long long> ts;                 // recorded step grid (same all seeds)
  std::vector<std::vector<double>> regret;   // [seed][grid point]
  std::vector<std::vector<double>> waste;    // [seed][grid point], bin packing only
  std::vector<double> mean_regret, std_regret;
  std::vector<double> mean_waste, std_waste;
  std::vector<double> final_true_reward;     // per seed
  std::vector<Trace> traces;                 // filled only when keep_traces
};

struct ExperimentResult {
  SppSolution spp;
  std::vector<double> planning_rates;  // per-step frequencies the LP was solved at
  double epsilon0 = 0.0;               // certified stability radius at those rates
  double tau = 0.0;                    // dependence horizon reported in headers
  long long horizon = 0;               // actual steps per run (after stretching)
  std::vector<PolicyResult> policies;
};

// Runs every configured policy for every seed (seeds run in parallel across
// SOSMATCH_WORKERS threads; results are reduced in seed order, so the output
// is independent of the thread schedule), fills the hindsight and regret
// columns, and, when out_dir is set, writes trace_<policy>_seed<seed>.csv and
// summary_<policy>.csv files.
ExperimentResult run_experiment(const ExperimentConfig& config, bool keep_traces = false);

// Fills hindsight_opt and regret on every row:
//  - general instances: regret = hindsight LP value - true reward, with the
//    in-ball dual shortcut when a certificate is given;
//  - bin packing: the hindsight optimum is the volume bound (item volume /
//    capacity bins, reward -1 each) and regret charges physical bins:
//    regret = bins - volume / capacity, which equals waste / capacity.
void fill_regret(Trace& trace, const MatchingInstance& inst,
                 const BallCertificate* certificate);

// Largest deviation, over recorded rows whose empirical rates lie within
// `radius` of the run's planning rates, of
//   |OPT(counts) - virtual reward - sum over queue columns of alpha_i * queue|
// with OPT recomputed by a fresh LP solve at every such row (no shortcut).
double identity_max_residual(const Trace& trace, const MatchingInstance& inst,
                             const SppSolution& spp, double radius);

// Summary files written by run_experiment, reread for fitting.
struct SummaryTable {
  std::map<std::string, std::string> meta;   // '#' key=value lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  int col(const std::string& name) const;    // -1 if absent
};
SummaryTable read_summary(const std::string& path);

// Worker threads used by run_experiment: the SOSMATCH_WORKERS environment
// variable when set (clamped to [1, 64]), otherwise min(hardware, 8).
int worker_count();

}  // namespace sosmatch
