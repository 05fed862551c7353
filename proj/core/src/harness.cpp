#include "sosmatch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "sosmatch/baselines.hpp"
#include "sosmatch/engine.hpp"

namespace sosmatch {
namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("harness: " + msg);
}

void append_double(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_ll(std::string& out, long long v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(line.substr(start));
      break;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

MatchingInstance instance1_standin() {
  MatchingInstance inst;
  inst.n = 5;
  inst.classes.assign(5, ResourceClass::OnlineQueueable);
  // Columns: three productive configurations, then one discard per resource.
  inst.multiplicity = {
      {1, 1, 0, 1, 0, 0, 0, 0},
      {1, 0, 1, 0, 1, 0, 0, 0},
      {1, 0, 0, 0, 0, 1, 0, 0},
      {0, 1, 0, 0, 0, 0, 1, 0},
      {0, 0, 1, 0, 0, 0, 0, 1},
  };
  inst.rewards = {10, 4, 4, 0, 0, 0, 0, 0};
  inst.discard_config = {3, 4, 5, 6, 7};
  return inst;
}

MatchingInstance instance2() {
  MatchingInstance inst;
  inst.n = 3;
  inst.classes = {ResourceClass::OnlineQueueable, ResourceClass::OnlineNonqueueable,
                  ResourceClass::OnlineNonqueueable};
  inst.multiplicity = {
      {1, 1, 1, 0, 0},
      {1, 0, 0, 1, 0},
      {0, 1, 0, 0, 1},
  };
  inst.rewards = {5, 1, 0, 0, 0};
  inst.discard_config = {2, 3, 4};
  return inst;
}

MatchingInstance nrm_demo_instance() {
  MatchingInstance inst;
  inst.n = 3;
  inst.classes = {ResourceClass::Offline, ResourceClass::OnlineQueueable,
                  ResourceClass::OnlineNonqueueable};
  inst.multiplicity = {
      {1, 1, 1, 0, 0},
      {1, 0, 0, 1, 0},
      {0, 1, 0, 0, 1},
  };
  inst.rewards = {3, 2, 0, 0, 0};
  inst.discard_config = {2, 3, 4};
  return inst;
}

std::unique_ptr<ArrivalProcess> build_process(const ExperimentConfig& config,
                                              uint64_t seed) {
  if (config.process == "iid") return make_iid(config.instance, config.rates, seed);
  if (config.process == "emulated")
    return make_emulated(config.instance, config.rates, seed);
  if (config.process == "permuted")
    return make_locally_permuted(config.instance, config.rates, config.block_size,
                                 seed);
  if (config.process == "scripted")
    return make_scripted_from_file(config.instance, config.script_path);
  fail("unknown arrival process '" + config.process + "'");
}

double sample_std(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

void write_summary(const std::string& path, const ExperimentConfig& config,
                   const PolicyResult& result, long long horizon,
                   bool bin_packing) {
  std::string out;
  out += "# sosmatch-summary v1\n";
  out += "# instance=" + config.instance_label + "\n";
  out += "# policy=" + result.policy + "\n";
  out += "# process=" + config.process + "\n";
  out += "# seeds=" + std::to_string(config.seeds) + "\n";
  out += "# horizon=" + std::to_string(horizon) + "\n";
  out += "t,mean_regret,std_regret";
  if (bin_packing) out += ",mean_waste,std_waste";
  for (size_t s = 0; s < result.regret.size(); ++s)
    out += ",regret_seed" + std::to_string(config.seed0 + s);
  out += "\n";
  for (size_t g = 0; g < result.ts.size(); ++g) {
    append_ll(out, result.ts[g]);
    out += ',';
    append_double(out, result.mean_regret[g]);
    out += ',';
    append_double(out, result.std_regret[g]);
    if (bin_packing) {
      out += ',';
      append_double(out, result.mean_waste[g]);
      out += ',';
      append_double(out, result.std_waste[g]);
    }
    for (size_t s = 0; s < result.regret.size(); ++s) {
      out += ',';
      append_double(out, result.regret[s][g]);
    }
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail("cannot open summary for write: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) fail("summary write failed: " + path);
}

}  // namespace

Preset make_preset(const std::string& name) {
  Preset preset;
  preset.name = name;
  if (name == "instance1_standin") {
    preset.instance = instance1_standin();
    preset.rates = {{0.25, 0.25, 0.10, 0.20, 0.20}, 100000};
    preset.policies = {"ss", "naive"};
    return preset;
  }
  if (name == "instance2_default") {
    preset.instance = instance2();
    preset.rates = {{0.35, 0.30, 0.35}, 100000};
    preset.policies = {"ss", "dp"};
    return preset;
  }
  if (name == "instance2_proofrates") {
    preset.instance = instance2();
    preset.rates = {{0.36, 0.32, 0.32}, 100000};
    preset.policies = {"ss", "dp"};
    return preset;
  }
  if (name == "binpack_eps8") {
    preset.instance = binpacking_instance(9, {2, 3});
    preset.rates = {{1.0 - 3.0 / 8.0, 3.0 / 8.0}, 100000};
    preset.policies = {"ss", "csirik", "csirik_nodead"};
    return preset;
  }
  if (name == "binpack_eps64") {
    preset.instance = binpacking_instance(9, {2, 3});
    preset.rates = {{1.0 - 17.0 / 64.0, 17.0 / 64.0}, 100000};
    preset.policies = {"ss", "csirik", "csirik_nodead"};
    return preset;
  }
  if (name == "nrm_demo") {
    preset.instance = nrm_demo_instance();
    preset.rates = {{0.5, 0.6, 0.4}, 20000};
    preset.process = "emulated";
    preset.policies = {"ss"};
    return preset;
  }
  throw std::invalid_argument("unknown preset '" + name + "'; available: " +
                              [] {
                                std::string s;
                                for (const std::string& p : preset_names()) {
                                  if (!s.empty()) s += ", ";
                                  s += p;
                                }
                                return s;
                              }());
}

std::vector<std::string> preset_names() {
  return {"instance1_standin", "instance2_default", "instance2_proofrates",
          "binpack_eps8",      "binpack_eps64",     "nrm_demo"};
}

SeriesFit regret_growth_fit(const std::vector<double>& ts,
                            const std::vector<double>& ys) {
  std::vector<double> t, y;
  for (size_t k = 0; k < ts.size() && k < ys.size(); ++k)
    if (ts[k] > 0 && std::isfinite(ys[k])) {
      t.push_back(ts[k]);
      y.push_back(ys[k]);
    }
  SeriesFit fit;
  const size_t n = t.size();
  if (n < 2) return fit;

  // Joint regression y ~ a + b ln(t) + c t on centered variables. Solving for
  // both slopes at once lets the logarithmic regressor absorb a log trend, so
  // slope_vs_t reports only the residual linear component.
  double mu = 0.0, mv = 0.0, my = 0.0;
  std::vector<double> logt(n);
  for (size_t k = 0; k < n; ++k) {
    logt[k] = std::log(t[k]);
    mu += logt[k];
    mv += t[k];
    my += y[k];
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double suu = 0.0, svv = 0.0, suv = 0.0, suy = 0.0, svy = 0.0, syy = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const double u = logt[k] - mu;
    const double v = t[k] - mv;
    const double w = y[k] - my;
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suy += u * w;
    svy += v * w;
    syy += w * w;
  }
  const double det = suu * svv - suv * suv;
  if (det > 1e-12 * std::max(1.0, suu * svv)) {
    fit.slope_vs_logt = (svv * suy - suv * svy) / det;
    fit.slope_vs_t = (suu * svy - suv * suy) / det;
  } else if (suu > 0.0) {
    // Degenerate grid (e.g. two points): the regressors are collinear, so a
    // single-variable log fit is the best-determined answer.
    fit.slope_vs_logt = suy / suu;
    fit.slope_vs_t = 0.0;
  }
  if (syy > 0.0) {
    double ssr = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double res = (y[k] - my) - fit.slope_vs_logt * (logt[k] - mu) -
                         fit.slope_vs_t * (t[k] - mv);
      ssr += res * res;
    }
    fit.r_squared_log = std::max(0.0, 1.0 - ssr / syy);
  } else {
    fit.r_squared_log = 1.0;
  }
  return fit;
}

void fill_regret(Trace& trace, const MatchingInstance& inst,
                 const BallCertificate* certificate) {
  if (inst.is_bin_packing()) {
    const double cap = static_cast<double>(inst.bin_capacity);
    for (TraceRow& row : trace.rows) {
      long long volume = 0;
      for (int i = 0; i < inst.n; ++i)
        volume += static_cast<long long>(inst.item_sizes[i]) * row.arrival_counts[i];
      const double lp_bins = static_cast<double>(volume) / cap;
      row.hindsight_opt = -lp_bins;  // reward scale: -1 per bin
      row.regret = static_cast<double>(row.bins) - lp_bins;
    }
    return;
  }
  for (TraceRow& row : trace.rows) {
    const std::optional<double> opt =
        hindsight_opt(inst, row.arrival_counts, certificate);
    if (opt) {
      row.hindsight_opt = *opt;
      row.regret = *opt - row.true_reward;
    } else {
      row.hindsight_opt = std::numeric_limits<double>::quiet_NaN();
      row.regret = std::numeric_limits<double>::quiet_NaN();
    }
  }
}

double identity_max_residual(const Trace& trace, const MatchingInstance& inst,
                             const SppSolution& spp, double radius) {
  const std::vector<double>& bar = trace.header.lambda_bar;
  double worst = 0.0;
  for (const TraceRow& row : trace.rows) {
    if (row.t <= 0) continue;
    std::vector<double> hat(bar.size());
    for (size_t i = 0; i < bar.size(); ++i)
      hat[i] = static_cast<double>(row.arrival_counts[i]) /
               static_cast<double>(row.t);
    if (tv_distance(hat, bar) > radius) continue;
    const std::optional<double> opt = hindsight_opt(inst, row.arrival_counts);
    if (!opt)
      fail("hindsight LP infeasible inside the certified ball at step " +
           std::to_string(row.t));
    double queue_price = 0.0;
    for (size_t c = 0; c < trace.header.queue_cols.size(); ++c)
      queue_price += spp.alpha_star[trace.header.queue_cols[c].first] *
                     static_cast<double>(row.vq[c]);
    const double residual = std::fabs(*opt - row.virtual_reward - queue_price);
    worst = std::max(worst, residual);
  }
  return worst;
}

int worker_count() {
  if (const char* env = std::getenv("SOSMATCH_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) return std::min(parsed, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1, std::min<int>(static_cast<int>(hw ? hw : 1), 8));
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool keep_traces) {
  const MatchingInstance& inst = config.instance;
  {
    const std::vector<std::string> problems = validate(inst, config.rates);
    if (!problems.empty()) {
      std::string joined;
      for (const std::string& p : problems) joined += " [" + p + "]";
      fail("invalid experiment setup:" + joined);
    }
  }

  ExperimentResult result;
  {
    // One probe process defines the planning rates and the per-run horizon
    // (identical for every seed by construction).
    const std::unique_ptr<ArrivalProcess> probe = build_process(config, config.seed0);
    result.planning_rates = probe->mean_rates();
    result.horizon = probe->horizon();
  }
  result.spp = solve_spp(inst, result.planning_rates);
  result.epsilon0 = estimate_epsilon0(inst, result.planning_rates, result.spp);

  if (config.process == "emulated") {
    int offline = 0;
    double min_rate = 1.0;
    for (int i = 0; i < inst.n; ++i) {
      if (inst.classes[i] == ResourceClass::Offline) ++offline;
      if (result.planning_rates[i] > 0.0)
        min_rate = std::min(min_rate, result.planning_rates[i]);
    }
    result.tau = static_cast<double>(offline + 1) / min_rate;
  } else if (config.process == "permuted") {
    result.tau = static_cast<double>(config.block_size);
  } else if (config.process == "iid") {
    // independent draws: the smoothing window degenerates to a single step,
    // matching a locally permuted process with block size one
    result.tau = 1.0;
  }

  BallCertificate cert{result.planning_rates, result.spp.alpha_star, result.epsilon0};
  const BallCertificate* cert_ptr = result.epsilon0 > 0.0 ? &cert : nullptr;
  const long long eff_record = config.record_every > 0
                                   ? config.record_every
                                   : std::max<long long>(1, result.horizon / 1000);
  if (!config.out_dir.empty())
    std::filesystem::create_directories(config.out_dir);
  if (config.seeds < 1) fail("need at least one seed");

  for (const std::string& policy : config.policies) {
    // The dynamic program's table depends only on the horizon, so build it
    // once and share it across seeds.
    DpPolicyTable dp_table;
    if (policy == "dp")
      dp_table = dp_policy_build(inst, result.planning_rates, result.horizon);

    std::vector<Trace> traces(static_cast<size_t>(config.seeds));
    std::atomic<int> next_seed{0};
    std::vector<std::exception_ptr> errors(
        static_cast<size_t>(worker_count()), nullptr);

    auto worker = [&](int w) {
      try {
        while (true) {
          const int s = next_seed.fetch_add(1);
          if (s >= config.seeds) break;
          const uint64_t seed = config.seed0 + static_cast<uint64_t>(s);
          std::unique_ptr<ArrivalProcess> process = build_process(config, seed);
          Trace trace;
          if (policy == "ss") {
            std::unique_ptr<Policy> ss = make_ss_policy();
            SimOptions opts;
            opts.record_every = eff_record;
            opts.check_every = config.check_every;
            trace = simulate(inst, result.spp.basis, *process, *ss, opts);
          } else if (policy == "csirik") {
            trace = simulate_csirik(inst, *process, false, eff_record);
          } else if (policy == "csirik_nodead") {
            trace = simulate_csirik(inst, *process, true, eff_record);
          } else if (policy == "dp") {
            trace = simulate_dp(inst, *process, dp_table, eff_record);
          } else if (policy == "naive") {
            trace = simulate_naive(inst, *process, eff_record);
          } else {
            fail("unknown policy '" + policy + "'");
          }
          trace.header.seed = seed;
          trace.header.instance_label = config.instance_label;
          trace.header.tau = result.tau;
          fill_regret(trace, inst, cert_ptr);
          traces[static_cast<size_t>(s)] = std::move(trace);
        }
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    };

    const int workers = std::min(worker_count(), config.seeds);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& err : errors)
      if (err) std::rethrow_exception(err);

    PolicyResult pr;
    pr.policy = policy;
    for (const TraceRow& row : traces[0].rows) pr.ts.push_back(row.t);
    const size_t grid = pr.ts.size();
    pr.regret.resize(traces.size());
    if (inst.is_bin_packing()) pr.waste.resize(traces.size());
    for (size_t s = 0; s < traces.size(); ++s) {
      if (traces[s].rows.size() != grid)
        fail("recorded grids differ across seeds");
      pr.regret[s].reserve(grid);
      for (size_t g = 0; g < grid; ++g) {
        if (traces[s].rows[g].t != pr.ts[g])
          fail("recorded grids differ across seeds");
        pr.regret[s].push_back(traces[s].rows[g].regret);
        if (inst.is_bin_packing()) pr.waste[s].push_back(traces[s].rows[g].waste);
      }
      pr.final_true_reward.push_back(
          grid > 0 ? traces[s].rows[grid - 1].true_reward : 0.0);
    }
    pr.mean_regret.resize(grid);
    pr.std_regret.resize(grid);
    if (inst.is_bin_packing()) {
      pr.mean_waste.resize(grid);
      pr.std_waste.resize(grid);
    }
    std::vector<double> column(traces.size());
    for (size_t g = 0; g < grid; ++g) {
      for (size_t s = 0; s < traces.size(); ++s) column[s] = pr.regret[s][g];
      double mean = 0.0;
      for (double v : column) mean += v;
      mean /= static_cast<double>(column.size());
      pr.mean_regret[g] = mean;
      pr.std_regret[g] = sample_std(column, mean);
      if (inst.is_bin_packing()) {
        for (size_t s = 0; s < traces.size(); ++s) column[s] = pr.waste[s][g];
        double wmean = 0.0;
        for (double v : column) wmean += v;
        wmean /= static_cast<double>(column.size());
        pr.mean_waste[g] = wmean;
        pr.std_waste[g] = sample_std(column, wmean);
      }
    }

    if (!config.out_dir.empty()) {
      for (size_t s = 0; s < traces.size(); ++s) {
        const std::string path = config.out_dir + "/trace_" + policy + "_seed" +
                                 std::to_string(config.seed0 + s) + ".csv";
        write_trace(traces[s], path);
      }
      write_summary(config.out_dir + "/summary_" + policy + ".csv", config, pr,
                    result.horizon, inst.is_bin_packing());
    }
    if (keep_traces) pr.traces = std::move(traces);
    result.policies.push_back(std::move(pr));
  }
  return result;
}

int SummaryTable::col(const std::string& name) const {
  for (size_t k = 0; k < columns.size(); ++k)
    if (columns[k] == name) return static_cast<int>(k);
  return -1;
}

SummaryTable read_summary(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail("cannot open summary: " + path);
  SummaryTable table;
  std::string line;
  bool have_columns = false;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body = body.substr(1);
      const size_t eq = body.find('=');
      if (eq != std::string::npos)
        table.meta[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!have_columns) {
      table.columns = split(line, ',');
      have_columns = true;
      continue;
    }
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != table.columns.size())
      fail("summary row width mismatch in " + path);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) {
      if (f == "nan") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        fail("bad number '" + f + "' in " + path);
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace sosmatch
