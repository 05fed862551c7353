#include "sosmatch/trace.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace sosmatch {
namespace {

// Shortest representation that round-trips exactly; stable across runs of the
// same binary, which is what the reproducibility guarantee is stated over.
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

template <typename T, typename Fmt>
std::string join(const std::vector<T>& values, Fmt fmt) {
  std::string out;
  for (size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    fmt(out, values[k]);
  }
  return out;
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

double parse_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("trace: bad number for " + what + ": '" + s + "'");
  return v;
}

long long parse_ll(const std::string& s, const std::string& what) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("trace: bad integer for " + what + ": '" + s + "'");
  return v;
}

}  // namespace

int Trace::row_at_or_before(long long target) const {
  int best = -1;
  for (size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].t <= target) best = static_cast<int>(k);
    else break;
  }
  return best;
}

void write_trace(const Trace& trace, const std::string& path) {
  const TraceHeader& h = trace.header;
  std::string out;
  out.reserve(256 + trace.rows.size() * 128);

  out += "# sosmatch-trace v1\n";
  out += "# instance=" + h.instance_label + "\n";
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h.instance_hash));
    out += "# instance_hash=";
    out += buf;
    out += "\n";
  }
  out += "# policy=" + h.policy + "\n";
  out += "# process=" + h.process + "\n";
  out += "# seed=" + std::to_string(h.seed) + "\n";
  out += "# horizon=" + std::to_string(h.horizon) + "\n";
  out += "# record_every=" + std::to_string(h.record_every) + "\n";
  out += "# basis=" +
         join(h.basis, [](std::string& s, int v) { s += std::to_string(v); }) +
         "\n";
  out += "# sigma=" + h.sigma + "\n";
  out += "# tau=";
  append_double(out, h.tau);
  out += "\n";
  out += "# lambda_bar=" + join(h.lambda_bar, append_double) + "\n";

  // Column header. Fixed prefix, then per-resource arrival counts, completion
  // counters per basis configuration, queue minima and current queues per
  // (resource, configuration) column, and for bin packing waste plus bins.
  out += "t,arrival,committed_config,true_reward,virtual_reward,hindsight_opt,"
         "regret,phi";
  size_t n_res = h.lambda_bar.size();
  for (size_t i = 0; i < n_res; ++i) out += ",a_" + std::to_string(i);
  for (int m : h.basis) out += ",x_" + std::to_string(m);
  for (int m : h.basis) out += ",vx_" + std::to_string(m);
  for (auto [i, m] : h.queue_cols)
    out += ",minq_" + std::to_string(i) + "_" + std::to_string(m);
  for (auto [i, m] : h.queue_cols)
    out += ",q_" + std::to_string(i) + "_" + std::to_string(m);
  if (h.has_waste) out += ",waste,bins";
  out += "\n";

  for (const TraceRow& row : trace.rows) {
    append_ll(out, row.t);
    out += ',';
    append_ll(out, row.arrival);
    out += ',';
    append_ll(out, row.committed_config);
    out += ',';
    append_double(out, row.true_reward);
    out += ',';
    append_double(out, row.virtual_reward);
    out += ',';
    append_double(out, row.hindsight_opt);
    out += ',';
    append_double(out, row.regret);
    out += ',';
    append_double(out, row.phi);
    for (long long v : row.arrival_counts) {
      out += ',';
      append_ll(out, v);
    }
    for (long long v : row.x_true) {
      out += ',';
      append_ll(out, v);
    }
    for (long long v : row.x_virtual) {
      out += ',';
      append_ll(out, v);
    }
    for (long long v : row.min_vq) {
      out += ',';
      append_ll(out, v);
    }
    for (long long v : row.vq) {
      out += ',';
      append_ll(out, v);
    }
    if (h.has_waste) {
      out += ',';
      append_double(out, row.waste);
      out += ',';
      append_ll(out, row.bins);
    }
    out += '\n';
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("trace: cannot open for write: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("trace: write failed: " + path);
}

Trace read_trace(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("trace: cannot open for read: " + path);

  Trace trace;
  TraceHeader& h = trace.header;
  std::string line;
  bool saw_magic = false;
  std::string columns_line;

  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body = body.substr(1);
      if (body == "sosmatch-trace v1") {
        saw_magic = true;
        continue;
      }
      size_t eq = body.find('=');
      if (eq == std::string::npos) continue;
      std::string key = body.substr(0, eq);
      std::string value = body.substr(eq + 1);
      if (key == "instance") h.instance_label = value;
      else if (key == "instance_hash")
        h.instance_hash = std::stoull(value, nullptr, 16);
      else if (key == "policy") h.policy = value;
      else if (key == "process") h.process = value;
      else if (key == "seed") h.seed = std::stoull(value);
      else if (key == "horizon") h.horizon = parse_ll(value, "horizon");
      else if (key == "record_every")
        h.record_every = parse_ll(value, "record_every");
      else if (key == "basis") {
        h.basis.clear();
        if (!value.empty())
          for (const std::string& p : split(value, ','))
            h.basis.push_back(static_cast<int>(parse_ll(p, "basis")));
      } else if (key == "sigma") h.sigma = value;
      else if (key == "tau") h.tau = parse_double(value, "tau");
      else if (key == "lambda_bar") {
        h.lambda_bar.clear();
        if (!value.empty())
          for (const std::string& p : split(value, ','))
            h.lambda_bar.push_back(parse_double(p, "lambda_bar"));
      }
      continue;
    }
    // First non-comment line is the column header.
    columns_line = line;
    break;
  }
  if (!saw_magic)
    throw std::runtime_error("trace: missing format marker in " + path);
  if (columns_line.empty()) return trace;  // header-only file (empty run)

  std::vector<std::string> cols = split(columns_line, ',');
  size_t n_res = 0, n_basis = 0;
  h.queue_cols.clear();
  h.has_waste = false;
  for (const std::string& c : cols) {
    if (c.rfind("a_", 0) == 0) ++n_res;
    else if (c.rfind("x_", 0) == 0) ++n_basis;
    else if (c.rfind("q_", 0) == 0) {
      std::vector<std::string> parts = split(c, '_');
      if (parts.size() != 3)
        throw std::runtime_error("trace: malformed queue column: " + c);
      h.queue_cols.emplace_back(static_cast<int>(parse_ll(parts[1], c)),
                                static_cast<int>(parse_ll(parts[2], c)));
    } else if (c == "waste") h.has_waste = true;
  }
  const size_t n_q = h.queue_cols.size();
  const size_t expected =
      8 + n_res + 2 * n_basis + 2 * n_q + (h.has_waste ? 2 : 0);
  if (cols.size() != expected)
    throw std::runtime_error("trace: unexpected column count in " + path);

  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = split(line, ',');
    if (f.size() != expected)
      throw std::runtime_error("trace: row field count mismatch in " + path);
    TraceRow row;
    size_t k = 0;
    row.t = parse_ll(f[k++], "t");
    row.arrival = static_cast<int>(parse_ll(f[k++], "arrival"));
    row.committed_config =
        static_cast<int>(parse_ll(f[k++], "committed_config"));
    row.true_reward = parse_double(f[k++], "true_reward");
    row.virtual_reward = parse_double(f[k++], "virtual_reward");
    row.hindsight_opt = parse_double(f[k++], "hindsight_opt");
    row.regret = parse_double(f[k++], "regret");
    row.phi = parse_double(f[k++], "phi");
    row.arrival_counts.resize(n_res);
    for (size_t j = 0; j < n_res; ++j)
      row.arrival_counts[j] = parse_ll(f[k++], "a");
    row.x_true.resize(n_basis);
    for (size_t j = 0; j < n_basis; ++j) row.x_true[j] = parse_ll(f[k++], "x");
    row.x_virtual.resize(n_basis);
    for (size_t j = 0; j < n_basis; ++j)
      row.x_virtual[j] = parse_ll(f[k++], "vx");
    row.min_vq.resize(n_q);
    for (size_t j = 0; j < n_q; ++j) row.min_vq[j] = parse_ll(f[k++], "minq");
    row.vq.resize(n_q);
    for (size_t j = 0; j < n_q; ++j) row.vq[j] = parse_ll(f[k++], "q");
    if (h.has_waste) {
      row.waste = parse_double(f[k++], "waste");
      row.bins = parse_ll(f[k++], "bins");
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace sosmatch
