#include "sosmatch/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sosmatch {

const char* to_string(ResourceClass c) {
  switch (c) {
    case ResourceClass::Offline: return "off";
    case ResourceClass::OnlineQueueable: return "onq";
    case ResourceClass::OnlineNonqueueable: return "onnq";
  }
  return "?";
}

std::vector<int> MatchingInstance::support(int config) const {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (multiplicity[i][config] > 0) out.push_back(i);
  }
  return out;
}

int MatchingInstance::support_size(int config) const {
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (multiplicity[i][config] > 0) ++count;
  }
  return count;
}

bool MatchingInstance::config_has_nonqueueable(int config) const {
  for (int i = 0; i < n; ++i) {
    if (multiplicity[i][config] > 0 && classes[i] == ResourceClass::OnlineNonqueueable) {
      return true;
    }
  }
  return false;
}

bool MatchingInstance::is_discard(int config) const {
  int units = 0;
  for (int i = 0; i < n; ++i) units += multiplicity[i][config];
  return units == 1;
}

bool MatchingInstance::has_offline() const {
  for (auto c : classes) {
    if (c == ResourceClass::Offline) return true;
  }
  return false;
}

namespace {

void hash_bytes(uint64_t& h, const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t k = 0; k < len; ++k) {
    h ^= p[k];
    h *= 1099511628211ULL;  // FNV-1a prime
  }
}

void hash_text(uint64_t& h, const std::string& s) { hash_bytes(h, s.data(), s.size()); }

std::string canonical_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void rebuild_discard_index(MatchingInstance& inst) {
  inst.discard_config.assign(inst.n, -1);
  for (int m = 0; m < inst.d(); ++m) {
    int resource = -1;
    int units = 0;
    for (int i = 0; i < inst.n; ++i) {
      units += inst.multiplicity[i][m];
      if (inst.multiplicity[i][m] == 1) resource = i;
    }
    if (units == 1 && inst.rewards[m] == 0.0 && inst.discard_config[resource] < 0) {
      inst.discard_config[resource] = m;
    }
  }
}

}  // namespace

uint64_t MatchingInstance::hash() const {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
  hash_text(h, "n=" + std::to_string(n));
  for (auto c : classes) hash_text(h, to_string(c));
  for (const auto& row : multiplicity) {
    for (int v : row) hash_text(h, "," + std::to_string(v));
  }
  for (double r : rewards) hash_text(h, ";" + canonical_double(r));
  hash_text(h, no_discard ? "|nd" : "|d");
  hash_text(h, "|B=" + std::to_string(bin_capacity));
  for (int s : item_sizes) hash_text(h, "," + std::to_string(s));
  return h;
}

std::vector<std::string> validate(const MatchingInstance& inst) {
  std::vector<std::string> issues;
  if (inst.n <= 0) {
    issues.push_back("instance has no resource types");
    return issues;
  }
  if (static_cast<int>(inst.classes.size()) != inst.n) {
    issues.push_back("classes length != n");
    return issues;
  }
  if (static_cast<int>(inst.multiplicity.size()) != inst.n) {
    issues.push_back("multiplicity row count != n");
    return issues;
  }
  const int d = inst.d();
  for (int i = 0; i < inst.n; ++i) {
    if (static_cast<int>(inst.multiplicity[i].size()) != d) {
      issues.push_back("multiplicity rows have inconsistent lengths");
      return issues;
    }
  }
  if (static_cast<int>(inst.rewards.size()) != d) issues.push_back("rewards length != d");
  if (d == 0) issues.push_back("instance has no configurations");
  if (!issues.empty()) return issues;

  for (int m = 0; m < d; ++m) {
    int units = 0;
    int nonqueueable_units = 0;
    for (int i = 0; i < inst.n; ++i) {
      const int v = inst.multiplicity[i][m];
      if (v < 0) issues.push_back("configuration " + std::to_string(m) + " has a negative entry");
      if (v > 1 && !inst.no_discard) {
        issues.push_back("configuration " + std::to_string(m) +
                         " uses multiplicity > 1 outside bin-packing mode");
      }
      units += v;
      if (inst.classes[i] == ResourceClass::OnlineNonqueueable) nonqueueable_units += v;
    }
    if (units < 1) {
      issues.push_back("configuration " + std::to_string(m) + " is empty");
    }
    if (nonqueueable_units > 1) {
      issues.push_back("configuration " + std::to_string(m) +
                       " uses more than one nonqueueable unit");
    }
  }

  if (inst.no_discard) {
    for (int i = 0; i < inst.n; ++i) {
      bool covered = false;
      for (int m = 0; m < d && !covered; ++m) covered = inst.multiplicity[i][m] > 0;
      if (!covered) {
        issues.push_back("resource " + std::to_string(i) +
                         " appears in no configuration (required in no-discard mode)");
      }
    }
  } else {
    for (int i = 0; i < inst.n; ++i) {
      const int dc = (static_cast<int>(inst.discard_config.size()) == inst.n)
                         ? inst.discard_config[i]
                         : -1;
      bool ok = dc >= 0 && dc < d && inst.rewards[dc] == 0.0;
      if (ok) {
        for (int j = 0; j < inst.n; ++j) {
          const int expected = (j == i) ? 1 : 0;
          if (inst.multiplicity[j][dc] != expected) ok = false;
        }
      }
      if (!ok) {
        issues.push_back("resource " + std::to_string(i) +
                         " lacks a zero-reward discard configuration");
      }
    }
  }

  if (inst.is_bin_packing()) {
    if (static_cast<int>(inst.item_sizes.size()) != inst.n) {
      issues.push_back("item_sizes length != n in bin-packing mode");
    } else {
      for (int m = 0; m < d; ++m) {
        long long volume = 0;
        for (int i = 0; i < inst.n; ++i) {
          volume += static_cast<long long>(inst.item_sizes[i]) * inst.multiplicity[i][m];
        }
        if (volume > inst.bin_capacity) {
          issues.push_back("configuration " + std::to_string(m) + " overfills a bin");
        }
      }
    }
  }
  return issues;
}

std::vector<std::string> validate(const MatchingInstance& inst, const ArrivalRates& rates) {
  std::vector<std::string> issues = validate(inst);
  if (static_cast<int>(rates.lambda.size()) != inst.n) {
    issues.push_back("lambda length != n");
    return issues;
  }
  if (rates.horizon < 1) issues.push_back("horizon must be at least 1");
  double online_mass = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    if (rates.lambda[i] < 0.0) {
      issues.push_back("lambda[" + std::to_string(i) + "] is negative");
    }
    if (inst.classes[i] != ResourceClass::Offline) online_mass += rates.lambda[i];
  }
  if (std::abs(online_mass - 1.0) > 1e-9) {
    issues.push_back("online lambda entries must sum to 1 (got " +
                     canonical_double(online_mass) + ")");
  }
  for (int i = 0; i < inst.n; ++i) {
    if (inst.classes[i] == ResourceClass::Offline) {
      const double inventory = rates.lambda[i] * static_cast<double>(rates.horizon);
      if (std::abs(inventory - std::llround(inventory)) > 1e-6) {
        issues.push_back("offline inventory lambda[" + std::to_string(i) +
                         "] * horizon is not an integer");
      }
    }
  }
  return issues;
}

namespace {

void enumerate_patterns(const std::vector<int>& sizes, int idx, int remaining,
                        std::vector<int>& counts, std::vector<std::vector<int>>& out) {
  if (idx == static_cast<int>(sizes.size()) - 1) {
    if (remaining % sizes[idx] == 0) {
      counts[idx] = remaining / sizes[idx];
      out.push_back(counts);
    }
    return;
  }
  for (int c = remaining / sizes[idx]; c >= 0; --c) {
    counts[idx] = c;
    enumerate_patterns(sizes, idx + 1, remaining - c * sizes[idx], counts, out);
  }
  counts[idx] = 0;
}

}  // namespace

MatchingInstance binpacking_instance(int bin_capacity, const std::vector<int>& sizes,
                                     std::optional<double> rejection_reward) {
  if (bin_capacity < 1) throw std::invalid_argument("binpacking_instance: capacity must be positive");
  if (sizes.empty()) throw std::invalid_argument("binpacking_instance: no item sizes");
  std::set<int> seen;
  for (int s : sizes) {
    if (s < 1 || s > bin_capacity) {
      throw std::invalid_argument("binpacking_instance: size " + std::to_string(s) +
                                  " outside [1, capacity]");
    }
    if (!seen.insert(s).second) {
      throw std::invalid_argument("binpacking_instance: duplicate size " + std::to_string(s));
    }
  }
  std::vector<int> sorted_sizes(sizes);
  std::sort(sorted_sizes.begin(), sorted_sizes.end());

  std::vector<std::vector<int>> patterns;
  std::vector<int> counts(sorted_sizes.size(), 0);
  enumerate_patterns(sorted_sizes, 0, bin_capacity, counts, patterns);
  if (patterns.empty()) {
    throw std::invalid_argument("binpacking_instance: no multiset of sizes fills a bin exactly");
  }

  MatchingInstance inst;
  inst.n = static_cast<int>(sorted_sizes.size());
  inst.classes.assign(inst.n, ResourceClass::OnlineQueueable);
  inst.bin_capacity = bin_capacity;
  inst.item_sizes = sorted_sizes;
  const int d = static_cast<int>(patterns.size()) + (rejection_reward ? inst.n : 0);
  inst.multiplicity.assign(inst.n, std::vector<int>(d, 0));
  inst.rewards.assign(d, 0.0);
  for (size_t m = 0; m < patterns.size(); ++m) {
    for (int i = 0; i < inst.n; ++i) inst.multiplicity[i][m] = patterns[m][i];
    inst.rewards[m] = -1.0;  // one bin per completed pattern
  }
  if (rejection_reward) {
    for (int i = 0; i < inst.n; ++i) {
      const int m = static_cast<int>(patterns.size()) + i;
      inst.multiplicity[i][m] = 1;
      inst.rewards[m] = *rejection_reward;
    }
  }
  rebuild_discard_index(inst);
  bool all_discardable = true;
  for (int i = 0; i < inst.n; ++i) all_discardable = all_discardable && inst.discard_config[i] >= 0;
  inst.no_discard = !all_discardable;
  return inst;
}

namespace {

ResourceClass class_from_string(const std::string& s) {
  if (s == "off") return ResourceClass::Offline;
  if (s == "onq") return ResourceClass::OnlineQueueable;
  if (s == "onnq") return ResourceClass::OnlineNonqueueable;
  throw std::invalid_argument("unknown resource class \"" + s + "\" (want off/onq/onnq)");
}

}  // namespace

InstanceFile load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  nlohmann::json j;
  in >> j;

  InstanceFile file;
  MatchingInstance& inst = file.instance;
  for (const auto& c : j.at("classes")) {
    inst.classes.push_back(class_from_string(c.get<std::string>()));
  }
  inst.n = static_cast<int>(inst.classes.size());
  inst.multiplicity = j.at("matrix").get<std::vector<std::vector<int>>>();
  inst.rewards = j.at("rewards").get<std::vector<double>>();
  inst.no_discard = j.value("no_discard", false);
  inst.bin_capacity = j.value("bin_capacity", 0);
  inst.item_sizes = j.value("item_sizes", std::vector<int>{});
  rebuild_discard_index(inst);

  file.rates.lambda = j.at("lambda").get<std::vector<double>>();
  file.rates.horizon = j.at("horizon").get<long long>();

  const auto issues = validate(inst, file.rates);
  if (!issues.empty()) {
    std::ostringstream msg;
    msg << "instance file " << path << " is invalid:";
    for (const auto& s : issues) msg << "\n  - " << s;
    throw std::runtime_error(msg.str());
  }
  return file;
}

std::string instance_to_json(const MatchingInstance& inst, const ArrivalRates& rates) {
  nlohmann::json j;
  for (auto c : inst.classes) j["classes"].push_back(to_string(c));
  j["matrix"] = inst.multiplicity;
  j["rewards"] = inst.rewards;
  j["lambda"] = rates.lambda;
  j["horizon"] = rates.horizon;
  j["no_discard"] = inst.no_discard;
  if (inst.is_bin_packing()) {
    j["bin_capacity"] = inst.bin_capacity;
    j["item_sizes"] = inst.item_sizes;
  }
  return j.dump(2) + "\n";
}

void save_instance_file(const std::string& path, const MatchingInstance& inst,
                        const ArrivalRates& rates) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << instance_to_json(inst, rates);
}

}  // namespace sosmatch
