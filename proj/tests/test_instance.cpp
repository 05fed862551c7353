#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "sosmatch/harness.hpp"
#include "sosmatch/instance.hpp"

using namespace sosmatch;

namespace {

// Column of `inst` equal to `want` (as a full n-vector), or -1.
int find_column(const MatchingInstance& inst, const std::vector<int>& want) {
  for (int m = 0; m < inst.d(); ++m) {
    bool same = true;
    for (int i = 0; i < inst.n && same; ++i) same = inst.multiplicity[i][m] == want[i];
    if (same) return m;
  }
  return -1;
}

}  // namespace

TEST_CASE("validate accepts the bundled presets") {
  for (const std::string& name : preset_names()) {
    const Preset p = make_preset(name);
    const auto problems = validate(p.instance, p.rates);
    CHECK_MESSAGE(problems.empty(), "preset ", name, ": ",
                  problems.empty() ? "" : problems.front());
  }
}

TEST_CASE("validate flags malformed instances") {
  const Preset p = make_preset("instance2_default");

  SUBCASE("ragged matrix") {
    MatchingInstance bad = p.instance;
    bad.multiplicity[1].pop_back();
    CHECK(!validate(bad).empty());
  }
  SUBCASE("reward count mismatch") {
    MatchingInstance bad = p.instance;
    bad.rewards.pop_back();
    CHECK(!validate(bad).empty());
  }
  SUBCASE("negative multiplicity") {
    MatchingInstance bad = p.instance;
    bad.multiplicity[0][0] = -1;
    CHECK(!validate(bad).empty());
  }
  SUBCASE("class count mismatch") {
    MatchingInstance bad = p.instance;
    bad.classes.pop_back();
    CHECK(!validate(bad).empty());
  }
  SUBCASE("lambda out of range") {
    MatchingInstance inst = p.instance;
    ArrivalRates rates = p.rates;
    rates.lambda[0] = 1.5;
    CHECK(!validate(inst, rates).empty());
  }
  SUBCASE("lambda length mismatch") {
    MatchingInstance inst = p.instance;
    ArrivalRates rates = p.rates;
    rates.lambda.push_back(0.1);
    CHECK(!validate(inst, rates).empty());
  }
}

TEST_CASE("support and class helpers") {
  const Preset p = make_preset("instance2_default");
  const MatchingInstance& inst = p.instance;
  REQUIRE(inst.n == 3);
  REQUIRE(inst.d() == 5);

  CHECK(inst.support(0) == std::vector<int>{0, 1});
  CHECK(inst.support(1) == std::vector<int>{0, 2});
  CHECK(inst.support_size(0) == 2);
  CHECK(inst.config_contains(0, 1));
  CHECK(!inst.config_contains(0, 2));

  // resources 1 and 2 are nonqueueable in this preset, resource 0 queues
  CHECK(!inst.config_has_nonqueueable(2));  // discard of the queueable resource
  CHECK(inst.config_has_nonqueueable(0));   // {0,1} touches nonqueueable resource 1
  CHECK(inst.config_has_nonqueueable(1));
  CHECK(inst.config_has_nonqueueable(3));   // discard of nonqueueable resource 1

  // discards: one per resource, unit columns
  for (int i = 0; i < inst.n; ++i) {
    const int dc = inst.discard_config[i];
    REQUIRE(dc >= 0);
    CHECK(inst.is_discard(dc));
    CHECK(inst.support(dc) == std::vector<int>{i});
    CHECK(inst.rewards[dc] == 0.0);
  }
  CHECK(!inst.is_discard(0));
  CHECK(!inst.has_offline());
  CHECK(!inst.is_bin_packing());
}

TEST_CASE("bin packing enumerates exact packings: capacity 9, sizes {2,3}") {
  const MatchingInstance inst = binpacking_instance(9, {2, 3});
  REQUIRE(inst.n == 2);
  CHECK(inst.no_discard);
  CHECK(inst.is_bin_packing());
  CHECK(inst.bin_capacity == 9);
  CHECK(inst.item_sizes == std::vector<int>{2, 3});
  // exactly two multisets fill 9 from {2,3}: 3x2+1x3 and 3x3
  REQUIRE(inst.d() == 2);
  CHECK(find_column(inst, {3, 1}) >= 0);
  CHECK(find_column(inst, {0, 3}) >= 0);
  for (int m = 0; m < inst.d(); ++m) CHECK(inst.rewards[m] == -1.0);
  // no discards in pure bin packing
  CHECK(inst.discard_config == std::vector<int>{-1, -1});
  CHECK(validate(inst).empty());
}

TEST_CASE("bin packing with rejection: capacity 10, sizes {2,6,7}") {
  const MatchingInstance inst = binpacking_instance(10, {2, 6, 7}, -1.0);
  REQUIRE(inst.n == 3);
  // exact packings: 5x2 and 2x2+1x6; then one rejection singleton per size
  REQUIRE(inst.d() == 5);
  const int full_a = find_column(inst, {5, 0, 0});
  const int full_b = find_column(inst, {2, 1, 0});
  REQUIRE(full_a >= 0);
  REQUIRE(full_b >= 0);
  CHECK(inst.rewards[full_a] == -1.0);
  CHECK(inst.rewards[full_b] == -1.0);
  for (int i = 0; i < 3; ++i) {
    std::vector<int> unit(3, 0);
    unit[i] = 1;
    const int col = find_column(inst, unit);
    REQUIRE(col >= 0);
    CHECK(inst.rewards[col] == -1.0);
    CHECK(col > std::max(full_a, full_b));  // rejections come after packings
  }
  // rejection columns pay a nonzero reward, so no zero-reward discard exists
  CHECK(inst.no_discard);
  CHECK(validate(inst).empty());
}

TEST_CASE("bin packing rejects impossible inputs") {
  CHECK_THROWS_AS(binpacking_instance(9, {}), std::invalid_argument);
  CHECK_THROWS_AS(binpacking_instance(3, {5}), std::invalid_argument);   // oversize item
  CHECK_THROWS_AS(binpacking_instance(7, {2}), std::invalid_argument);   // no exact packing
}

TEST_CASE("hash is stable and content-sensitive") {
  const MatchingInstance a = binpacking_instance(9, {2, 3});
  const MatchingInstance b = binpacking_instance(9, {2, 3});
  CHECK(a.hash() == b.hash());
  MatchingInstance c = a;
  c.rewards[0] = -2.0;
  CHECK(a.hash() != c.hash());
  MatchingInstance d = a;
  d.classes[0] = ResourceClass::OnlineNonqueueable;
  CHECK(a.hash() != d.hash());
}

TEST_CASE("instance JSON survives a save/load round trip") {
  const Preset p = make_preset("instance1_standin");
  const std::string path = "roundtrip_instance1.json";
  save_instance_file(path, p.instance, p.rates);
  const InstanceFile loaded = load_instance_file(path);
  CHECK(loaded.instance.hash() == p.instance.hash());
  CHECK(loaded.instance.classes == p.instance.classes);
  CHECK(loaded.instance.multiplicity == p.instance.multiplicity);
  CHECK(loaded.instance.rewards == p.instance.rewards);
  CHECK(loaded.instance.discard_config == p.instance.discard_config);
  CHECK(loaded.rates.lambda == p.rates.lambda);
  CHECK(loaded.rates.horizon == p.rates.horizon);
  std::remove(path.c_str());
}

TEST_CASE("bin-packing JSON round trip keeps the packing annotations") {
  const Preset p = make_preset("binpack_eps8");
  const std::string path = "roundtrip_binpack.json";
  save_instance_file(path, p.instance, p.rates);
  const InstanceFile loaded = load_instance_file(path);
  CHECK(loaded.instance.hash() == p.instance.hash());
  CHECK(loaded.instance.bin_capacity == p.instance.bin_capacity);
  CHECK(loaded.instance.item_sizes == p.instance.item_sizes);
  CHECK(loaded.instance.no_discard == p.instance.no_discard);
  std::remove(path.c_str());
}

TEST_CASE("shipped instance files match the built-in presets") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const Preset p = make_preset(name);
    const std::string path =
        std::string(SOSMATCH_SOURCE_ROOT) + "/instances/" + name + ".json";
    const InstanceFile shipped = load_instance_file(path);
    CHECK(shipped.instance.hash() == p.instance.hash());
    CHECK(shipped.rates.lambda == p.rates.lambda);
    CHECK(shipped.rates.horizon == p.rates.horizon);
  }
}

TEST_CASE("load rejects a malformed file") {
  const std::string path = "broken_instance.json";
  {
    FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("{\"classes\": [\"onq\"]}", f);
    std::fclose(f);
  }
  CHECK_THROWS(load_instance_file(path));
  std::remove(path.c_str());
}
