#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "selpack/packing.hpp"
#include "selpack/text.hpp"

using namespace selpack;

namespace {

std::vector<PackItem> items_of(const std::vector<std::int64_t>& lens) {
  std::vector<PackItem> items;
  for (std::size_t i = 0; i < lens.size(); ++i) {
    items.push_back({static_cast<SampleId>(i), lens[i]});
  }
  return items;
}

// classic first-fit-decreasing bin count on plain sizes
std::size_t classic_ffd(std::vector<std::int64_t> sizes, std::int64_t cap) {
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  std::vector<std::int64_t> space;
  for (std::int64_t s : sizes) {
    bool placed = false;
    for (auto& r : space) {
      if (s <= r) {
        r -= s;
        placed = true;
        break;
      }
    }
    if (!placed) space.push_back(cap - s);
  }
  return space.size();
}

// exhaustive minimum bin count, no pruning beyond the capacity check
void brute_bins(const std::vector<std::int64_t>& sizes, std::size_t idx,
                std::vector<std::int64_t>& space, std::int64_t cap, std::size_t& best) {
  if (idx == sizes.size()) {
    best = std::min(best, space.size());
    return;
  }
  const std::size_t open = space.size();  // recursion below grows the vector
  for (std::size_t i = 0; i < open; ++i) {
    if (sizes[idx] <= space[i]) {
      space[i] -= sizes[idx];
      brute_bins(sizes, idx + 1, space, cap, best);
      space[i] += sizes[idx];
    }
  }
  space.push_back(cap - sizes[idx]);
  brute_bins(sizes, idx + 1, space, cap, best);
  space.pop_back();
}

std::size_t brute_force_optimal(const std::vector<std::int64_t>& lens, std::int64_t cap,
                                std::int64_t sep) {
  std::vector<std::int64_t> sizes;
  for (std::int64_t l : lens) sizes.push_back(l + sep);
  std::size_t best = sizes.size();
  std::vector<std::int64_t> space;
  brute_bins(sizes, 0, space, cap + sep, best);
  return best;
}

std::vector<SampleId> covered_ids(const PackPlan& plan) {
  std::vector<SampleId> ids;
  for (const auto& b : plan.batches)
    for (const auto& s : b)
      for (const auto& seg : s.segments) ids.push_back(seg.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void check_structure(const PackPlan& plan, const std::vector<PackItem>& items) {
  // every input exactly once
  std::vector<SampleId> want;
  for (const auto& it : items) want.push_back(it.id);
  std::sort(want.begin(), want.end());
  REQUIRE(covered_ids(plan) == want);

  const std::int64_t sep =
      plan.strategy == PackStrategy::dynamic_pack ? plan.separator_cost : 0;
  for (const auto& batch : plan.batches) {
    REQUIRE(!batch.empty());
    const std::int64_t width = batch.front().seq_len;
    for (const auto& seq : batch) {
      CHECK(seq.seq_len == width);  // rectangular batches
      CHECK(seq.pad >= 0);
      std::int64_t cursor = 0;
      for (std::size_t i = 0; i < seq.segments.size(); ++i) {
        if (i > 0) cursor += sep;
        CHECK(seq.segments[i].offset == cursor);
        cursor += seq.segments[i].len;
      }
      CHECK(seq.occupied() == cursor);
      CHECK(seq.seq_len == cursor + seq.pad);
      CHECK(seq.occupied() <= plan.max_len);
    }
  }
}

struct RandomInstance {
  std::vector<PackItem> items;
  std::int64_t max_len;
  std::int64_t sep;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_items) {
  RandomInstance inst;
  inst.max_len = 10 + static_cast<std::int64_t>(uniform_below(rng, 41));
  inst.sep = static_cast<std::int64_t>(uniform_below(rng, 3));
  const std::size_t n = 1 + uniform_below(rng, max_items);
  for (std::size_t i = 0; i < n; ++i) {
    const auto len =
        1 + static_cast<std::int64_t>(uniform_below(
                rng, static_cast<std::uint64_t>(inst.max_len - inst.sep)));
    inst.items.push_back({static_cast<SampleId>(i), len});
  }
  return inst;
}

}  // namespace

TEST_CASE("pad-to-max planning") {
  SECTION("single short sample") {
    auto plan = plan_traditional(items_of({5}), 10, 4);
    REQUIRE(plan.total_sequences() == 1);
    CHECK(plan.batches[0][0].pad == 5);
    CHECK(plan.batches[0][0].seq_len == 10);
    CHECK(plan.padding_tokens() == 5);
  }
  SECTION("full-length samples need no padding") {
    auto plan = plan_traditional(items_of({8, 8, 8}), 8, 2);
    CHECK(plan.padding_tokens() == 0);
    CHECK(plan.batches.size() == 2);
  }
  SECTION("padding is the per-sample distance to max_len") {
    std::mt19937_64 rng(3);
    std::vector<std::int64_t> lens;
    std::int64_t expected = 0;
    const std::int64_t max_len = 512;
    for (int i = 0; i < 1000; ++i) {
      const auto len = 1 + static_cast<std::int64_t>(uniform_below(rng, 512));
      lens.push_back(len);
      expected += max_len - len;
    }
    auto plan = plan_traditional(items_of(lens), max_len, 64);
    CHECK(plan.padding_tokens() == expected);
    CHECK(plan.padded_total() == 1000 * max_len);
    check_structure(plan, items_of(lens));
  }
}

TEST_CASE("pad-to-batch-max planning") {
  SECTION("one batch pads to its longest sample") {
    auto plan = plan_dynamic(items_of({12, 7, 5, 3}), 16, 4);
    REQUIRE(plan.total_sequences() == 4);
    CHECK(plan.padding_tokens() == 21);  // (12-12)+(12-7)+(12-5)+(12-3)
    CHECK(plan.padded_total() == 48);
  }
  SECTION("equal lengths need no padding") {
    auto plan = plan_dynamic(items_of({6, 6, 6, 6, 6}), 16, 2);
    CHECK(plan.padding_tokens() == 0);
  }
  SECTION("batch boundaries limit the padding target") {
    // batches {9, 2}, {8}: the short sample only stretches to 9, not to 16
    auto plan = plan_dynamic(items_of({9, 2, 8}), 16, 2);
    CHECK(plan.batches[0][1].pad == 7);
    CHECK(plan.batches[1][0].pad == 0);
    CHECK(plan.padding_tokens() == 7);
  }
  SECTION("never worse than pad-to-max") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      auto inst = random_instance(rng, 60);
      auto trad = plan_traditional(inst.items, inst.max_len, 8);
      auto dyn = plan_dynamic(inst.items, inst.max_len, 8);
      CHECK(dyn.padding_tokens() <= trad.padding_tokens());
      check_structure(dyn, inst.items);
    }
  }
}

TEST_CASE("concatenating pack planning") {
  SECTION("worked example: lengths 12 7 5 3 at capacity 16") {
    auto items = items_of({12, 7, 5, 3});
    auto plan = plan_dynamic_pack(items, 16, 4, 0);
    REQUIRE(plan.total_sequences() == 2);
    const auto& seq0 = plan.batches[0][0];
    const auto& seq1 = plan.batches[0][1];
    REQUIRE(seq0.segments.size() == 2);
    CHECK(seq0.segments[0].id == 0);
    CHECK(seq0.segments[0].offset == 0);
    CHECK(seq0.segments[1].id == 3);
    CHECK(seq0.segments[1].offset == 12);
    CHECK(seq0.pad == 0);
    CHECK(seq0.seq_len == 15);
    REQUIRE(seq1.segments.size() == 2);
    CHECK(seq1.segments[0].id == 1);
    CHECK(seq1.segments[1].id == 2);
    CHECK(seq1.segments[1].offset == 7);
    CHECK(seq1.pad == 3);
    CHECK(seq1.seq_len == 15);
    CHECK(plan.padding_tokens() == 3);
    CHECK(plan.padded_total() == 30);
  }

  SECTION("perfect fill leaves no padding") {
    auto plan = plan_dynamic_pack(items_of({10, 10, 10, 10}), 20, 4, 0);
    CHECK(plan.total_sequences() == 2);
    CHECK(plan.padding_tokens() == 0);
  }

  SECTION("separators count against the capacity") {
    // 9+1+8 and 8+1+2 both exceed 10, so three sequences remain
    auto plan = plan_dynamic_pack(items_of({9, 8, 2}), 10, 4, 1);
    CHECK(plan.total_sequences() == 3);
    CHECK(plan.separator_tokens() == 0);

    // 5+1+4 fits exactly; the separator shows up in occupancy and offsets
    auto merged = plan_dynamic_pack(items_of({5, 4, 2}), 10, 4, 1);
    REQUIRE(merged.total_sequences() == 2);
    const auto& seq0 = merged.batches[0][0];
    REQUIRE(seq0.segments.size() == 2);
    CHECK(seq0.segments[1].offset == 6);
    CHECK(seq0.occupied() == 10);
    CHECK(seq0.content() == 9);
    CHECK(merged.separator_tokens() == 1);
  }

  SECTION("batches are packed independently") {
    // one batch pairs long with short; split batches cannot cross the boundary
    auto one_batch = plan_dynamic_pack(items_of({10, 10, 6, 6}), 16, 4, 0);
    CHECK(one_batch.total_sequences() == 2);
    auto split = plan_dynamic_pack(items_of({10, 10, 6, 6}), 16, 2, 0);
    CHECK(split.total_sequences() == 3);
    REQUIRE(split.batches.size() == 2);
    CHECK(split.batches[1][0].segments.size() == 2);
  }

  SECTION("oversized samples are a hard error") {
    CHECK_THROWS_WITH(plan_dynamic_pack(items_of({17}), 16, 4, 0),
                      "samples exceed max_len 16: [0]");
    // with a separator the effective per-sample limit shrinks
    CHECK_THROWS_WITH(plan_dynamic_pack(items_of({10}), 10, 4, 1),
                      "samples exceed max_len 10: [0]");
    CHECK_THROWS_AS(plan_traditional(items_of({17}), 16, 4), InputError);
    CHECK_THROWS_AS(plan_dynamic(items_of({17}), 16, 4), InputError);

    std::vector<std::int64_t> lens(12, 100);
    CHECK_THROWS_WITH(plan_dynamic_pack(items_of(lens), 16, 4, 0),
                      "samples exceed max_len 16: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, ...]");
  }

  SECTION("argument validation") {
    CHECK_THROWS_WITH(plan_dynamic_pack({}, 16, 4, 0), "nothing to pack");
    CHECK_THROWS_WITH(plan_dynamic_pack(items_of({5}), 0, 4, 0), "max_len must be >= 1");
    CHECK_THROWS_WITH(plan_dynamic_pack(items_of({5}), 16, 0, 0), "batch_size must be >= 1");
    CHECK_THROWS_WITH(plan_dynamic_pack(items_of({5}), 16, 4, -1),
                      "separator_cost must be >= 0");
  }
}

TEST_CASE("packing layout survives a first-fit replay") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng, 40);
    const std::size_t batch_size = 1 + uniform_below(rng, 12);
    auto plan = plan_dynamic_pack(inst.items, inst.max_len, batch_size, inst.sep);
    check_structure(plan, inst.items);

    // replay the first-fit-decreasing walk per batch and demand the same layout
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
      std::vector<PackItem> group;
      for (std::size_t i = b * batch_size;
           i < inst.items.size() && i < (b + 1) * batch_size; ++i) {
        group.push_back(inst.items[i]);
      }
      std::sort(group.begin(), group.end(), [](const PackItem& x, const PackItem& y) {
        if (x.len != y.len) return x.len > y.len;
        return x.id < y.id;
      });
      std::vector<std::vector<SampleId>> replay;
      std::vector<std::int64_t> occupied;
      for (const auto& item : group) {
        bool placed = false;
        for (std::size_t bin = 0; bin < replay.size(); ++bin) {
          if (occupied[bin] + inst.sep + item.len <= inst.max_len) {
            replay[bin].push_back(item.id);
            occupied[bin] += inst.sep + item.len;
            placed = true;
            break;
          }
        }
        if (!placed) {
          replay.push_back({item.id});
          occupied.push_back(item.len);
        }
      }
      REQUIRE(plan.batches[b].size() == replay.size());
      for (std::size_t s = 0; s < replay.size(); ++s) {
        std::vector<SampleId> got;
        for (const auto& seg : plan.batches[b][s].segments) got.push_back(seg.id);
        CHECK(got == replay[s]);
        CHECK(plan.batches[b][s].occupied() == occupied[s]);
      }
    }
  }
}

TEST_CASE("exact minimum sequence count") {
  SECTION("closed forms") {
    CHECK(optimal_pack(items_of({10, 10, 10, 10}), 20, 0) == 2);
    CHECK(optimal_pack(items_of({6, 6, 6}), 10, 0) == 3);
    CHECK(optimal_pack(items_of({9, 8, 2}), 10, 1) == 3);
    CHECK(optimal_pack(items_of({5}), 10, 0) == 1);
  }

  SECTION("input limits") {
    std::vector<std::int64_t> lens(13, 1);
    CHECK_THROWS_WITH(optimal_pack(items_of(lens), 16, 0),
                      "optimal_pack handles at most 12 samples");
    CHECK_THROWS_WITH(optimal_pack({}, 16, 0), "nothing to pack");
    CHECK_THROWS_AS(optimal_pack(items_of({20}), 16, 0), InputError);
  }

  SECTION("beats first-fit on a crafted instance") {
    // first-fit-decreasing opens three sequences here; {5,3,2} {4,4,2} needs two
    auto items = items_of({5, 4, 4, 3, 2, 2});
    auto ffd = plan_dynamic_pack(items, 10, 6, 0);
    CHECK(ffd.total_sequences() == 3);
    CHECK(optimal_pack(items, 10, 0) == 2);
  }

  SECTION("agrees with an unpruned exhaustive search") {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 200; ++trial) {
      auto inst = random_instance(rng, 6);
      std::vector<std::int64_t> lens;
      for (const auto& it : inst.items) lens.push_back(it.len);
      CHECK(optimal_pack(inst.items, inst.max_len, inst.sep) ==
            brute_force_optimal(lens, inst.max_len, inst.sep));
    }
  }
}

TEST_CASE("first-fit stays within the classic approximation bound") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    auto inst = random_instance(rng, 12);
    auto plan = plan_dynamic_pack(inst.items, inst.max_len,
                                  inst.items.size(), inst.sep);
    const std::size_t bins = plan.total_sequences();
    const std::size_t opt = optimal_pack(inst.items, inst.max_len, inst.sep);
    CHECK(opt <= bins);
    CHECK(bins <= (11 * opt + 8) / 9 + 1);
  }
}

TEST_CASE("separator handling matches the size-transform view") {
  // adding the separator to every size and to the capacity turns the problem
  // into plain bin packing; the sequence counts must agree
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_instance(rng, 30);
    auto plan = plan_dynamic_pack(inst.items, inst.max_len, inst.items.size(), inst.sep);
    std::vector<std::int64_t> shifted;
    for (const auto& it : inst.items) shifted.push_back(it.len + inst.sep);
    CHECK(plan.total_sequences() == classic_ffd(shifted, inst.max_len + inst.sep));
  }
}

TEST_CASE("padding comparison across strategies") {
  SECTION("worked ratios for lengths 12 7 5 3") {
    auto items = items_of({12, 7, 5, 3});
    auto report = efficiency_report({
        plan_traditional(items, 16, 4),
        plan_dynamic(items, 16, 4),
        plan_dynamic_pack(items, 16, 4, 0),
    });
    const auto& trad = report.per_strategy.at("traditional");
    CHECK(trad.padding_tokens == 37);
    CHECK(trad.padded_total == 64);
    CHECK(trad.padding_ratio == Catch::Approx(37.0 / 64.0).epsilon(1e-12));
    const auto& dyn = report.per_strategy.at("dynamic");
    CHECK(dyn.padding_tokens == 21);
    CHECK(dyn.padding_ratio == Catch::Approx(0.4375).epsilon(1e-12));
    const auto& pack = report.per_strategy.at("dynamic-pack");
    CHECK(pack.padding_tokens == 3);
    CHECK(pack.padded_total == 30);
    CHECK(pack.padding_ratio == Catch::Approx(0.1).epsilon(1e-12));
    CHECK(report.has_reduction);
    CHECK(report.sequences_dynamic == 4);
    CHECK(report.sequences_dynamic_pack == 2);
    CHECK(report.sequence_reduction == Catch::Approx(0.5).epsilon(1e-12));
  }

  SECTION("identical lengths, nothing to win") {
    auto items = items_of({8, 8, 8, 8});
    auto report = efficiency_report({
        plan_traditional(items, 8, 4),
        plan_dynamic(items, 8, 4),
        plan_dynamic_pack(items, 8, 4, 0),
    });
    for (const auto& [name, t] : report.per_strategy) {
      CHECK(t.padding_tokens == 0);
      CHECK(t.padding_ratio == 0.0);
    }
    CHECK(report.sequence_reduction == 0.0);
  }

  SECTION("plans over different samples cannot be compared") {
    auto a = plan_traditional(items_of({5, 5}), 8, 4);
    std::vector<PackItem> other{{7, 5}};
    auto b = plan_traditional(other, 8, 4);
    CHECK_THROWS_WITH(efficiency_report({a, b}), "plans cover different sample sets");
  }

  SECTION("spread-out length distributions keep the expected ordering") {
    std::mt19937_64 rng(33);
    const std::int64_t max_len = 512;
    const std::size_t batch_size = 64;
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<std::int64_t> lens;
      const std::size_t n = batch_size + uniform_below(rng, 400);
      const int family = trial % 3;
      for (std::size_t i = 0; i < n; ++i) {
        std::int64_t len = 1;
        if (family == 0) {
          len = 16 + static_cast<std::int64_t>(uniform_below(rng, 497));
        } else if (family == 1) {
          const double z = std::sqrt(-2.0 * std::log(uniform_unit(rng) + 1e-12)) *
                           std::cos(6.283185307179586 * uniform_unit(rng));
          len = static_cast<std::int64_t>(std::llround(std::exp(4.0 + 0.6 * z)));
        } else {
          len = uniform_below(rng, 2) == 0
                    ? 24 + static_cast<std::int64_t>(uniform_below(rng, 17))
                    : 350 + static_cast<std::int64_t>(uniform_below(rng, 60));
        }
        lens.push_back(std::clamp<std::int64_t>(len, 1, max_len));
      }
      auto trad = plan_traditional(items_of(lens), max_len, batch_size);
      auto dyn = plan_dynamic(items_of(lens), max_len, batch_size);
      auto pack = plan_dynamic_pack(items_of(lens), max_len, batch_size, 0);
      CHECK(pack.padding_tokens() <= dyn.padding_tokens());
      CHECK(dyn.padding_tokens() <= trad.padding_tokens());
    }
  }

  SECTION("near-uniform lengths can invert the comparison") {
    // merging equal-length samples widens the batch to one overfull sequence
    // plus a remnant, which costs more padding than not merging at all
    auto dyn = plan_dynamic(items_of({10, 6, 6}), 16, 4);
    auto pack = plan_dynamic_pack(items_of({10, 6, 6}), 16, 4, 0);
    CHECK(dyn.padding_tokens() == 8);
    CHECK(pack.padding_tokens() == 10);
  }
}

TEST_CASE("whole-corpus packing mode") {
  // per-batch packing cannot merge across the batch boundary; the global mode can
  auto items = items_of({10, 10, 6, 6});
  auto per_batch = plan_dynamic_pack(items, 16, 2, 0);
  CHECK(per_batch.total_sequences() == 3);
  auto global = plan_dynamic_pack(items, 16, 2, 0, true);
  CHECK(global.total_sequences() == 2);
  CHECK(global.global_pack);
  CHECK(global.padding_tokens() == 0);

  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_instance(rng, 50);
    auto plan = plan_dynamic_pack(inst.items, inst.max_len, 4, inst.sep, true);
    check_structure(plan, inst.items);
    std::vector<std::int64_t> shifted;
    for (const auto& it : inst.items) shifted.push_back(it.len + inst.sep);
    CHECK(plan.total_sequences() == classic_ffd(shifted, inst.max_len + inst.sep));
    // all batches full except possibly the last
    for (std::size_t b = 0; b + 1 < plan.batches.size(); ++b) {
      CHECK(plan.batches[b].size() == 4);
    }
  }
}

TEST_CASE("manifest round-trip") {
  testutil::TempDir dir("manifest");
  std::mt19937_64 rng(62);
  auto inst = random_instance(rng, 25);
  auto plan = plan_dynamic_pack(inst.items, inst.max_len, 6, inst.sep);

  auto path = dir.file("m.jsonl");
  save_manifest(path, plan);
  auto loaded = load_manifest(path);

  CHECK(loaded.strategy == plan.strategy);
  CHECK(loaded.max_len == plan.max_len);
  CHECK(loaded.batch_size == plan.batch_size);
  CHECK(loaded.separator_cost == plan.separator_cost);
  CHECK(loaded.global_pack == plan.global_pack);
  REQUIRE(loaded.batches.size() == plan.batches.size());
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    REQUIRE(loaded.batches[b].size() == plan.batches[b].size());
    for (std::size_t s = 0; s < plan.batches[b].size(); ++s) {
      const auto& x = plan.batches[b][s];
      const auto& y = loaded.batches[b][s];
      CHECK(y.pad == x.pad);
      CHECK(y.seq_len == x.seq_len);
      REQUIRE(y.segments.size() == x.segments.size());
      for (std::size_t g = 0; g < x.segments.size(); ++g) {
        CHECK(y.segments[g].id == x.segments[g].id);
        CHECK(y.segments[g].offset == x.segments[g].offset);
        CHECK(y.segments[g].len == x.segments[g].len);
      }
    }
  }

  SECTION("writing twice produces identical bytes") {
    auto again = dir.file("m2.jsonl");
    save_manifest(again, plan);
    CHECK(testutil::slurp(path) == testutil::slurp(again));
  }

  SECTION("the global flag survives the round-trip") {
    auto gplan = plan_dynamic_pack(inst.items, inst.max_len, 6, inst.sep, true);
    auto gpath = dir.file("g.jsonl");
    save_manifest(gpath, gplan);
    CHECK(load_manifest(gpath).global_pack);
  }

  SECTION("malformed manifests are rejected") {
    auto bad = dir.file("bad.jsonl");
    testutil::write_lines(bad, {R"({"batch": 0, "seq": 0})"});
    CHECK_THROWS_WITH(load_manifest(bad),
                      "manifest must start with a header line carrying \"strategy\"");

    auto gap = dir.file("gap.jsonl");
    testutil::write_lines(
        gap, {R"({"strategy": "dynamic-pack", "max_len": 16, "batch_size": 4, "separator_cost": 0})",
              R"({"batch": 1, "seq": 0, "segments": [], "pad": 0, "seq_len": 4})"});
    CHECK_THROWS_WITH(load_manifest(gap), "line 2: batch index out of order");

    auto skip = dir.file("skip.jsonl");
    testutil::write_lines(
        skip, {R"({"strategy": "dynamic-pack", "max_len": 16, "batch_size": 4, "separator_cost": 0})",
               R"({"batch": 0, "seq": 1, "segments": [], "pad": 0, "seq_len": 4})"});
    CHECK_THROWS_WITH(load_manifest(skip), "line 2: seq index out of order");

    auto empty = dir.file("empty.jsonl");
    testutil::write_lines(empty, {});
    CHECK_THROWS_WITH(load_manifest(empty), Catch::Matchers::StartsWith("manifest is empty"));
  }
}

TEST_CASE("strategy names round-trip") {
  for (auto s : {PackStrategy::traditional, PackStrategy::dynamic, PackStrategy::dynamic_pack}) {
    CHECK(pack_strategy_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_WITH(pack_strategy_from_string("zip"), "unknown packing strategy: zip");
}
