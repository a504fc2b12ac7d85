#pragma once

// Batch planning under three padding strategies: pad-to-max, pad-to-batch-max,
// and within-batch first-fit-decreasing concatenation ("dynamic pack").

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "selpack/corpus.hpp"
#include "selpack/io.hpp"
#include "selpack/types.hpp"

namespace selpack {

enum class PackStrategy { traditional, dynamic, dynamic_pack };

inline PackStrategy pack_strategy_from_string(const std::string& s) {
  if (s == "traditional") return PackStrategy::traditional;
  if (s == "dynamic") return PackStrategy::dynamic;
  if (s == "dynamic-pack") return PackStrategy::dynamic_pack;
  throw InputError("unknown packing strategy: " + s);
}

inline std::string to_string(PackStrategy s) {
  switch (s) {
    case PackStrategy::traditional: return "traditional";
    case PackStrategy::dynamic: return "dynamic";
    default: return "dynamic-pack";
  }
}

struct PackItem {
  SampleId id = 0;
  std::int64_t len = 0;
};

struct Segment {
  SampleId id = 0;
  std::int64_t offset = 0;
  std::int64_t len = 0;
};

struct PackedSeq {
  std::vector<Segment> segments;
  std::int64_t pad = 0;
  std::int64_t seq_len = 0;

  std::int64_t content() const {
    std::int64_t c = 0;
    for (const auto& s : segments) c += s.len;
    return c;
  }
  // content plus the separators charged between adjacent segments
  std::int64_t occupied() const { return seq_len - pad; }
};

struct PackPlan {
  PackStrategy strategy = PackStrategy::traditional;
  std::int64_t max_len = 0;
  std::size_t batch_size = 0;
  std::int64_t separator_cost = 0;
  bool global_pack = false;
  std::vector<std::vector<PackedSeq>> batches;

  std::size_t total_sequences() const {
    std::size_t n = 0;
    for (const auto& b : batches) n += b.size();
    return n;
  }
  std::int64_t content_tokens() const {
    std::int64_t t = 0;
    for (const auto& b : batches)
      for (const auto& s : b) t += s.content();
    return t;
  }
  std::int64_t separator_tokens() const {
    std::int64_t t = 0;
    for (const auto& b : batches)
      for (const auto& s : b) t += s.occupied() - s.content();
    return t;
  }
  std::int64_t padding_tokens() const {
    std::int64_t t = 0;
    for (const auto& b : batches)
      for (const auto& s : b) t += s.pad;
    return t;
  }
  std::int64_t padded_total() const {
    std::int64_t t = 0;
    for (const auto& b : batches)
      for (const auto& s : b) t += s.seq_len;
    return t;
  }
};

inline std::vector<PackItem> pack_items(const std::vector<RenderedSample>& rendered) {
  std::vector<PackItem> items;
  items.reserve(rendered.size());
  for (const auto& r : rendered) items.push_back({r.id, r.total_tokens});
  return items;
}

namespace detail {

inline void check_pack_args(const std::vector<PackItem>& items, std::int64_t max_len,
                            std::size_t batch_size) {
  if (items.empty()) throw InputError("nothing to pack");
  if (max_len < 1) throw InputError("max_len must be >= 1");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
}

inline void reject_oversized(const std::vector<PackItem>& items, std::int64_t limit,
                             std::int64_t max_len) {
  std::vector<SampleId> offenders;
  for (const auto& it : items) {
    if (it.len > limit) offenders.push_back(it.id);
  }
  if (offenders.empty()) return;
  std::string msg = "samples exceed max_len " + std::to_string(max_len) + ": [";
  for (std::size_t i = 0; i < offenders.size() && i < 10; ++i) {
    if (i) msg += ", ";
    msg += std::to_string(offenders[i]);
  }
  if (offenders.size() > 10) msg += ", ...";
  msg += "]";
  throw InputError(msg);
}

// First-fit-decreasing over one group of items. Items are sorted by length
// descending (ties by lower id) and each goes into the first open bin where
// content + separator + len stays within capacity.
inline std::vector<PackedSeq> ffd_bins(std::vector<PackItem> group, std::int64_t capacity,
                                       std::int64_t sep) {
  std::sort(group.begin(), group.end(), [](const PackItem& a, const PackItem& b) {
    if (a.len != b.len) return a.len > b.len;
    return a.id < b.id;
  });
  std::vector<PackedSeq> bins;
  std::vector<std::int64_t> occupied;
  for (const auto& item : group) {
    bool placed = false;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (occupied[b] + sep + item.len <= capacity) {
        bins[b].segments.push_back({item.id, occupied[b] + sep, item.len});
        occupied[b] += sep + item.len;
        placed = true;
        break;
      }
    }
    if (!placed) {
      PackedSeq seq;
      seq.segments.push_back({item.id, 0, item.len});
      bins.push_back(std::move(seq));
      occupied.push_back(item.len);
    }
  }
  for (std::size_t b = 0; b < bins.size(); ++b) bins[b].seq_len = occupied[b];  // pad applied later
  return bins;
}

// pad every sequence in the batch up to the longest occupied length
inline void pad_to_batch_max(std::vector<PackedSeq>& batch) {
  std::int64_t longest = 0;
  for (const auto& s : batch) longest = std::max(longest, s.seq_len);
  for (auto& s : batch) {
    s.pad = longest - s.seq_len;
    s.seq_len = longest;
  }
}

}  // namespace detail

inline PackPlan plan_traditional(const std::vector<PackItem>& items, std::int64_t max_len,
                                 std::size_t batch_size) {
  detail::check_pack_args(items, max_len, batch_size);
  detail::reject_oversized(items, max_len, max_len);
  PackPlan plan;
  plan.strategy = PackStrategy::traditional;
  plan.max_len = max_len;
  plan.batch_size = batch_size;
  for (std::size_t i = 0; i < items.size(); i += batch_size) {
    std::vector<PackedSeq> batch;
    for (std::size_t j = i; j < items.size() && j < i + batch_size; ++j) {
      PackedSeq seq;
      seq.segments.push_back({items[j].id, 0, items[j].len});
      seq.pad = max_len - items[j].len;
      seq.seq_len = max_len;
      batch.push_back(std::move(seq));
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

inline PackPlan plan_dynamic(const std::vector<PackItem>& items, std::int64_t max_len,
                             std::size_t batch_size) {
  detail::check_pack_args(items, max_len, batch_size);
  detail::reject_oversized(items, max_len, max_len);
  PackPlan plan;
  plan.strategy = PackStrategy::dynamic;
  plan.max_len = max_len;
  plan.batch_size = batch_size;
  for (std::size_t i = 0; i < items.size(); i += batch_size) {
    std::vector<PackedSeq> batch;
    for (std::size_t j = i; j < items.size() && j < i + batch_size; ++j) {
      PackedSeq seq;
      seq.segments.push_back({items[j].id, 0, items[j].len});
      seq.seq_len = items[j].len;
      batch.push_back(std::move(seq));
    }
    detail::pad_to_batch_max(batch);
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

// Within each batch of batch_size input-order samples, concatenate via FFD
// into sequences of capacity max_len, then pad to the longest sequence of the
// (now smaller) batch. With global_pack, FFD runs over the whole input first
// and the resulting sequences are re-batched batch_size at a time.
inline PackPlan plan_dynamic_pack(const std::vector<PackItem>& items, std::int64_t max_len,
                                  std::size_t batch_size, std::int64_t separator_cost,
                                  bool global_pack = false) {
  detail::check_pack_args(items, max_len, batch_size);
  if (separator_cost < 0) throw InputError("separator_cost must be >= 0");
  detail::reject_oversized(items, max_len - separator_cost, max_len);
  PackPlan plan;
  plan.strategy = PackStrategy::dynamic_pack;
  plan.max_len = max_len;
  plan.batch_size = batch_size;
  plan.separator_cost = separator_cost;
  plan.global_pack = global_pack;
  if (global_pack) {
    auto bins = detail::ffd_bins(items, max_len, separator_cost);
    for (std::size_t i = 0; i < bins.size(); i += batch_size) {
      std::vector<PackedSeq> batch(bins.begin() + static_cast<std::ptrdiff_t>(i),
                                   bins.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(bins.size(), i + batch_size)));
      detail::pad_to_batch_max(batch);
      plan.batches.push_back(std::move(batch));
    }
    return plan;
  }
  for (std::size_t i = 0; i < items.size(); i += batch_size) {
    std::vector<PackItem> group(items.begin() + static_cast<std::ptrdiff_t>(i),
                                items.begin() + static_cast<std::ptrdiff_t>(
                                                    std::min(items.size(), i + batch_size)));
    auto batch = detail::ffd_bins(std::move(group), max_len, separator_cost);
    detail::pad_to_batch_max(batch);
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

// Exact minimum bin count by branch-and-bound; the separator transform
// (size+sep, capacity+sep) reduces the problem to classic bin packing.
// Capped at 12 items so the search stays exhaustive.
inline std::size_t optimal_pack(const std::vector<PackItem>& items, std::int64_t max_len,
                                std::int64_t separator_cost) {
  if (items.size() > 12) throw InputError("optimal_pack handles at most 12 samples");
  if (items.empty()) throw InputError("nothing to pack");
  if (max_len < 1) throw InputError("max_len must be >= 1");
  if (separator_cost < 0) throw InputError("separator_cost must be >= 0");
  detail::reject_oversized(items, max_len, max_len);

  const std::int64_t cap = max_len + separator_cost;
  std::vector<std::int64_t> sizes;
  sizes.reserve(items.size());
  for (const auto& it : items) sizes.push_back(it.len + separator_cost);
  std::sort(sizes.begin(), sizes.end(), std::greater<>());

  // FFD gives the initial upper bound
  std::vector<std::int64_t> ffd_rem;
  for (std::int64_t s : sizes) {
    bool placed = false;
    for (auto& r : ffd_rem) {
      if (s <= r) {
        r -= s;
        placed = true;
        break;
      }
    }
    if (!placed) ffd_rem.push_back(cap - s);
  }
  std::size_t best = ffd_rem.size();
  if (best <= 1) return best;

  std::vector<std::int64_t> remaining(sizes.size() + 1, 0);
  for (std::size_t i = sizes.size(); i-- > 0;) remaining[i] = remaining[i + 1] + sizes[i];

  std::vector<std::int64_t> bins;
  auto recurse = [&](auto&& self, std::size_t idx) -> void {
    if (bins.size() >= best) return;
    if (idx == sizes.size()) {
      best = bins.size();
      return;
    }
    // volume bound: unplaced tokens beyond current slack force new bins
    std::int64_t slack = 0;
    for (std::int64_t r : bins) slack += r;
    const std::int64_t overflow = remaining[idx] - slack;
    if (overflow > 0 &&
        bins.size() + static_cast<std::size_t>((overflow + cap - 1) / cap) >= best) {
      return;
    }
    // index-based loop: the recursive call may reallocate bins
    const std::size_t open = bins.size();
    std::vector<std::int64_t> tried;  // bins with equal remaining space are interchangeable
    for (std::size_t i = 0; i < open; ++i) {
      const std::int64_t r = bins[i];
      if (sizes[idx] > r) continue;
      if (std::find(tried.begin(), tried.end(), r) != tried.end()) continue;
      tried.push_back(r);
      bins[i] = r - sizes[idx];
      self(self, idx + 1);
      bins[i] = r;
    }
    if (bins.size() + 1 < best) {
      bins.push_back(cap - sizes[idx]);
      self(self, idx + 1);
      bins.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

struct StrategyTokens {
  std::size_t total_sequences = 0;
  std::int64_t content_tokens = 0;
  std::int64_t separator_tokens = 0;
  std::int64_t padding_tokens = 0;
  std::int64_t padded_total = 0;
  double padding_ratio = 0.0;
};

struct EfficiencyReport {
  std::map<std::string, StrategyTokens> per_strategy;
  // sequence-count reduction of dynamic-pack relative to dynamic, when both present
  bool has_reduction = false;
  std::size_t sequences_dynamic = 0;
  std::size_t sequences_dynamic_pack = 0;
  double sequence_reduction = 0.0;
};

inline EfficiencyReport efficiency_report(const std::vector<PackPlan>& plans) {
  if (plans.empty()) throw InputError("efficiency_report needs at least one plan");
  std::vector<SampleId> reference;
  EfficiencyReport report;
  for (const auto& plan : plans) {
    std::vector<SampleId> ids;
    for (const auto& b : plan.batches)
      for (const auto& s : b)
        for (const auto& seg : s.segments) ids.push_back(seg.id);
    std::sort(ids.begin(), ids.end());
    if (reference.empty()) {
      reference = ids;
    } else if (ids != reference) {
      throw InputError("plans cover different sample sets");
    }
    StrategyTokens t;
    t.total_sequences = plan.total_sequences();
    t.content_tokens = plan.content_tokens();
    t.separator_tokens = plan.separator_tokens();
    t.padding_tokens = plan.padding_tokens();
    t.padded_total = plan.padded_total();
    t.padding_ratio =
        t.padded_total > 0 ? static_cast<double>(t.padding_tokens) / static_cast<double>(t.padded_total)
                           : 0.0;
    report.per_strategy[to_string(plan.strategy)] = t;
  }
  auto dyn = report.per_strategy.find("dynamic");
  auto pack = report.per_strategy.find("dynamic-pack");
  if (dyn != report.per_strategy.end() && pack != report.per_strategy.end()) {
    report.has_reduction = true;
    report.sequences_dynamic = dyn->second.total_sequences;
    report.sequences_dynamic_pack = pack->second.total_sequences;
    report.sequence_reduction =
        1.0 - static_cast<double>(pack->second.total_sequences) /
                  static_cast<double>(dyn->second.total_sequences);
  }
  return report;
}

inline ojson to_json(const StrategyTokens& t) {
  ojson j;
  j["total_sequences"] = t.total_sequences;
  j["content_tokens"] = t.content_tokens;
  j["separator_tokens"] = t.separator_tokens;
  j["padding_tokens"] = t.padding_tokens;
  j["padded_total"] = t.padded_total;
  j["padding_ratio"] = t.padding_ratio;
  return j;
}

inline ojson to_json(const EfficiencyReport& r) {
  ojson j;
  for (const auto& [name, t] : r.per_strategy) j[name] = to_json(t);
  if (r.has_reduction) {
    ojson red;
    red["sequences_dynamic"] = r.sequences_dynamic;
    red["sequences_dynamic_pack"] = r.sequences_dynamic_pack;
    red["sequence_reduction"] = r.sequence_reduction;
    j["reduction"] = red;
  }
  return j;
}

// Manifest layout: header line with the plan parameters, then one record per
// packed sequence in (batch, seq) order.
inline void save_manifest(const std::string& path, const PackPlan& plan) {
  JsonlWriter out(path);
  ojson header;
  header["strategy"] = to_string(plan.strategy);
  header["max_len"] = plan.max_len;
  header["batch_size"] = plan.batch_size;
  header["separator_cost"] = plan.separator_cost;
  if (plan.global_pack) header["global"] = true;
  out.write(header);
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    for (std::size_t s = 0; s < plan.batches[b].size(); ++s) {
      const auto& seq = plan.batches[b][s];
      ojson rec;
      rec["batch"] = b;
      rec["seq"] = s;
      ojson segs = ojson::array();
      for (const auto& seg : seq.segments) {
        ojson sj;
        sj["id"] = seg.id;
        sj["offset"] = seg.offset;
        sj["len"] = seg.len;
        segs.push_back(std::move(sj));
      }
      rec["segments"] = std::move(segs);
      rec["pad"] = seq.pad;
      rec["seq_len"] = seq.seq_len;
      out.write(rec);
    }
  }
  out.close();
}

inline PackPlan load_manifest(const std::string& path) {
  PackPlan plan;
  bool have_header = false;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    if (!have_header) {
      if (!rec.contains("strategy")) {
        throw InputError("manifest must start with a header line carrying \"strategy\"");
      }
      plan.strategy = pack_strategy_from_string(rec.at("strategy").get<std::string>());
      plan.max_len = rec.at("max_len").get<std::int64_t>();
      plan.batch_size = rec.at("batch_size").get<std::size_t>();
      plan.separator_cost = rec.value("separator_cost", std::int64_t{0});
      plan.global_pack = rec.value("global", false);
      have_header = true;
      return;
    }
    const auto batch = rec.at("batch").get<std::size_t>();
    const auto seq_idx = rec.at("seq").get<std::size_t>();
    if (batch >= plan.batches.size()) {
      if (batch != plan.batches.size()) {
        throw InputError("line " + std::to_string(line_no) + ": batch index out of order");
      }
      plan.batches.emplace_back();
    }
    if (seq_idx != plan.batches[batch].size()) {
      throw InputError("line " + std::to_string(line_no) + ": seq index out of order");
    }
    PackedSeq seq;
    for (const auto& sj : rec.at("segments")) {
      seq.segments.push_back({sj.at("id").get<SampleId>(), sj.at("offset").get<std::int64_t>(),
                              sj.at("len").get<std::int64_t>()});
    }
    seq.pad = rec.at("pad").get<std::int64_t>();
    seq.seq_len = rec.at("seq_len").get<std::int64_t>();
    plan.batches[batch].push_back(std::move(seq));
  });
  if (!have_header) throw InputError("manifest is empty: " + path);
  return plan;
}

}  // namespace selpack
