#pragma once

// Subset selection strategies: cluster-aware top-score sampling plus the
// random / complexity-only / diversity-only baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "selpack/clustering.hpp"
#include "selpack/scoring.hpp"
#include "selpack/text.hpp"
#include "selpack/types.hpp"

namespace selpack {

enum class Strategy { cdas, random, complexity, diversity, kcenter, graph_density };

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "cdas" || s == "kmeans-cdas") return Strategy::cdas;
  if (s == "random") return Strategy::random;
  if (s == "complexity") return Strategy::complexity;
  if (s == "diversity") return Strategy::diversity;
  if (s == "kcenter") return Strategy::kcenter;
  if (s == "graph-density") return Strategy::graph_density;
  throw InputError("unknown strategy: " + s);
}

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::cdas: return "cdas";
    case Strategy::random: return "random";
    case Strategy::complexity: return "complexity";
    case Strategy::diversity: return "diversity";
    case Strategy::kcenter: return "kcenter";
    default: return "graph-density";
  }
}

struct ClusterCounts {
  std::size_t total = 0;
  std::size_t selected = 0;
};

struct SelectionResult {
  Strategy strategy = Strategy::cdas;
  double m_percent = 0.0;
  std::uint64_t seed = 0;
  std::vector<SampleId> selected_ids;
  std::map<int, ClusterCounts> per_cluster;  // empty for cluster-free strategies
};

// Global budget: ceil(m_percent * n / 100). The epsilon guards against
// ceil(100.000000001) artifacts from binary fractions.
inline std::size_t target_count(double m_percent, std::size_t n) {
  if (!(m_percent > 0.0) || m_percent > 100.0) {
    throw InputError("m_percent must be in (0, 100]");
  }
  const double exact = m_percent * static_cast<double>(n) / 100.0;
  auto t = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  if (t < 1) t = 1;
  if (t > n) t = n;
  return t;
}

// Largest-remainder apportionment of `target` across groups proportional to
// their sizes. Per-group error vs the exact share is < 1 and the quotas sum
// to exactly `target`. Remainder ties go to the lower group index.
inline std::vector<std::size_t> apportion_largest_remainder(const std::vector<std::size_t>& sizes,
                                                            std::size_t target) {
  std::size_t n = 0;
  for (std::size_t s : sizes) n += s;
  if (target > n) throw InputError("apportionment target exceeds population");
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (n == 0) return quota;
  std::vector<double> remainder(sizes.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double share =
        static_cast<double>(target) * static_cast<double>(sizes[g]) / static_cast<double>(n);
    quota[g] = static_cast<std::size_t>(std::floor(share + 1e-9));
    if (quota[g] > sizes[g]) quota[g] = sizes[g];
    remainder[g] = share - static_cast<double>(quota[g]);
    assigned += quota[g];
  }
  std::vector<std::size_t> order(sizes.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t g : order) {
    if (assigned >= target) break;
    if (quota[g] < sizes[g]) {
      quota[g]++;
      assigned++;
    }
  }
  // a second sweep can only be needed when some groups were capped at size
  for (std::size_t g : order) {
    while (assigned < target && quota[g] < sizes[g]) {
      quota[g]++;
      assigned++;
    }
  }
  if (assigned != target) throw InvariantError("apportionment failed to meet its target");
  return quota;
}

namespace detail {

inline double score_of(const ScoreMap& scores, SampleId id) {
  auto it = scores.find(id);
  if (it == scores.end()) {
    throw InputError("missing score for id " + std::to_string(id));
  }
  return it->second.ifd;
}

// ids of one cluster ordered by score descending, ties by lower id
inline void sort_by_score_desc(std::vector<SampleId>& ids, const ScoreMap& scores) {
  std::sort(ids.begin(), ids.end(), [&](SampleId a, SampleId b) {
    const double sa = score_of(scores, a);
    const double sb = score_of(scores, b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
}

}  // namespace detail

// Per cluster: rank by score descending and keep that cluster's quota, where
// quotas apportion the global budget proportionally to cluster sizes.
// Output preserves ascending cluster index, then per-cluster rank order.
inline SelectionResult cdas_select(const ClusterModel& clusters, const ScoreMap& scores,
                                   double m_percent) {
  const std::size_t n = clusters.ids.size();
  if (n == 0) throw InputError("cdas_select: empty cluster model");
  const std::size_t target = target_count(m_percent, n);
  auto members = clusters.members();
  std::vector<std::size_t> sizes(clusters.k);
  for (std::size_t c = 0; c < clusters.k; ++c) sizes[c] = members[c].size();
  const auto quotas = apportion_largest_remainder(sizes, target);

  SelectionResult result;
  result.strategy = Strategy::cdas;
  result.m_percent = m_percent;
  for (std::size_t c = 0; c < clusters.k; ++c) {
    detail::sort_by_score_desc(members[c], scores);
    for (std::size_t i = 0; i < quotas[c]; ++i) result.selected_ids.push_back(members[c][i]);
    result.per_cluster[static_cast<int>(c)] = {sizes[c], quotas[c]};
  }
  return result;
}

inline SelectionResult random_select(std::span<const SampleId> ids, double m_percent,
                                     std::uint64_t seed) {
  if (ids.empty()) throw InputError("random_select: empty corpus");
  const std::size_t target = target_count(m_percent, ids.size());
  std::vector<SampleId> pool(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(target);
  std::sort(pool.begin(), pool.end());

  SelectionResult result;
  result.strategy = Strategy::random;
  result.m_percent = m_percent;
  result.seed = seed;
  result.selected_ids = std::move(pool);
  return result;
}

// Global rank by score descending, ties by lower id.
inline SelectionResult complexity_select(std::span<const SampleId> ids, const ScoreMap& scores,
                                         double m_percent) {
  if (ids.empty()) throw InputError("complexity_select: empty corpus");
  const std::size_t target = target_count(m_percent, ids.size());
  std::vector<SampleId> ranked(ids.begin(), ids.end());
  detail::sort_by_score_desc(ranked, scores);
  ranked.resize(target);

  SelectionResult result;
  result.strategy = Strategy::complexity;
  result.m_percent = m_percent;
  result.selected_ids = std::move(ranked);
  return result;
}

// Uniform per-cluster sampling under the same quota structure as cdas_select.
inline SelectionResult diversity_select(const ClusterModel& clusters, double m_percent,
                                        std::uint64_t seed) {
  const std::size_t n = clusters.ids.size();
  if (n == 0) throw InputError("diversity_select: empty cluster model");
  const std::size_t target = target_count(m_percent, n);
  auto members = clusters.members();
  std::vector<std::size_t> sizes(clusters.k);
  for (std::size_t c = 0; c < clusters.k; ++c) sizes[c] = members[c].size();
  const auto quotas = apportion_largest_remainder(sizes, target);

  SelectionResult result;
  result.strategy = Strategy::diversity;
  result.m_percent = m_percent;
  result.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < clusters.k; ++c) {
    auto& pool = members[c];
    for (std::size_t i = 0; i < quotas[c]; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quotas[c]));
    for (std::size_t i = 0; i < quotas[c]; ++i) result.selected_ids.push_back(pool[i]);
    result.per_cluster[static_cast<int>(c)] = {sizes[c], quotas[c]};
  }
  return result;
}

// Drops ids whose score ratio exceeds the threshold; the survivors form the
// new population for quota arithmetic.
inline std::vector<SampleId> filter_by_max_score(std::span<const SampleId> ids,
                                                 const ScoreMap& scores, double threshold) {
  std::vector<SampleId> kept;
  kept.reserve(ids.size());
  for (SampleId id : ids) {
    if (detail::score_of(scores, id) <= threshold) kept.push_back(id);
  }
  if (kept.empty()) {
    throw InputError("score filter removed every sample (threshold " + std::to_string(threshold) +
                     ")");
  }
  return kept;
}

// Rebuilds a cluster model restricted to `ids` (used after score filtering).
inline ClusterModel restrict_clusters(const ClusterModel& clusters,
                                      std::span<const SampleId> ids) {
  ClusterModel out;
  out.k = clusters.k;
  out.dim = clusters.dim;
  out.centroids = clusters.centroids;
  for (SampleId id : ids) {
    auto it = std::lower_bound(clusters.ids.begin(), clusters.ids.end(), id);
    if (it == clusters.ids.end() || *it != id) {
      throw InputError("cluster model does not cover id " + std::to_string(id));
    }
    const auto idx = static_cast<std::size_t>(it - clusters.ids.begin());
    out.ids.push_back(id);
    out.assignment.push_back(clusters.assignment[idx]);
  }
  return out;
}

// Selection artifact: a header line carrying the run parameters, then one
// record per selected id in selection order.
inline void write_selection(const std::string& path, const SelectionResult& result,
                            const ClusterModel* clusters, const ScoreMap* scores) {
  JsonlWriter out(path);
  ojson header;
  header["strategy"] = to_string(result.strategy);
  header["m_percent"] = result.m_percent;
  header["seed"] = result.seed;
  out.write(header);

  std::map<SampleId, int> cluster_of;
  std::map<SampleId, int> rank_of;
  if (clusters) {
    for (std::size_t i = 0; i < clusters->ids.size(); ++i) {
      cluster_of[clusters->ids[i]] = clusters->assignment[i];
    }
    if (scores) {
      auto members = clusters->members();
      for (auto& cluster : members) {
        detail::sort_by_score_desc(cluster, *scores);
        for (std::size_t r = 0; r < cluster.size(); ++r) rank_of[cluster[r]] = static_cast<int>(r);
      }
    }
  }
  for (SampleId id : result.selected_ids) {
    ojson rec;
    rec["id"] = id;
    rec["cluster"] = cluster_of.count(id) ? cluster_of[id] : -1;
    rec["ifd"] = scores ? detail::score_of(*scores, id) : 0.0;
    rec["rank_in_cluster"] = rank_of.count(id) ? rank_of[id] : -1;
    out.write(rec);
  }
  out.close();
}

struct SelectionFile {
  Strategy strategy = Strategy::cdas;
  double m_percent = 0.0;
  std::uint64_t seed = 0;
  std::vector<SampleId> ids;
};

inline SelectionFile load_selection(const std::string& path) {
  SelectionFile out;
  bool have_header = false;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    if (!have_header) {
      if (!rec.contains("strategy")) {
        throw InputError("selection file must start with a header line carrying \"strategy\"");
      }
      out.strategy = strategy_from_string(rec.at("strategy").get<std::string>());
      out.m_percent = rec.value("m_percent", 0.0);
      out.seed = rec.value("seed", std::uint64_t{0});
      have_header = true;
      return;
    }
    auto it = rec.find("id");
    if (it == rec.end() || !it->is_number_integer()) {
      throw InputError("line " + std::to_string(line_no) + ": selection record needs integer id");
    }
    out.ids.push_back(it->get<SampleId>());
  });
  if (!have_header) throw InputError("selection file is empty: " + path);
  return out;
}

}  // namespace selpack
