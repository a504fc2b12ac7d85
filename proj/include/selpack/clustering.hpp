#pragma once

// K-means partitioning plus the two alternative diversity selectors used for
// benchmarking: k-center greedy and graph-density selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "selpack/embedding.hpp"
#include "selpack/io.hpp"
#include "selpack/parallel.hpp"
#include "selpack/text.hpp"
#include "selpack/types.hpp"

namespace selpack {

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<SampleId> ids;        // ascending, same order as the embedding rows
  std::vector<int> assignment;      // per row, cluster index in [0, k)
  std::vector<double> centroids;    // k x dim row-major
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  std::span<double> centroid(std::size_t c) {
    return {centroids.data() + c * dim, dim};
  }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (int a : assignment) sizes[static_cast<std::size_t>(a)]++;
    return sizes;
  }

  // members of each cluster in ascending id order
  std::vector<std::vector<SampleId>> members() const {
    std::vector<std::vector<SampleId>> out(k);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out[static_cast<std::size_t>(assignment[i])].push_back(ids[i]);
    }
    return out;
  }
};

// Default cluster count when the caller does not choose one.
inline std::size_t default_k(std::size_t n) {
  const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n) / 2.0)));
  return std::min(n, std::max<std::size_t>(2, k));
}

namespace detail {

// Chunked sum; identical association for any thread count.
inline double chunked_sum(const std::vector<double>& per_point, unsigned threads) {
  const std::size_t chunks = chunk_count(per_point.size());
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(per_point.size(), threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += per_point[i];
    partial[c] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

struct AssignResult {
  std::vector<int> best;
  std::vector<double> best_d2;
};

inline AssignResult assign_points(const EmbeddingMatrix& emb, const std::vector<double>& centroids,
                                  std::size_t k, unsigned threads) {
  AssignResult r;
  const std::size_t n = emb.size();
  const std::size_t d = emb.dim;
  r.best.assign(n, 0);
  r.best_d2.assign(n, 0.0);
  // half squared centroid norms; argmin ||x-c||^2 == argmin (||c||^2/2 - x.c)
  std::vector<double> half_c2(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const double* cp = centroids.data() + c * d;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += cp[j] * cp[j];
    half_c2[c] = 0.5 * s;
  }
  parallel_chunks(n, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* x = emb.data.data() + i * d;
      int best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double* cp = centroids.data() + c * d;
        double xc = 0.0;
        for (std::size_t j = 0; j < d; ++j) xc += x[j] * cp[j];
        const double score = half_c2[c] - xc;
        if (score < best_score) {
          best_score = score;
          best = static_cast<int>(c);
        }
      }
      r.best[i] = best;
      r.best_d2[i] = dist2(emb.row(i), {centroids.data() + best * d, d});
    }
  });
  return r;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded from
// the point currently farthest from its centroid. Results are bit-identical
// for any thread count; threads=1 is the reference path.
inline ClusterModel kmeans(const EmbeddingMatrix& emb, std::size_t k, std::uint64_t seed,
                           std::size_t max_iters = 100, double tol = 1e-4,
                           unsigned threads = 1) {
  const std::size_t n = emb.size();
  const std::size_t d = emb.dim;
  if (k < 1) throw InputError("kmeans: k must be >= 1");
  if (k > n) throw InputError("kmeans: k exceeds the number of points (" + std::to_string(k) +
                              " > " + std::to_string(n) + ")");
  if (max_iters < 1) throw InputError("kmeans: max_iters must be >= 1");
  if (tol < 0) throw InputError("kmeans: tol must be >= 0");

  ClusterModel model;
  model.k = k;
  model.dim = d;
  model.ids = emb.ids;
  model.centroids.assign(k * d, 0.0);

  // k-means++ seeding
  std::mt19937_64 rng(seed);
  std::vector<bool> chosen(n, false);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(uniform_below(rng, n));
  chosen[first] = true;
  std::copy(emb.row(first).begin(), emb.row(first).end(), model.centroid(0).begin());
  for (std::size_t i = 0; i < n; ++i) min_d2[i] = dist2(emb.row(i), model.centroid(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += min_d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = uniform_unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        acc += min_d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n) {
      // all remaining points coincide with a centroid; take the first unchosen
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    std::copy(emb.row(pick).begin(), emb.row(pick).end(), model.centroid(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], dist2(emb.row(i), model.centroid(c)));
    }
  }

  std::vector<int> assignment(n, 0);
  const std::size_t chunks = chunk_count(n);
  std::vector<double> chunk_acc(chunks * k * d);
  std::vector<std::int64_t> chunk_cnt(chunks * k);

  auto reseed_empty = [&](detail::AssignResult& a) {
    std::vector<std::int64_t> counts(k, 0);
    for (int c : a.best) counts[static_cast<std::size_t>(c)]++;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d2 = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(a.best[i])] <= 1) continue;  // keep donors non-empty
        if (a.best_d2[i] > far_d2) {
          far_d2 = a.best_d2[i];
          far = i;
        }
      }
      if (far_d2 < 0.0) break;  // nothing can donate
      counts[static_cast<std::size_t>(a.best[far])]--;
      counts[c]++;
      a.best[far] = static_cast<int>(c);
      a.best_d2[far] = 0.0;
      std::copy(emb.row(far).begin(), emb.row(far).end(), model.centroid(c).begin());
    }
  };

  std::size_t iter = 0;
  for (; iter < max_iters; ++iter) {
    auto a = detail::assign_points(emb, model.centroids, k, threads);
    reseed_empty(a);
    model.inertia_history.push_back(detail::chunked_sum(a.best_d2, threads));

    const bool changed = (a.best != assignment);
    assignment = a.best;

    // centroid update with fixed-chunk accumulation
    std::fill(chunk_acc.begin(), chunk_acc.end(), 0.0);
    std::fill(chunk_cnt.begin(), chunk_cnt.end(), 0);
    parallel_chunks(n, threads, [&](std::size_t ci, std::size_t b, std::size_t e) {
      double* acc = chunk_acc.data() + ci * k * d;
      std::int64_t* cnt = chunk_cnt.data() + ci * k;
      for (std::size_t i = b; i < e; ++i) {
        const auto c = static_cast<std::size_t>(assignment[i]);
        const double* x = emb.data.data() + i * d;
        double* dst = acc + c * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += x[j];
        cnt[c]++;
      }
    });
    std::vector<double> new_centroids(k * d, 0.0);
    std::vector<std::int64_t> counts(k, 0);
    for (std::size_t ci = 0; ci < chunks; ++ci) {
      const double* acc = chunk_acc.data() + ci * k * d;
      const std::int64_t* cnt = chunk_cnt.data() + ci * k;
      for (std::size_t c = 0; c < k; ++c) {
        counts[c] += cnt[c];
        double* dst = new_centroids.data() + c * d;
        const double* src = acc + c * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
    double shift2 = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double* dst = new_centroids.data() + c * d;
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) dst[j] /= static_cast<double>(counts[c]);
      } else {
        std::copy(model.centroid(c).begin(), model.centroid(c).end(), dst);
      }
      shift2 = std::max(shift2, dist2({dst, d}, model.centroid(c)));
    }
    model.centroids = std::move(new_centroids);

    if (!changed || std::sqrt(shift2) < tol) {
      ++iter;
      break;
    }
  }
  model.iterations = iter;

  // final assignment against the final centroids
  auto a = detail::assign_points(emb, model.centroids, k, threads);
  reseed_empty(a);
  model.assignment = std::move(a.best);
  model.inertia = detail::chunked_sum(a.best_d2, threads);
  return model;
}

// Farthest-point traversal: start from a seed-chosen point, then repeatedly
// take the point maximizing the minimum distance to the chosen set.
inline std::vector<SampleId> kcenter_greedy(const EmbeddingMatrix& emb, std::size_t count,
                                            std::uint64_t seed) {
  const std::size_t n = emb.size();
  if (count < 1 || count > n) {
    throw InputError("kcenter_greedy: count out of range [1, " + std::to_string(n) + "]");
  }
  std::mt19937_64 rng(seed);
  std::vector<SampleId> picked;
  picked.reserve(count);
  std::vector<bool> in_set(n, false);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

  std::size_t cur = static_cast<std::size_t>(uniform_below(rng, n));
  in_set[cur] = true;
  picked.push_back(emb.ids[cur]);
  while (picked.size() < count) {
    const std::size_t d = emb.dim;
    const double* xc = emb.data.data() + cur * d;
    std::size_t best = n;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_set[i]) continue;
      const double* x = emb.data.data() + i * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - xc[j];
        s += diff * diff;
      }
      if (s < min_d2[i]) min_d2[i] = s;
      if (min_d2[i] > best_d2) {  // ties keep the earlier (lower-id) index
        best_d2 = min_d2[i];
        best = i;
      }
    }
    in_set[best] = true;
    picked.push_back(emb.ids[best]);
    cur = best;
  }
  return picked;
}

// Mutual-kNN graph density selection. Edge weight exp(-gamma * ||xi-xj||^2);
// after each pick the densities of its neighbors are scaled by (1 - w).
inline std::vector<SampleId> graph_density_select(const EmbeddingMatrix& emb, std::size_t count,
                                                  std::size_t knn, double gamma) {
  const std::size_t n = emb.size();
  if (count < 1 || count > n) {
    throw InputError("graph_density_select: count out of range [1, " + std::to_string(n) + "]");
  }
  if (knn < 1 || knn >= n) {
    throw InputError("graph_density_select: knn out of range [1, " + std::to_string(n) + ")");
  }
  if (!(gamma > 0.0)) throw InputError("graph_density_select: gamma must be > 0");

  // k nearest neighbours per point, ties broken by lower row index
  std::vector<std::vector<std::size_t>> nearest(n);
  {
    std::vector<std::pair<double, std::size_t>> cand(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        cand[j] = {dist2(emb.row(i), emb.row(j)), j};
      }
      cand[i].first = std::numeric_limits<double>::infinity();  // exclude self
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(knn), cand.end());
      nearest[i].reserve(knn);
      for (std::size_t t = 0; t < knn; ++t) nearest[i].push_back(cand[t].second);
    }
  }
  std::vector<std::vector<bool>> is_nn(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nearest[i]) is_nn[i][j] = true;
  }

  struct Edge {
    std::size_t to;
    double w;
  };
  std::vector<std::vector<Edge>> adj(n);
  std::vector<double> density(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nearest[i]) {
      if (j > i && is_nn[j][i]) {
        const double w = std::exp(-gamma * dist2(emb.row(i), emb.row(j)));
        adj[i].push_back({j, w});
        adj[j].push_back({i, w});
        density[i] += w;
        density[j] += w;
      }
    }
  }

  std::vector<bool> selected(n, false);
  std::vector<SampleId> picked;
  picked.reserve(count);
  while (picked.size() < count) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      if (best == n || density[i] > density[best]) best = i;
    }
    selected[best] = true;
    picked.push_back(emb.ids[best]);
    for (const auto& e : adj[best]) {
      density[e.to] *= (1.0 - e.w);
    }
  }
  return picked;
}

inline void save_clusters(const std::string& assignments_path, const std::string& centroids_path,
                          const ClusterModel& model) {
  JsonlWriter out(assignments_path);
  for (std::size_t i = 0; i < model.ids.size(); ++i) {
    ojson rec;
    rec["id"] = model.ids[i];
    rec["cluster"] = model.assignment[i];
    out.write(rec);
  }
  out.close();
  JsonlWriter cent(centroids_path);
  for (std::size_t c = 0; c < model.k; ++c) {
    ojson rec;
    rec["cluster"] = static_cast<int>(c);
    auto row = model.centroid(c);
    rec["centroid"] = std::vector<double>(row.begin(), row.end());
    cent.write(rec);
  }
  cent.close();
}

inline ClusterModel load_clusters(const std::string& assignments_path,
                                  const std::string& centroids_path, const Corpus& corpus) {
  ClusterModel model;
  std::map<SampleId, int> assign;
  int max_cluster = -1;
  for_each_jsonl(assignments_path, [&](std::size_t line_no, const json& rec) {
    auto id_it = rec.find("id");
    auto c_it = rec.find("cluster");
    if (id_it == rec.end() || c_it == rec.end() || !id_it->is_number_integer() ||
        !c_it->is_number_integer()) {
      throw InputError("line " + std::to_string(line_no) +
                       ": cluster record needs integer \"id\" and \"cluster\"");
    }
    const int c = c_it->get<int>();
    if (c < 0) throw InputError("line " + std::to_string(line_no) + ": negative cluster index");
    if (!assign.emplace(id_it->get<SampleId>(), c).second) {
      throw InputError("line " + std::to_string(line_no) + ": duplicate cluster assignment");
    }
    max_cluster = std::max(max_cluster, c);
  });
  for (const auto& p : corpus.pairs) {
    auto it = assign.find(p.id);
    if (it == assign.end()) {
      throw InputError("cluster file does not cover id " + std::to_string(p.id));
    }
    model.ids.push_back(p.id);
    model.assignment.push_back(it->second);
  }
  if (assign.size() != corpus.size()) {
    throw InputError("cluster file contains ids not present in the corpus");
  }

  std::map<int, std::vector<double>> cents;
  for_each_jsonl(centroids_path, [&](std::size_t line_no, const json& rec) {
    auto c_it = rec.find("cluster");
    auto v_it = rec.find("centroid");
    if (c_it == rec.end() || !c_it->is_number_integer() || v_it == rec.end() ||
        !v_it->is_array()) {
      throw InputError("line " + std::to_string(line_no) +
                       ": centroid record needs integer \"cluster\" and array \"centroid\"");
    }
    cents[c_it->get<int>()] = v_it->get<std::vector<double>>();
  });
  if (cents.empty()) throw InputError("centroid file is empty: " + centroids_path);
  model.k = static_cast<std::size_t>(std::max(max_cluster + 1, cents.rbegin()->first + 1));
  model.dim = cents.begin()->second.size();
  model.centroids.assign(model.k * model.dim, 0.0);
  for (const auto& [c, v] : cents) {
    if (v.size() != model.dim) throw InputError("centroid dimension mismatch");
    std::copy(v.begin(), v.end(), model.centroid(static_cast<std::size_t>(c)).begin());
  }
  for (std::size_t i = 0; i < model.ids.size(); ++i) {
    if (static_cast<std::size_t>(model.assignment[i]) >= model.k) {
      throw InputError("assignment references cluster beyond centroid file");
    }
  }
  return model;
}

}  // namespace selpack
