#pragma once

// Unit-norm instruction embeddings: a built-in hashed TF-IDF embedder plus a
// loader for externally computed vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "selpack/corpus.hpp"
#include "selpack/io.hpp"
#include "selpack/text.hpp"
#include "selpack/types.hpp"

namespace selpack {

// Row-major matrix keyed by ascending sample id. Rows are unit-norm except
// for samples whose text produced no tokens; those are the zero vector and
// appear in zero_rows.
struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<SampleId> ids;       // ascending
  std::vector<double> data;        // ids.size() x dim
  std::set<SampleId> zero_rows;

  std::size_t size() const { return ids.size(); }

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  std::span<double> row(std::size_t i) {
    return {data.data() + i * dim, dim};
  }

  std::size_t index_of(SampleId id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) {
      throw InputError("embedding matrix has no row for id " + std::to_string(id));
    }
    return static_cast<std::size_t>(it - ids.begin());
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine(const EmbeddingMatrix& emb, SampleId a, SampleId b) {
  auto ra = emb.row(emb.index_of(a));
  auto rb = emb.row(emb.index_of(b));
  const double na = norm2(ra);
  const double nb = norm2(rb);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(ra, rb) / (na * nb);
}

// TF-IDF over whitespace tokens of each prompt, feature-hashed into `dim`
// buckets with an independent sign hash, then L2-normalized. IDF is the
// smoothed log((N+1)/(df+1)) + 1. Deterministic in (corpus, dim, seed).
inline EmbeddingMatrix embed_hashed_tfidf(const std::vector<RenderedSample>& rendered,
                                          std::size_t dim, std::uint64_t seed) {
  if (dim < 16) throw InputError("embedding dim must be >= 16");
  if (rendered.empty()) throw InputError("cannot embed an empty corpus");

  std::vector<std::vector<std::string>> docs;
  docs.reserve(rendered.size());
  for (const auto& r : rendered) docs.push_back(whitespace_tokenize(r.prompt_text));

  // Document frequencies in one pass; every row below depends only on its own
  // tokens plus this table.
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto tok : seen) df[std::string(tok)]++;
  }
  const double n_docs = static_cast<double>(docs.size());

  // rows go out keyed by ascending id no matter how the input was ordered
  std::vector<std::size_t> order(rendered.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rendered[a].id < rendered[b].id; });

  EmbeddingMatrix emb;
  emb.dim = dim;
  emb.ids.reserve(rendered.size());
  for (std::size_t src : order) emb.ids.push_back(rendered[src].id);
  emb.data.assign(rendered.size() * dim, 0.0);

  const std::uint64_t sign_seed = seed ^ 0xA076'1D64'78BD'642Full;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& doc = docs[order[i]];
    if (doc.empty()) {
      emb.zero_rows.insert(emb.ids[i]);
      continue;
    }
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& tok : doc) tf[tok]++;
    auto row = emb.row(i);
    for (const auto& [tok, count] : tf) {
      const double idf = std::log((n_docs + 1.0) / (static_cast<double>(df[tok]) + 1.0)) + 1.0;
      const double w = static_cast<double>(count) * idf;
      const std::size_t bucket = static_cast<std::size_t>(fnv1a64(tok, seed) % dim);
      const double sign = (fnv1a64(tok, sign_seed) & 1u) ? 1.0 : -1.0;
      row[bucket] += sign * w;
    }
    const double norm = norm2(row);
    if (norm == 0.0) {
      // all weights cancelled in the hash buckets; keep the zero vector
      emb.zero_rows.insert(emb.ids[i]);
      continue;
    }
    for (double& v : row) v /= norm;
  }
  return emb;
}

// Reads {"id": int, "vector": [float,...]} lines. The file must cover the
// corpus ids exactly once with a constant dimension; rows farther than 1e-4
// from unit norm are renormalized.
inline EmbeddingMatrix load_embeddings(const std::string& path, const Corpus& corpus) {
  std::unordered_map<SampleId, std::vector<double>> rows;
  std::size_t dim = 0;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    auto id_it = rec.find("id");
    auto vec_it = rec.find("vector");
    if (id_it == rec.end() || !id_it->is_number_integer() || vec_it == rec.end() ||
        !vec_it->is_array()) {
      throw InputError("line " + std::to_string(line_no) +
                       ": embedding record needs integer \"id\" and array \"vector\"");
    }
    const SampleId id = id_it->get<SampleId>();
    std::vector<double> v;
    v.reserve(vec_it->size());
    for (const auto& x : *vec_it) {
      if (!x.is_number()) {
        throw InputError("line " + std::to_string(line_no) + ": non-numeric vector entry");
      }
      v.push_back(x.get<double>());
    }
    if (v.empty()) {
      throw InputError("line " + std::to_string(line_no) + ": empty vector");
    }
    if (dim == 0) {
      dim = v.size();
    } else if (v.size() != dim) {
      throw InputError("line " + std::to_string(line_no) + ": dimension mismatch (" +
                       std::to_string(v.size()) + " vs " + std::to_string(dim) + ")");
    }
    if (!rows.emplace(id, std::move(v)).second) {
      throw InputError("line " + std::to_string(line_no) + ": duplicate embedding for id " +
                       std::to_string(id));
    }
  });

  std::vector<SampleId> missing;
  for (const auto& p : corpus.pairs) {
    if (!rows.count(p.id)) missing.push_back(p.id);
  }
  if (!missing.empty()) {
    std::string msg = "ids missing: [";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      if (i) msg += ", ";
      msg += std::to_string(missing[i]);
    }
    if (missing.size() > 10) msg += ", ...";
    msg += "]";
    throw InputError(msg);
  }
  if (rows.size() != corpus.size()) {
    throw InputError("embedding file contains ids not present in the corpus");
  }

  EmbeddingMatrix emb;
  emb.dim = dim;
  emb.ids.reserve(corpus.size());
  for (const auto& p : corpus.pairs) emb.ids.push_back(p.id);
  emb.data.assign(corpus.size() * dim, 0.0);
  for (std::size_t i = 0; i < emb.ids.size(); ++i) {
    auto& src = rows[emb.ids[i]];
    auto row = emb.row(i);
    std::copy(src.begin(), src.end(), row.begin());
    const double norm = norm2(row);
    if (norm == 0.0) {
      emb.zero_rows.insert(emb.ids[i]);
    } else if (std::abs(norm - 1.0) > 1e-4) {
      for (double& v : row) v /= norm;
    }
  }
  return emb;
}

inline void save_embeddings(const std::string& path, const EmbeddingMatrix& emb) {
  JsonlWriter out(path);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    ojson rec;
    rec["id"] = emb.ids[i];
    auto row = emb.row(i);
    rec["vector"] = std::vector<double>(row.begin(), row.end());
    out.write(rec);
  }
  out.close();
}

}  // namespace selpack
