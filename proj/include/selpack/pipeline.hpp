#pragma once

// Pipeline orchestration: each stage reads only earlier-stage artifacts plus
// the config, so stages can be re-run individually or driven end to end.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "selpack/clustering.hpp"
#include "selpack/config.hpp"
#include "selpack/corpus.hpp"
#include "selpack/embedding.hpp"
#include "selpack/io.hpp"
#include "selpack/ngram.hpp"
#include "selpack/packing.hpp"
#include "selpack/scoring.hpp"
#include "selpack/selection.hpp"
#include "selpack/types.hpp"

namespace selpack {

struct ArtifactPaths {
  std::filesystem::path dir;

  std::string corpus() const { return (dir / "corpus.jsonl").string(); }
  std::string stats() const { return (dir / "stats.json").string(); }
  std::string embeddings() const { return (dir / "embeddings.jsonl").string(); }
  std::string clusters() const { return (dir / "clusters.jsonl").string(); }
  std::string centroids() const { return (dir / "centroids.jsonl").string(); }
  std::string scores() const { return (dir / "scores.jsonl").string(); }
  std::string selection() const { return (dir / "selection.jsonl").string(); }
  std::string manifest() const { return (dir / "manifest.jsonl").string(); }
  std::string report() const { return (dir / "report.json").string(); }
  std::string resolved_config() const { return (dir / "config.resolved.ini").string(); }
  std::string run_meta() const { return (dir / "run_meta.json").string(); }
  std::string failed_marker() const { return (dir / "FAILED").string(); }
};

namespace detail {

inline Tokenizer make_tokenizer(const PipelineConfig& cfg) {
  TokenizerSpec spec;
  spec.kind = cfg.dataset.tokenizer;
  spec.external_path = cfg.dataset.token_counts;
  return Tokenizer(spec);
}

inline void require_artifact(const std::string& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) {
    throw InputError("missing " + path + " (run the " + producer + " stage first)");
  }
}

inline Corpus load_corpus_artifact(const PipelineConfig& cfg, const ArtifactPaths& in) {
  require_artifact(in.corpus(), "ingest");
  return load_dataset(in.corpus(), cfg.dataset.schema);
}

inline EmbeddingMatrix restrict_embeddings(const EmbeddingMatrix& emb,
                                           std::span<const SampleId> ids) {
  EmbeddingMatrix out;
  out.dim = emb.dim;
  out.ids.assign(ids.begin(), ids.end());
  out.data.reserve(ids.size() * emb.dim);
  for (SampleId id : ids) {
    auto row = emb.row(emb.index_of(id));
    out.data.insert(out.data.end(), row.begin(), row.end());
    if (emb.zero_rows.count(id)) out.zero_rows.insert(id);
  }
  return out;
}

inline ojson stats_to_json(const LengthStats& s) {
  ojson j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["p50"] = s.p50;
  j["p90"] = s.p90;
  j["p99"] = s.p99;
  j["total"] = s.total;
  j["bin_width"] = s.bin_width;
  j["histogram"] = s.histogram;
  return j;
}

inline std::string now_utc_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline void stage_ingest(const PipelineConfig& cfg, const ArtifactPaths& out) {
  auto corpus = load_dataset(cfg.dataset.path, cfg.dataset.schema);
  save_dataset(out.corpus(), corpus, cfg.dataset.schema, /*with_ids=*/true);
  auto rendered = render_corpus(corpus, cfg.dataset.templ, detail::make_tokenizer(cfg));
  write_file(out.stats(), detail::stats_to_json(corpus_stats(rendered)).dump(2) + "\n");
}

inline void stage_embed(const PipelineConfig& cfg, const ArtifactPaths& io) {
  auto corpus = detail::load_corpus_artifact(cfg, io);
  EmbeddingMatrix emb;
  if (cfg.embedding.source == "builtin") {
    auto rendered = render_corpus(corpus, cfg.dataset.templ, detail::make_tokenizer(cfg));
    emb = embed_hashed_tfidf(rendered, cfg.embedding.dim, cfg.embedding.seed);
  } else {
    emb = load_embeddings(cfg.embedding.path, corpus);
  }
  save_embeddings(io.embeddings(), emb);
}

inline void stage_cluster(const PipelineConfig& cfg, const ArtifactPaths& io) {
  auto corpus = detail::load_corpus_artifact(cfg, io);
  detail::require_artifact(io.embeddings(), "embed");
  auto emb = load_embeddings(io.embeddings(), corpus);
  const std::size_t k = cfg.clustering.k ? cfg.clustering.k : default_k(emb.size());
  auto model = kmeans(emb, k, cfg.clustering.seed, cfg.clustering.max_iters, cfg.clustering.tol,
                      static_cast<unsigned>(cfg.threads));
  save_clusters(io.clusters(), io.centroids(), model);
}

inline void stage_score(const PipelineConfig& cfg, const ArtifactPaths& io) {
  auto corpus = detail::load_corpus_artifact(cfg, io);
  ScoreMap scores;
  if (cfg.scoring.provider == "ngram") {
    auto tokenizer = detail::make_tokenizer(cfg);
    auto rendered = render_corpus(corpus, cfg.dataset.templ, tokenizer);
    auto lm = train_ngram(rendered, tokenizer, cfg.scoring.order, cfg.scoring.add_k);
    scores = score_corpus(rendered, lm, static_cast<unsigned>(cfg.threads));
  } else {
    scores = load_logprob_file(cfg.scoring.path, corpus);
  }
  save_scores(io.scores(), scores);
}

// Reads shared artifacts from `in`; the selection itself lands in `out` so
// several selections (e.g. an m sweep) can share one set of upstream stages.
inline void stage_select(const PipelineConfig& cfg, const ArtifactPaths& in,
                         const ArtifactPaths& out) {
  auto corpus = detail::load_corpus_artifact(cfg, in);
  const Strategy strategy = cfg.selection.strategy;
  const double m = cfg.selection.m_percent;
  const std::uint64_t seed = cfg.selection.seed;

  const bool needs_scores = strategy == Strategy::cdas || strategy == Strategy::complexity ||
                            cfg.scoring.drop_ifd_above.has_value();
  const bool needs_clusters = strategy == Strategy::cdas || strategy == Strategy::diversity;

  ScoreMap scores;
  bool have_scores = false;
  if (needs_scores || std::filesystem::exists(in.scores())) {
    detail::require_artifact(in.scores(), "score");
    scores = load_logprob_file(in.scores(), corpus);
    have_scores = true;
  }
  ClusterModel model;
  bool have_clusters = false;
  if (needs_clusters || std::filesystem::exists(in.clusters())) {
    detail::require_artifact(in.clusters(), "cluster");
    model = load_clusters(in.clusters(), in.centroids(), corpus);
    have_clusters = true;
  }

  std::vector<SampleId> pool = corpus.ids();
  if (cfg.scoring.drop_ifd_above) {
    pool = filter_by_max_score(pool, scores, *cfg.scoring.drop_ifd_above);
  }

  SelectionResult result;
  switch (strategy) {
    case Strategy::cdas: {
      const ClusterModel* use = &model;
      ClusterModel restricted;
      if (pool.size() != corpus.size()) {
        restricted = restrict_clusters(model, pool);
        use = &restricted;
      }
      result = cdas_select(*use, scores, m);
      break;
    }
    case Strategy::complexity:
      result = complexity_select(pool, scores, m);
      break;
    case Strategy::random:
      result = random_select(pool, m, seed);
      break;
    case Strategy::diversity: {
      const ClusterModel* use = &model;
      ClusterModel restricted;
      if (pool.size() != corpus.size()) {
        restricted = restrict_clusters(model, pool);
        use = &restricted;
      }
      result = diversity_select(*use, m, seed);
      break;
    }
    case Strategy::kcenter:
    case Strategy::graph_density: {
      detail::require_artifact(in.embeddings(), "embed");
      auto emb = load_embeddings(in.embeddings(), corpus);
      if (pool.size() != corpus.size()) emb = detail::restrict_embeddings(emb, pool);
      const std::size_t target = target_count(m, emb.size());
      result.strategy = strategy;
      result.m_percent = m;
      result.seed = seed;
      if (strategy == Strategy::kcenter) {
        result.selected_ids = kcenter_greedy(emb, target, seed);
      } else {
        result.selected_ids =
            graph_density_select(emb, target, /*knn=*/10, /*gamma=*/1.0 / emb.dim);
      }
      break;
    }
  }
  write_selection(out.selection(), result, have_clusters ? &model : nullptr,
                  have_scores ? &scores : nullptr);
}

namespace detail {

// token lengths for the selected ids, in selection-file order
inline std::vector<PackItem> selected_items(const PipelineConfig& cfg, const ArtifactPaths& in,
                                            const ArtifactPaths& out) {
  auto corpus = load_corpus_artifact(cfg, in);
  auto rendered = render_corpus(corpus, cfg.dataset.templ, make_tokenizer(cfg));
  require_artifact(out.selection(), "select");
  auto sel = load_selection(out.selection());
  std::map<SampleId, std::int64_t> len_of;
  for (const auto& r : rendered) len_of[r.id] = r.total_tokens;
  std::vector<PackItem> items;
  items.reserve(sel.ids.size());
  for (SampleId id : sel.ids) {
    auto it = len_of.find(id);
    if (it == len_of.end()) {
      throw InputError("selection refers to unknown id " + std::to_string(id));
    }
    items.push_back({id, it->second});
  }
  return items;
}

}  // namespace detail

inline void stage_pack(const PipelineConfig& cfg, const ArtifactPaths& in,
                       const ArtifactPaths& out) {
  auto items = detail::selected_items(cfg, in, out);
  PackPlan plan;
  switch (cfg.packing.strategy) {
    case PackStrategy::traditional:
      plan = plan_traditional(items, cfg.packing.max_len, cfg.packing.batch_size);
      break;
    case PackStrategy::dynamic:
      plan = plan_dynamic(items, cfg.packing.max_len, cfg.packing.batch_size);
      break;
    default:
      plan = plan_dynamic_pack(items, cfg.packing.max_len, cfg.packing.batch_size,
                               cfg.packing.separator_cost, cfg.packing.global_pack);
  }
  save_manifest(out.manifest(), plan);
}

// Compares all three strategies on the selected subset, whatever strategy the
// manifest itself used.
inline void stage_report(const PipelineConfig& cfg, const ArtifactPaths& in,
                         const ArtifactPaths& out) {
  auto items = detail::selected_items(cfg, in, out);
  auto sel = load_selection(out.selection());
  std::vector<PackPlan> plans;
  plans.push_back(plan_traditional(items, cfg.packing.max_len, cfg.packing.batch_size));
  plans.push_back(plan_dynamic(items, cfg.packing.max_len, cfg.packing.batch_size));
  plans.push_back(plan_dynamic_pack(items, cfg.packing.max_len, cfg.packing.batch_size,
                                    cfg.packing.separator_cost, cfg.packing.global_pack));
  auto rep = efficiency_report(plans);

  ojson j;
  j["selected_count"] = items.size();
  j["selection_strategy"] = to_string(sel.strategy);
  j["m_percent"] = sel.m_percent;
  j["max_len"] = cfg.packing.max_len;
  j["batch_size"] = cfg.packing.batch_size;
  j["separator_cost"] = cfg.packing.separator_cost;
  ojson strategies;
  for (const auto& [name, tokens] : rep.per_strategy) strategies[name] = to_json(tokens);
  j["strategies"] = strategies;
  if (rep.has_reduction) {
    ojson red;
    red["sequences_dynamic"] = rep.sequences_dynamic;
    red["sequences_dynamic_pack"] = rep.sequences_dynamic_pack;
    red["sequence_reduction"] = rep.sequence_reduction;
    j["reduction"] = red;
  }
  write_file(out.report(), j.dump(2) + "\n");
}

namespace detail {

template <typename Fn>
void run_stage(const std::string& name, const ArtifactPaths& paths, Fn&& fn) {
  auto mark = [&](const std::string& what) {
    try {
      write_file(paths.failed_marker(), "stage: " + name + "\nerror: " + what + "\n");
    } catch (...) {
      // the original error is the one worth reporting
    }
  };
  try {
    fn();
  } catch (const InputError& e) {
    mark(e.what());
    throw InputError("stage " + name + ": " + e.what());
  } catch (const InvariantError& e) {
    mark(e.what());
    throw InvariantError("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    mark(e.what());
    throw InvariantError("stage " + name + ": " + e.what());
  }
}

}  // namespace detail

inline void run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.dir);
  std::error_code ec;
  std::filesystem::remove(paths.failed_marker(), ec);  // stale marker from a previous run
  write_file(paths.resolved_config(), serialize_config(cfg));

  const std::string started = detail::now_utc_iso();
  const auto t0 = std::chrono::steady_clock::now();
  detail::run_stage("ingest", paths, [&] { stage_ingest(cfg, paths); });
  detail::run_stage("embed", paths, [&] { stage_embed(cfg, paths); });
  detail::run_stage("cluster", paths, [&] { stage_cluster(cfg, paths); });
  detail::run_stage("score", paths, [&] { stage_score(cfg, paths); });
  detail::run_stage("select", paths, [&] { stage_select(cfg, paths, paths); });
  detail::run_stage("pack", paths, [&] { stage_pack(cfg, paths, paths); });
  detail::run_stage("report", paths, [&] { stage_report(cfg, paths, paths); });
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
          .count();

  // wall-clock facts live only here, never in data artifacts
  ojson meta;
  meta["started"] = started;
  meta["finished"] = detail::now_utc_iso();
  meta["duration_ms"] = ms;
  write_file(paths.run_meta(), meta.dump(2) + "\n");
}

struct BenchRow {
  Strategy strategy = Strategy::cdas;
  std::vector<double> times_ms;
  double median_ms = 0.0;
  std::size_t selected = 0;
  double jaccard_vs_cdas = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double jaccard(std::vector<SampleId> a, std::vector<SampleId> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<SampleId> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  const std::size_t uni = a.size() + b.size() - both.size();
  return uni == 0 ? 1.0 : static_cast<double>(both.size()) / static_cast<double>(uni);
}

// One full sampling run. Cluster-dependent strategies include their
// clustering inside the timed region, mirroring how the end-to-end cost of
// each selector is accounted.
inline std::vector<SampleId> run_selector_once(Strategy strategy, const EmbeddingMatrix& emb,
                                               const ScoreMap& scores,
                                               const PipelineConfig& cfg) {
  const double m = cfg.selection.m_percent;
  switch (strategy) {
    case Strategy::cdas: {
      const std::size_t k = cfg.clustering.k ? cfg.clustering.k : default_k(emb.size());
      auto model = kmeans(emb, k, cfg.clustering.seed, cfg.clustering.max_iters,
                          cfg.clustering.tol, static_cast<unsigned>(cfg.threads));
      return cdas_select(model, scores, m).selected_ids;
    }
    case Strategy::diversity: {
      const std::size_t k = cfg.clustering.k ? cfg.clustering.k : default_k(emb.size());
      auto model = kmeans(emb, k, cfg.clustering.seed, cfg.clustering.max_iters,
                          cfg.clustering.tol, static_cast<unsigned>(cfg.threads));
      return diversity_select(model, m, cfg.selection.seed).selected_ids;
    }
    case Strategy::complexity:
      return complexity_select(emb.ids, scores, m).selected_ids;
    case Strategy::random:
      return random_select(emb.ids, m, cfg.selection.seed).selected_ids;
    case Strategy::kcenter:
      return kcenter_greedy(emb, target_count(m, emb.size()), cfg.selection.seed);
    default:
      return graph_density_select(emb, target_count(m, emb.size()), /*knn=*/10,
                                  /*gamma=*/1.0 / emb.dim);
  }
}

}  // namespace detail

// Times each strategy `repeats` times on prepared inputs and reports medians
// plus subset overlap against the cdas reference selection.
inline ojson bench_selectors_core(const EmbeddingMatrix& emb, const ScoreMap& scores,
                                  const PipelineConfig& cfg,
                                  const std::vector<Strategy>& strategies, std::size_t repeats) {
  if (repeats < 1) throw InputError("repeats must be >= 1");
  if (strategies.empty()) throw InputError("no strategies to benchmark");
  const auto reference = detail::run_selector_once(Strategy::cdas, emb, scores, cfg);

  ojson out;
  out["n"] = emb.size();
  out["m_percent"] = cfg.selection.m_percent;
  out["repeats"] = repeats;
  ojson rows = ojson::array();
  for (Strategy s : strategies) {
    BenchRow row;
    row.strategy = s;
    std::vector<SampleId> picked;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      picked = detail::run_selector_once(s, emb, scores, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      row.times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    row.median_ms = detail::median(row.times_ms);
    row.selected = picked.size();
    row.jaccard_vs_cdas = detail::jaccard(picked, reference);
    ojson rj;
    rj["strategy"] = to_string(s);
    rj["median_ms"] = row.median_ms;
    rj["times_ms"] = row.times_ms;
    rj["selected"] = row.selected;
    rj["jaccard_vs_cdas"] = row.jaccard_vs_cdas;
    rows.push_back(std::move(rj));
  }
  out["rows"] = std::move(rows);
  return out;
}

// Prepares corpus, embeddings and scores from the config (untimed), then
// delegates to the timed core.
inline ojson bench_selectors(const PipelineConfig& cfg, const std::vector<std::string>& names,
                             std::size_t repeats) {
  validate_config(cfg);
  std::vector<Strategy> strategies;
  for (const auto& name : names) strategies.push_back(strategy_from_string(name));

  auto corpus = load_dataset(cfg.dataset.path, cfg.dataset.schema);
  auto tokenizer = detail::make_tokenizer(cfg);
  auto rendered = render_corpus(corpus, cfg.dataset.templ, tokenizer);
  EmbeddingMatrix emb;
  if (cfg.embedding.source == "builtin") {
    emb = embed_hashed_tfidf(rendered, cfg.embedding.dim, cfg.embedding.seed);
  } else {
    emb = load_embeddings(cfg.embedding.path, corpus);
  }
  ScoreMap scores;
  if (cfg.scoring.provider == "ngram") {
    auto lm = train_ngram(rendered, tokenizer, cfg.scoring.order, cfg.scoring.add_k);
    scores = score_corpus(rendered, lm, static_cast<unsigned>(cfg.threads));
  } else {
    scores = load_logprob_file(cfg.scoring.path, corpus);
  }
  return bench_selectors_core(emb, scores, cfg, strategies, repeats);
}

namespace detail {

inline std::string m_dir_name(double m) {
  const auto rounded = static_cast<long long>(m);
  if (static_cast<double>(rounded) == m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "m_%03lld", rounded);
    return buf;
  }
  std::string tag = format_double(m);
  for (auto& c : tag) {
    if (c == '.') c = 'p';
  }
  return "m_" + tag;
}

}  // namespace detail

// Runs the shared stages once, then one selection + report per m value.
// Returns a summary that includes per-cluster nesting violations between
// consecutive m values.
inline ojson sweep_m(const PipelineConfig& cfg, std::vector<double> m_values) {
  validate_config(cfg);
  if (m_values.empty()) throw InputError("sweep needs at least one m value");
  for (double m : m_values) {
    if (!(m > 0.0) || m > 100.0) {
      throw InputError("sweep m values must be in (0, 100], got " + format_double(m));
    }
  }
  std::sort(m_values.begin(), m_values.end());
  m_values.erase(std::unique(m_values.begin(), m_values.end()), m_values.end());

  ArtifactPaths parent{cfg.output_dir};
  std::filesystem::create_directories(parent.dir);
  write_file(parent.resolved_config(), serialize_config(cfg));
  stage_ingest(cfg, parent);
  stage_embed(cfg, parent);
  stage_cluster(cfg, parent);
  stage_score(cfg, parent);

  auto corpus = detail::load_corpus_artifact(cfg, parent);
  auto model = load_clusters(parent.clusters(), parent.centroids(), corpus);
  std::map<SampleId, int> cluster_of;
  for (std::size_t i = 0; i < model.ids.size(); ++i) {
    cluster_of[model.ids[i]] = model.assignment[i];
  }

  std::vector<std::vector<SampleId>> selections;
  ojson runs = ojson::array();
  for (double m : m_values) {
    PipelineConfig sub = cfg;
    sub.selection.m_percent = m;
    ArtifactPaths out{parent.dir / detail::m_dir_name(m)};
    std::filesystem::create_directories(out.dir);
    stage_select(sub, parent, out);
    stage_report(sub, parent, out);
    auto sel = load_selection(out.selection());
    ojson run;
    run["m_percent"] = m;
    run["dir"] = out.dir.filename().string();
    run["selected"] = sel.ids.size();
    runs.push_back(std::move(run));
    selections.push_back(std::move(sel.ids));
  }

  // nesting: every id picked at a smaller m must persist, cluster by cluster
  std::size_t violations = 0;
  ojson details = ojson::array();
  for (std::size_t i = 0; i + 1 < selections.size(); ++i) {
    std::set<SampleId> larger(selections[i + 1].begin(), selections[i + 1].end());
    std::map<int, std::vector<SampleId>> missing_by_cluster;
    for (SampleId id : selections[i]) {
      if (!larger.count(id)) {
        const auto it = cluster_of.find(id);
        missing_by_cluster[it == cluster_of.end() ? -1 : it->second].push_back(id);
      }
    }
    for (const auto& [cluster, ids] : missing_by_cluster) {
      ++violations;
      ojson d;
      d["m_low"] = m_values[i];
      d["m_high"] = m_values[i + 1];
      d["cluster"] = cluster;
      d["dropped"] = ids;
      details.push_back(std::move(d));
    }
  }

  ojson summary;
  summary["strategy"] = to_string(cfg.selection.strategy);
  summary["m_values"] = m_values;
  summary["runs"] = std::move(runs);
  summary["nesting_violations"] = violations;
  summary["details"] = std::move(details);
  write_file((parent.dir / "sweep_summary.json").string(), summary.dump(2) + "\n");
  return summary;
}

}  // namespace selpack
