#pragma once

// Per-sample conditional/unconditional perplexity and the conditional-to-
// unconditional ratio (the instruction-following difficulty score), computed
// through a pluggable log-probability provider.

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selpack/corpus.hpp"
#include "selpack/io.hpp"
#include "selpack/parallel.hpp"
#include "selpack/types.hpp"

namespace selpack {

// Per-token natural-log probabilities for `target` conditioned on `context`
// (which may be empty). Implementations must return one entry per target
// token, each <= 0.
class LogProbProvider {
public:
  virtual ~LogProbProvider() = default;
  virtual std::vector<double> score(std::string_view context, std::string_view target) const = 0;
};

struct ScoreRecord {
  SampleId id = 0;
  double ppl_cond = 0.0;
  double ppl_uncond = 0.0;
  double ifd = 0.0;
};

using ScoreMap = std::map<SampleId, ScoreRecord>;

// exp of the mean negative log-likelihood.
inline double ppl(std::span<const double> logprobs) {
  if (logprobs.empty()) throw InputError("ppl: empty log-probability list");
  double sum = 0.0;
  for (double lp : logprobs) {
    if (lp > 0.0) throw InputError("ppl: positive log-probability " + std::to_string(lp));
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(logprobs.size()));
}

inline ScoreRecord ifd(const RenderedSample& sample, const LogProbProvider& provider) {
  const auto cond = provider.score(sample.prompt_text, sample.response_text);
  const auto uncond = provider.score("", sample.response_text);
  if (static_cast<std::int64_t>(cond.size()) != sample.response_tokens ||
      static_cast<std::int64_t>(uncond.size()) != sample.response_tokens) {
    throw InvariantError("sample " + std::to_string(sample.id) +
                         ": provider token-count mismatch (expected " +
                         std::to_string(sample.response_tokens) + ", got " +
                         std::to_string(cond.size()) + "/" + std::to_string(uncond.size()) + ")");
  }
  ScoreRecord rec;
  rec.id = sample.id;
  rec.ppl_cond = ppl(cond);
  rec.ppl_uncond = ppl(uncond);
  if (!std::isfinite(rec.ppl_cond) || !std::isfinite(rec.ppl_uncond) || rec.ppl_uncond <= 0.0) {
    throw InvariantError("sample " + std::to_string(sample.id) + ": non-finite perplexity");
  }
  rec.ifd = rec.ppl_cond / rec.ppl_uncond;
  if (!std::isfinite(rec.ifd)) {
    throw InvariantError("sample " + std::to_string(sample.id) + ": non-finite score ratio");
  }
  return rec;
}

// Scores are keyed by id and per-sample pure, so chunked execution is safe.
inline ScoreMap score_corpus(const std::vector<RenderedSample>& rendered,
                             const LogProbProvider& provider, unsigned threads = 1) {
  std::vector<ScoreRecord> records(rendered.size());
  std::vector<std::string> errors(chunk_count(rendered.size()));
  parallel_chunks(rendered.size(), threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    try {
      for (std::size_t i = b; i < e; ++i) records[i] = ifd(rendered[i], provider);
    } catch (const std::exception& ex) {
      errors[c] = ex.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw InvariantError(err);
  }
  ScoreMap out;
  for (const auto& r : records) out[r.id] = r;
  return out;
}

inline void save_scores(const std::string& path, const ScoreMap& scores) {
  JsonlWriter out(path);
  for (const auto& [id, rec] : scores) {
    ojson j;
    j["id"] = id;
    j["ppl_cond"] = rec.ppl_cond;
    j["ppl_uncond"] = rec.ppl_uncond;
    j["ifd"] = rec.ifd;
    out.write(j);
  }
  out.close();
}

// Reads externally computed scores. Each record carries either both log-prob
// lists ("cond_logprobs"/"uncond_logprobs") or both perplexities
// ("ppl_cond"/"ppl_uncond"). The ratio is always recomputed here, never
// trusted from the file. Must cover every corpus id.
inline ScoreMap load_logprob_file(const std::string& path, const Corpus& corpus) {
  ScoreMap out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    auto id_it = rec.find("id");
    if (id_it == rec.end() || !id_it->is_number_integer()) {
      throw InputError("line " + std::to_string(line_no) + ": missing integer \"id\"");
    }
    ScoreRecord r;
    r.id = id_it->get<SampleId>();
    if (rec.contains("cond_logprobs") || rec.contains("uncond_logprobs")) {
      auto c_it = rec.find("cond_logprobs");
      auto u_it = rec.find("uncond_logprobs");
      if (c_it == rec.end() || u_it == rec.end() || !c_it->is_array() || !u_it->is_array()) {
        throw InputError("line " + std::to_string(line_no) +
                         ": need both \"cond_logprobs\" and \"uncond_logprobs\" arrays");
      }
      try {
        r.ppl_cond = ppl(c_it->get<std::vector<double>>());
        r.ppl_uncond = ppl(u_it->get<std::vector<double>>());
      } catch (const InputError& e) {
        throw InputError("line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      auto c_it = rec.find("ppl_cond");
      auto u_it = rec.find("ppl_uncond");
      if (c_it == rec.end() || u_it == rec.end() || !c_it->is_number() || !u_it->is_number()) {
        throw InputError("line " + std::to_string(line_no) +
                         ": need both \"ppl_cond\" and \"ppl_uncond\"");
      }
      r.ppl_cond = c_it->get<double>();
      r.ppl_uncond = u_it->get<double>();
    }
    if (!(r.ppl_cond > 0.0) || !(r.ppl_uncond > 0.0) || !std::isfinite(r.ppl_cond) ||
        !std::isfinite(r.ppl_uncond)) {
      throw InputError("line " + std::to_string(line_no) + ": perplexities must be finite and > 0");
    }
    r.ifd = r.ppl_cond / r.ppl_uncond;
    if (!out.emplace(r.id, r).second) {
      throw InputError("line " + std::to_string(line_no) + ": duplicate score for id " +
                       std::to_string(r.id));
    }
  });
  for (const auto& p : corpus.pairs) {
    if (!out.count(p.id)) {
      throw InputError("score file does not cover id " + std::to_string(p.id));
    }
  }
  return out;
}

}  // namespace selpack
