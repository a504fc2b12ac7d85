#pragma once

// Instruction corpus loading, prompt rendering, tokenization and length stats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selpack/io.hpp"
#include "selpack/text.hpp"
#include "selpack/types.hpp"

namespace selpack {

struct InstructionPair {
  SampleId id = 0;
  std::string instruction;
  std::string input;  // empty means absent
  std::string response;

  bool has_input() const { return !trim(input).empty(); }
};

enum class Schema { alpaca, prompt_response };

inline Schema schema_from_string(const std::string& s) {
  if (s == "alpaca") return Schema::alpaca;
  if (s == "prompt-response") return Schema::prompt_response;
  throw InputError("unknown schema: " + s);
}

inline std::string to_string(Schema s) {
  return s == Schema::alpaca ? "alpaca" : "prompt-response";
}

struct Corpus {
  std::vector<InstructionPair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  // ids are strictly increasing, so lookup is a binary search.
  const InstructionPair* find(SampleId id) const {
    auto it = std::lower_bound(pairs.begin(), pairs.end(), id,
                               [](const InstructionPair& p, SampleId v) { return p.id < v; });
    if (it == pairs.end() || it->id != id) return nullptr;
    return &*it;
  }

  std::vector<SampleId> ids() const {
    std::vector<SampleId> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.id);
    return out;
  }
};

namespace detail {

inline std::string require_string(const json& rec, const char* key, std::size_t line_no) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw InputError("line " + std::to_string(line_no) + ": missing string field \"" +
                     key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace detail

// Loads a JSONL dataset. When records carry no "id", ids are assigned by
// 0-based file order; explicit ids must be non-negative and strictly
// increasing, and must be present on either all records or none.
inline Corpus load_dataset(const std::string& path, Schema schema) {
  Corpus corpus;
  bool any_explicit = false;
  bool any_implicit = false;
  SampleId last_id = -1;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    InstructionPair pair;
    if (schema == Schema::alpaca) {
      pair.instruction = detail::require_string(rec, "instruction", line_no);
      if (auto it = rec.find("input"); it != rec.end() && it->is_string()) {
        pair.input = it->get<std::string>();
      }
      pair.response = detail::require_string(rec, "output", line_no);
    } else {
      pair.instruction = detail::require_string(rec, "prompt", line_no);
      pair.response = detail::require_string(rec, "response", line_no);
    }
    if (trim(pair.instruction).empty()) {
      throw InputError("line " + std::to_string(line_no) + ": empty instruction");
    }
    if (trim(pair.response).empty()) {
      throw InputError("line " + std::to_string(line_no) + ": empty response");
    }
    if (auto it = rec.find("id"); it != rec.end()) {
      if (!it->is_number_integer() || it->get<SampleId>() < 0) {
        throw InputError("line " + std::to_string(line_no) + ": id must be a non-negative integer");
      }
      pair.id = it->get<SampleId>();
      any_explicit = true;
      if (pair.id == last_id) {
        throw InputError("line " + std::to_string(line_no) + ": duplicate id " +
                         std::to_string(pair.id));
      }
      if (pair.id < last_id) {
        throw InputError("line " + std::to_string(line_no) + ": ids must be strictly increasing");
      }
      last_id = pair.id;
    } else {
      pair.id = static_cast<SampleId>(corpus.pairs.size());
      any_implicit = true;
      last_id = pair.id;
    }
    if (any_explicit && any_implicit) {
      throw InputError("line " + std::to_string(line_no) +
                       ": records mix explicit and implicit ids");
    }
    corpus.pairs.push_back(std::move(pair));
  });
  if (corpus.empty()) throw InputError("empty dataset: " + path);
  return corpus;
}

inline void save_dataset(const std::string& path, const Corpus& corpus, Schema schema,
                         bool with_ids = true) {
  JsonlWriter out(path);
  for (const auto& p : corpus.pairs) {
    ojson rec;
    if (with_ids) rec["id"] = p.id;
    if (schema == Schema::alpaca) {
      rec["instruction"] = p.instruction;
      rec["input"] = p.input;
      rec["output"] = p.response;
    } else {
      rec["prompt"] = p.instruction;
      rec["response"] = p.response;
    }
    out.write(rec);
  }
  out.close();
}

// Prompt layout with {instruction} / {input} placeholders. The with-input
// variant is used whenever the pair carries a non-blank input.
struct PromptTemplate {
  std::string without_input =
      "### Instruction:\n{instruction}\n\n### Response:\n";
  std::string with_input =
      "### Instruction:\n{instruction}\n\n### Input:\n{input}\n\n### Response:\n";

  void validate() const {
    if (without_input.find("{instruction}") == std::string::npos ||
        with_input.find("{instruction}") == std::string::npos) {
      throw InputError("prompt template is missing the {instruction} placeholder");
    }
    if (with_input.find("{input}") == std::string::npos) {
      throw InputError("with-input prompt template is missing the {input} placeholder");
    }
  }
};

namespace detail {

inline std::string substitute(std::string templ, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = templ.find(key, pos)) != std::string::npos) {
    templ.replace(pos, key.size(), value);
    pos += value.size();
  }
  return templ;
}

}  // namespace detail

struct TokenizerSpec {
  enum class Kind { whitespace, byte, external_counts };
  Kind kind = Kind::whitespace;
  std::string external_path;
};

inline TokenizerSpec::Kind tokenizer_kind_from_string(const std::string& s) {
  if (s == "whitespace") return TokenizerSpec::Kind::whitespace;
  if (s == "byte") return TokenizerSpec::Kind::byte;
  if (s == "external-counts") return TokenizerSpec::Kind::external_counts;
  throw InputError("unknown tokenizer: " + s);
}

inline std::string to_string(TokenizerSpec::Kind k) {
  switch (k) {
    case TokenizerSpec::Kind::whitespace: return "whitespace";
    case TokenizerSpec::Kind::byte: return "byte";
    default: return "external-counts";
  }
}

// Token counting and (for the in-process kinds) token streams. The
// external-counts kind reads precomputed per-sample counts and cannot
// produce token streams.
class Tokenizer {
public:
  Tokenizer() = default;

  explicit Tokenizer(const TokenizerSpec& spec) : spec_(spec) {
    if (spec_.kind == TokenizerSpec::Kind::external_counts) {
      if (spec_.external_path.empty()) {
        throw InputError("external-counts tokenizer requires a counts file path");
      }
      for_each_jsonl(spec_.external_path, [&](std::size_t line_no, const json& rec) {
        auto id_it = rec.find("id");
        auto p_it = rec.find("prompt_tokens");
        auto r_it = rec.find("response_tokens");
        if (id_it == rec.end() || p_it == rec.end() || r_it == rec.end() ||
            !id_it->is_number_integer() || !p_it->is_number_integer() ||
            !r_it->is_number_integer()) {
          throw InputError("line " + std::to_string(line_no) +
                           ": token-count record needs integer id/prompt_tokens/response_tokens");
        }
        SampleId id = id_it->get<SampleId>();
        if (!external_.emplace(id, std::pair<std::int64_t, std::int64_t>(
                                       p_it->get<std::int64_t>(), r_it->get<std::int64_t>()))
                 .second) {
          throw InputError("line " + std::to_string(line_no) + ": duplicate token counts for id " +
                           std::to_string(id));
        }
      });
    }
  }

  TokenizerSpec::Kind kind() const { return spec_.kind; }

  bool can_stream() const { return spec_.kind != TokenizerSpec::Kind::external_counts; }

  std::vector<std::string> tokenize(std::string_view text) const {
    switch (spec_.kind) {
      case TokenizerSpec::Kind::whitespace:
        return whitespace_tokenize(text);
      case TokenizerSpec::Kind::byte: {
        std::vector<std::string> out;
        out.reserve(text.size());
        for (char c : text) out.emplace_back(1, c);
        return out;
      }
      default:
        throw InputError("external-counts tokenizer cannot produce token streams");
    }
  }

  std::int64_t count(std::string_view text) const {
    switch (spec_.kind) {
      case TokenizerSpec::Kind::whitespace:
        return static_cast<std::int64_t>(whitespace_tokenize(text).size());
      case TokenizerSpec::Kind::byte:
        return static_cast<std::int64_t>(text.size());
      default:
        throw InputError("external-counts tokenizer has no per-text counts");
    }
  }

  std::pair<std::int64_t, std::int64_t> external_counts(SampleId id) const {
    auto it = external_.find(id);
    if (it == external_.end()) {
      throw InputError("token counts file does not cover id " + std::to_string(id));
    }
    return it->second;
  }

private:
  TokenizerSpec spec_;
  std::map<SampleId, std::pair<std::int64_t, std::int64_t>> external_;
};

struct RenderedSample {
  SampleId id = 0;
  std::string prompt_text;
  std::string response_text;
  std::int64_t prompt_tokens = 0;
  std::int64_t response_tokens = 0;
  std::int64_t total_tokens = 0;
};

inline RenderedSample render_prompt(const InstructionPair& pair, const PromptTemplate& templ,
                                    const Tokenizer& tokenizer) {
  templ.validate();
  RenderedSample out;
  out.id = pair.id;
  if (pair.has_input()) {
    out.prompt_text = detail::substitute(templ.with_input, "{instruction}", pair.instruction);
    out.prompt_text = detail::substitute(out.prompt_text, "{input}", pair.input);
  } else {
    out.prompt_text = detail::substitute(templ.without_input, "{instruction}", pair.instruction);
  }
  out.response_text = pair.response;
  if (tokenizer.kind() == TokenizerSpec::Kind::external_counts) {
    auto [p, r] = tokenizer.external_counts(pair.id);
    out.prompt_tokens = p;
    out.response_tokens = r;
  } else {
    out.prompt_tokens = tokenizer.count(out.prompt_text);
    out.response_tokens = tokenizer.count(out.response_text);
  }
  if (out.prompt_tokens < 1 || out.response_tokens < 1) {
    throw InvariantError("sample " + std::to_string(pair.id) +
                         ": prompt and response must each have at least one token");
  }
  out.total_tokens = out.prompt_tokens + out.response_tokens;
  return out;
}

inline std::vector<RenderedSample> render_corpus(const Corpus& corpus,
                                                 const PromptTemplate& templ,
                                                 const Tokenizer& tokenizer) {
  std::vector<RenderedSample> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.pairs) out.push_back(render_prompt(p, templ, tokenizer));
  return out;
}

struct LengthStats {
  std::size_t count = 0;
  std::int64_t min = 0;
  std::int64_t max = 0;
  double mean = 0.0;
  std::int64_t p50 = 0;
  std::int64_t p90 = 0;
  std::int64_t p99 = 0;
  std::int64_t total = 0;
  std::int64_t bin_width = 0;
  std::vector<std::int64_t> histogram;  // bin i covers [i*bin_width, (i+1)*bin_width)
};

// Nearest-rank percentile on the sorted values: element at ceil(q/100 * n), 1-based.
inline std::int64_t percentile_nearest_rank(const std::vector<std::int64_t>& sorted, double q) {
  std::size_t rank = static_cast<std::size_t>(std::ceil(q / 100.0 * sorted.size()));
  if (rank < 1) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

inline LengthStats corpus_stats(const std::vector<RenderedSample>& rendered,
                                std::int64_t bin_width = 64) {
  if (rendered.empty()) throw InputError("corpus_stats: empty corpus");
  if (bin_width < 1) throw InputError("corpus_stats: bin width must be >= 1");
  std::vector<std::int64_t> lengths;
  lengths.reserve(rendered.size());
  std::int64_t total = 0;
  for (const auto& r : rendered) {
    lengths.push_back(r.total_tokens);
    total += r.total_tokens;
  }
  std::sort(lengths.begin(), lengths.end());
  LengthStats s;
  s.count = lengths.size();
  s.min = lengths.front();
  s.max = lengths.back();
  s.total = total;
  s.mean = static_cast<double>(total) / static_cast<double>(lengths.size());
  s.p50 = percentile_nearest_rank(lengths, 50.0);
  s.p90 = percentile_nearest_rank(lengths, 90.0);
  s.p99 = percentile_nearest_rank(lengths, 99.0);
  s.bin_width = bin_width;
  s.histogram.assign(static_cast<std::size_t>(s.max / bin_width) + 1, 0);
  for (std::int64_t len : lengths) {
    s.histogram[static_cast<std::size_t>(len / bin_width)]++;
  }
  return s;
}

}  // namespace selpack
