#pragma once

// Add-k smoothed n-gram language model. This is the built-in log-probability
// provider: small, deterministic, and good enough to rank samples by how much
// a prompt helps predict its response.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "selpack/corpus.hpp"
#include "selpack/scoring.hpp"
#include "selpack/types.hpp"

namespace selpack {

// P(t | ctx) = (count(ctx,t) + k) / (count(ctx) + k*(V+1)), where ctx is the
// previous min(position, order-1) tokens and V+1 covers the vocabulary plus
// one unknown symbol. Sums to one over vocab + unknown for any context.
class NGramLM : public LogProbProvider {
public:
  NGramLM(std::size_t order, double add_k, Tokenizer tokenizer)
      : order_(order), add_k_(add_k), tokenizer_(std::move(tokenizer)) {
    if (order_ < 1) throw InputError("n-gram order must be >= 1");
    if (!(add_k_ > 0.0)) throw InputError("add_k must be > 0");
    if (!tokenizer_.can_stream()) {
      throw InputError("the n-gram provider needs a token-stream tokenizer "
                       "(whitespace or byte)");
    }
  }

  std::size_t order() const { return order_; }
  double add_k() const { return add_k_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const Tokenizer& tokenizer() const { return tokenizer_; }

  void add_stream(const std::vector<std::string>& tokens) {
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      vocab_.insert(tokens[pos]);
      const std::size_t max_len = std::min(pos, order_ - 1);
      for (std::size_t len = 0; len <= max_len; ++len) {
        auto& ctx = counts_[context_key(tokens, pos, len)];
        ctx.total++;
        ctx.next[tokens[pos]]++;
      }
    }
  }

  double token_logprob(const std::vector<std::string>& stream, std::size_t pos) const {
    const std::size_t len = std::min(pos, order_ - 1);
    std::int64_t ctx_total = 0;
    std::int64_t tok_count = 0;
    auto it = counts_.find(context_key(stream, pos, len));
    if (it != counts_.end()) {
      ctx_total = it->second.total;
      auto nt = it->second.next.find(stream[pos]);
      if (nt != it->second.next.end()) tok_count = nt->second;
    }
    const double denom = static_cast<double>(ctx_total) +
                         add_k_ * static_cast<double>(vocab_.size() + 1);
    return std::log((static_cast<double>(tok_count) + add_k_) / denom);
  }

  // Probability of `token` after the tokens in `context` (only the last
  // order-1 of which matter). Exposed for normalization checks.
  double prob(const std::vector<std::string>& context, const std::string& token) const {
    std::vector<std::string> stream = context;
    if (stream.size() > order_ - 1) {
      stream.erase(stream.begin(),
                   stream.begin() + static_cast<std::ptrdiff_t>(stream.size() - (order_ - 1)));
    }
    stream.push_back(token);
    return std::exp(token_logprob(stream, stream.size() - 1));
  }

  double unknown_prob(const std::vector<std::string>& context) const {
    // any token outside the vocabulary has the same smoothed mass
    return prob(context, "\x01<unk>\x01");
  }

  std::vector<std::string> vocabulary() const {
    std::vector<std::string> v(vocab_.begin(), vocab_.end());
    std::sort(v.begin(), v.end());
    return v;
  }

  std::vector<double> score(std::string_view context, std::string_view target) const override {
    const auto ctx_tokens = tokenizer_.tokenize(context);
    const auto tgt_tokens = tokenizer_.tokenize(target);
    std::vector<std::string> stream;
    stream.reserve(ctx_tokens.size() + tgt_tokens.size());
    stream.insert(stream.end(), ctx_tokens.begin(), ctx_tokens.end());
    stream.insert(stream.end(), tgt_tokens.begin(), tgt_tokens.end());
    std::vector<double> out;
    out.reserve(tgt_tokens.size());
    for (std::size_t j = 0; j < tgt_tokens.size(); ++j) {
      out.push_back(token_logprob(stream, ctx_tokens.size() + j));
    }
    return out;
  }

private:
  struct ContextCounts {
    std::int64_t total = 0;
    std::unordered_map<std::string, std::int64_t> next;
  };

  static std::string context_key(const std::vector<std::string>& tokens, std::size_t pos,
                                 std::size_t len) {
    std::string key;
    for (std::size_t i = pos - len; i < pos; ++i) {
      key += tokens[i];
      key += '\x1f';
    }
    return key;
  }

  std::size_t order_;
  double add_k_;
  Tokenizer tokenizer_;
  std::unordered_set<std::string> vocab_;
  std::unordered_map<std::string, ContextCounts> counts_;
};

// Counts come from the concatenated prompt+response token stream of every
// sample, for all context lengths up to order-1.
inline NGramLM train_ngram(const std::vector<RenderedSample>& rendered,
                           const Tokenizer& tokenizer, std::size_t order, double add_k) {
  if (rendered.empty()) throw InputError("train_ngram: empty corpus");
  NGramLM lm(order, add_k, tokenizer);
  for (const auto& r : rendered) {
    auto stream = tokenizer.tokenize(r.prompt_text);
    auto resp = tokenizer.tokenize(r.response_text);
    stream.insert(stream.end(), resp.begin(), resp.end());
    lm.add_stream(stream);
  }
  return lm;
}

}  // namespace selpack
