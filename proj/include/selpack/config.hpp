#pragma once

// Pipeline configuration: a sectioned key=value file that round-trips exactly,
// so every run can write back its fully-resolved settings.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>

#include "selpack/corpus.hpp"
#include "selpack/io.hpp"
#include "selpack/packing.hpp"
#include "selpack/selection.hpp"
#include "selpack/types.hpp"

namespace selpack {

struct PipelineConfig {
  struct Dataset {
    std::string path;
    Schema schema = Schema::alpaca;
    TokenizerSpec::Kind tokenizer = TokenizerSpec::Kind::whitespace;
    std::string token_counts;  // required for external-counts
    PromptTemplate templ;
  } dataset;

  struct Embedding {
    std::string source = "builtin";  // builtin | file
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    std::string path;
  } embedding;

  struct Clustering {
    std::size_t k = 0;  // 0 = choose from corpus size
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;
    double tol = 1e-4;
  } clustering;

  struct Scoring {
    std::string provider = "ngram";  // ngram | file
    std::size_t order = 2;
    double add_k = 1.0;
    std::optional<double> drop_ifd_above;
    std::string path;
  } scoring;

  struct Selection {
    Strategy strategy = Strategy::cdas;
    double m_percent = 40.0;
    std::uint64_t seed = 0;
  } selection;

  struct Packing {
    PackStrategy strategy = PackStrategy::dynamic_pack;
    std::int64_t max_len = 4096;
    std::size_t batch_size = 512;
    std::int64_t separator_cost = 1;
    bool global_pack = false;
  } packing;

  std::string output_dir = "out";
  std::size_t threads = 1;
};

namespace detail {

inline std::string escape_value(const std::string& v) {
  std::string out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const char c = v[i];
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case ' ':
        // boundary spaces would be eaten by value trimming on reload
        if (i == 0 || i + 1 == v.size()) out += "\\s";
        else out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_value(const std::string& v, std::size_t line_no) {
  std::string out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '\\') {
      out += v[i];
      continue;
    }
    if (i + 1 >= v.size()) {
      throw InputError("line " + std::to_string(line_no) + ": dangling backslash in value");
    }
    const char e = v[++i];
    if (e == 'n') out += '\n';
    else if (e == 't') out += '\t';
    else if (e == 's') out += ' ';
    else if (e == '\\') out += '\\';
    else throw InputError("line " + std::to_string(line_no) + ": unknown escape \\" +
                          std::string(1, e));
  }
  return out;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw InputError("invalid integer for " + key + ": " + v);
  }
}

inline std::int64_t parse_i64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const auto n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw InputError("invalid integer for " + key + ": " + v);
  }
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InputError("invalid number for " + key + ": " + v);
  }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("invalid boolean for " + key + ": " + v);
}

}  // namespace detail

inline PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw InputError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      section = line.substr(1, line.size() - 2);
      if (section != "dataset" && section != "embedding" && section != "clustering" &&
          section != "scoring" && section != "selection" && section != "packing" &&
          section != "output" && section != "run") {
        throw InputError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = detail::unescape_value(trim(line.substr(eq + 1)), line_no);
    if (section.empty()) {
      throw InputError("line " + std::to_string(line_no) + ": key outside any section");
    }

    auto unknown = [&]() -> InputError {
      return InputError("line " + std::to_string(line_no) + ": unknown key " + key +
                        " in section [" + section + "]");
    };
    if (section == "dataset") {
      if (key == "path") cfg.dataset.path = value;
      else if (key == "schema") cfg.dataset.schema = schema_from_string(value);
      else if (key == "tokenizer") cfg.dataset.tokenizer = tokenizer_kind_from_string(value);
      else if (key == "token_counts") cfg.dataset.token_counts = value;
      else if (key == "template_without_input") cfg.dataset.templ.without_input = value;
      else if (key == "template_with_input") cfg.dataset.templ.with_input = value;
      else throw unknown();
    } else if (section == "embedding") {
      if (key == "source") {
        if (value != "builtin" && value != "file") {
          throw InputError("embedding source must be builtin or file, got " + value);
        }
        cfg.embedding.source = value;
      } else if (key == "dim") cfg.embedding.dim = detail::parse_u64(value, key);
      else if (key == "seed") cfg.embedding.seed = detail::parse_u64(value, key);
      else if (key == "path") cfg.embedding.path = value;
      else throw unknown();
    } else if (section == "clustering") {
      if (key == "k") cfg.clustering.k = detail::parse_u64(value, key);
      else if (key == "seed") cfg.clustering.seed = detail::parse_u64(value, key);
      else if (key == "max_iters") cfg.clustering.max_iters = detail::parse_u64(value, key);
      else if (key == "tol") cfg.clustering.tol = detail::parse_double(value, key);
      else throw unknown();
    } else if (section == "scoring") {
      if (key == "provider") {
        if (value != "ngram" && value != "file") {
          throw InputError("scoring provider must be ngram or file, got " + value);
        }
        cfg.scoring.provider = value;
      } else if (key == "order") cfg.scoring.order = detail::parse_u64(value, key);
      else if (key == "add_k") cfg.scoring.add_k = detail::parse_double(value, key);
      else if (key == "drop_ifd_above") {
        if (value.empty()) cfg.scoring.drop_ifd_above.reset();
        else cfg.scoring.drop_ifd_above = detail::parse_double(value, key);
      } else if (key == "path") cfg.scoring.path = value;
      else throw unknown();
    } else if (section == "selection") {
      if (key == "strategy") cfg.selection.strategy = strategy_from_string(value);
      else if (key == "m_percent") cfg.selection.m_percent = detail::parse_double(value, key);
      else if (key == "seed") cfg.selection.seed = detail::parse_u64(value, key);
      else throw unknown();
    } else if (section == "packing") {
      if (key == "strategy") cfg.packing.strategy = pack_strategy_from_string(value);
      else if (key == "max_len") cfg.packing.max_len = detail::parse_i64(value, key);
      else if (key == "batch_size") cfg.packing.batch_size = detail::parse_u64(value, key);
      else if (key == "separator_cost") cfg.packing.separator_cost = detail::parse_i64(value, key);
      else if (key == "global") cfg.packing.global_pack = detail::parse_bool(value, key);
      else throw unknown();
    } else if (section == "output") {
      if (key == "dir") cfg.output_dir = value;
      else throw unknown();
    } else {  // run
      if (key == "threads") cfg.threads = detail::parse_u64(value, key);
      else throw unknown();
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  return parse_config_text(read_file(path));
}

inline std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "[dataset]\n";
  out << "path = " << detail::escape_value(cfg.dataset.path) << "\n";
  out << "schema = " << to_string(cfg.dataset.schema) << "\n";
  out << "tokenizer = " << to_string(cfg.dataset.tokenizer) << "\n";
  out << "token_counts = " << detail::escape_value(cfg.dataset.token_counts) << "\n";
  out << "template_without_input = " << detail::escape_value(cfg.dataset.templ.without_input)
      << "\n";
  out << "template_with_input = " << detail::escape_value(cfg.dataset.templ.with_input) << "\n";
  out << "\n[embedding]\n";
  out << "source = " << cfg.embedding.source << "\n";
  out << "dim = " << cfg.embedding.dim << "\n";
  out << "seed = " << cfg.embedding.seed << "\n";
  out << "path = " << detail::escape_value(cfg.embedding.path) << "\n";
  out << "\n[clustering]\n";
  out << "k = " << cfg.clustering.k << "\n";
  out << "seed = " << cfg.clustering.seed << "\n";
  out << "max_iters = " << cfg.clustering.max_iters << "\n";
  out << "tol = " << format_double(cfg.clustering.tol) << "\n";
  out << "\n[scoring]\n";
  out << "provider = " << cfg.scoring.provider << "\n";
  out << "order = " << cfg.scoring.order << "\n";
  out << "add_k = " << format_double(cfg.scoring.add_k) << "\n";
  out << "drop_ifd_above = "
      << (cfg.scoring.drop_ifd_above ? format_double(*cfg.scoring.drop_ifd_above) : "") << "\n";
  out << "path = " << detail::escape_value(cfg.scoring.path) << "\n";
  out << "\n[selection]\n";
  out << "strategy = " << to_string(cfg.selection.strategy) << "\n";
  out << "m_percent = " << format_double(cfg.selection.m_percent) << "\n";
  out << "seed = " << cfg.selection.seed << "\n";
  out << "\n[packing]\n";
  out << "strategy = " << to_string(cfg.packing.strategy) << "\n";
  out << "max_len = " << cfg.packing.max_len << "\n";
  out << "batch_size = " << cfg.packing.batch_size << "\n";
  out << "separator_cost = " << cfg.packing.separator_cost << "\n";
  out << "global = " << (cfg.packing.global_pack ? "true" : "false") << "\n";
  out << "\n[output]\n";
  out << "dir = " << detail::escape_value(cfg.output_dir) << "\n";
  out << "\n[run]\n";
  out << "threads = " << cfg.threads << "\n";
  return out.str();
}

// Range checks for everything the stages will assume.
inline void validate_config(const PipelineConfig& cfg) {
  if (cfg.dataset.path.empty()) throw InputError("dataset path is required");
  if (cfg.dataset.tokenizer == TokenizerSpec::Kind::external_counts &&
      cfg.dataset.token_counts.empty()) {
    throw InputError("tokenizer external-counts requires dataset token_counts");
  }
  cfg.dataset.templ.validate();
  if (cfg.embedding.source == "file" && cfg.embedding.path.empty()) {
    throw InputError("embedding source=file requires embedding path");
  }
  if (cfg.embedding.source == "builtin" && cfg.embedding.dim < 16) {
    throw InputError("embedding dim must be >= 16");
  }
  if (cfg.clustering.max_iters < 1) throw InputError("clustering max_iters must be >= 1");
  if (cfg.clustering.tol < 0) throw InputError("clustering tol must be >= 0");
  if (cfg.scoring.provider == "file" && cfg.scoring.path.empty()) {
    throw InputError("scoring provider=file requires scoring path");
  }
  if (cfg.scoring.provider == "ngram" &&
      cfg.dataset.tokenizer == TokenizerSpec::Kind::external_counts) {
    throw InputError("scoring provider=ngram needs a token-stream tokenizer "
                     "(whitespace or byte)");
  }
  if (cfg.scoring.order < 1) throw InputError("scoring order must be >= 1");
  if (!(cfg.scoring.add_k > 0)) throw InputError("scoring add_k must be > 0");
  if (!(cfg.selection.m_percent > 0) || cfg.selection.m_percent > 100) {
    throw InputError("selection m_percent must be in (0, 100]");
  }
  if (cfg.packing.max_len < 1) throw InputError("packing max_len must be >= 1");
  if (cfg.packing.batch_size < 1) throw InputError("packing batch_size must be >= 1");
  if (cfg.packing.separator_cost < 0) throw InputError("packing separator_cost must be >= 0");
  if (cfg.threads < 1) throw InputError("threads must be >= 1");
  if (cfg.output_dir.empty()) throw InputError("output dir is required");
}

}  // namespace selpack
