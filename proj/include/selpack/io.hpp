#pragma once

// Line-oriented JSON file helpers. Every artifact the pipeline reads or
// writes is one JSON object per line, UTF-8.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "selpack/types.hpp"

namespace selpack {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Calls fn(line_number, parsed) for each non-blank line. Line numbers are 1-based.
// Parse failures become InputError carrying the line number.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("line " + std::to_string(line_no) + ": malformed record (" +
                       std::string(e.what()) + ")");
    }
    if (!rec.is_object()) {
      throw InputError("line " + std::to_string(line_no) + ": record is not an object");
    }
    fn(line_no, rec);
  }
}

class JsonlWriter {
public:
  explicit JsonlWriter(const std::string& path) : out_(path), path_(path) {
    if (!out_) throw InputError("cannot open file for writing: " + path);
  }

  void write(const ojson& rec) { out_ << rec.dump() << '\n'; }
  void write(const json& rec) { out_ << rec.dump() << '\n'; }

  void close() {
    out_.close();
    if (!out_) throw InputError("write failed: " + path_);
  }

private:
  std::ofstream out_;
  std::string path_;
};

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw InvariantError("double formatting failed");
  return std::string(buf, ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out << content;
  out.close();
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace selpack
