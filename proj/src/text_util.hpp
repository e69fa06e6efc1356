#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kgalloc/error.hpp"

namespace kgalloc::detail {

struct Token {
  std::string text;
  std::size_t column;  // 1-based
};

// Splits on whitespace, keeping "quoted strings" (with backslash escapes)
// intact. A token starting with '#' ends the line.
inline std::vector<Token> tokenize(std::string_view line, std::size_t line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && space(line[i])) ++i;
    if (i >= line.size() || line[i] == '#') break;
    std::size_t start = i;
    bool quoted = false;
    while (i < line.size() && (quoted || !space(line[i]))) {
      if (line[i] == '\\' && quoted) {
        i += 2;
        continue;
      }
      if (line[i] == '"') quoted = !quoted;
      ++i;
    }
    if (quoted) throw ParseError(line_no, start + 1, "unterminated string");
    if (i > line.size()) i = line.size();
    out.push_back(Token{std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

inline std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << content;
}

}  // namespace kgalloc::detail
