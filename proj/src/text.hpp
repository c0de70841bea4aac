#pragma once

// Line-oriented tokenizer shared by the artifact formats.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nepr/model.hpp"

namespace nepr::text {

struct Line {
  int number = 0;
  std::vector<std::string_view> tokens;
};

/// Splits into whitespace-separated tokens, dropping blank lines, '#'
/// comments and `src <hash>` provenance lines.
std::vector<Line> tokenize(std::string_view text);

double to_double(const Line& l, std::string_view tok);
int to_int(const Line& l, std::string_view tok);

/// Expects the header `<magic> <version>` on the first line.
void expect_header(const std::vector<Line>& lines, std::string_view magic, int version);

inline bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

[[noreturn]] inline void fail(const Line& l, const std::string& what) { throw ParseError(l.number, what); }

}  // namespace nepr::text
