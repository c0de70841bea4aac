#include "text.hpp"

#include <cstdlib>

namespace nepr::text {

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    pos = end + 1;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < raw.size() && raw[j] != ' ' && raw[j] != '\t' && raw[j] != '\r') ++j;
      if (j > i) line.tokens.push_back(raw.substr(i, j - i));
      i = j;
    }
    if (line.tokens.empty()) continue;
    if (line.tokens[0] == "src") continue;
    out.push_back(std::move(line));
    if (end == text.size()) break;
  }
  return out;
}

double to_double(const Line& l, std::string_view tok) {
  std::string s(tok);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) fail(l, "expected a number, got '" + s + "'");
  return v;
}

int to_int(const Line& l, std::string_view tok) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) fail(l, "expected an integer, got '" + std::string(tok) + "'");
  return v;
}

void expect_header(const std::vector<Line>& lines, std::string_view magic, int version) {
  if (lines.empty()) throw ParseError(1, "empty document, expected '" + std::string(magic) + "' header");
  const Line& h = lines.front();
  if (h.tokens.size() != 2 || h.tokens[0] != magic) fail(h, "expected header '" + std::string(magic) + " " + std::to_string(version) + "'");
  if (to_int(h, h.tokens[1]) != version) fail(h, "unsupported " + std::string(magic) + " version");
}

}  // namespace nepr::text
