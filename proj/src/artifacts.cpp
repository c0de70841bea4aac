#include "nepr/artifacts.hpp"

#include <cstdio>
#include <cstdlib>

namespace nepr {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

bool is_src_line(std::string_view line) { return line.substr(0, 4) == "src "; }

template <class F>
void for_each_line(std::string_view doc, F f) {
  std::size_t pos = 0;
  while (pos < doc.size()) {
    std::size_t end = doc.find('\n', pos);
    if (end == std::string_view::npos) end = doc.size();
    f(doc.substr(pos, end - pos));
    pos = end + 1;
  }
}

}  // namespace

std::uint64_t content_hash(std::string_view doc) {
  std::string body;
  body.reserve(doc.size());
  for_each_line(doc, [&](std::string_view line) {
    if (is_src_line(line)) return;
    body.append(line);
    body.push_back('\n');
  });
  return fnv1a64(body);
}

std::uint64_t chain_hash(std::initializer_list<std::uint64_t> inputs) {
  std::string buf;
  for (auto h : inputs) buf += to_hex(h);
  return fnv1a64(buf);
}

std::string stamp_source(std::string_view doc, std::uint64_t src) {
  std::string out;
  bool first = true;
  for_each_line(doc, [&](std::string_view line) {
    if (is_src_line(line)) return;
    out.append(line);
    out.push_back('\n');
    if (first) {
      out += "src " + to_hex(src) + "\n";
      first = false;
    }
  });
  return out;
}

std::optional<std::uint64_t> source_of(std::string_view doc) {
  std::optional<std::uint64_t> found;
  for_each_line(doc, [&](std::string_view line) {
    if (!found && is_src_line(line)) {
      std::string hex(line.substr(4));
      found = std::strtoull(hex.c_str(), nullptr, 16);
    }
  });
  return found;
}

std::string to_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace nepr
