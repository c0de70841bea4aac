#pragma once

// Provenance chaining for artifact files. Each derived file carries a
// `src <hex>` line holding the hash of the artifacts it was computed from.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace nepr {

std::uint64_t fnv1a64(std::string_view data);

/// Hash of a document's content, ignoring any `src` line.
std::uint64_t content_hash(std::string_view doc);

/// Order-sensitive combination of input hashes.
std::uint64_t chain_hash(std::initializer_list<std::uint64_t> inputs);

/// Inserts (or replaces) the `src` line right after the header line.
std::string stamp_source(std::string_view doc, std::uint64_t src);

std::optional<std::uint64_t> source_of(std::string_view doc);

std::string to_hex(std::uint64_t v);

}  // namespace nepr
