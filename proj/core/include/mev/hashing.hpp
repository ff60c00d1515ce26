#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mev {

// Lowercase hex SHA-256 of the raw bytes.
std::string sha256_hex(std::string_view data);

// Line endings to LF, trailing whitespace stripped from every line.
std::string normalize_code(std::string_view code);

// sha256_hex(normalize_code(code))
std::string content_hash(std::string_view code);

std::uint64_t fnv1a64(std::string_view data) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Deterministic per-stage seed expansion from the single run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

}  // namespace mev
