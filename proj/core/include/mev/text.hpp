#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mev {

inline constexpr std::size_t kDefaultTokenDivisor = 4;
inline constexpr std::size_t kDefaultPromptTokenLimit = 4096;

// Approximate prompt tokens: ceil(characters / divisor). Characters are
// UTF-8 code points; invalid bytes count one each.
std::size_t token_estimate(std::string_view text, std::size_t divisor = kDefaultTokenDivisor);

bool utf8_valid(std::string_view text) noexcept;
std::size_t utf8_length(std::string_view text) noexcept;
// Longest prefix holding at most max_chars code points.
std::string_view utf8_prefix(std::string_view text, std::size_t max_chars) noexcept;

std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text) noexcept;

}  // namespace mev
