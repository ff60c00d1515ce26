#include "mev/hashing.hpp"

#include <array>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace mev {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string normalize_code(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  std::size_t line_start = 0;
  auto flush_line = [&](std::size_t end) {
    std::size_t stop = end;
    while (stop > line_start && (code[stop - 1] == ' ' || code[stop - 1] == '\t' ||
                                 code[stop - 1] == '\f' || code[stop - 1] == '\v')) {
      --stop;
    }
    out.append(code.substr(line_start, stop - line_start));
  };
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (code[i] == '\r' || code[i] == '\n') {
      flush_line(i);
      out.push_back('\n');
      if (code[i] == '\r' && i + 1 < code.size() && code[i + 1] == '\n') ++i;
      line_start = i + 1;
    }
  }
  flush_line(code.size());
  return out;
}

std::string content_hash(std::string_view code) { return sha256_hex(normalize_code(code)); }

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : data) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  return splitmix64(seed ^ splitmix64(fnv1a64(label)));
}

}  // namespace mev
