#pragma once

#include <openssl/evp.h>

#include <array>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sgforge {

// Hex SHA-256 over the given parts. Parts are separated by a NUL byte so that
// ("ab", "c") and ("a", "bc") hash differently.
inline std::string sha256_hex(std::initializer_list<std::string_view> parts) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1;
  bool first = true;
  for (std::string_view part : parts) {
    if (!first) {
      const char sep = '\0';
      ok = ok && EVP_DigestUpdate(ctx, &sep, 1) == 1;
    }
    first = false;
    ok = ok && EVP_DigestUpdate(ctx, part.data(), part.size()) == 1;
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  ok = ok && EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-256 digest failed");

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) { return sha256_hex({data}); }

}  // namespace sgforge
