#pragma once

#include <openssl/evp.h>

#include <memory>
#include <span>
#include <string>

#include "trapline/core/bytes.hpp"
#include "trapline/core/error.hpp"

namespace trapline {

inline std::string sha256_hex(std::span<const uint8_t> data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::io_error, "sha256 init failed");
  if (!data.empty() && EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1)
    fail(ErrorKind::io_error, "sha256 update failed");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    fail(ErrorKind::io_error, "sha256 final failed");
  return hex_encode(std::span<const uint8_t>(digest, len));
}

inline std::string sha256_hex(std::string_view s) {
  return sha256_hex(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

}  // namespace trapline
