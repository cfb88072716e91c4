#include "sdlt/digest.hpp"

#include <openssl/evp.h>

#include <memory>

#include "sdlt/error.hpp"

namespace sdlt {

namespace {

constexpr char kHex[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Digest Digest::of(std::span<const std::uint8_t> data) {
  // The one-shot SHA256() looks the algorithm up on every call; keep one
  // fetched method and one context per thread instead.
  static const std::unique_ptr<EVP_MD, decltype(&EVP_MD_free)> md(EVP_MD_fetch(nullptr, "SHA256", nullptr),
                                                                  &EVP_MD_free);
  thread_local const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                                 &EVP_MD_CTX_free);
  Digest d;
  unsigned int len = 0;
  if (!md || !ctx || EVP_DigestInit_ex2(ctx.get(), md.get(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), d.bytes.data(), &len) != 1 || len != d.bytes.size()) {
    throw Error(ErrorCode::InvalidArgument, "SHA-256 unavailable");
  }
  return d;
}

Digest Digest::of(std::string_view data) {
  return of(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string Digest::hex() const {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != 64) throw Error(ErrorCode::Malformed, "digest hex must be 64 characters");
  Digest d;
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::Malformed, "digest hex has a non-hex character");
    d.bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return d;
}

}  // namespace sdlt
