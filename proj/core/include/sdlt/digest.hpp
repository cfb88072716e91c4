#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace sdlt {

/// 32-byte SHA-256 digest.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  static Digest zero() { return Digest{}; }
  static Digest of(std::span<const std::uint8_t> data);
  static Digest of(std::string_view data);

  std::string hex() const;
  static Digest from_hex(std::string_view hex);

  friend auto operator<=>(const Digest&, const Digest&) = default;
};

}  // namespace sdlt
