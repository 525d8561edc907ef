#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace archgen {

/// Streaming MD5 (RFC 1321).
class Md5 {
 public:
  using Digest = std::array<std::uint8_t, 16>;

  Md5() noexcept;

  void update(std::span<const std::uint8_t> bytes) noexcept;
  void update(std::string_view text) noexcept;
  Digest finish() noexcept;

  static Digest of(std::string_view text) noexcept;
  static std::string hex(const Digest& d);

 private:
  void compress(const std::uint8_t* block) noexcept;

  std::array<std::uint32_t, 4> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::uint64_t length_ = 0;  // bytes
  std::size_t buffered_ = 0;
};

/// Lowercase 32-hex MD5 of text.
std::string md5_hex(std::string_view text);

}  // namespace archgen
