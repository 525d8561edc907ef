#pragma once

#include <compare>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace archgen {

/// 32-character lowercase hexadecimal architecture identifier (nn_id).
class NnId {
 public:
  /// Throws ArgumentError unless text is exactly 32 lowercase hex chars.
  explicit NnId(std::string_view text);

  static std::optional<NnId> parse(std::string_view text) noexcept;
  static bool is_valid(std::string_view text) noexcept;

  const std::string& str() const noexcept { return hex_; }

  friend auto operator<=>(const NnId&, const NnId&) = default;
  friend bool operator==(const NnId&, const NnId&) = default;
  friend std::ostream& operator<<(std::ostream& os, const NnId& id) { return os << id.hex_; }

 private:
  struct Unchecked {};
  NnId(Unchecked, std::string hex) : hex_(std::move(hex)) {}
  std::string hex_;
};

}  // namespace archgen

template <>
struct std::hash<archgen::NnId> {
  std::size_t operator()(const archgen::NnId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
