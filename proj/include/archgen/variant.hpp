#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace archgen {

/// Prompting variant alt-nnK, K = number of supporting examples (1..6).
class Variant {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 6;

  /// Throws ArgumentError outside 1..6.
  explicit Variant(int supporting_count);

  /// Accepts "alt-nn1".."alt-nn6".
  static std::optional<Variant> parse(std::string_view name) noexcept;

  int supporting_count() const noexcept { return n_; }
  std::string name() const { return "alt-nn" + std::to_string(n_); }

  friend auto operator<=>(const Variant&, const Variant&) = default;

 private:
  int n_;
};

}  // namespace archgen
