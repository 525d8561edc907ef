#include "archgen/digest.hpp"

#include <algorithm>

#include "archgen/error.hpp"

namespace archgen {

NnId::NnId(std::string_view text) : hex_(text) {
  if (!is_valid(text))
    throw ArgumentError("malformed nn_id '" + std::string(text) +
                        "': expected 32 lowercase hex characters");
}

bool NnId::is_valid(std::string_view text) noexcept {
  return text.size() == 32 && std::all_of(text.begin(), text.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::optional<NnId> NnId::parse(std::string_view text) noexcept {
  if (!is_valid(text)) return std::nullopt;
  return NnId(Unchecked{}, std::string(text));
}

}  // namespace archgen
