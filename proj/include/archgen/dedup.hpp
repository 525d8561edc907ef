#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "archgen/digest.hpp"

namespace archgen {

class Registry;

namespace dedup {

/// True for the six ASCII whitespace characters and for every Unicode code
/// point carrying the White_Space property.
bool is_whitespace(char32_t cp) noexcept;

/// Removes every whitespace character. Invalid UTF-8 bytes pass through.
std::string normalize(std::string_view code);

struct NormalizedFingerprint {
  std::string normalized;
  NnId digest;
};

NormalizedFingerprint fingerprint(std::string_view code);

/// Digest only; skips materialising the normalized copy.
NnId digest_of(std::string_view code);

enum class Decision { Accept, Reject };

const char* to_string(Decision d) noexcept;

/// REJECT iff the normalized digest of code is already stored. Read-only.
Decision check_unique(std::string_view code, const Registry& store);

/// OpenMP kernel: digests of every sample, index-aligned with the input.
std::vector<NnId> digest_batch(std::span<const std::string> codes);

/// Serial reference for digest_batch.
std::vector<NnId> digest_batch_serial(std::span<const std::string> codes);

}  // namespace dedup
}  // namespace archgen
