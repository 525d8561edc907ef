#include "archgen/dedup.hpp"

#include <algorithm>

#include "archgen/error.hpp"
#include "archgen/md5.hpp"
#include "archgen/registry.hpp"

namespace archgen {

namespace dedup {

bool is_whitespace(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

namespace {

// Length of a well-formed UTF-8 sequence starting at s[i] and its code point,
// or 0 when the bytes are not a valid sequence.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) noexcept {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char lead = byte(i);
  std::size_t len;
  if (lead >= 0xC2 && lead <= 0xDF) {
    len = 2;
    cp = lead & 0x1F;
  } else if (lead >= 0xE0 && lead <= 0xEF) {
    len = 3;
    cp = lead & 0x0F;
  } else if (lead >= 0xF0 && lead <= 0xF4) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char c = byte(i + k);
    if ((c & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (c & 0x3F);
  }
  return len;
}

inline bool is_ascii_space(unsigned char c) noexcept {
  return c == ' ' || (c >= 0x09 && c <= 0x0D);
}

// Calls sink(string_view) for each maximal run of retained bytes.
template <typename Sink>
void for_each_kept_run(std::string_view code, Sink&& sink) {
  std::size_t run_start = 0;
  std::size_t i = 0;
  while (i < code.size()) {
    const auto c = static_cast<unsigned char>(code[i]);
    std::size_t skip = 0;
    if (c < 0x80) {
      if (is_ascii_space(c)) skip = 1;
    } else {
      char32_t cp = 0;
      const std::size_t len = decode_utf8(code, i, cp);
      if (len == 0) {
        ++i;
        continue;
      }
      if (is_whitespace(cp)) {
        skip = len;
      } else {
        i += len;
        continue;
      }
    }
    if (skip == 0) {
      ++i;
      continue;
    }
    if (i > run_start) sink(code.substr(run_start, i - run_start));
    i += skip;
    run_start = i;
  }
  if (code.size() > run_start) sink(code.substr(run_start));
}

}  // namespace

std::string normalize(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  for_each_kept_run(code, [&](std::string_view run) { out.append(run); });
  return out;
}

NormalizedFingerprint fingerprint(std::string_view code) {
  std::string normalized = normalize(code);
  NnId digest(md5_hex(normalized));
  return {std::move(normalized), std::move(digest)};
}

NnId digest_of(std::string_view code) {
  Md5 h;
  for_each_kept_run(code, [&](std::string_view run) { h.update(run); });
  return NnId(Md5::hex(h.finish()));
}

const char* to_string(Decision d) noexcept { return d == Decision::Accept ? "ACCEPT" : "REJECT"; }

Decision check_unique(std::string_view code, const Registry& store) {
  return store.contains(digest_of(code)) ? Decision::Reject : Decision::Accept;
}

std::vector<NnId> digest_batch(std::span<const std::string> codes) {
  std::vector<std::optional<NnId>> slots(codes.size());
  const auto n = static_cast<std::ptrdiff_t>(codes.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) slots[i] = digest_of(codes[i]);

  std::vector<NnId> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<NnId> digest_batch_serial(std::span<const std::string> codes) {
  std::vector<NnId> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(digest_of(c));
  return out;
}

}  // namespace dedup
}  // namespace archgen
