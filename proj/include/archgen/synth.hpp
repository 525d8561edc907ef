#pragma once

// Synthetic PyTorch-style architectures for benchmarks, fixtures and the
// offline mock LLM. Every generated program satisfies the codecheck rules.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace archgen::synth {

/// Smallest program that passes every codecheck rule.
std::string minimal_net();

/// Randomized architecture of roughly target_bytes, deterministic in seed.
std::string architecture(std::uint64_t seed, std::size_t target_bytes = 3000);

/// count architectures with pairwise distinct normalized forms.
std::vector<std::string> corpus(std::size_t count, std::uint64_t seed, std::size_t target_bytes = 3000);

/// Whitespace-only rewrite of code (reindent, trailing blanks, blank lines,
/// operator spacing, CRLF). Keeps the program's block structure valid and
/// always differs from the input when the input has at least one line break.
std::string mutate_whitespace(std::string_view code, std::uint64_t seed);

/// A chat-style completion wrapping architecture(seed) in prose and a fence.
std::string completion(std::uint64_t seed, std::size_t target_bytes = 3000);

}  // namespace archgen::synth
