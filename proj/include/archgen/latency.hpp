#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace archgen {

struct LatencySummary {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p99_ms = 0.0;  // nearest-rank
  double min_ms = 0.0;
  double max_ms = 0.0;
};

/// Summarizes per-sample wall times in milliseconds. Empty input gives zeros.
LatencySummary summarize(std::vector<double> samples_ms);

namespace dedup {

struct LatencyReport {
  LatencySummary hash_path;      // normalize + MD5 + registry lookup
  LatencySummary baseline_path;  // full parse + canonical tree hash + lookup
  std::size_t samples = 0;
  std::size_t baseline_failures = 0;  // unparseable, excluded from baseline timing
  double mean_bytes = 0.0;
  double ratio = 0.0;  // baseline median / hash median

  std::string to_text() const;
  std::string to_csv() const;
};

/// Times the hash path and the full-parse baseline on every sample of the
/// corpus. Throws ArgumentError on an empty corpus.
LatencyReport benchmark_latency(std::span<const std::string> corpus);

}  // namespace dedup
}  // namespace archgen
