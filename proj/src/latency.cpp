#include "archgen/latency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/md5.hpp"
#include "archgen/pysyntax.hpp"
#include "archgen/registry.hpp"

namespace archgen {

LatencySummary summarize(std::vector<double> xs) {
  LatencySummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  s.mean_ms = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  s.median_ms = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  s.p99_ms = xs[std::max<std::size_t>(rank, 1) - 1];
  s.min_ms = xs.front();
  s.max_ms = xs.back();
  return s;
}

namespace dedup {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void row(std::string& out, const char* name, const LatencySummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %8zu %12.4f %12.4f %12.4f %12.4f\n", name, s.count, s.median_ms,
                s.p99_ms, s.mean_ms, s.max_ms);
  out += buf;
}

void csv_row(std::string& out, const char* name, const LatencySummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", name, s.count, s.median_ms, s.p99_ms,
                s.mean_ms, s.min_ms, s.max_ms);
  out += buf;
}

}  // namespace

LatencyReport benchmark_latency(std::span<const std::string> corpus) {
  if (corpus.empty()) throw ArgumentError("benchmark corpus is empty");

  LatencyReport report;
  report.samples = corpus.size();
  double bytes = 0.0;
  for (const auto& c : corpus) bytes += static_cast<double>(c.size());
  report.mean_bytes = bytes / static_cast<double>(corpus.size());

  // Both paths look up against an index holding every corpus entry.
  Registry store;
  std::unordered_set<std::string> tree_index;
  for (const auto& code : corpus) {
    if (!code.empty()) store.insert(ModelRecord::from_code(code, "bench"));
    if (auto parsed = py::parse(code); parsed.tree) tree_index.insert(md5_hex(py::canonical_form(*parsed.tree)));
  }

  std::vector<double> hash_ms, base_ms;
  hash_ms.reserve(corpus.size());
  base_ms.reserve(corpus.size());
  std::size_t hits = 0;
  for (const auto& code : corpus) {
    const auto t0 = Clock::now();
    hits += check_unique(code, store) == Decision::Reject;
    hash_ms.push_back(elapsed_ms(t0));
  }
  for (const auto& code : corpus) {
    const auto t0 = Clock::now();
    const auto parsed = py::parse(code);
    if (!parsed.tree) {
      ++report.baseline_failures;
      continue;
    }
    hits += tree_index.contains(md5_hex(py::canonical_form(*parsed.tree)));
    base_ms.push_back(elapsed_ms(t0));
  }
  (void)hits;

  report.hash_path = summarize(std::move(hash_ms));
  report.baseline_path = summarize(std::move(base_ms));
  if (report.hash_path.median_ms > 0.0 && report.baseline_path.count > 0)
    report.ratio = report.baseline_path.median_ms / report.hash_path.median_ms;
  return report;
}

std::string LatencyReport::to_text() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "samples: %zu (mean %.0f bytes), baseline parse failures: %zu\n", samples,
                mean_bytes, baseline_failures);
  out += buf;
  out += "path          count    median_ms       p99_ms      mean_ms       max_ms\n";
  row(out, "hash", hash_path);
  row(out, "baseline", baseline_path);
  std::snprintf(buf, sizeof buf, "ratio baseline/hash (median): %.1fx\n", ratio);
  out += buf;
  return out;
}

std::string LatencyReport::to_csv() const {
  std::string out = "path,count,median_ms,p99_ms,mean_ms,min_ms,max_ms\n";
  csv_row(out, "hash", hash_path);
  csv_row(out, "baseline", baseline_path);
  char buf[128];
  std::snprintf(buf, sizeof buf, "ratio,%zu,%.6f,,,,\n", samples, ratio);
  out += buf;
  return out;
}

}  // namespace dedup
}  // namespace archgen
