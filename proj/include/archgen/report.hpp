#pragma once

#include <string>
#include <vector>

#include "archgen/stats.hpp"

namespace archgen::stats {

struct ReportOptions {
  std::size_t min_samples = kDefaultMinSamples;
  double alpha = kAlpha;
  TTest test = TTest::Welch;
};

/// The three result tables (overall balanced means, per-dataset means with
/// significance markers, significant comparisons), each as aligned text and
/// as comma-separated values with a header row.
struct StatsReport {
  std::string overall_text, overall_csv;
  std::string per_dataset_text, per_dataset_csv;
  std::string significance_text, significance_csv;
  std::vector<std::string> excluded;  // below min_samples, omitted from the first two tables
  std::vector<SkippedComparison> skipped;
};

/// Throws MissingDataError when the table is empty or baseline is absent.
StatsReport build_report(const AccuracyTable& table, const std::string& baseline, const ReportOptions& opts = {});

}  // namespace archgen::stats
