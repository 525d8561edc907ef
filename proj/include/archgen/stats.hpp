#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace archgen::stats {

/// Accuracy samples (fractions) per (variant, dataset) cell.
class AccuracyTable {
 public:
  /// Throws ArgumentError when sample lies outside [0,1].
  void add(const std::string& variant, const std::string& dataset, double sample);

  /// Parses "variant,dataset,accuracy" rows after a header. Throws ParseError
  /// with the offending line number.
  static AccuracyTable parse_csv(std::string_view text, const std::string& source = "<input>");
  static AccuracyTable load_csv(const std::filesystem::path& file);

  bool empty() const noexcept { return cells_.empty(); }
  bool has(const std::string& variant, const std::string& dataset) const;
  /// Throws MissingDataError for an absent cell.
  const std::vector<double>& samples(const std::string& variant, const std::string& dataset) const;

  std::vector<std::string> variants() const;
  std::vector<std::string> datasets() const;
  std::vector<std::string> datasets_of(const std::string& variant) const;
  std::size_t sample_count(const std::string& variant) const;

  const std::map<std::pair<std::string, std::string>, std::vector<double>>& cells() const noexcept {
    return cells_;
  }

 private:
  std::map<std::pair<std::string, std::string>, std::vector<double>> cells_;
};

double mean(std::span<const double> xs);
/// Bessel-corrected (n-1) variance.
double sample_variance(std::span<const double> xs);

double per_dataset_mean(const AccuracyTable& table, const std::string& variant, const std::string& dataset);

struct BalancedMean {
  double mean;
  double std_population;  // dispersion of per-dataset means, /k
  double std_sample;      // /(k-1); 0 when k == 1
  std::size_t datasets;
};

/// Mean of per-dataset means, each dataset weighted equally.
BalancedMean balanced_mean(const AccuracyTable& table, const std::string& variant);

/// Pooled mean over all samples regardless of dataset.
double naive_mean(const AccuracyTable& table, const std::string& variant);

enum class TTest { Welch, Student };

struct TTestResult {
  double t;
  double df;
  double p_value;  // two-sided
};

/// Throws DegenerateInputError with fewer than 2 samples per group or zero
/// variance in both groups.
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTest kind = TTest::Welch);

/// (mean_a - mean_b) / pooled SD. Throws DegenerateInputError.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double student_t_two_sided(double t, double df);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double x, double a, double b);

inline constexpr double kAlpha = 0.05;

struct SignificanceResult {
  std::string dataset;
  std::string variant;
  std::string baseline;
  double delta_pp;  // percentage points, variant minus baseline
  double t;
  double df;
  double p_value;
  double cohens_d;
  bool significant;
};

struct SkippedComparison {
  std::string dataset;
  std::string variant;
  std::string reason;
};

struct SignificanceTable {
  std::vector<SignificanceResult> rows;  // p < alpha only, ascending p
  std::vector<SkippedComparison> skipped;
};

/// Compares every other variant to baseline within each shared dataset.
/// Throws MissingDataError when baseline has no data at all.
SignificanceTable significance_table(const AccuracyTable& table, const std::string& baseline,
                                     double alpha = kAlpha, TTest kind = TTest::Welch);

inline constexpr std::size_t kDefaultMinSamples = 30;

/// Variants whose total sample count is below min_samples. Throws
/// ArgumentError when min_samples < 2.
std::vector<std::string> variant_exclusion(const AccuracyTable& table, std::size_t min_samples);

struct NullSimulation {
  std::size_t repetitions = 1000;
  std::size_t group_size = 30;
  double mean = 0.5;
  double sd = 0.05;
  double alpha = kAlpha;
  std::uint64_t seed = 1;
};

/// Fraction of repetitions in which significance_table reports a row when
/// both variants are drawn from one distribution. OpenMP over repetitions.
double null_rejection_rate(const NullSimulation& sim);
/// Serial reference for null_rejection_rate.
double null_rejection_rate_serial(const NullSimulation& sim);

}  // namespace archgen::stats
