#include "archgen/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "archgen/error.hpp"
#include "archgen/fileio.hpp"
#include "archgen/random.hpp"

namespace archgen::stats {

// ---------------------------------------------------------------------------
// AccuracyTable

void AccuracyTable::add(const std::string& variant, const std::string& dataset, double sample) {
  if (!(sample >= 0.0 && sample <= 1.0))
    throw ArgumentError("accuracy sample " + std::to_string(sample) + " outside [0,1]");
  cells_[{variant, dataset}].push_back(sample);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) return out;
    pos = comma + 1;
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

AccuracyTable AccuracyTable::parse_csv(std::string_view text, const std::string& source) {
  AccuracyTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  int col_variant = -1, col_dataset = -1, col_accuracy = -1;
  bool have_header = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_csv(line);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name = lower(fields[i]);
        if (name == "variant") col_variant = static_cast<int>(i);
        if (name == "dataset") col_dataset = static_cast<int>(i);
        if (name == "accuracy") col_accuracy = static_cast<int>(i);
      }
      if (col_variant < 0 || col_dataset < 0 || col_accuracy < 0)
        throw ParseError(source, line_no, "header must name variant, dataset and accuracy columns");
      have_header = true;
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max({col_variant, col_dataset, col_accuracy}));
    if (fields.size() <= need) throw ParseError(source, line_no, "expected at least " + std::to_string(need + 1) + " fields");
    const std::string_view acc = fields[static_cast<std::size_t>(col_accuracy)];
    double value = 0.0;
    const auto [end, ec] = std::from_chars(acc.data(), acc.data() + acc.size(), value);
    if (ec != std::errc() || end != acc.data() + acc.size())
      throw ParseError(source, line_no, "accuracy '" + std::string(acc) + "' is not a number");
    const std::string variant(fields[static_cast<std::size_t>(col_variant)]);
    const std::string dataset(fields[static_cast<std::size_t>(col_dataset)]);
    if (variant.empty() || dataset.empty()) throw ParseError(source, line_no, "empty variant or dataset");
    try {
      table.add(variant, dataset, value);
    } catch (const ArgumentError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(source, std::max<std::size_t>(line_no, 1), "missing header row");
  return table;
}

AccuracyTable AccuracyTable::load_csv(const std::filesystem::path& file) {
  return parse_csv(read_file(file), file.string());
}

bool AccuracyTable::has(const std::string& variant, const std::string& dataset) const {
  return cells_.contains({variant, dataset});
}

const std::vector<double>& AccuracyTable::samples(const std::string& variant, const std::string& dataset) const {
  auto it = cells_.find({variant, dataset});
  if (it == cells_.end()) throw MissingDataError("no samples for " + variant + " on " + dataset);
  return it->second;
}

std::vector<std::string> AccuracyTable::variants() const {
  std::set<std::string> s;
  for (const auto& [k, v] : cells_) s.insert(k.first);
  return {s.begin(), s.end()};
}

std::vector<std::string> AccuracyTable::datasets() const {
  std::set<std::string> s;
  for (const auto& [k, v] : cells_) s.insert(k.second);
  return {s.begin(), s.end()};
}

std::vector<std::string> AccuracyTable::datasets_of(const std::string& variant) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : cells_)
    if (k.first == variant) out.push_back(k.second);
  return out;
}

std::size_t AccuracyTable::sample_count(const std::string& variant) const {
  std::size_t n = 0;
  for (const auto& [k, v] : cells_)
    if (k.first == variant) n += v.size();
  return n;
}

// ---------------------------------------------------------------------------
// Descriptive statistics

double mean(std::span<const double> xs) {
  if (xs.empty()) throw MissingDataError("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw DegenerateInputError("variance needs at least 2 samples");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double per_dataset_mean(const AccuracyTable& table, const std::string& variant, const std::string& dataset) {
  return mean(table.samples(variant, dataset));
}

BalancedMean balanced_mean(const AccuracyTable& table, const std::string& variant) {
  std::vector<double> means;
  for (const auto& ds : table.datasets_of(variant)) means.push_back(per_dataset_mean(table, variant, ds));
  if (means.empty()) throw MissingDataError("no samples for variant " + variant);

  const double m = mean(means);
  double ss = 0.0;
  for (double x : means) ss += (x - m) * (x - m);
  const auto k = static_cast<double>(means.size());
  return BalancedMean{m, std::sqrt(ss / k), means.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0, means.size()};
}

double naive_mean(const AccuracyTable& table, const std::string& variant) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [key, xs] : table.cells()) {
    if (key.first != variant) continue;
    for (double x : xs) sum += x;
    n += xs.size();
  }
  if (n == 0) throw MissingDataError("no samples for variant " + variant);
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// t distribution

namespace {

// Continued fraction for I_x(a,b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a,b) given both x and y = 1 - x, so callers can pass an accurate y.
double incomplete_beta_xy(double x, double y, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw ArgumentError("incomplete_beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("incomplete_beta needs x in [0,1]");
  return incomplete_beta_xy(x, 1.0 - x, a, b);
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  return std::clamp(incomplete_beta_xy(x, y, df / 2.0, 0.5), 0.0, 1.0);
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTest kind) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateInputError("t-test needs at least 2 samples per group");
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a), vb = sample_variance(b);
  if (va == 0.0 && vb == 0.0) throw DegenerateInputError("t-test with zero variance in both groups");
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());

  double se2, df;
  if (kind == TTest::Welch) {
    const double qa = va / na, qb = vb / nb;
    se2 = qa + qb;
    df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  } else {
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    df = na + nb - 2.0;
  }
  const double t = (ma - mb) / std::sqrt(se2);
  return {t, df, student_t_two_sided(t, df)};
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateInputError("Cohen's d needs at least 2 samples per group");
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
  if (pooled == 0.0) throw DegenerateInputError("Cohen's d with zero pooled variance");
  return (mean(a) - mean(b)) / std::sqrt(pooled);
}

// ---------------------------------------------------------------------------
// Tables

SignificanceTable significance_table(const AccuracyTable& table, const std::string& baseline, double alpha,
                                     TTest kind) {
  const auto base_datasets = table.datasets_of(baseline);
  if (base_datasets.empty()) throw MissingDataError("baseline variant '" + baseline + "' has no samples");

  SignificanceTable out;
  for (const auto& [key, samples] : table.cells()) {
    const auto& [variant, dataset] = key;
    if (variant == baseline) continue;
    if (!table.has(baseline, dataset)) {
      out.skipped.push_back({dataset, variant, "baseline has no samples for this dataset"});
      continue;
    }
    const auto& base = table.samples(baseline, dataset);
    try {
      const TTestResult tt = t_test(samples, base, kind);
      const double d = cohens_d(samples, base);
      if (tt.p_value < alpha)
        out.rows.push_back({dataset, variant, baseline, (mean(samples) - mean(base)) * 100.0, tt.t, tt.df,
                            tt.p_value, d, true});
    } catch (const DegenerateInputError& e) {
      out.skipped.push_back({dataset, variant, e.what()});
    }
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SignificanceResult& x, const SignificanceResult& y) { return x.p_value < y.p_value; });
  return out;
}

std::vector<std::string> variant_exclusion(const AccuracyTable& table, std::size_t min_samples) {
  if (min_samples < 2) throw ArgumentError("min_samples must be >= 2");
  std::vector<std::string> out;
  for (const auto& v : table.variants())
    if (table.sample_count(v) < min_samples) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// Null simulation

namespace {

bool null_repetition_rejects(const NullSimulation& sim, std::size_t rep) {
  std::mt19937_64 rng(mix_seed(sim.seed, rep));
  std::normal_distribution<double> dist(sim.mean, sim.sd);
  AccuracyTable table;
  for (const char* variant : {"baseline", "candidate"})
    for (std::size_t i = 0; i < sim.group_size; ++i)
      table.add(variant, "synthetic", std::clamp(dist(rng), 0.0, 1.0));
  return !significance_table(table, "baseline", sim.alpha).rows.empty();
}

}  // namespace

double null_rejection_rate(const NullSimulation& sim) {
  if (sim.repetitions == 0) throw ArgumentError("repetitions must be >= 1");
  long long rejected = 0;
  const auto reps = static_cast<long long>(sim.repetitions);
#pragma omp parallel for reduction(+ : rejected) schedule(static)
  for (long long r = 0; r < reps; ++r) rejected += null_repetition_rejects(sim, static_cast<std::size_t>(r)) ? 1 : 0;
  return static_cast<double>(rejected) / static_cast<double>(sim.repetitions);
}

double null_rejection_rate_serial(const NullSimulation& sim) {
  if (sim.repetitions == 0) throw ArgumentError("repetitions must be >= 1");
  std::size_t rejected = 0;
  for (std::size_t r = 0; r < sim.repetitions; ++r) rejected += null_repetition_rejects(sim, r) ? 1 : 0;
  return static_cast<double>(rejected) / static_cast<double>(sim.repetitions);
}

}  // namespace archgen::stats
