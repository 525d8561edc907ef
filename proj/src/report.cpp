#include "archgen/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "archgen/error.hpp"
#include "archgen/variant.hpp"

namespace archgen::stats {

namespace {

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::string num(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Left-aligns the first column and right-aligns the rest.
std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      if (c == 0) os << r[c] << pad;
      else os << "  " << pad << r[c];
    }
    os << '\n';
  }
  return os.str();
}

std::string csv(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) os << ',';
      const bool quote = r[c].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        os << r[c];
        continue;
      }
      os << '"';
      for (char ch : r[c]) os << (ch == '"' ? "\"\"" : std::string(1, ch));
      os << '"';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

StatsReport build_report(const AccuracyTable& table, const std::string& baseline, const ReportOptions& opts) {
  if (table.empty()) throw MissingDataError("no accuracy records");
  if (table.sample_count(baseline) == 0)
    throw MissingDataError("baseline variant '" + baseline + "' not present in the records");

  StatsReport out;
  out.excluded = variant_exclusion(table, opts.min_samples);
  std::vector<std::string> shown;
  for (const auto& v : table.variants())
    if (std::find(out.excluded.begin(), out.excluded.end(), v) == out.excluded.end()) shown.push_back(v);

  // Overall: balanced mean +- dispersion of the per-dataset means.
  std::vector<std::vector<std::string>> overall{{"Variant", "n", "Models", "Datasets", "Balanced Mean (%)", "Std (%)"}};
  std::vector<std::vector<std::string>> overall_csv{
      {"variant", "n", "models", "datasets", "balanced_mean_pct", "std_sample_pct", "std_population_pct", "naive_mean_pct"}};
  std::map<std::string, BalancedMean> balanced;
  for (const auto& v : shown) {
    const BalancedMean bm = balanced_mean(table, v);
    balanced.emplace(v, bm);
    const auto parsed = Variant::parse(v);
    const std::string n = parsed ? std::to_string(parsed->supporting_count()) : "-";
    const std::string models = std::to_string(table.sample_count(v));
    overall.push_back({v, n, models, std::to_string(bm.datasets), pct(bm.mean) + " +- " + pct(bm.std_sample),
                       pct(bm.std_sample)});
    overall_csv.push_back({v, n, models, std::to_string(bm.datasets), num("%.4f", bm.mean * 100),
                           num("%.4f", bm.std_sample * 100), num("%.4f", bm.std_population * 100),
                           num("%.4f", naive_mean(table, v) * 100)});
  }
  out.overall_text = align(overall);
  if (!out.excluded.empty()) {
    out.overall_text += "excluded (fewer than " + std::to_string(opts.min_samples) + " samples):";
    for (const auto& v : out.excluded) out.overall_text += " " + v + " (n=" + std::to_string(table.sample_count(v)) + ")";
    out.overall_text += '\n';
  }
  out.overall_csv = csv(overall_csv);

  // Significance against the baseline; markers feed the per-dataset table.
  const SignificanceTable sig = significance_table(table, baseline, opts.alpha, opts.test);
  out.skipped = sig.skipped;
  std::map<std::pair<std::string, std::string>, double> p_of;
  for (const auto& r : sig.rows) p_of[{r.variant, r.dataset}] = r.p_value;

  std::vector<std::string> head{"Dataset"};
  head.insert(head.end(), shown.begin(), shown.end());
  head.push_back("Best");
  std::vector<std::vector<std::string>> per{head};
  std::vector<std::vector<std::string>> per_csv{{"dataset", "variant", "samples", "mean_pct", "p_value_vs_baseline"}};
  for (const auto& d : table.datasets()) {
    std::vector<std::string> row{d};
    std::string best;
    double best_mean = -1.0;
    for (const auto& v : shown) {
      if (!table.has(v, d)) {
        row.push_back("-");
        continue;
      }
      const double m = per_dataset_mean(table, v, d);
      std::string cell = pct(m);
      std::string p_cell;
      if (auto it = p_of.find({v, d}); it != p_of.end()) {
        cell += it->second < 0.01 ? "**" : "*";
        p_cell = num("%.6g", it->second);
      }
      row.push_back(cell);
      per_csv.push_back({d, v, std::to_string(table.samples(v, d).size()), num("%.4f", m * 100), p_cell});
      if (m > best_mean) {
        best_mean = m;
        best = v;
      }
    }
    row.push_back(best.empty() ? "-" : best);
    per.push_back(std::move(row));
  }
  std::vector<std::string> bottom{"Balanced Mean"};
  std::string best;
  double best_mean = -1.0;
  for (const auto& v : shown) {
    bottom.push_back(pct(balanced.at(v).mean));
    if (balanced.at(v).mean > best_mean) {
      best_mean = balanced.at(v).mean;
      best = v;
    }
  }
  bottom.push_back(best.empty() ? "-" : best);
  per.push_back(std::move(bottom));
  out.per_dataset_text = align(per) + "* p<" + num("%g", opts.alpha) + ", ** p<0.01 vs " + baseline + "\n";
  out.per_dataset_csv = csv(per_csv);

  std::vector<std::vector<std::string>> st{{"Dataset", "Comparison", "Delta", "p", "d"}};
  std::vector<std::vector<std::string>> st_csv{{"dataset", "variant", "baseline", "delta_pp", "t", "df", "p_value", "cohens_d"}};
  for (const auto& r : sig.rows) {
    st.push_back({r.dataset, r.variant + " vs " + r.baseline, num("%+.1f%%", r.delta_pp), num("%.3f", r.p_value),
                  num("%.2f", r.cohens_d)});
    st_csv.push_back({r.dataset, r.variant, r.baseline, num("%.6f", r.delta_pp), num("%.6f", r.t), num("%.6f", r.df),
                      num("%.6g", r.p_value), num("%.6f", r.cohens_d)});
  }
  out.significance_text = align(st);
  if (sig.rows.empty()) out.significance_text += "(no comparison below p<" + num("%g", opts.alpha) + ")\n";
  if (!sig.skipped.empty())
    out.significance_text += std::to_string(sig.skipped.size()) + " comparison(s) skipped, reasons in skipped.csv\n";
  out.significance_csv = csv(st_csv);
  return out;
}

}  // namespace archgen::stats
