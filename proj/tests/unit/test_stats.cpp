#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../oracle.hpp"
#include "archgen/error.hpp"
#include "archgen/report.hpp"
#include "archgen/stats.hpp"

using namespace archgen;
using namespace archgen::stats;

namespace {

AccuracyTable table_of(const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  AccuracyTable t;
  for (const auto& [v, d, a] : rows) t.add(v, d, a);
  return t;
}

}  // namespace

TEST(AccuracyTableTest, RejectsOutOfRangeSamples) {
  AccuracyTable t;
  EXPECT_THROW(t.add("alt-nn1", "mnist", 1.01), ArgumentError);
  EXPECT_THROW(t.add("alt-nn1", "mnist", -0.01), ArgumentError);
  EXPECT_THROW(t.add("alt-nn1", "mnist", std::nan("")), ArgumentError);
  EXPECT_TRUE(t.empty());
}

TEST(AccuracyTableTest, CsvParsingAndErrors) {
  const auto t = AccuracyTable::parse_csv("dataset,accuracy,variant\nmnist,0.9,alt-nn1\n\ncifar-10, 0.4 ,alt-nn2\n");
  EXPECT_EQ(t.sample_count("alt-nn1"), 1u);
  EXPECT_DOUBLE_EQ(t.samples("alt-nn2", "cifar-10")[0], 0.4);
  try {
    AccuracyTable::parse_csv("variant,dataset,accuracy\nalt-nn1,mnist,0.5\nalt-nn1,mnist,abc\n", "f.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(AccuracyTable::parse_csv("a,b,c\n"), ParseError);
  EXPECT_THROW(AccuracyTable::parse_csv("variant,dataset,accuracy\nalt-nn1,mnist\n"), ParseError);
  EXPECT_THROW(AccuracyTable::parse_csv("variant,dataset,accuracy\nalt-nn1,mnist,1.5\n"), ParseError);
}

TEST(PerDatasetMean, Examples) {
  const auto t = table_of({{"v", "a", 0.5}, {"v", "a", 0.7}, {"v", "b", 0.42}, {"v", "c", 0.3}, {"v", "c", 0.3}});
  EXPECT_NEAR(per_dataset_mean(t, "v", "a"), 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(per_dataset_mean(t, "v", "b"), 0.42);
  EXPECT_DOUBLE_EQ(per_dataset_mean(t, "v", "c"), 0.3);
  EXPECT_THROW(per_dataset_mean(t, "v", "zzz"), MissingDataError);
}

TEST(BalancedMean, PublishedRows) {
  const std::vector<double> nn3 = {97.1, 74.4, 38.3, 26.1, 42.5, 40.0};
  const std::vector<double> nn1 = {96.5, 75.8, 38.7, 14.5, 44.2, 39.2};
  AccuracyTable t;
  const char* ds[] = {"mnist", "celeba-gender", "cifar-10", "cifar-100", "imagenette", "svhn"};
  for (int i = 0; i < 6; ++i) {
    t.add("alt-nn3", ds[i], nn3[static_cast<std::size_t>(i)] / 100);
    t.add("alt-nn1", ds[i], nn1[static_cast<std::size_t>(i)] / 100);
  }
  EXPECT_NEAR(balanced_mean(t, "alt-nn3").mean * 100, 53.1, 0.05);
  EXPECT_NEAR(balanced_mean(t, "alt-nn1").mean * 100, 51.5, 0.05);
  // The printed dispersion matches the sample (k-1) standard deviation.
  EXPECT_NEAR(balanced_mean(t, "alt-nn3").std_sample * 100, 26.9, 0.05);
  EXPECT_NEAR(balanced_mean(t, "alt-nn1").std_sample * 100, 29.5, 0.05);
  EXPECT_EQ(balanced_mean(t, "alt-nn3").datasets, 6u);
}

TEST(BalancedMean, EqualMeansGiveZeroStd) {
  const auto t = table_of({{"v", "a", 0.4}, {"v", "b", 0.4}, {"v", "b", 0.4}, {"v", "c", 0.4}});
  const auto bm = balanced_mean(t, "v");
  EXPECT_NEAR(bm.mean, 0.4, 1e-15);
  EXPECT_NEAR(bm.std_population, 0.0, 1e-15);
  EXPECT_NEAR(bm.std_sample, 0.0, 1e-15);
  EXPECT_THROW(balanced_mean(t, "missing"), MissingDataError);
}

TEST(BalancedMean, SampleSizeInvarianceAndWeightLaw) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  AccuracyTable base, replicated;
  std::vector<double> means;
  for (int d = 0; d < 5; ++d) {
    const std::string ds = "d" + std::to_string(d);
    const int n = 1 + d * 3;
    for (int i = 0; i < n; ++i) {
      const double x = u(rng);
      base.add("v", ds, x);
      for (int k = 0; k < 4; ++k) replicated.add("v", ds, x);
    }
    means.push_back(per_dataset_mean(base, "v", ds));
  }
  EXPECT_NEAR(balanced_mean(base, "v").mean, balanced_mean(replicated, "v").mean, 1e-12);
  EXPECT_NEAR(balanced_mean(base, "v").mean, mean(means), 1e-12);
}

TEST(NaiveMean, BiasFixture) {
  AccuracyTable t;
  for (int i = 0; i < 9; ++i) t.add("v", "A", 0.96);
  t.add("v", "B", 0.14);
  EXPECT_NEAR(naive_mean(t, "v") * 100, 87.8, 1e-9);
  EXPECT_NEAR(balanced_mean(t, "v").mean * 100, 55.0, 1e-9);
  EXPECT_THROW(naive_mean(t, "w"), MissingDataError);
}

TEST(NaiveMean, EqualsBalancedWhenCellsAreUniform) {
  const auto t = table_of({{"v", "a", 0.3}, {"v", "a", 0.3}, {"v", "b", 0.3}, {"v", "b", 0.3}});
  EXPECT_NEAR(naive_mean(t, "v"), balanced_mean(t, "v").mean, 1e-15);
  const auto single = table_of({{"v", "a", 0.1}, {"v", "a", 0.9}, {"v", "a", 0.5}});
  EXPECT_NEAR(naive_mean(single, "v"), balanced_mean(single, "v").mean, 1e-15);
}

// Frozen values from an independent statistics package.
TEST(TTest, FrozenReferenceValues) {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  const auto w = t_test(a, b);
  EXPECT_NEAR(w.t, -3.6742346141747673, 1e-12);
  EXPECT_NEAR(w.df, 4.0, 1e-12);
  EXPECT_NEAR(w.p_value, 0.021311641128756727, 1e-12);
  const auto s = t_test(a, b, TTest::Student);
  EXPECT_NEAR(s.p_value, 0.021311641128756727, 1e-12);

  const std::vector<double> c = {0.61, 0.55, 0.72, 0.58, 0.66}, d = {0.52, 0.49, 0.60, 0.47, 0.55, 0.51, 0.58};
  const auto u = t_test(c, d);
  EXPECT_NEAR(u.t, 2.642646267065289, 1e-10);
  EXPECT_NEAR(u.df, 6.770685423614895, 1e-10);
  EXPECT_NEAR(u.p_value, 0.03431855173581254, 1e-10);
  EXPECT_NEAR(cohens_d(c, d), 1.6466229379319481, 1e-10);
}

TEST(TTest, IdenticalAndSwapped) {
  const std::vector<double> a = {0.2, 0.4, 0.5, 0.9}, b = {0.1, 0.3, 0.35};
  const auto same = t_test(a, a);
  EXPECT_DOUBLE_EQ(same.t, 0.0);
  EXPECT_DOUBLE_EQ(same.p_value, 1.0);
  const auto ab = t_test(a, b), ba = t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p_value, ba.p_value);
}

TEST(TTest, DegenerateInputs) {
  const std::vector<double> one = {0.5}, two = {0.4, 0.6}, flat = {0.5, 0.5, 0.5}, flat2 = {0.7, 0.7};
  EXPECT_THROW(t_test(one, two), DegenerateInputError);
  EXPECT_THROW(t_test(flat, flat2), DegenerateInputError);
  EXPECT_NO_THROW(t_test(flat, two));
}

TEST(TDistribution, TwoSidedTailMatchesFrozenValues) {
  EXPECT_NEAR(student_t_two_sided(2.5, 7), 0.040992218585752874, 1e-13);
  EXPECT_NEAR(student_t_two_sided(0.3, 1.5), 0.8004721968035848, 1e-12);
  EXPECT_NEAR(student_t_two_sided(10, 30), 4.5752514082296097e-11, 1e-20);
  EXPECT_DOUBLE_EQ(student_t_two_sided(0, 5), 1.0);
  EXPECT_NEAR(incomplete_beta(0.5, 2, 2), 0.5, 1e-15);
  EXPECT_NEAR(incomplete_beta(0.3, 1, 1), 0.3, 1e-15);
}

TEST(TTest, AgreesWithOracleOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const std::size_t na = 2 + rng() % 60, nb = 2 + rng() % 60;
    std::normal_distribution<double> da(0.5, 0.01 + 0.2 * (rng() % 100) / 100.0);
    std::normal_distribution<double> db(0.5 + 0.1 * ((rng() % 21) / 10.0 - 1), 0.01 + 0.2 * (rng() % 100) / 100.0);
    std::vector<double> a(na), b(nb);
    for (auto& x : a) x = da(rng);
    for (auto& x : b) x = db(rng);
    const auto w = t_test(a, b);
    const auto o = oracle::welch(a, b);
    ASSERT_LT(oracle::rel_err(w.t, o.t), 1e-9);
    ASSERT_LT(oracle::rel_err(w.df, o.df), 1e-9);
    ASSERT_LT(oracle::rel_err(w.p_value, o.p), 1e-9) << w.p_value << " vs " << o.p;
    const auto s = t_test(a, b, TTest::Student);
    const auto os = oracle::student(a, b);
    ASSERT_LT(oracle::rel_err(s.p_value, os.p), 1e-9);
    ASSERT_LT(oracle::rel_err(cohens_d(a, b), oracle::cohens_d(a, b)), 1e-9);
  }
}

TEST(CohensD, Examples) {
  const std::vector<double> a = {2, 4}, b = {1, 3};
  EXPECT_NEAR(cohens_d(a, b), 0.70710678118654752, 1e-12);
  EXPECT_DOUBLE_EQ(cohens_d(a, b), -cohens_d(b, a));
  EXPECT_DOUBLE_EQ(cohens_d(a, a), 0.0);
  const std::vector<double> flat = {0.5, 0.5};
  EXPECT_THROW(cohens_d(flat, flat), DegenerateInputError);
}

TEST(SignificanceTableTest, ShiftedVariantIsSignificant) {
  const std::vector<double> base = {0.40, 0.42, 0.38, 0.41, 0.39, 0.43, 0.40, 0.37};
  const std::vector<double> shifted = {0.50, 0.53, 0.49, 0.51, 0.52, 0.48, 0.50, 0.52};
  AccuracyTable t;
  for (double x : base) t.add("alt-nn1", "cifar-10", x);
  for (double x : shifted) t.add("alt-nn3", "cifar-10", x);
  for (double x : base) t.add("alt-nn2", "cifar-10", x + 0.001);
  const auto sig = significance_table(t, "alt-nn1");
  ASSERT_EQ(sig.rows.size(), 1u);
  const auto& r = sig.rows[0];
  EXPECT_EQ(r.variant, "alt-nn3");
  EXPECT_GT(r.delta_pp, 0);
  EXPECT_NEAR(r.t, 11.491284016814287, 1e-9);
  EXPECT_NEAR(r.p_value, 2.1904892831197096e-08, 1e-15);
  EXPECT_NEAR(r.cohens_d, 5.745642008407144, 1e-9);
  EXPECT_TRUE(r.significant);
}

TEST(SignificanceTableTest, SkipsDegenerateCellsAndSortsByP) {
  AccuracyTable t;
  for (double x : {0.40, 0.41, 0.39, 0.42}) t.add("base", "a", x);
  for (double x : {0.60, 0.61, 0.59, 0.62}) t.add("v1", "a", x);
  for (double x : {0.45, 0.47, 0.43, 0.46}) t.add("v2", "a", x);
  t.add("v3", "a", 0.5);             // one sample: skipped
  t.add("v1", "only-v1", 0.5);        // baseline absent: skipped
  const auto sig = significance_table(t, "base");
  ASSERT_EQ(sig.rows.size(), 2u);
  EXPECT_LE(sig.rows[0].p_value, sig.rows[1].p_value);
  EXPECT_EQ(sig.skipped.size(), 2u);
  EXPECT_THROW(significance_table(t, "nobody"), MissingDataError);
}

TEST(SignificanceTableTest, BaselineAgainstItselfIsNeverSignificant) {
  AccuracyTable t;
  for (double x : {0.40, 0.41, 0.39, 0.42}) {
    t.add("base", "a", x);
    t.add("copy", "a", x);
  }
  EXPECT_TRUE(significance_table(t, "base").rows.empty());
}

TEST(NullSimulationTest, RejectionRateNearAlphaAndParallelMatchesSerial) {
  NullSimulation sim;
  sim.repetitions = 400;
  sim.seed = 77;
  const double rate = null_rejection_rate(sim);
  EXPECT_EQ(rate, null_rejection_rate_serial(sim));
  const double sd = std::sqrt(0.05 * 0.95 / 400);
  EXPECT_NEAR(rate, 0.05, 3 * sd);
}

TEST(VariantExclusion, Boundaries) {
  AccuracyTable t;
  for (int i = 0; i < 7; ++i) t.add("alt-nn6", "mnist", 0.5);
  for (int i = 0; i < 8; ++i) t.add("alt-nn1", "mnist", 0.5);
  EXPECT_EQ(variant_exclusion(t, 8), std::vector<std::string>{"alt-nn6"});
  EXPECT_TRUE(variant_exclusion(t, 7).empty());
  EXPECT_TRUE(variant_exclusion(AccuracyTable{}, 30).empty());
  EXPECT_THROW(variant_exclusion(t, 1), ArgumentError);
}

TEST(Report, TablesMirrorResults) {
  AccuracyTable t;
  for (double x : {0.40, 0.42, 0.38, 0.41, 0.39, 0.43, 0.40, 0.37}) {
    t.add("alt-nn1", "cifar-10", x);
    t.add("alt-nn3", "cifar-10", x + 0.11);
    t.add("alt-nn1", "mnist", x + 0.5);
    t.add("alt-nn3", "mnist", x + 0.5);
  }
  t.add("alt-nn6", "mnist", 0.9);
  const auto r = build_report(t, "alt-nn1", {.min_samples = 8});
  EXPECT_EQ(r.excluded, std::vector<std::string>{"alt-nn6"});
  EXPECT_NE(r.overall_csv.find("variant,n,models,datasets,balanced_mean_pct"), std::string::npos);
  EXPECT_EQ(r.overall_csv.find("alt-nn6"), std::string::npos);
  EXPECT_NE(r.per_dataset_text.find("**"), std::string::npos);
  EXPECT_NE(r.significance_text.find("alt-nn3 vs alt-nn1"), std::string::npos);
  EXPECT_NE(r.significance_csv.find("cifar-10,alt-nn3,alt-nn1,11."), std::string::npos);
  EXPECT_THROW(build_report(AccuracyTable{}, "alt-nn1"), MissingDataError);
  EXPECT_THROW(build_report(t, "alt-nn5"), MissingDataError);
}
