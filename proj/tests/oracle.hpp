#pragma once

// Independent reference statistics: long-double moments and the Boost.Math
// Student t distribution. Shared by the unit and acceptance suites.

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <vector>

namespace oracle {

struct TTest {
  double t, df, p;
};

inline long double mean(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<long double>(xs.size());
}

inline long double var(const std::vector<double>& xs) {
  const long double m = mean(xs);
  long double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<long double>(xs.size() - 1);
}

inline double two_sided_p(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

inline TTest welch(const std::vector<double>& a, const std::vector<double>& b) {
  const long double na = a.size(), nb = b.size();
  const long double va = var(a) / na, vb = var(b) / nb;
  const long double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  const long double df = (va + vb) * (va + vb) / (va * va / (na - 1) + vb * vb / (nb - 1));
  return {static_cast<double>(t), static_cast<double>(df), two_sided_p(static_cast<double>(t), static_cast<double>(df))};
}

inline TTest student(const std::vector<double>& a, const std::vector<double>& b) {
  const long double na = a.size(), nb = b.size();
  const long double sp2 = ((na - 1) * var(a) + (nb - 1) * var(b)) / (na + nb - 2);
  const long double t = (mean(a) - mean(b)) / std::sqrt(sp2 * (1 / na + 1 / nb));
  const double df = static_cast<double>(na + nb - 2);
  return {static_cast<double>(t), df, two_sided_p(static_cast<double>(t), df)};
}

inline double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  const long double na = a.size(), nb = b.size();
  const long double sp2 = ((na - 1) * var(a) + (nb - 1) * var(b)) / (na + nb - 2);
  return static_cast<double>((mean(a) - mean(b)) / std::sqrt(sp2));
}

inline double rel_err(double got, double want) {
  if (got == want) return 0.0;
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

}  // namespace oracle
