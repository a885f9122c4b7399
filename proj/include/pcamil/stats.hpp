#ifndef PCAMIL_STATS_HPP
#define PCAMIL_STATS_HPP

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "pcamil/error.hpp"

namespace pcamil {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

namespace detail {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Two-sided paired Student's t-test on a - b. Zero spread gives p = 1 for
/// zero mean difference, otherwise p = 0 with an infinite signed statistic.
inline TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (a.size() < 2) throw Error(ErrorCode::TooFewFolds, "paired t-test needs n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = detail::mean(d);
  const double sd = detail::sample_sd(d);
  const auto n = static_cast<double>(d.size());
  if (sd == 0.0) {
    if (m == 0.0) return {0.0, 1.0};
    return {std::copysign(std::numeric_limits<double>::infinity(), m), 0.0};
  }
  const double t = m / (sd / std::sqrt(n));
  const boost::math::students_t dist(n - 1.0);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::min(1.0, p)};
}

struct McNemarResult {
  std::size_t a_only = 0;  // a correct, b wrong
  std::size_t b_only = 0;  // a wrong, b correct
  bool exact = true;
  double statistic = 0.0;
  double p_value = 1.0;
};

inline constexpr std::size_t kMcNemarExactLimit = 25;

/// Exact binomial test up to 25 discordant pairs, continuity-corrected
/// chi-square above.
inline McNemarResult mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
  if (correct_a.size() != correct_b.size()) throw Error(ErrorCode::LengthMismatch, "McNemar inputs differ in length");
  McNemarResult r;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++r.a_only;
    if (!correct_a[i] && correct_b[i]) ++r.b_only;
  }
  const std::size_t n = r.a_only + r.b_only;
  if (n == 0) return r;
  if (n <= kMcNemarExactLimit) {
    r.exact = true;
    const std::size_t k = std::min(r.a_only, r.b_only);
    r.statistic = static_cast<double>(k);
    // P(X <= k), X ~ Binomial(n, 1/2), via running binomial coefficients.
    double coef = 1.0, tail = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
      tail += coef;
      coef = coef * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
  } else {
    r.exact = false;
    const double diff = std::abs(static_cast<double>(r.a_only) - static_cast<double>(r.b_only)) - 1.0;
    r.statistic = diff * diff / static_cast<double>(n);
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), r.statistic));
  }
  return r;
}

struct FoldSummary {
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean, sample sd and a t-based 95% interval over folds. Bounded metrics
/// have the interval clipped to [0,1].
inline FoldSummary aggregate_folds(std::span<const double> values, bool bounded = true) {
  if (values.size() < 2) throw Error(ErrorCode::TooFewFolds, "aggregation needs at least 2 folds");
  FoldSummary s;
  const auto n = static_cast<double>(values.size());
  s.mean = detail::mean(values);
  s.sd = detail::sample_sd(values);
  const double q = boost::math::quantile(boost::math::students_t(n - 1.0), 0.975);
  const double half = q * s.sd / std::sqrt(n);
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  if (bounded) {
    s.ci_low = std::clamp(s.ci_low, 0.0, 1.0);
    s.ci_high = std::clamp(s.ci_high, 0.0, 1.0);
  }
  return s;
}

}  // namespace pcamil

#endif  // PCAMIL_STATS_HPP
