#pragma once
// Small statistics toolkit shared by the Monte Carlo drivers and tests:
// summary moments, jackknife errors, two-sample tests (KS, energy distance),
// correlation measures, least-squares slopes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "gmclab/rng.hpp"

namespace gmclab {

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(n - 1);
}

inline double stdev(std::span<const double> x) { return std::sqrt(variance(x)); }

// Standard error of the sample mean.
inline double stderr_mean(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return stdev(x) / std::sqrt(static_cast<double>(x.size()));
}

// Excess-free (Pearson) kurtosis; ~3 for a normal sample.
inline double kurtosis(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return 0.0;
  double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (m2 <= 0.0) return 0.0;
  return m4 / (m2 * m2);
}

// Jackknife standard error of f applied to the sample mean of a nonlinear
// statistic; here specialised to log of a mean (the common case for moment
// slopes), and generic delete-one for plain means.
inline double jackknife_stderr_log_mean(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double total = std::accumulate(x.begin(), x.end(), 0.0);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = (total - x[i]) / static_cast<double>(n - 1);
    loo[i] = std::log(std::max(m, 1e-300));
  }
  double lm = mean(loo);
  double s = 0.0;
  for (double v : loo) s += (v - lm) * (v - lm);
  return std::sqrt(s * static_cast<double>(n - 1) / static_cast<double>(n));
}

struct McSummary {
  double estimate = 0.0;
  double stderr_est = 0.0;
  std::size_t reps = 0;
  bool reliable = true;  // cleared when tail diagnostics object (e.g. kurtosis)
  double kurtosis = 0.0;
};

inline McSummary summarize(std::span<const double> x, double kurtosis_limit = 100.0) {
  McSummary s;
  s.estimate = mean(x);
  s.stderr_est = stderr_mean(x);
  s.reps = x.size();
  s.kurtosis = kurtosis(x);
  s.reliable = s.kurtosis <= kurtosis_limit;
  return s;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse standard normal CDF (Acklam's rational approximation, |eps|<1.2e-8).
inline double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("normal_quantile: p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -normal_quantile(1.0 - p);
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0, n2 = 0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 50 || b.size() < 50)
    throw std::invalid_argument("ks_two_sample: need at least 50 samples per side");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n1 = a.size(), n2 = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n1 && j < n2) {
    double x = std::min(a[i], b[j]);
    while (i < n1 && a[i] <= x) ++i;
    while (j < n2 && b[j] <= x) ++j;
    double f1 = static_cast<double>(i) / static_cast<double>(n1);
    double f2 = static_cast<double>(j) / static_cast<double>(n2);
    d = std::max(d, std::fabs(f1 - f2));
  }
  double ne = static_cast<double>(n1) * static_cast<double>(n2) /
              static_cast<double>(n1 + n2);
  double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  p = std::clamp(p, 0.0, 1.0);
  return {d, p, n1, n2};
}

// Squared energy distance between two multivariate samples (rows of dim d).
// Scaled by nm/(n+m) it is the usual test statistic.
inline double energy_distance_sq(const std::vector<std::vector<double>>& x,
                                 const std::vector<std::vector<double>>& y) {
  auto dist = [](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
    return std::sqrt(s);
  };
  const std::size_t n = x.size(), m = y.size();
  double exy = 0.0, exx = 0.0, eyy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) exy += dist(x[i], y[j]);
  exy /= static_cast<double>(n) * static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) exx += dist(x[i], x[j]);
  exx *= 2.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) eyy += dist(y[i], y[j]);
  eyy *= 2.0 / (static_cast<double>(m) * static_cast<double>(m));
  return 2.0 * exy - exx - eyy;
}

struct PermTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

// Permutation test for equality of two multivariate distributions using the
// energy statistic. p = (1 + #{perm >= obs}) / (1 + B).
PermTestResult energy_perm_test(const std::vector<std::vector<double>>& x,
                                const std::vector<std::vector<double>>& y,
                                int permutations, std::uint64_t seed);

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("pearson: size mismatch");
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Distance correlation (Szekely-Rizzo), O(n^2); callers subsample when large.
double distance_correlation(std::span<const double> x, std::span<const double> y);

// Permutation p-value for |pearson| under independence.
PermTestResult pearson_perm_test(std::span<const double> x, std::span<const double> y,
                                 int permutations, std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Ordinary least squares y ~ intercept + slope x with the usual slope s.e.
inline SlopeFit ols_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw std::invalid_argument("ols_slope: need n >= 3");
  double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return f;
}

}  // namespace gmclab
