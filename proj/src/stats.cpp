#include "gmclab/stats.hpp"

#include <cstddef>
#include <numeric>
#include <vector>

namespace gmclab {
namespace {

// Pooled pairwise Euclidean distances, stored as float to keep the
// permutation loop cache-friendly at a few thousand points per side.
std::vector<float> pooled_distances(const std::vector<std::vector<double>>& x,
                                    const std::vector<std::vector<double>>& y,
                                    std::size_t& n_total) {
  const std::size_t n = x.size(), m = y.size();
  n_total = n + m;
  auto row = [&](std::size_t i) -> const std::vector<double>& {
    return i < n ? x[i] : y[i - n];
  };
  std::vector<float> d(n_total * n_total, 0.0f);
  for (std::size_t i = 0; i < n_total; ++i) {
    const auto& u = row(i);
    for (std::size_t j = i + 1; j < n_total; ++j) {
      const auto& v = row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double t = u[k] - v[k];
        s += t * t;
      }
      const float dij = static_cast<float>(std::sqrt(s));
      d[i * n_total + j] = dij;
      d[j * n_total + i] = dij;
    }
  }
  return d;
}

// nm/(n+m)-scaled energy statistic for the labeling perm[0..n) = sample one.
double energy_statistic(const std::vector<float>& d, std::size_t n_total,
                        const std::vector<std::size_t>& perm, std::size_t n) {
  const std::size_t m = n_total - n;
  double exx = 0.0, eyy = 0.0, exy = 0.0;
  for (std::size_t a = 0; a < n_total; ++a) {
    const std::size_t i = perm[a];
    const bool a_first = a < n;
    const float* row = d.data() + i * n_total;
    for (std::size_t b = a + 1; b < n_total; ++b) {
      const double dij = row[perm[b]];
      if (a_first && b < n)
        exx += dij;
      else if (!a_first)
        eyy += dij;
      else
        exy += dij;
    }
  }
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  const double e =
      2.0 * exy / (nn * mm) - 2.0 * exx / (nn * nn) - 2.0 * eyy / (mm * mm);
  return nn * mm / (nn + mm) * e;
}

}  // namespace

PermTestResult energy_perm_test(const std::vector<std::vector<double>>& x,
                                const std::vector<std::vector<double>>& y,
                                int permutations, std::uint64_t seed) {
  if (x.size() < 2 || y.size() < 2)
    throw std::invalid_argument("energy_perm_test: need at least 2 points per side");
  if (permutations < 1)
    throw std::invalid_argument("energy_perm_test: need at least one permutation");
  const std::size_t dim = x[0].size();
  for (const auto& r : x)
    if (r.size() != dim) throw std::invalid_argument("energy_perm_test: ragged sample");
  for (const auto& r : y)
    if (r.size() != dim) throw std::invalid_argument("energy_perm_test: ragged sample");

  std::size_t n_total = 0;
  const auto d = pooled_distances(x, y, n_total);
  const std::size_t n = x.size();

  std::vector<std::size_t> perm(n_total);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const double observed = energy_statistic(d, n_total, perm, n);

  Rng rng(seed);
  int at_least = 0;
  for (int b = 0; b < permutations; ++b) {
    for (std::size_t i = n_total - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(i + 1)]);
    if (energy_statistic(d, n_total, perm, n) >= observed) ++at_least;
  }
  PermTestResult res;
  res.statistic = observed;
  res.permutations = permutations;
  res.p_value = (1.0 + at_least) / (1.0 + permutations);
  return res;
}

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 4)
    throw std::invalid_argument("distance_correlation: need matched samples, n >= 4");

  auto centered = [n](std::span<const double> v) {
    std::vector<double> a(n * n);
    std::vector<double> row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d = std::fabs(v[i] - v[j]);
        a[i * n + j] = d;
        row_mean[i] += d;
      }
      grand += row_mean[i];
      row_mean[i] /= static_cast<double>(n);
    }
    grand /= static_cast<double>(n) * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        a[i * n + j] += grand - row_mean[i] - row_mean[j];
    return a;
  };

  const auto a = centered(x);
  const auto b = centered(y);
  double vxy = 0.0, vxx = 0.0, vyy = 0.0;
  for (std::size_t k = 0; k < n * n; ++k) {
    vxy += a[k] * b[k];
    vxx += a[k] * a[k];
    vyy += b[k] * b[k];
  }
  if (vxx <= 0.0 || vyy <= 0.0) return 0.0;
  return std::sqrt(vxy / std::sqrt(vxx * vyy));
}

PermTestResult pearson_perm_test(std::span<const double> x, std::span<const double> y,
                                 int permutations, std::uint64_t seed) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3)
    throw std::invalid_argument("pearson_perm_test: need matched samples, n >= 3");
  if (permutations < 1)
    throw std::invalid_argument("pearson_perm_test: need at least one permutation");

  const double observed = std::fabs(pearson(x, y));
  std::vector<double> shuffled(y.begin(), y.end());
  Rng rng(seed);
  int at_least = 0;
  for (int b = 0; b < permutations; ++b) {
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    if (std::fabs(pearson(x, shuffled)) >= observed) ++at_least;
  }
  PermTestResult res;
  res.statistic = observed;
  res.permutations = permutations;
  res.p_value = (1.0 + at_least) / (1.0 + permutations);
  return res;
}

}  // namespace gmclab
