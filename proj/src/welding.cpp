#include "gmclab/welding.hpp"

#include <cmath>
#include <stdexcept>

namespace gmclab {

std::vector<DyadicInterval> j5_intervals(const DyadicInterval& I) {
  std::vector<DyadicInterval> out;
  out.reserve(96);
  const int n5 = I.n + 5;
  const std::uint64_t per = 1ULL << n5;
  // left neighbor, I, right neighbor; indices wrap mod 1
  for (int block = -1; block <= 1; ++block) {
    std::int64_t base = (static_cast<std::int64_t>(I.m) + block) * 32;
    for (int k = 0; k < 32; ++k) {
      std::int64_t idx = base + k;
      idx %= static_cast<std::int64_t>(per);
      if (idx < 0) idx += per;
      out.push_back({n5, static_cast<std::uint64_t>(idx)});
    }
  }
  return out;
}

double pair_ratio_sum(std::span<const double> masses) {
  double su = 0.0, si = 0.0;
  for (double u : masses) {
    if (!(u > 0.0)) throw std::invalid_argument("pair_ratio_sum needs positive masses");
    su += u;
    si += 1.0 / u;
  }
  return su * si + static_cast<double>(masses.size());
}

std::complex<double> ab_extension(const Homeomorphism& hom, std::complex<double> z) {
  const double x = z.real();
  const double y = z.imag();
  if (y < 0.0) throw std::domain_error("extension defined on the closed upper half-plane");
  if (y == 0.0) return {hom.hinv(x), 0.0};
  if (y >= 2.0) return {x, y};
  if (y >= 1.0) return {x + (2.0 - y) * hom.c0(), y};
  const double ip = hom.hinv_integral(x + y);
  const double im = hom.hinv_integral(x - y);
  const double ic = hom.hinv_integral(x);
  return {(ip - im) / (2.0 * y), (ip + im - 2.0 * ic) / (2.0 * y)};
}

Dilatation dilatation_numeric(const Homeomorphism& hom, std::complex<double> z, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  const std::complex<double> i(0.0, 1.0);
  std::complex<double> fx =
      (ab_extension(hom, z + step) - ab_extension(hom, z - step)) / (2.0 * step);
  std::complex<double> fy =
      (ab_extension(hom, z + i * step) - ab_extension(hom, z - i * step)) / (2.0 * step);
  Dilatation d;
  std::complex<double> fz = 0.5 * (fx - i * fy);
  std::complex<double> fzbar = 0.5 * (fx + i * fy);
  d.mu = fzbar / fz;
  double a = std::abs(d.mu);
  if (a >= 1.0) throw std::domain_error("degenerate at z");
  d.k = (1.0 + a) / (1.0 - a);
  return d;
}

double dilatation_bound(const GmcMeasure& tau, const DyadicInterval& I) {
  auto js = j5_intervals(I);
  const double total = tau.total();
  std::vector<double> incs(js.size());
  for (std::size_t k = 0; k < js.size(); ++k)
    incs[k] = q_increment(tau, js[k].lo() * total, js[k].hi() * total);
  return pair_ratio_sum(incs);
}

IntegrabilityScan integrability_scan(const GmcMeasure& tau, int n_max) {
  IntegrabilityScan scan;
  scan.level_totals.assign(n_max + 1, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    const std::uint64_t count = 1ULL << n;
    double level = 0.0;
    for (std::uint64_t m = 0; m < count; ++m) {
      WhitneyCube cube{{n, m}};
      level += dilatation_bound(tau, cube.base) * cube.area();
    }
    scan.level_totals[n] = level;
    scan.total += level;
  }
  return scan;
}

}  // namespace gmclab
