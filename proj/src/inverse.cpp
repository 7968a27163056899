#include "gmclab/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmclab {

namespace {

// Inverse of the interpolated cumulative on one period, x in [0, total].
double q_base(const GmcMeasure& m, double x) {
  const auto& cum = m.cum;
  auto it = std::upper_bound(cum.begin(), cum.end(), x);
  std::size_t j = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
  if (j >= m.mass.size()) return m.x_lo + m.period();
  double frac = m.mass[j] > 0.0 ? (x - cum[j]) / m.mass[j] : 0.0;
  return m.x_lo + (static_cast<double>(j) + frac) * m.h;
}

}  // namespace

double q_of(const GmcMeasure& m, double x) {
  double total = m.total();
  if (!m.periodic) {
    if (x < 0.0) throw std::invalid_argument("mass argument must be nonnegative");
    if (x > total * (1.0 + 1e-12)) throw std::invalid_argument("mass exceeds total measure");
    return q_base(m, std::min(x, total));
  }
  // periodic: whole-period steps extend Q to every real mass value
  double k = std::floor(x / total);
  double rest = x - k * total;
  if (rest >= total) {
    rest -= total;
    k += 1.0;
  }
  return k * m.period() + q_base(m, rest);
}

double q_increment(const GmcMeasure& m, double y, double x) {
  if (y > x) throw std::invalid_argument("q_increment needs y <= x");
  return q_of(m, x) - q_of(m, y);
}

double q_bullet(const GmcMeasure& m, double T, double x) {
  return q_of(m, m.cum_at(T) + x) - T;
}

double dyadic_upper(double a, int n) {
  double scale = std::ldexp(1.0, n);  // 2^n
  return (std::floor(a * scale) + 1.0) / scale;
}

Homeomorphism::Homeomorphism(GmcMeasure tau) : tau_(std::move(tau)) {
  total_ = tau_.total();
  if (!(total_ > 0.0)) throw std::invalid_argument("homeomorphism needs positive total mass");
  const std::size_t n = tau_.cells();
  knot_u_.resize(n + 1);
  knot_t_.resize(n + 1);
  knot_int_.resize(n + 1);
  knot_int_[0] = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    knot_u_[j] = tau_.cum[j] / total_;
    knot_t_[j] = tau_.x_lo + static_cast<double>(j) * tau_.h;
  }
  // hinv is linear between knots; trapezoid is exact per piece.
  for (std::size_t j = 0; j < n; ++j) {
    double du = knot_u_[j + 1] - knot_u_[j];
    knot_int_[j + 1] = knot_int_[j] + 0.5 * (knot_t_[j] + knot_t_[j + 1]) * du;
  }
  c0_ = knot_int_[n] - 0.5;
}

double Homeomorphism::hinv(double x) const {
  double k = std::floor(x);
  double frac = x - k;
  return k + q_of(tau_, frac * total_);
}

double Homeomorphism::h(double y) const {
  double k = std::floor(y);
  double frac = y - k;
  return k + tau_.cum_at(frac) / total_;
}

double Homeomorphism::hinv_integral(double x) const {
  // reduce to [0,1): integral over a whole period is c0_+1/2 plus the shift
  double k = std::floor(x);
  double frac = x - k;
  // integral of hinv over [0,k] = k*(c0+1/2) + k(k-1)/2 (periodic lift adds j per period)
  double whole = k * (c0_ + 0.5) + 0.5 * k * (k - 1.0);
  // partial piece on [0, frac]
  auto it = std::upper_bound(knot_u_.begin(), knot_u_.end(), frac);
  std::size_t j = it == knot_u_.begin() ? 0 : static_cast<std::size_t>(it - knot_u_.begin()) - 1;
  j = std::min(j, knot_u_.size() - 2);
  double du = knot_u_[j + 1] - knot_u_[j];
  double part = knot_int_[j];
  if (du > 0.0) {
    double s = (frac - knot_u_[j]) / du;
    double t0 = knot_t_[j], t1 = knot_t_[j + 1];
    // integral of the linear interpolant over the partial sub-piece
    part += (t0 * s + 0.5 * (t1 - t0) * s * s) * du;
  }
  return whole + k * frac + part;
}

SmpTestResult smp_test(double gamma, double delta, double r, std::size_t reps,
                       std::uint64_t seed, int resolution) {
  SmpTestResult res;
  res.threshold = 3.0 / std::sqrt(static_cast<double>(reps));
  const double a = 0.5 * delta;
  CircleFieldConfig fc;
  fc.resolution = resolution;
  fc.delta = delta;
  fc.gamma = gamma;
  fc.period = 4.0;  // room for [0,a] and [r, r+a] plus stencil reach
  if (r + a + delta > fc.period) throw std::invalid_argument("separation exceeds domain");
  CircleGmc gmc(fc);
  std::vector<double> xs(reps), ys(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(seed, "smp_test", rep));
    xs[rep] = m.measure_of(0.0, a);
    ys[rep] = m.measure_of(r, r + a);
  }
  if (gamma == 0.0) {
    res.degenerate = true;
    res.pearson = 0.0;
    res.dcor = 0.0;
    res.perm_p = 1.0;
    res.pass = true;
    return res;
  }
  res.pearson = pearson(xs, ys);
  // distance correlation on a subsample (O(n^2))
  std::size_t nsub = std::min<std::size_t>(reps, 2000);
  std::vector<double> xsub(xs.begin(), xs.begin() + nsub);
  std::vector<double> ysub(ys.begin(), ys.begin() + nsub);
  res.dcor = distance_correlation(xsub, ysub);
  res.perm_p = pearson_perm_test(xs, ys, 199, derive_seed(seed, "smp-perm", 0)).p_value;
  res.pass = std::fabs(res.pearson) < res.threshold;
  return res;
}

MeanShiftResult mean_shift_mc(double gamma, double delta, double a, std::size_t reps,
                              std::uint64_t seed, int resolution) {
  if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
  CircleFieldConfig fc;
  fc.resolution = resolution;
  fc.delta = delta;
  fc.gamma = gamma;
  CircleGmc gmc(fc);
  std::vector<double> q(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(seed, "mean_shift", rep));
    q[rep] = q_of(m, a);
  }
  MeanShiftResult res;
  res.mean_q = mean(q);
  res.stderr_est = stderr_mean(q);
  res.lower99 = res.mean_q - a - 2.3263478740408408 * res.stderr_est;
  res.pass = res.lower99 > 0.0;
  return res;
}

McSummary ratio_moment_mc(const RatioMomentConfig& cfg) {
  if (!(cfg.i_hi > cfg.i_lo) || !(cfg.j_hi > cfg.j_lo))
    throw std::invalid_argument("intervals must be nonempty");
  CircleFieldConfig fc;
  fc.resolution = cfg.resolution;
  fc.delta = cfg.delta;
  fc.gamma = cfg.gamma;
  CircleGmc gmc(fc);
  std::vector<double> vals(cfg.reps);
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(cfg.seed, "ratio_moment", rep));
    double num = m.measure_of(cfg.j_lo, cfg.j_hi);
    double den = m.measure_of(cfg.i_lo, cfg.i_hi);
    vals[rep] = std::pow(num / den, cfg.p);
  }
  return summarize(vals);
}

MultipointResult multipoint_product_mc(const MultipointConfig& cfg) {
  const std::size_t k = cfg.a_lo.size();
  if (k == 0 || cfg.a_hi.size() != k || cfg.p.size() != k)
    throw std::invalid_argument("interval/exponent arrays must match");
  CircleFieldConfig fc;
  fc.resolution = cfg.resolution;
  fc.delta = cfg.delta;
  fc.gamma = cfg.gamma;
  CircleGmc gmc(fc);
  std::vector<double> joint(cfg.reps);
  std::vector<std::vector<double>> marg(k, std::vector<double>(cfg.reps));
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(cfg.seed, "multipoint", rep));
    double prod = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      double v = std::pow(m.measure_of(cfg.a_lo[i], cfg.a_hi[i]), -cfg.p[i]);
      marg[i][rep] = v;
      prod *= v;
    }
    joint[rep] = prod;
  }
  MultipointResult res;
  res.joint = mean(joint);
  res.stderr_joint = stderr_mean(joint);
  res.product_marginals = 1.0;
  for (std::size_t i = 0; i < k; ++i) res.product_marginals *= mean(marg[i]);
  res.ratio = res.joint / res.product_marginals;
  return res;
}

}  // namespace gmclab
