#include "gmclab/gmc.hpp"

#include <cmath>
#include <stdexcept>

namespace gmclab {

double GmcMeasure::cum_at(double x) const {
  const double L = period();
  double rel = x - x_lo;
  double wraps = 0.0;
  if (periodic) {
    double k = std::floor(rel / L);
    rel -= k * L;
    wraps = k * total();
  } else {
    if (rel < 0.0) rel = 0.0;
    if (rel > L) rel = L;
  }
  double p = rel / h;
  auto j = static_cast<std::size_t>(p);
  if (j >= mass.size()) return wraps + total();
  return wraps + cum[j] + (p - static_cast<double>(j)) * mass[j];
}

GmcMeasure build_measure(std::span<const double> field, double x_lo, double h, double gamma,
                         std::span<const double> variance, bool periodic) {
  if (field.size() != variance.size())
    throw std::invalid_argument("field/variance size mismatch");
  GmcMeasure m;
  m.x_lo = x_lo;
  m.h = h;
  m.periodic = periodic;
  m.mass.resize(field.size());
  m.cum.resize(field.size() + 1);
  m.cum[0] = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!std::isfinite(field[i]) || !std::isfinite(variance[i]))
      throw std::invalid_argument("field has non-finite entries");
    m.mass[i] = h * std::exp(gamma * field[i] - 0.5 * gamma * gamma * variance[i]);
    m.cum[i + 1] = m.cum[i] + m.mass[i];
  }
  return m;
}

GmcMeasure build_measure(std::span<const double> field, double x_lo, double h, double gamma,
                         double variance, bool periodic) {
  std::vector<double> v(field.size(), variance);
  return build_measure(field, x_lo, h, gamma, v, periodic);
}

namespace {

FieldSampler make_circle_sampler(const CircleFieldConfig& cfg) {
  int nx = static_cast<int>(std::lround(cfg.resolution * cfg.period));
  double h = cfg.period / nx;
  HyperbolicMesh mesh = make_cut_mesh(0.0, cfg.period, nx, h, cfg.delta, {},
                                      cfg.rows_per_octave, /*periodic=*/true);
  ProfileRequest req;
  req.region = triangle_region(h, cfg.delta);
  return FieldSampler(mesh, {req});
}

}  // namespace

CircleGmc::CircleGmc(const CircleFieldConfig& cfg)
    : cfg_(cfg), sampler_(make_circle_sampler(cfg)) {
  variance_ = sampler_.model_variance(0, 0, sampler_.strips(0));
}

GmcMeasure CircleGmc::draw(std::uint64_t seed) {
  sampler_.sample(seed);
  sampler_.accumulate(0, 0, sampler_.strips(0), field_);
  return build_measure(field_, 0.0, sampler_.mesh().h(), cfg_.gamma, variance_,
                       /*periodic=*/true);
}

MomentScanResult moment_mc(const MomentScanConfig& cfg) {
  if (cfg.q == 0.0) throw std::invalid_argument("q must be nonzero");
  if (cfg.gamma > 0.0 && cfg.q > 0.0 && cfg.q >= 2.0 / (cfg.gamma * cfg.gamma))
    throw std::domain_error("moment may be infinite");
  if (cfg.ts.empty()) throw std::invalid_argument("need at least one interval length");

  CircleFieldConfig fc;
  fc.resolution = cfg.resolution;
  fc.delta = cfg.delta;
  fc.gamma = cfg.gamma;
  fc.rows_per_octave = cfg.rows_per_octave;
  CircleGmc gmc(fc);

  const std::size_t nt = cfg.ts.size();
  std::vector<std::vector<double>> samples(nt, std::vector<double>(cfg.reps));
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(cfg.seed, "moment_mc", rep));
    for (std::size_t k = 0; k < nt; ++k)
      samples[k][rep] = std::pow(m.measure_of(0.0, cfg.ts[k]), cfg.q);
  }

  MomentScanResult res;
  res.t = cfg.ts;
  res.zeta_target = zeta(cfg.gamma, cfg.q);
  res.estimate.resize(nt);
  res.stderr_log.resize(nt);
  res.kurt.resize(nt);
  std::vector<double> sums(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    for (double v : samples[k]) sums[k] += v;
    res.estimate[k] = sums[k] / static_cast<double>(cfg.reps);
    res.stderr_log[k] = jackknife_stderr_log_mean(samples[k]);
    res.kurt[k] = kurtosis(samples[k]);
    if (res.kurt[k] > 100.0) res.reliable = false;
  }

  // CRN jackknife of the log-log slope: delete one replicate across all t.
  std::vector<double> lx(nt);
  for (std::size_t k = 0; k < nt; ++k) lx[k] = std::log(cfg.ts[k]);
  std::vector<double> ly(nt);
  for (std::size_t k = 0; k < nt; ++k) ly[k] = std::log(res.estimate[k]);
  res.slope = ols_slope(lx, ly).slope;
  if (cfg.reps > 2) {
    const double n1 = static_cast<double>(cfg.reps - 1);
    std::vector<double> loo(nt), slopes(cfg.reps);
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
      for (std::size_t k = 0; k < nt; ++k)
        loo[k] = std::log(std::max((sums[k] - samples[k][rep]) / n1, 1e-300));
      slopes[rep] = ols_slope(lx, loo).slope;
    }
    double sm = mean(slopes);
    double acc = 0.0;
    for (double s : slopes) acc += (s - sm) * (s - sm);
    res.slope_stderr = std::sqrt(acc * n1 / static_cast<double>(cfg.reps));
  }
  return res;
}

ScalingPairResult scaling_law_pair(const ScalingPairConfig& cfg) {
  const double len = cfg.a_hi - cfg.a_lo;
  if (!(len > 0.0)) throw std::invalid_argument("interval A is empty");
  if (len > cfg.delta) throw std::invalid_argument("interval exceeds delta");
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0))
    throw std::invalid_argument("lambda must lie in (0,1]");

  const int n = cfg.points;
  const double h = len / n;
  std::vector<double> grid_r(n), grid_l(n);
  for (int i = 0; i < n; ++i) {
    grid_r[i] = cfg.a_lo + (i + 0.5) * h;
    grid_l[i] = cfg.lambda * grid_r[i];
  }

  CovKernel kl = kernel_u(cfg.delta, cfg.lambda * h);
  CovKernel kr = kernel_u_lambda(cfg.delta, h, cfg.lambda);
  const double var_l = kernel_variance(kl);
  const double var_r = kernel_variance(kr);

  auto lhs_draws = sample_exact(kl, grid_l, cfg.reps, derive_seed(cfg.seed, "scalepair-l", 0));
  auto rhs_draws = sample_exact(kr, grid_r, cfg.reps, derive_seed(cfg.seed, "scalepair-r", 0));
  Rng zrng(derive_seed(cfg.seed, "scalepair-z", 0));
  LognormalScaler scaler{cfg.gamma, cfg.lambda};

  ScalingPairResult res;
  res.lhs.resize(cfg.reps);
  res.rhs.resize(cfg.reps);
  const double g2 = 0.5 * cfg.gamma * cfg.gamma;
  for (std::size_t d = 0; d < cfg.reps; ++d) {
    double ml = 0.0, mr = 0.0;
    for (int i = 0; i < n; ++i) {
      ml += cfg.lambda * h * std::exp(cfg.gamma * lhs_draws[d][i] - g2 * var_l);
      mr += h * std::exp(cfg.gamma * rhs_draws[d][i] - g2 * var_r);
    }
    res.lhs[d] = ml;
    res.rhs[d] = cfg.lambda * std::exp(scaler.zbar(zrng)) * mr;
  }
  res.ks = ks_two_sample(res.lhs, res.rhs);
  return res;
}

LaplaceResult laplace_mc(double gamma, double delta, double r, double t, std::size_t reps,
                         std::uint64_t seed, int resolution) {
  if (r < 0.0) throw std::invalid_argument("rate must be nonnegative");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in [0,1]");
  LaplaceResult res;
  res.r = r;
  res.t = t;
  if (r == 0.0 || t == 0.0) {
    res.estimate = 1.0;
    return res;
  }
  CircleFieldConfig fc;
  fc.resolution = resolution;
  fc.delta = delta;
  fc.gamma = gamma;
  CircleGmc gmc(fc);
  std::vector<double> vals(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(seed, "laplace_mc", rep));
    vals[rep] = std::exp(-r * m.measure_of(0.0, t));
  }
  res.estimate = mean(vals);
  res.stderr_est = stderr_mean(vals);
  return res;
}

LaplaceCorollaryResult laplace_corollary_check(double gamma, double rho, int ell, double a1,
                                               double a2, std::size_t reps,
                                               std::uint64_t seed, int resolution) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (ell < 1) throw std::invalid_argument("ell must be a positive integer");
  if (!(a2 > 1.0 && a1 > a2))
    throw std::invalid_argument("corollary requires 1/ell < a2 < a1 at every tested ell");
  const double beta = 0.5 * gamma * gamma;
  auto c1_at = [&](int l) {
    double s = std::sqrt(beta * (a2 - 1.0 / l));
    double d = (a1 - a2) / s - s;
    return d * d / 32.0;
  };
  auto point = [&](int l) {
    double r = std::pow(rho, -a1 * l);
    double t = std::pow(rho, a2 * l);
    return laplace_mc(gamma, rho, r, t, reps, derive_seed(seed, "laplace-cor", l),
                      resolution);
  };
  LaplaceResult base = point(1);
  double c = base.estimate / std::pow(rho, c1_at(1));
  LaplaceResult probe = point(ell);
  LaplaceCorollaryResult res;
  res.estimate = probe.estimate;
  res.stderr_est = probe.stderr_est;
  res.c1 = c1_at(ell);
  res.c_calibrated = c;
  res.bound = c * std::pow(rho, res.c1 * ell);
  res.r = probe.r;
  res.t = probe.t;
  res.pass = res.estimate <= res.bound + 3.0 * res.stderr_est;
  return res;
}

L2CheckResult l2_check(double gamma, double x, double delta, std::size_t reps,
                       std::uint64_t seed, int resolution) {
  if (!(gamma < 1.0)) throw std::domain_error("bound requires gamma < 1");
  if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in (0,1]");
  CircleFieldConfig fc;
  fc.resolution = resolution;
  fc.delta = delta;
  fc.gamma = gamma;
  fc.period = 2.0;  // keep [0,x] clear of its own wrap image
  CircleGmc gmc(fc);
  std::vector<double> vals(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    GmcMeasure m = gmc.draw(derive_seed(seed, "l2_check", rep));
    double d = m.measure_of(0.0, x) - x;
    vals[rep] = d * d;
  }
  const double g2 = gamma * gamma;
  L2CheckResult res;
  res.estimate = mean(vals);
  res.stderr_est = stderr_mean(vals);
  if (x > delta) {
    res.bound = 2.0 * x * delta * g2 / (1.0 - g2);
  } else {
    res.bound = 2.0 / ((1.0 - g2) * (2.0 - g2)) * std::pow(x, 2.0 - g2) *
                    std::pow(delta, g2) -
                x * x;
  }
  res.pass = res.estimate - 3.0 * res.stderr_est <= res.bound;
  return res;
}

}  // namespace gmclab
