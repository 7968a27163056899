#include "gmclab/lehto.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "gmclab/inverse.hpp"
#include "gmclab/noise.hpp"
#include "gmclab/regions.hpp"
#include "gmclab/rng.hpp"

namespace gmclab {

namespace {

// ---------------------------------------------------------------------------
// Whitney cubes of the upper strip. Level m >= 1 covers the band
// [2^{-m-1}, 2^{-m}] with base intervals of width 2^{-m}; level 0 is the top
// band [1/2, 2] with unit base intervals. Indices are signed: the strip is a
// two-sided neighborhood of the origin.

struct StripCube {
  int level = 0;
  std::int64_t ix = 0;
  double h = 1.0;
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};

StripCube cube_at(int level, std::int64_t ix) {
  StripCube c;
  c.level = level;
  c.ix = ix;
  c.h = std::ldexp(1.0, -level);
  c.x0 = static_cast<double>(ix) * c.h;
  c.x1 = c.x0 + c.h;
  if (level == 0) {
    c.y0 = 0.5;
    c.y1 = 2.0;
  } else {
    c.y0 = 0.5 * c.h;
    c.y1 = c.h;
  }
  return c;
}

double min_dist2(const StripCube& c) {
  double dx = c.x0 > 0.0 ? c.x0 : (c.x1 < 0.0 ? -c.x1 : 0.0);
  return dx * dx + c.y0 * c.y0;
}

double max_dist2(const StripCube& c) {
  double dx = std::max(std::abs(c.x0), std::abs(c.x1));
  return dx * dx + c.y1 * c.y1;
}

bool meets_circle(const StripCube& c, double r) {
  return min_dist2(c) <= r * r && max_dist2(c) >= r * r;
}

bool meets_ring(const StripCube& c, double a, double b) {
  return min_dist2(c) <= b * b && max_dist2(c) >= a * a;
}

// Visit every cube whose closed box meets the circle |z| = r, down to
// `extra_depth` levels below the shallowest level the circle reaches. Each
// level contributes O(1) cubes because the circle crosses its band in two
// short arcs.
template <class F>
void cubes_on_circle(double r, int extra_depth, F&& visit) {
  if (!(r > 0.0)) return;
  if (r >= 0.5) {
    double xmax = std::sqrt(std::max(0.0, r * r - 0.25));
    auto k_hi = static_cast<std::int64_t>(std::floor(xmax)) + 1;
    for (std::int64_t k = 0; k <= k_hi; ++k) {
      StripCube c = cube_at(0, k);
      if (meets_circle(c, r)) visit(c);
      StripCube cm = cube_at(0, -k - 1);
      if (meets_circle(cm, r)) visit(cm);
    }
  }
  int m_min = std::max(1, static_cast<int>(std::ceil(-std::log2(r) - 1.0 - 1e-12)));
  int m_max = m_min + extra_depth;
  for (int m = m_min; m <= m_max; ++m) {
    double h = std::ldexp(1.0, -m);
    double y_lo = 0.5 * h;
    double y_hi = std::min(h, r);
    if (y_hi < y_lo) continue;
    double x_hi = std::sqrt(std::max(0.0, r * r - y_lo * y_lo));
    double x_lo = std::sqrt(std::max(0.0, r * r - y_hi * y_hi));
    auto k0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(x_lo / h)) - 1);
    auto k1 = static_cast<std::int64_t>(std::floor(x_hi / h)) + 1;
    for (std::int64_t k = k0; k <= k1; ++k) {
      StripCube c = cube_at(m, k);
      if (meets_circle(c, r)) visit(c);
      StripCube cm = cube_at(m, -k - 1);
      if (meets_circle(cm, r)) visit(cm);
    }
  }
}

// Visit cubes that meet the ring a <= |z| <= b while their widened base
// window [x0-h, x1+h] reaches the square of half-side su around the origin.
// Disjointness (su < a) makes the level range finite.
template <class F>
void cubes_near_origin_on_ring(double a, double b, double su, F&& visit) {
  int m_lo = std::max(1, static_cast<int>(std::floor(-std::log2(b))) - 1);
  int m_hard = static_cast<int>(std::ceil(-std::log2(a))) + 60;
  for (int m = m_lo; m <= m_hard; ++m) {
    double h = std::ldexp(1.0, -m);
    if (std::hypot(su + 3.0 * h, h) < a) break;  // nothing deeper can reach the ring
    auto k0 = static_cast<std::int64_t>(std::floor(-su / h)) - 2;
    auto k1 = static_cast<std::int64_t>(std::floor(su / h)) + 1;
    for (std::int64_t k = k0; k <= k1; ++k) {
      StripCube c = cube_at(m, k);
      if (c.x0 - c.h > su || c.x1 + c.h < -su) continue;
      if (!meets_ring(c, a, b)) continue;
      visit(c);
    }
  }
}

// ---------------------------------------------------------------------------
// Pair budgets. The widened window [x0-h, x1+h] of a cube splits into 96
// sub-intervals of width h/32; the budget is the sum over unordered pairs
// (diagonal included) of inverse-increment ratios of the mass-scaled pieces.
// Ratio conventions: 0/0 counts 0, positive/0 counts infinity.

struct Member {
  double lo = 0.0, hi = 0.0;
};

std::array<Member, 96> cube_members(const StripCube& c) {
  std::array<Member, 96> out;
  const double step = c.h / 32.0;
  const double base = c.x0 - c.h;
  for (int t = 0; t < 96; ++t) {
    out[t].lo = base + step * static_cast<double>(t);
    out[t].hi = base + step * static_cast<double>(t + 1);
  }
  return out;
}

double scaled_inc(const GmcMeasure& h, double lo, double hi, double scale) {
  if (!(hi > lo)) return 0.0;
  return q_increment(h, lo * scale, hi * scale);
}

// Sum over unordered pairs with diagonal of w_i/w_j + w_j/w_i.
double pair_sum_same(const std::array<double, 96>& w) {
  double sw = 0.0, sr = 0.0;
  int pos = 0, zero = 0;
  for (double x : w) {
    if (x > 0.0) {
      sw += x;
      sr += 1.0 / x;
      ++pos;
    } else {
      ++zero;
    }
  }
  if (pos == 0) return 0.0;
  if (zero > 0) return kInf;
  return sw * sr + 96.0;
}

// Sum over unordered pairs with diagonal of v_i/w_j + v_j/w_i.
double pair_sum_cross(const std::array<double, 96>& v, const std::array<double, 96>& w) {
  double sv = 0.0;
  for (double x : v) sv += x;
  if (!(sv > 0.0)) return 0.0;
  double sr = 0.0, diag = 0.0;
  for (int i = 0; i < 96; ++i) {
    if (!(w[i] > 0.0)) return kInf;
    sr += 1.0 / w[i];
    diag += v[i] / w[i];
  }
  return sv * sr + diag;
}

double pair_budget(const GmcMeasure& h, const StripCube& c, double scale) {
  std::array<double, 96> u;
  auto members = cube_members(c);
  for (int t = 0; t < 96; ++t) u[t] = scaled_inc(h, members[t].lo, members[t].hi, scale);
  return pair_sum_same(u);
}

struct BudgetCache {
  const GmcMeasure* meas = nullptr;
  double scale = 1.0;
  std::unordered_map<std::uint64_t, double> vals;

  double get(const StripCube& c) {
    if (c.level > 44 || std::llabs(c.ix) >= (std::int64_t{1} << 51))
      throw std::logic_error("cube outside budget cache range");
    std::uint64_t key = (static_cast<std::uint64_t>(c.level) << 52) ^
                        static_cast<std::uint64_t>(c.ix + (std::int64_t{1} << 51));
    auto it = vals.find(key);
    if (it != vals.end()) return it->second;
    double v = pair_budget(*meas, c, scale);
    vals.emplace(key, v);
    return v;
  }
};

// ---------------------------------------------------------------------------
// Adaptive Simpson with an error accumulator.

struct AdaptiveSimpson {
  const std::function<double(double)>& f;
  int evals = 0;
  double err = 0.0;

  double run(double a, double b, double tol) {
    double fa = f(a);
    double fm = f(0.5 * (a + b));
    double fb = f(b);
    evals += 3;
    double s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return step(a, b, fa, fm, fb, s, tol, 26);
  }

  double step(double a, double b, double fa, double fm, double fb, double s, double tol,
              int depth) {
    double m = 0.5 * (a + b);
    double fl = f(0.5 * (a + m));
    double fr = f(0.5 * (m + b));
    evals += 2;
    double sl = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
    double sr = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
    double d = sl + sr - s;
    if (depth <= 0 || std::abs(d) <= 15.0 * tol) {
      err += std::abs(d) / 15.0;
      return sl + sr + d / 15.0;
    }
    return step(a, m, fa, fl, fm, sl, 0.5 * tol, depth - 1) +
           step(m, b, fm, fr, fb, sr, 0.5 * tol, depth - 1);
  }
};

// Angular measure of the theta-set in (0, pi) where rho e^{i theta} lies in
// the cube's closed box.
double arc_angle(const StripCube& c, double r) {
  if (c.y0 >= r || c.x0 >= r || c.x1 <= -r) return 0.0;
  double t0 = std::asin(std::clamp(c.y0 / r, 0.0, 1.0));
  double t1 = c.y1 >= r ? 0.5 * kPi : std::asin(c.y1 / r);
  double u0 = std::acos(std::clamp(c.x1 / r, -1.0, 1.0));
  double u1 = std::acos(std::clamp(c.x0 / r, -1.0, 1.0));
  auto overlap = [](double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  };
  return overlap(u0, u1, t0, t1) + overlap(u0, u1, kPi - t1, kPi - t0);
}

std::string level_pair(int lo, int hi) {
  return std::to_string(lo) + " and " + std::to_string(hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Deterministic family.

AnnulusFamily annulus_family(const AnnulusParams& params, int n_levels, double gamma,
                             double c) {
  if (n_levels < 1) throw std::invalid_argument("annulus family needs at least one level");
  params.validate(n_levels);

  AnnulusFamily fam;
  fam.levels.reserve(static_cast<std::size_t>(n_levels));
  for (int k = 1; k <= n_levels; ++k)
    fam.levels.push_back({k, params.a(k), params.b(k), params.delta(k), params.d(k),
                          params.a_pert(k), params.b_pert(k)});

  const double beta = 0.5 * gamma * gamma;
  const double log_inv = -params.log_rho_star();
  const double root_rho = std::exp(0.5 * params.log_rho_star());
  double gap = kInf, containment = kInf;
  for (int k = 1; k <= n_levels; ++k) {
    const double pk = params.P_at(k);
    gap = std::min(gap, (params.r_a - params.r_b) * log_inv - 2.0 * pk);
    const double u = c * gamma * (root_rho / (1.0 - root_rho)) *
                         std::pow(params.b(k) + params.d(k), 1.0 / 6.0) +
                     c * gamma * (params.rho_b() + params.rho_d());
    containment = std::min(containment, std::min(pk - u, 1.0 - pk));
  }
  auto push = [&fam](std::string name, double slack) {
    fam.checklist.push_back({std::move(name), slack, slack > 0.0});
  };
  push("disjoint-annuli", std::min({params.r_a - params.r_b,
                                    1.0 - (params.r_a - params.r_b),
                                    beta / 2.0 - params.r_a}));
  push("non-empty-annuli", gap);
  push("pre-annulus-containment", containment);
  push("upper-truncation-scale", params.r_d - params.r_b);
  for (const auto& item : fam.checklist) fam.all_pass = fam.all_pass && item.pass;
  return fam;
}

std::uint64_t center_count(const AnnulusParams& params, int n, double eps_star) {
  if (n < 0) throw std::invalid_argument("center count needs a nonnegative level");
  if (eps_star < 0.0) throw std::invalid_argument("center count needs eps_star >= 0");
  double log_d = (1.0 + eps_star) * static_cast<double>(n) * (-params.log_rho_star());
  double d = std::exp(log_d);
  if (d >= 9.0e15) return std::uint64_t{1} << 53;
  return static_cast<std::uint64_t>(std::ceil(d));
}

// ---------------------------------------------------------------------------
// Random rescaling.

double scaling_factor(const GmcMeasure& tau, const GmcMeasure& eta_n,
                      const AnnulusParams& params, int n, std::uint64_t k,
                      std::uint64_t centers) {
  if (n < 1) throw std::invalid_argument("scaling factor needs level >= 1");
  if (centers == 0) centers = center_count(params, n);
  if (k >= centers + 1)
    throw std::out_of_range("center index exceeds the center grid");
  const double x = static_cast<double>(k) / static_cast<double>(centers);
  const double bn = params.b(n);
  const double mass = eta_n.cum_at(x) + bn;
  if (!eta_n.periodic && mass > eta_n.total() * (1.0 + 1e-12))
    throw std::out_of_range("scaling factor window exceeds the measure extent");
  const double end = q_of(eta_n, mass);
  if (!tau.periodic && end > tau.x_lo + tau.period() * (1.0 + 1e-12))
    throw std::out_of_range("scaling factor window exceeds the measure extent");
  const double piece = tau.cum_at(end) - tau.cum_at(x);
  return piece / (bn * tau.total());
}

RandomAnnulus random_annulus(const GmcMeasure& tau, const GmcMeasure& eta_n,
                             const AnnulusParams& params, int n, std::uint64_t k,
                             std::uint64_t centers) {
  if (centers == 0) centers = center_count(params, n);
  RandomAnnulus out;
  out.level = n;
  out.scale = scaling_factor(tau, eta_n, params, n, k, centers);
  const double x = static_cast<double>(k) / static_cast<double>(centers);
  out.center = tau.cum_at(x) / tau.total();
  out.a0 = params.a(n);
  out.b0 = params.b(n);
  out.margin = std::exp(static_cast<double>(n) * params.r_p * params.log_rho_star()) * out.scale;
  return out;
}

bool disjointness_check(double m_n, double m_next, const AnnulusParams& params, int n) {
  if (!(m_n > 0.0) || !(m_next > 0.0))
    throw std::invalid_argument("disjointness check needs positive scale factors");
  return m_next / m_n < params.a(n) / params.b(n + 1);
}

// ---------------------------------------------------------------------------
// Lehto integrals.

LehtoQuad lehto_integral(const std::function<double(std::complex<double>)>& k_field,
                         std::complex<double> center, double r, double big_r, double tol) {
  if (!(r > 0.0) || !(big_r > r))
    throw std::invalid_argument("lehto integral needs 0 < r < R");
  constexpr int kNodes = 512;
  std::array<std::complex<double>, kNodes> dirs;
  for (int i = 0; i < kNodes; ++i) {
    double th = (static_cast<double>(i) + 0.5) * (2.0 * kPi / kNodes);
    dirs[i] = std::polar(1.0, th);
  }
  std::function<double(double)> g = [&](double t) {
    double rho = std::exp(t);
    double sum = 0.0;
    for (const auto& d : dirs) {
      double k = k_field(center + rho * d);
      if (k < 1.0 - 1e-12)
        throw std::domain_error("dilatation field below 1 on the annulus");
      sum += k;
    }
    double theta = sum * (2.0 * kPi / kNodes);
    return 1.0 / theta;
  };
  AdaptiveSimpson quad{g};
  LehtoQuad out;
  out.value = quad.run(std::log(r), std::log(big_r), tol);
  out.tolerance = quad.err;
  out.evaluations = quad.evals;
  return out;
}

LehtoQuad lehto_integral_cubes(const GmcMeasure& h, double r, double big_r, double tol) {
  if (!(r > 0.0) || !(big_r > r))
    throw std::invalid_argument("lehto integral needs 0 < r < R");
  if (!h.periodic)
    throw std::invalid_argument("per-cube lehto integral needs a periodic measure");
  BudgetCache cache{&h, h.total(), {}};
  std::function<double(double)> g = [&](double t) {
    double rho = std::exp(t);
    double theta = kPi;  // lower half-plane, dilatation 1
    double covered = 0.0;
    cubes_on_circle(rho, 30, [&](const StripCube& c) {
      double arc = arc_angle(c, rho);
      if (arc <= 0.0) return;
      covered += arc;
      theta += arc * cache.get(c);
    });
    if (covered > kPi + 1e-9) throw std::logic_error("cube arcs overlap");
    theta += std::max(0.0, kPi - covered);  // unresolved slivers at dilatation 1
    return 1.0 / theta;
  };
  AdaptiveSimpson quad{g};
  LehtoQuad out;
  out.value = quad.run(std::log(r), std::log(big_r), tol);
  out.tolerance = quad.err;
  out.evaluations = quad.evals;
  return out;
}

double branched_lehto(const std::function<double(std::complex<double>)>& k_upper,
                      const std::function<double(std::complex<double>)>& k_lower,
                      double r, double big_r) {
  if (!(r >= 0.0) || !(big_r >= r))
    throw std::invalid_argument("branched lehto needs 0 <= r <= R");
  if (!(big_r > r)) return 0.0;
  constexpr int kNodes = 256;
  auto half = [&](const std::function<double(std::complex<double>)>& k, double th_base) {
    std::function<double(double)> f = [&](double rho) {
      double sum = 0.0;
      for (int i = 0; i < kNodes; ++i) {
        double th = th_base + (static_cast<double>(i) + 0.5) * (kPi / kNodes);
        sum += k(std::polar(rho, th));
      }
      return rho * rho * sum * (kPi / kNodes);
    };
    AdaptiveSimpson quad{f};
    return quad.run(r, big_r, 1e-10 * std::max(1.0, big_r - r));
  };
  double i_up = half(k_upper, 0.0);
  double i_dn = half(k_lower, kPi);
  double denom = std::sqrt(i_up) + std::sqrt(i_dn);
  if (!(denom > 0.0)) return 0.0;
  return (big_r - r) * (big_r - r) / (denom * denom);
}

// ---------------------------------------------------------------------------
// Decoupled lower bound.

DecoupledBound lehto_lower_bound(const GmcMeasure& h, std::span<const double> m_scale,
                                 const AnnulusParams& params, std::span<const int> chosen) {
  if (chosen.empty()) throw std::invalid_argument("lower bound needs at least one level");
  if (!h.periodic) throw std::invalid_argument("lower bound needs a periodic measure");
  std::vector<int> A(chosen.begin(), chosen.end());
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i] < 1) throw std::invalid_argument("chosen levels must be >= 1");
    if (i > 0 && A[i] <= A[i - 1])
      throw std::invalid_argument("chosen levels must be strictly increasing");
  }
  const int top = A.back();
  if (m_scale.size() < static_cast<std::size_t>(top) + 1)
    throw std::invalid_argument("need scale factors through one level past the deepest chosen");
  params.validate(top + 1);
  for (double m : m_scale)
    if (!(m > 0.0)) throw std::invalid_argument("scale factors must be positive");

  // Strict disjointness of consecutive chosen rescaled annuli.
  for (std::size_t i = 0; i + 1 < A.size(); ++i) {
    int lo = A[i], hi = A[i + 1];
    if (!(m_scale[hi - 1] / m_scale[lo - 1] < params.a(lo) / params.b(hi)))
      throw std::runtime_error("random annuli overlap between levels " + level_pair(lo, hi));
  }

  const double T = h.total();
  const std::size_t count = A.size();
  DecoupledBound out;
  out.levels.resize(count);

  for (std::size_t j = 0; j < count; ++j) {
    const int n = A[j];
    const double mn = m_scale[n - 1];
    const double mt = mn * T;
    const double a = params.a(n);
    const double b = params.b(n);
    const double width = b - a;
    const int s_level = (j + 1 < count) ? A[j + 1] : top + 1;
    const double su_sub = params.b(s_level) * m_scale[s_level - 1] / mn;
    const double su_next = params.b(n + 1) * m_scale[n] / mn;

    BudgetCache cache{&h, mt, {}};

    // Core cube set C_n: inside the level square, touching the ring, widened
    // window reaching the next-level square.
    std::vector<StripCube> core;
    std::set<int> scales;
    cubes_near_origin_on_ring(a, b, su_next, [&](const StripCube& c) {
      if (c.x0 < -b || c.x1 > b) return;
      core.push_back(c);
      scales.insert(c.level);
    });

    // Mass-coordinate windows between the rescaled annuli deeper than n.
    const std::size_t rem = count - 1 - j;
    std::vector<double> win_lo(2 * rem, 0.0), win_hi(2 * rem, 0.0);
    for (std::size_t l = 1; l <= 2 * rem; ++l) {
      double lo, hi;
      if (l % 2 == 1) {
        std::size_t lo_pos = j + (l + 1) / 2, hi_pos = j + l / 2;
        lo = m_scale[A[lo_pos] - 1] * T * params.b(A[lo_pos]);
        hi = m_scale[A[hi_pos] - 1] * T * params.a(A[hi_pos]);
      } else {
        std::size_t hi_pos = j + l / 2, lo_pos = j + l;
        hi = m_scale[A[hi_pos] - 1] * T * params.b(A[hi_pos]);
        lo = lo_pos < count ? m_scale[A[lo_pos] - 1] * T * params.a(A[lo_pos]) : 0.0;
      }
      win_lo[l - 1] = lo;
      win_hi[l - 1] = hi;
    }

    double l_diag = 0.0;
    std::vector<double> l_win(2 * rem, 0.0);
    for (const StripCube& c : core) {
      auto members = cube_members(c);
      std::array<double, 96> w{};
      for (int t = 0; t < 96; ++t) {
        double piece = 0.0;
        if (members[t].lo < -su_sub)
          piece += scaled_inc(h, members[t].lo, std::min(members[t].hi, -su_sub), mt);
        if (members[t].hi > su_sub)
          piece += scaled_inc(h, std::max(members[t].lo, su_sub), members[t].hi, mt);
        w[t] = piece;
      }
      l_diag += pair_sum_same(w);
      for (std::size_t l = 0; l < 2 * rem; ++l) {
        std::array<double, 96> v{};
        for (int t = 0; t < 96; ++t) {
          double lo = std::max(members[t].lo * mt, win_lo[l]);
          double hi = std::min(members[t].hi * mt, win_hi[l]);
          v[t] = hi > lo ? q_increment(h, lo, hi) : 0.0;
        }
        l_win[l] += pair_sum_cross(v, w);
      }
    }

    double win_total = 0.0;
    for (double v : l_win) win_total += v;
    const double sigma = std::isinf(win_total) ? 0.0 : 1.0 / (1.0 + win_total);

    // Radial profiles on a fixed composite-Simpson grid; the coarse grid
    // (every other node) supplies the error estimate.
    constexpr int kPanels = 128;  // fine rule: 2*kPanels panels
    const int nodes = 2 * kPanels + 1;
    std::vector<double> f_m(nodes), f_k(nodes);
    for (int i = 0; i < nodes; ++i) {
      const double r = a + width * static_cast<double>(i) / static_cast<double>(nodes - 1);
      double k_tot = 0.0, dec = 0.0;
      cubes_on_circle(r, 26, [&](const StripCube& c) {
        double wgt = c.h * cache.get(c);
        k_tot += wgt;
        if (c.x0 >= -b && c.x1 <= b) {
          bool reaches = (c.x0 - c.h <= su_next) && (c.x1 + c.h >= -su_next);
          if (!reaches) dec += wgt;
        }
      });
      f_k[i] = k_tot > 0.0 ? 1.0 / k_tot : 0.0;
      f_m[i] = std::isinf(l_diag) ? 0.0 : 1.0 / (1.0 + dec / width + l_diag);
    }
    auto simpson = [&](const std::vector<double>& f, int stride) {
      const int panels = (nodes - 1) / (2 * stride);
      const double dh = width * static_cast<double>(stride) / static_cast<double>(nodes - 1);
      double s = 0.0;
      for (int p = 0; p < panels; ++p) {
        int i0 = 2 * p * stride;
        s += f[i0] + 4.0 * f[i0 + stride] + f[i0 + 2 * stride];
      }
      return s * dh / 3.0;
    };
    const double int_m_fine = simpson(f_m, 1), int_m_coarse = simpson(f_m, 2);
    const double int_k_fine = simpson(f_k, 1), int_k_coarse = simpson(f_k, 2);

    DecoupledLevel& lev = out.levels[j];
    lev.n = n;
    lev.sigma = sigma;
    lev.m = int_m_fine / width;
    lev.l_diag = l_diag;
    lev.l_window = std::move(l_win);
    lev.radial = int_k_fine;
    lev.cube_count = static_cast<int>(core.size());
    lev.scale_count = static_cast<int>(scales.size());
    lev.scale_count_ok =
        static_cast<double>(lev.scale_count) <=
        (params.r_a - params.r_b) * static_cast<double>(params.p_star) + 2.0 + 1e-9;

    out.total += sigma * lev.m;
    out.radial_integral += lev.radial;
    out.tolerance += std::abs(int_m_fine - int_m_coarse) / width +
                     std::abs(int_k_fine - int_k_coarse);
    out.cardinality_ok = out.cardinality_ok && lev.scale_count_ok;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Measure stack.

namespace {

std::vector<double> stack_cuts(const LehtoStackConfig& cfg) {
  std::vector<double> cuts;
  for (int n = cfg.levels; n >= 1; --n) cuts.push_back(cfg.params.b(n));
  return cuts;
}

FieldSampler make_stack_sampler(const LehtoStackConfig& cfg) {
  if (cfg.levels < 1) throw std::invalid_argument("measure stack needs at least one level");
  if (cfg.resolution < 16) throw std::invalid_argument("measure stack resolution too small");
  if (cfg.gamma < 0.0) throw std::invalid_argument("measure stack needs gamma >= 0");
  cfg.params.validate(cfg.levels);
  const double h = 1.0 / static_cast<double>(cfg.resolution);
  const double top = cfg.params.rho_b();
  if (!(cfg.params.b(cfg.levels) > 2.0 * h))
    throw std::invalid_argument("resolution too coarse for the deepest truncation level");
  HyperbolicMesh mesh = make_cut_mesh(0.0, 1.0, cfg.resolution, h, top, stack_cuts(cfg),
                                      cfg.rows_per_octave, /*periodic=*/true);
  ProfileRequest req;
  req.region = triangle_region(h, top);
  req.cut_heights = stack_cuts(cfg);
  return FieldSampler(mesh, {req});
}

}  // namespace

LehtoStack::LehtoStack(const LehtoStackConfig& cfg)
    : cfg_(cfg), sampler_(make_stack_sampler(cfg)) {
  const int strips = sampler_.strips(0);
  if (strips != cfg_.levels + 1)
    throw std::logic_error("measure stack strip layout mismatch");
  cut_strip_.resize(static_cast<std::size_t>(cfg_.levels) + 1, 0);
  strip_var_.resize(static_cast<std::size_t>(cfg_.levels) + 1, 0.0);
  for (int n = 1; n <= cfg_.levels; ++n) {
    cut_strip_[static_cast<std::size_t>(n)] = cfg_.levels - n + 1;
    strip_var_[static_cast<std::size_t>(n)] =
        sampler_.model_variance(0, cfg_.levels - n + 1, strips);
  }
  strip_var_[0] = sampler_.model_variance(0, 0, strips);  // full field, for tau
  etas_.resize(static_cast<std::size_t>(cfg_.levels));
}

void LehtoStack::sample(std::uint64_t seed) {
  sampler_.sample(seed);
  const int strips = sampler_.strips(0);
  const double h = sampler_.mesh().h();
  std::vector<double> buf;
  for (int n = 1; n <= cfg_.levels; ++n) {
    sampler_.accumulate(0, cut_strip_[static_cast<std::size_t>(n)], strips, buf);
    etas_[static_cast<std::size_t>(n - 1)] =
        build_measure(buf, 0.0, h, cfg_.gamma, strip_var_[static_cast<std::size_t>(n)],
                      /*periodic=*/true);
  }
  sampler_.accumulate(0, 0, strips, buf);
  tau_ = build_measure(buf, 0.0, h, cfg_.gamma, strip_var_[0], /*periodic=*/true);
  sampled_ = true;
}

const GmcMeasure& LehtoStack::tau() const {
  if (!sampled_) throw std::logic_error("measure stack not sampled yet");
  return tau_;
}

const GmcMeasure& LehtoStack::eta(int n) const {
  if (!sampled_) throw std::logic_error("measure stack not sampled yet");
  if (n < 1 || n > cfg_.levels)
    throw std::out_of_range("truncation level outside the stack");
  return etas_[static_cast<std::size_t>(n - 1)];
}

std::vector<double> LehtoStack::scale_factors(std::uint64_t k, std::uint64_t centers) const {
  if (!sampled_) throw std::logic_error("measure stack not sampled yet");
  std::vector<double> out(static_cast<std::size_t>(cfg_.levels));
  for (int n = 1; n <= cfg_.levels; ++n) {
    std::uint64_t d = centers != 0 ? centers : center_count(cfg_.params, n, cfg_.eps_star);
    out[static_cast<std::size_t>(n - 1)] =
        scaling_factor(tau_, etas_[static_cast<std::size_t>(n - 1)], cfg_.params, n, k, d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo experiments.

TailResult lehto_tail_mc(const LehtoStackConfig& cfg, std::span<const int> n_values,
                         double delta, std::size_t reps, std::uint64_t seed) {
  if (n_values.empty()) throw std::invalid_argument("tail experiment needs levels");
  if (reps == 0) throw std::invalid_argument("tail experiment needs replicates");
  if (delta < 0.0) throw std::invalid_argument("tail threshold must be nonnegative");
  int deepest = 0;
  for (int n : n_values) {
    if (n < 1) throw std::invalid_argument("tail levels must be >= 1");
    deepest = std::max(deepest, n);
  }
  LehtoStackConfig run = cfg;
  run.levels = std::max(run.levels, deepest);
  LehtoStack stack(run);

  TailResult out;
  out.n_values.assign(n_values.begin(), n_values.end());
  out.reps = reps;
  const std::size_t nn = n_values.size();
  out.threshold.resize(nn);
  out.frequency.assign(nn, 0.0);
  out.stderr_freq.assign(nn, 0.0);
  out.mean_lehto.assign(nn, 0.0);
  for (std::size_t i = 0; i < nn; ++i)
    out.threshold[i] = delta * static_cast<double>(out.n_values[i]);

  for (std::size_t rep = 0; rep < reps; ++rep) {
    stack.sample(derive_seed(seed, "lehto-tail", rep));
    const GmcMeasure& tau = stack.tau();
    for (std::size_t i = 0; i < nn; ++i) {
      double r = std::exp(static_cast<double>(out.n_values[i]) * run.params.log_rho_star());
      LehtoQuad q = lehto_integral_cubes(tau, r, 2.0, 1e-6);
      out.mean_lehto[i] += q.value;
      if (q.value < out.threshold[i]) out.frequency[i] += 1.0;
    }
  }
  for (std::size_t i = 0; i < nn; ++i) {
    out.mean_lehto[i] /= static_cast<double>(reps);
    double p = out.frequency[i] / static_cast<double>(reps);
    out.frequency[i] = p;
    out.stderr_freq[i] = std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(reps)));
  }
  return out;
}

int alpha_greedy(std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("interval lists differ in size");
  const std::size_t n = lo.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return hi[x] < hi[y]; });
  int count = 0;
  double last = -kInf;
  for (std::size_t i : order) {
    if (lo[i] > last) {
      ++count;
      last = hi[i];
    }
  }
  return count;
}

int alpha_exact(std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("interval lists differ in size");
  const std::size_t n = lo.size();
  if (n > 20) throw std::invalid_argument("exhaustive independence capped at 20 intervals");
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && lo[i] <= hi[j] && lo[j] <= hi[i]) adj[i] |= (1u << j);
  int best = 0;
  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  for (std::uint32_t s = 0; s <= full; ++s) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      if ((s >> i) & 1u) ok = (adj[i] & s) == 0;
    if (ok) best = std::max(best, std::popcount(s));
  }
  return best;
}

GapAlphaResult gap_alpha_mc(const LehtoStackConfig& cfg, std::size_t reps,
                            std::uint64_t seed) {
  if (reps == 0) throw std::invalid_argument("gap experiment needs replicates");
  LehtoStack stack(cfg);
  const int n_levels = cfg.levels;

  GapAlphaResult out;
  out.n_levels = n_levels;
  out.reps = reps;
  out.histogram.assign(static_cast<std::size_t>(n_levels) + 1, 0);
  out.c_grid = {0.25, 0.5, 0.75};
  out.below_freq.assign(out.c_grid.size(), 0.0);

  std::vector<double> lo(static_cast<std::size_t>(n_levels));
  std::vector<double> hi(static_cast<std::size_t>(n_levels));
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    stack.sample(derive_seed(seed, "gap-alpha", rep));
    for (int k = 1; k <= n_levels; ++k) {
      const GmcMeasure& eta = stack.eta(k);
      lo[static_cast<std::size_t>(k - 1)] = q_of(eta, cfg.params.a(k));
      hi[static_cast<std::size_t>(k - 1)] = q_of(eta, cfg.params.b(k)) + cfg.params.delta(k);
    }
    int alpha = n_levels <= 16 ? alpha_exact(lo, hi) : alpha_greedy(lo, hi);
    out.histogram[static_cast<std::size_t>(alpha)] += 1;
    double ratio = static_cast<double>(alpha) / static_cast<double>(n_levels);
    sum += ratio;
    sum2 += ratio * ratio;
    for (std::size_t ci = 0; ci < out.c_grid.size(); ++ci)
      if (static_cast<double>(alpha) < out.c_grid[ci] * static_cast<double>(n_levels))
        out.below_freq[ci] += 1.0;
  }
  const double r = static_cast<double>(reps);
  out.mean_ratio = sum / r;
  double var = std::max(0.0, sum2 / r - out.mean_ratio * out.mean_ratio);
  out.stderr_ratio = std::sqrt(var / r);
  for (double& f : out.below_freq) f /= r;
  return out;
}

// ---------------------------------------------------------------------------
// Center pairing and base overlap.

CenterPairing pair_centers(std::span<const double> xs, std::span<const double> ys,
                           double radius) {
  if (xs.size() < 2 || ys.size() < 2)
    throw std::invalid_argument("center pairing needs at least two centers per copy");
  if (!(radius > 0.0)) throw std::invalid_argument("center pairing needs a positive radius");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] < xs[i - 1]) throw std::invalid_argument("first center vector is not sorted");
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (ys[i] < ys[i - 1]) throw std::invalid_argument("second center vector is not sorted");
  if (xs.front() != 0.0 || ys.front() != 0.0)
    throw std::invalid_argument("center vectors must start at 0");
  if (xs.back() != 1.0)
    throw std::invalid_argument("first center vector must end at 1");

  CenterPairing out;
  out.radius = radius;
  std::size_t k = 0, m = 0;
  out.k_idx.push_back(0);
  out.m_idx.push_back(0);
  while (k + 1 < xs.size()) {
    if (m + 1 >= ys.size())
      throw std::runtime_error("second copy exhausted after step " +
                               std::to_string(out.k_idx.size() - 1));
    const double target = ys[m + 1];
    std::size_t k_next = k + 1;
    while (k_next < xs.size() && xs[k_next] < target) ++k_next;
    if (k_next >= xs.size())
      throw std::runtime_error("no admissible center in the first copy at step " +
                               std::to_string(out.k_idx.size()));
    std::size_t m_next = m + 1;
    while (m_next + 1 < ys.size() && ys[m_next + 1] <= xs[k_next]) ++m_next;
    const double gap = xs[k_next] - ys[m_next];
    if (gap < 0.0 || gap > radius)
      throw std::runtime_error("pairing gap violated at step " +
                               std::to_string(out.k_idx.size()) + " (indices " +
                               std::to_string(k_next) + ", " + std::to_string(m_next) + ")");
    out.k_idx.push_back(k_next);
    out.m_idx.push_back(m_next);
    k = k_next;
    m = m_next;
  }
  for (std::size_t s = 1; s < out.k_idx.size() && out.covers; ++s) {
    if (xs[out.k_idx[s]] - xs[out.k_idx[s - 1]] > 2.0 * radius) out.covers = false;
    if (ys[out.m_idx[s]] - ys[out.m_idx[s - 1]] > 2.0 * radius) out.covers = false;
  }
  return out;
}

bool overlap_event(const RandomAnnulus& a1, const RandomAnnulus& a2, double margin) {
  const double x = a1.center, y = a2.center;
  const double a1s = a1.a_scaled(), b1s = a1.b_scaled();
  const double a2s = a2.a_scaled(), b2s = a2.b_scaled();
  const double right =
      std::min(y + b2s, x + b1s) - std::max(y + a2s, x + a1s);
  const double left =
      std::min(y - a2s, x - a1s) - std::max(y - b2s, x - b1s);
  return right > margin && left > margin;
}

}  // namespace gmclab
