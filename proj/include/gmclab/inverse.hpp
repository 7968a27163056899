#pragma once
// Right inverses of measure cumulatives, the circle homeomorphism they induce,
// and Monte Carlo checks of the inverse's independence/mean-shift properties.

#include <cstdint>
#include <vector>

#include "gmclab/gmc.hpp"

namespace gmclab {

// Q(x) = inf{t >= 0 : measure([0, t]) >= x}; piecewise linear and strictly
// increasing, exact inverse of the interpolated cumulative. Periodic measures
// extend Q to all mass values by whole-period steps.
double q_of(const GmcMeasure& m, double x);

// Q(x) - Q(y) for 0 <= y <= x.
double q_increment(const GmcMeasure& m, double y, double x);

// inf{t >= 0 : measure([T, T+t]) >= x}.
double q_bullet(const GmcMeasure& m, double T, double x);

// Smallest dyadic point of generation n strictly above a: (floor(a 2^n)+1)/2^n.
double dyadic_upper(double a, int n);

// Circle homeomorphism induced by a periodic unit-interval measure tau:
// hinv(x) = Q_tau(x * tau([0,1])) on [0,1], hinv(x+1) = hinv(x)+1.
class Homeomorphism {
public:
  explicit Homeomorphism(GmcMeasure tau);

  double hinv(double x) const;
  double h(double y) const;  // forward map, inverse of hinv
  // Exact integral of hinv over [0, x] (hinv is piecewise linear).
  double hinv_integral(double x) const;
  double c0() const { return c0_; }  // integral over [0,1] minus 1/2
  const GmcMeasure& tau() const { return tau_; }

private:
  GmcMeasure tau_;
  double total_ = 0.0;
  std::vector<double> knot_u_;    // mass fractions at cell edges
  std::vector<double> knot_t_;    // grid positions
  std::vector<double> knot_int_;  // integral of hinv up to knot_u_[j]
  double c0_ = 0.0;
};

struct SmpTestResult {
  double pearson = 0.0;
  double dcor = 0.0;
  double perm_p = 1.0;
  double threshold = 0.0;  // 3/sqrt(reps)
  bool pass = true;
  bool degenerate = false;  // gamma = 0: increments are a.s. constant
};

// Independence probe for measure increments at separation r (exact for the
// mesh model once r exceeds delta plus the stencil reach).
SmpTestResult smp_test(double gamma, double delta, double r, std::size_t reps,
                       std::uint64_t seed, int resolution = 1024);

struct MeanShiftResult {
  double mean_q = 0.0;
  double stderr_est = 0.0;
  double lower99 = 0.0;  // one-sided 99% lower bound for E[Q(a)] - a
  bool pass = false;
};

MeanShiftResult mean_shift_mc(double gamma, double delta, double a, std::size_t reps,
                              std::uint64_t seed, int resolution = 1024);

struct RatioMomentConfig {
  double gamma = 0.5;
  double delta = 0.25;
  double i_lo = 0.0, i_hi = 0.0;  // denominator interval I
  double j_lo = 0.0, j_hi = 0.0;  // numerator interval J
  double p = 1.0;
  std::size_t reps = 10000;
  std::uint64_t seed = 1;
  int resolution = 1024;
};

// E[(eta(J)/eta(I))^p]; exact 1 when J = I, exact (|J|/|I|)^p when gamma = 0.
McSummary ratio_moment_mc(const RatioMomentConfig& cfg);

struct MultipointConfig {
  double gamma = 0.3;
  double delta = 0.25;
  std::vector<double> a_lo, a_hi;  // disjoint intervals A_k
  std::vector<double> p;           // exponents (applied as negative moments)
  std::size_t reps = 100000;
  std::uint64_t seed = 1;
  int resolution = 1024;
};

struct MultipointResult {
  double joint = 0.0;              // E[prod eta(A_k)^{-p_k}]
  double product_marginals = 0.0;  // prod E[eta(A_k)^{-p_k}]
  double ratio = 0.0;
  double stderr_joint = 0.0;
};

MultipointResult multipoint_product_mc(const MultipointConfig& cfg);

}  // namespace gmclab
