#pragma once
// Extension of the circle homeomorphism to the upper half-plane, pointwise
// dilatation via finite differences, and the dyadic-cell dilatation budget
// built from mass ratios of nearby intervals.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "gmclab/inverse.hpp"

namespace gmclab {

struct DyadicInterval {
  int n = 0;            // generation
  std::uint64_t m = 0;  // index mod 2^n
  double lo() const { return static_cast<double>(m) / std::ldexp(1.0, n); }
  double hi() const { return static_cast<double>(m + 1) / std::ldexp(1.0, n); }
  double length() const { return 1.0 / std::ldexp(1.0, n); }
};

// Whitney box over I: I x [2^{-n-1}, 2^{-n}] for n >= 1, I x [1/2, 2] at n = 0.
struct WhitneyCube {
  DyadicInterval base;
  double y_lo() const { return base.n == 0 ? 0.5 : 0.5 * base.length(); }
  double y_hi() const { return base.n == 0 ? 2.0 : base.length(); }
  double area() const { return base.length() * (y_hi() - y_lo()); }
  double side() const { return base.length(); }
};

// The 3*2^5 = 96 intervals of generation n+5 covering I and its two neighbors.
std::vector<DyadicInterval> j5_intervals(const DyadicInterval& I);

// Unordered pairs (with repetition) from the 96; C(96,2) + 96 = 4656.
inline std::size_t j5_pair_count() { return 96 * 97 / 2; }

// Sum over unordered pairs (with repetition) of u_i/u_j + u_j/u_i, computed as
// (sum u)(sum 1/u) + n. All masses must be positive.
double pair_ratio_sum(std::span<const double> masses);

// Beurling-Ahlfors style extension driven by hinv. The y >= 1 branches splice
// toward the identity-plus-translation map; the jump at y = 1 is intentional.
std::complex<double> ab_extension(const Homeomorphism& hom, std::complex<double> z);

struct Dilatation {
  std::complex<double> mu;
  double k = 1.0;  // (1+|mu|)/(1-|mu|)
};

// Wirtinger derivatives by central differences at scale `step`.
Dilatation dilatation_numeric(const Homeomorphism& hom, std::complex<double> z, double step);

// Quasisymmetry defect of two masses: r + 1/r >= 2.
inline double quasisym_delta(double m1, double m2) {
  if (!(m1 > 0.0) || !(m2 > 0.0))
    throw std::invalid_argument("quasisym_delta needs positive masses");
  double r = m1 / m2;
  return r + 1.0 / r;
}

// K_Q(I): pair-ratio sum of the inverse-map increments over the mass-scaled
// generation-(n+5) intervals.
double dilatation_bound(const GmcMeasure& tau, const DyadicInterval& I);

struct IntegrabilityScan {
  double total = 0.0;                 // sum over cubes of K_Q(I) * area(C_I)
  std::vector<double> level_totals;   // per generation 0..n_max
};

// Riemann sum of the cell dilatation budget over the Whitney cubes filling
// [0,1] x (0,2], down to generation n_max.
IntegrabilityScan integrability_scan(const GmcMeasure& tau, int n_max);

}  // namespace gmclab
