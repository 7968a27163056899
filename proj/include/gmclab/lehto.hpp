#pragma once
// Nested annulus families and their random rescalings driven by a measure and
// its truncated companions; Lehto integrals (pointwise fields, per-cube budget
// fields, branched); the decoupled radial lower bound with its sigma_n / m_n
// components; and the gap-independence, center-pairing and base-overlap
// experiments for the two-copy construction.

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gmclab/annuli.hpp"
#include "gmclab/constraints.hpp"
#include "gmclab/gmc.hpp"
#include "gmclab/sampler.hpp"

namespace gmclab {

// ---------------------------------------------------------------------------
// Deterministic family.

struct AnnulusLevel {
  int k = 0;
  double a = 0.0;       // inner base radius
  double b = 0.0;       // outer base radius
  double delta = 0.0;   // level scale
  double d = 0.0;       // upper truncation scale
  double a_pert = 0.0;  // perturbed inner radius
  double b_pert = 0.0;  // perturbed outer radius
};

struct AnnulusFamily {
  std::vector<AnnulusLevel> levels;        // k = 1..N
  std::vector<ConstraintItem> checklist;   // geometric feasibility items
  bool all_pass = true;
};

// Levels 1..N with the geometric checklist (disjointness, non-emptiness,
// perturbation containment, truncation-scale order). Throws, naming the
// constraint, when a structural invariant of the parameters is violated.
AnnulusFamily annulus_family(const AnnulusParams& params, int n_levels,
                             double gamma = 0.2, double c = 1.0);

// Center count D_n = ceil(rho_star^{-(1+eps_star) n}), clamped to 2^53.
std::uint64_t center_count(const AnnulusParams& params, int n, double eps_star = 0.05);

// ---------------------------------------------------------------------------
// Random rescaling of one level.

// M_{n,k}: mass of tau over the level-n window found by the truncated inverse
// at center k of the uniform grid {k/D}, normalized by b_n and total mass.
// Passing centers = 0 derives D = center_count(params, n). tau and eta_n must
// come from one noise draw; equals 1 when gamma = 0.
double scaling_factor(const GmcMeasure& tau, const GmcMeasure& eta_n,
                      const AnnulusParams& params, int n, std::uint64_t k,
                      std::uint64_t centers = 0);

struct RandomAnnulus {
  int level = 0;
  double center = 0.0;          // mass fraction of the grid point
  double scale = 1.0;           // M_{n,k}
  double a0 = 0.0, b0 = 0.0;    // deterministic base radii
  double margin = 0.0;          // base overlap margin rho_star^{n r_p} M_{n,k}
  double a_scaled() const { return a0 * scale; }
  double b_scaled() const { return b0 * scale; }
};

RandomAnnulus random_annulus(const GmcMeasure& tau, const GmcMeasure& eta_n,
                             const AnnulusParams& params, int n, std::uint64_t k,
                             std::uint64_t centers = 0);

// Strict disjointness event for consecutive rescaled levels:
// m_next / m_n < a_n / b_{n+1}.
bool disjointness_check(double m_n, double m_next, const AnnulusParams& params, int n);

// ---------------------------------------------------------------------------
// Lehto integrals.

struct LehtoQuad {
  double value = 0.0;
  double tolerance = 0.0;  // estimated quadrature error
  int evaluations = 0;     // radial integrand evaluations
};

// L_K(center, r, R) = int_r^R [int_0^{2pi} K(center + rho e^{i theta}) dtheta]^{-1}
// drho / rho for a pointwise field K >= 1. Angular rule: 512 equispaced
// midpoints; radial rule: adaptive Simpson in log rho. Throws when a sampled
// value of K drops below 1.
LehtoQuad lehto_integral(const std::function<double(std::complex<double>)>& k_field,
                         std::complex<double> center, double r, double big_r,
                         double tol = 1e-9);

// Same integral centered at 0 for the per-cube budget field of h: K_Q(I) on
// each Whitney cube of the upper strip, 1 on the lower half-plane and outside
// the strip. The angular integral is assembled exactly from arc angles, so the
// radial integrand is continuous and the adaptive rule converges.
LehtoQuad lehto_integral_cubes(const GmcMeasure& h, double r, double big_r,
                               double tol = 1e-9);

// Branched variant: value = (R-r)^2 / (sqrt(I+) + sqrt(I-))^2 with
// I+- = int int rho^2 K dtheta drho over the upper/lower half annulus.
double branched_lehto(const std::function<double(std::complex<double>)>& k_upper,
                      const std::function<double(std::complex<double>)>& k_lower,
                      double r, double big_r);

// ---------------------------------------------------------------------------
// Decoupled lower bound.

struct DecoupledLevel {
  int n = 0;
  double sigma = 1.0;            // 1 / (1 + sum of window sums)
  double m = 0.0;                // averaged reciprocal radial profile
  double l_diag = 0.0;           // core-subtracted pair sum L_{n,n}
  std::vector<double> l_window;  // window pair sums L_{n,m}, outermost first
  double radial = 0.0;           // int_a^b dr / K_{Q,M_n}(r)
  int cube_count = 0;            // |C_n|
  int scale_count = 0;           // distinct dyadic levels in C_n
  bool scale_count_ok = true;    // scale_count <= (r_a - r_b) p_star + 2
};

struct DecoupledBound {
  double total = 0.0;            // sum over chosen levels of sigma_n m_n
  double radial_integral = 0.0;  // sum of per-level radial integrals
  double tolerance = 0.0;        // radial quadrature error estimate
  std::vector<DecoupledLevel> levels;
  bool cardinality_ok = true;
};

// Lower bound sum over the chosen levels for the measure h whose level-n
// rescalings are m_scale[n-1] (so m_scale must cover max(chosen)+1 levels).
// chosen must be strictly increasing; consecutive chosen levels must satisfy
// the strict disjointness event, else this throws naming the offending pair.
DecoupledBound lehto_lower_bound(const GmcMeasure& h, std::span<const double> m_scale,
                                 const AnnulusParams& params, std::span<const int> chosen);

// ---------------------------------------------------------------------------
// Measure stack: one noise draw giving tau and every truncated eta^n.

struct LehtoStackConfig {
  AnnulusParams params{.p_star = 2, .r_a = 0.1, .r_b = 0.05, .r_d = 0.2,
                       .r_p = 0.3, .P = {0.01}};
  int levels = 3;             // deepest truncation level N
  double gamma = 0.1;
  int resolution = 2048;      // cells per unit period
  int rows_per_octave = 4;
  double eps_star = 0.05;     // center-count exponent bump
};

class LehtoStack {
public:
  explicit LehtoStack(const LehtoStackConfig& cfg);

  void sample(std::uint64_t seed);

  const GmcMeasure& tau() const;
  const GmcMeasure& eta(int n) const;  // truncation at level n in [1, levels]

  // M_n for n = 1..levels at center k (same draw as tau/eta).
  std::vector<double> scale_factors(std::uint64_t k, std::uint64_t centers = 0) const;

  const LehtoStackConfig& config() const { return cfg_; }

private:
  LehtoStackConfig cfg_;
  FieldSampler sampler_;
  std::vector<double> strip_var_;  // model variance of each truncation prefix
  std::vector<int> cut_strip_;     // first strip of each truncation level
  std::vector<GmcMeasure> etas_;
  GmcMeasure tau_;
  bool sampled_ = false;
};

// ---------------------------------------------------------------------------
// Monte Carlo experiments.

struct TailResult {
  std::vector<int> n_values;
  std::vector<double> threshold;     // delta * n per entry
  std::vector<double> frequency;     // P[L(0, R_N, 2) < delta n]
  std::vector<double> stderr_freq;
  std::vector<double> mean_lehto;
  std::size_t reps = 0;
};

// Frequency of a small Lehto integral over the range [rho_star^n, 2], per n.
TailResult lehto_tail_mc(const LehtoStackConfig& cfg, std::span<const int> n_values,
                         double delta, std::size_t reps, std::uint64_t seed);

struct GapAlphaResult {
  int n_levels = 0;
  std::vector<std::size_t> histogram;  // histogram[v] = #replicates with alpha = v
  double mean_ratio = 0.0;             // mean alpha / N
  double stderr_ratio = 0.0;
  std::vector<double> c_grid;          // candidate gap fractions
  std::vector<double> below_freq;      // P[alpha < c N] per candidate
  std::size_t reps = 0;
};

// Independence number of the gap-interval graph across levels 1..cfg.levels.
GapAlphaResult gap_alpha_mc(const LehtoStackConfig& cfg, std::size_t reps,
                            std::uint64_t seed);

// Exact independence number helpers for interval families [lo_i, hi_i].
int alpha_greedy(std::span<const double> lo, std::span<const double> hi);
int alpha_exact(std::span<const double> lo, std::span<const double> hi);

// ---------------------------------------------------------------------------
// Center pairing and base overlap for two copies.

struct CenterPairing {
  std::vector<std::size_t> k_idx;  // selected X indices per step
  std::vector<std::size_t> m_idx;  // selected Y indices per step
  double radius = 0.0;
  bool covers = true;              // consecutive selected-X gaps <= 2 radius
};

// Greedy matching of sorted center vectors: each step picks the smallest X at
// or above the next unpaired Y, then the largest Y not exceeding it. Requires
// X and Y sorted with X0 = Y0 = 0 and X_last = 1; throws naming the step when
// a selected pair violates 0 <= X - Y <= radius or no admissible X remains.
CenterPairing pair_centers(std::span<const double> xs, std::span<const double> ys,
                           double radius);

// Strict base-overlap event: one-dimensional overlap of both the right and
// left base segments exceeds margin. Symmetric in its first two arguments.
bool overlap_event(const RandomAnnulus& a1, const RandomAnnulus& a2, double margin);
inline bool overlap_event(const RandomAnnulus& a1, const RandomAnnulus& a2) {
  return overlap_event(a1, a2, a1.margin > a2.margin ? a1.margin : a2.margin);
}

}  // namespace gmclab
