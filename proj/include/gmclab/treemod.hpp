#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gmclab/stats.hpp"

namespace gmclab {

// Dyadic-tree description: branching 2^n_branch per scale, per-scale
// dilatation caps k[i], surviving-interval counts s[i], and fractions
// c_inf[i] of survivors with infinite descent. Scale index is 1-based in the
// formulas; vectors store scales 1..depth().
struct TreeSpec {
  int n_branch = 1;
  std::vector<double> k;
  std::vector<double> s;
  std::vector<double> c_inf;

  int depth() const { return static_cast<int>(k.size()); }
  double branches() const { return std::pow(2.0, n_branch); }
  void validate() const;
};

// c with 1/c = sum_i K_i / (S_i c_i), truncated at the spec depth.
double modulus_lower_bound(const TreeSpec& spec);

struct WeightArea {
  std::vector<double> b;  // B_i = 2^{Ni} / (S_i c_i)
  double area = 0.0;      // sum 2^{-N(2i-1)} B_i^2 K_i S_i
};
WeightArea weights_and_area(const TreeSpec& spec);

// Exact minimum rho-length over curves that cross each surviving column at
// some scale offset in [0, window] above base_scale. The objective separates
// per column, so the minimum is S_{i+M} 2^{-N(i+M)} min_m B_{i+m}. A custom
// weight vector (1-based like the spec vectors) overrides the proof's B_i.
double min_rho_length(const TreeSpec& spec, int base_scale, int window,
                      std::span<const double> custom_b = {});

struct GwProcess {
  std::vector<double> offspring_prob;  // index = offspring count
  int roots = 1;
  std::uint64_t seed = 1;
};

struct GwEstimate {
  std::vector<double> mean_population;   // per depth 1..max_depth
  std::vector<double> population_se;
  std::vector<double> c_estimate;        // per depth: survivors with full descent
  std::vector<double> c_se;
  double survival_fraction = 0.0;        // replicate trees alive at max depth
  double survival_se = 0.0;
  double extinction_root = 1.0;          // q solving q = sum p_k q^k
};

// Smallest fixed point of the offspring generating function in [0,1].
double extinction_probability(const std::vector<double>& offspring_prob);

GwEstimate gw_estimate(const GwProcess& proc, int max_depth, int reps);

}  // namespace gmclab
