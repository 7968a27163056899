#include "gmclab/treemod.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gmclab/rng.hpp"

namespace gmclab {

void TreeSpec::validate() const {
  if (n_branch < 1) throw std::invalid_argument("tree spec: branching exponent must be >= 1");
  const std::size_t depth_sz = k.size();
  if (depth_sz == 0) throw std::invalid_argument("tree spec: empty scale table");
  if (s.size() != depth_sz || c_inf.size() != depth_sz)
    throw std::invalid_argument("tree spec: per-scale vectors must share one length");
  const double bf = branches();
  double prev_s = 1.0;
  double level_cap = 1.0;
  for (std::size_t i = 0; i < depth_sz; ++i) {
    level_cap *= bf;
    if (!(k[i] > 0.0)) throw std::invalid_argument("tree spec: K_i must be positive");
    if (!(s[i] >= 1.0)) throw std::invalid_argument("tree spec: S_i must be a positive count");
    if (s[i] > prev_s * bf + 0.5)
      throw std::invalid_argument("tree spec: S_i exceeds 2^N S_{i-1}");
    if (s[i] > level_cap + 0.5)
      throw std::invalid_argument("tree spec: S_i 2^{-Ni} exceeds 1");
    if (!(c_inf[i] > 0.0 && c_inf[i] <= 1.0))
      throw std::invalid_argument("tree spec: c_i must lie in (0,1]");
    prev_s = s[i];
  }
}

double modulus_lower_bound(const TreeSpec& spec) {
  spec.validate();
  double inv = 0.0;
  for (int i = 0; i < spec.depth(); ++i) inv += spec.k[i] / (spec.s[i] * spec.c_inf[i]);
  if (!std::isfinite(inv)) throw std::overflow_error("modulus sum overflow");
  return 1.0 / inv;
}

WeightArea weights_and_area(const TreeSpec& spec) {
  spec.validate();
  WeightArea out;
  out.b.resize(spec.k.size());
  double scale_pow = 1.0;  // 2^{Ni}
  const double bf = spec.branches();
  for (int i = 0; i < spec.depth(); ++i) {
    scale_pow *= bf;
    out.b[static_cast<std::size_t>(i)] = scale_pow / (spec.s[i] * spec.c_inf[i]);
    // 2^{-N(2i-1)} B_i^2 K_i S_i with 1-based i equals B_i^2 K_i S_i * 2^N / 2^{2Ni}.
    out.area += out.b[static_cast<std::size_t>(i)] * out.b[static_cast<std::size_t>(i)] *
                spec.k[i] * spec.s[i] * bf / (scale_pow * scale_pow);
  }
  return out;
}

double min_rho_length(const TreeSpec& spec, int base_scale, int window,
                      std::span<const double> custom_b) {
  if (base_scale < 1 || window < 0 || base_scale + window > spec.depth())
    throw std::out_of_range("min_rho_length: scale window outside spec depth");
  std::vector<double> b_store;
  std::span<const double> b = custom_b;
  if (b.empty()) {
    b_store = weights_and_area(spec).b;
    b = b_store;
  }
  if (static_cast<int>(b.size()) < base_scale + window)
    throw std::invalid_argument("min_rho_length: weight vector shorter than scale window");

  const int deep = base_scale + window;
  const double survivors = spec.s[static_cast<std::size_t>(deep - 1)];
  if (survivors <= 0.0) return 0.0;  // nothing forces the curve upward

  double cheapest = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= window; ++m)
    cheapest = std::min(cheapest, b[static_cast<std::size_t>(base_scale + m - 1)]);
  return survivors * std::pow(2.0, -spec.n_branch * deep) * cheapest;
}

double extinction_probability(const std::vector<double>& offspring_prob) {
  if (offspring_prob.empty())
    throw std::invalid_argument("extinction probability: empty offspring law");
  double total = 0.0, mean_count = 0.0;
  for (std::size_t c = 0; c < offspring_prob.size(); ++c) {
    if (offspring_prob[c] < 0.0)
      throw std::invalid_argument("extinction probability: negative probability");
    total += offspring_prob[c];
    mean_count += offspring_prob[c] * static_cast<double>(c);
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("extinction probability: law must sum to 1");
  if (mean_count <= 1.0) return 1.0;

  auto pgf = [&offspring_prob](double q) {
    double value = 0.0;
    for (std::size_t c = offspring_prob.size(); c-- > 0;)
      value = value * q + offspring_prob[c];
    return value;
  };
  double lo = 0.0, hi = 1.0 - 1e-12;  // pgf(q)-q positive at lo, negative at hi
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pgf(mid) - mid > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GwEstimate gw_estimate(const GwProcess& proc, int max_depth, int reps) {
  if (max_depth < 1) throw std::invalid_argument("gw_estimate: max_depth must be >= 1");
  if (reps < 1) throw std::invalid_argument("gw_estimate: reps must be >= 1");
  if (proc.roots < 1) throw std::invalid_argument("gw_estimate: need at least one root");

  const std::size_t n_kinds = proc.offspring_prob.size();
  std::vector<double> cdf(n_kinds);
  double acc = 0.0;
  for (std::size_t c = 0; c < n_kinds; ++c) {
    acc += proc.offspring_prob[c];
    cdf[c] = acc;
  }
  if (n_kinds == 0 || std::fabs(acc - 1.0) > 1e-9)
    throw std::invalid_argument("gw_estimate: offspring law must sum to 1");

  const std::size_t node_budget = 20'000'000;
  std::size_t nodes_used = 0;

  const int d = max_depth;
  std::vector<std::vector<double>> pop(static_cast<std::size_t>(d));    // per rep
  std::vector<std::vector<double>> deep_frac(static_cast<std::size_t>(d));
  std::vector<double> alive(static_cast<std::size_t>(reps), 0.0);

  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(proc.seed, "gw-tree", static_cast<std::uint64_t>(rep)));
    auto draw_offspring = [&cdf, &rng]() {
      const double u = rng.uniform();
      std::size_t c = 0;
      while (c + 1 < cdf.size() && u > cdf[c]) ++c;
      return static_cast<int>(c);
    };

    // Depth-first walk; stack entries are (depth, remaining children to emit).
    std::vector<long long> nodes_at(static_cast<std::size_t>(d) + 1, 0);
    std::vector<long long> deep_at(static_cast<std::size_t>(d) + 1, 0);
    struct Frame {
      int depth;
      int pending;
      bool reaches;
    };
    std::vector<Frame> stack;
    for (int r = 0; r < proc.roots; ++r) {
      stack.push_back({0, draw_offspring(), false});
      while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.pending == 0) {
          const bool reaches = top.reaches || top.depth == d;
          if (top.depth >= 1) {
            ++nodes_at[static_cast<std::size_t>(top.depth)];
            if (reaches) ++deep_at[static_cast<std::size_t>(top.depth)];
          }
          stack.pop_back();
          if (!stack.empty() && reaches) stack.back().reaches = true;
          continue;
        }
        --top.pending;
        const int child_depth = top.depth + 1;
        if (++nodes_used > node_budget)
          throw std::runtime_error("gw_estimate: tree population exceeds node budget");
        stack.push_back({child_depth, child_depth < d ? draw_offspring() : 0, false});
      }
    }

    for (int depth = 1; depth <= d; ++depth) {
      const auto di = static_cast<std::size_t>(depth);
      pop[di - 1].push_back(static_cast<double>(nodes_at[di]));
      if (nodes_at[di] > 0)
        deep_frac[di - 1].push_back(static_cast<double>(deep_at[di]) /
                                    static_cast<double>(nodes_at[di]));
    }
    alive[static_cast<std::size_t>(rep)] = nodes_at[static_cast<std::size_t>(d)] > 0 ? 1.0 : 0.0;
  }

  GwEstimate out;
  out.extinction_root = extinction_probability(proc.offspring_prob);
  out.survival_fraction = mean(alive);
  out.survival_se = stderr_mean(alive);
  for (int depth = 1; depth <= d; ++depth) {
    const auto di = static_cast<std::size_t>(depth - 1);
    out.mean_population.push_back(mean(pop[di]));
    out.population_se.push_back(stderr_mean(pop[di]));
    out.c_estimate.push_back(deep_frac[di].empty() ? 0.0 : mean(deep_frac[di]));
    out.c_se.push_back(deep_frac[di].empty() ? 0.0 : stderr_mean(deep_frac[di]));
  }
  return out;
}

}  // namespace gmclab
