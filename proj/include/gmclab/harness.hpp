#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gmclab/io.hpp"
#include "gmclab/stats.hpp"

namespace gmclab {

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  int reps = 100;
  int resolution = 1024;
  double gamma = 0.5;
  double delta = 0.5;
  std::string out_dir;
  Config params;

  void validate() const;
};

// Streaming mean/variance accumulator forming a commutative monoid under
// merge, so chunked and sequential aggregation agree.
struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Welford& other) {
    if (other.n == 0) return;
    if (n == 0) {
      *this = other;
      return;
    }
    const double d = other.mean - mean;
    const auto total = static_cast<double>(n + other.n);
    const double new_mean = mean + d * static_cast<double>(other.n) / total;
    m2 += other.m2 + d * d * static_cast<double>(n) * static_cast<double>(other.n) / total;
    mean = new_mean;
    n += other.n;
  }
  double variance() const { return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1); }
};

struct RunResult {
  McSummary summary;
  double ci_lo = 0.0;  // 99% normal-approximation interval
  double ci_hi = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  std::vector<double> values;  // per surviving replicate, in index order
  std::vector<int> failed;     // indices of failed replicates
};

// Runs `reps` replicates of a pure kernel fed with derived seeds. Replicates
// that throw are marked failed; more than 1% failures aborts the run.
// Results are identical for identical configs at any thread count.
RunResult run(const ExperimentConfig& cfg, const std::string& experiment_id,
              const std::function<double(std::uint64_t seed, int replicate)>& kernel,
              int threads = 1);

}  // namespace gmclab
