#include "gmclab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "gmclab/rng.hpp"

namespace gmclab {

void ExperimentConfig::validate() const {
  if (reps < 1) throw std::invalid_argument("experiment config: reps must be >= 1");
  const bool pow2 = resolution > 0 && (resolution & (resolution - 1)) == 0;
  if (!pow2 || resolution < 64 || resolution > 4096)
    throw std::invalid_argument(
        "experiment config: resolution must be a power of two in [64, 4096]");
}

RunResult run(const ExperimentConfig& cfg, const std::string& experiment_id,
              const std::function<double(std::uint64_t, int)>& kernel, int threads) {
  cfg.validate();
  if (threads < 1) threads = 1;

  const int reps = cfg.reps;
  std::vector<double> values(static_cast<std::size_t>(reps), 0.0);
  std::vector<char> ok(static_cast<std::size_t>(reps), 0);

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const std::uint64_t seed =
          derive_seed(cfg.master_seed, experiment_id, static_cast<std::uint64_t>(i));
      try {
        values[static_cast<std::size_t>(i)] = kernel(seed, i);
        ok[static_cast<std::size_t>(i)] = 1;
      } catch (const std::exception&) {
        ok[static_cast<std::size_t>(i)] = 0;
      }
    }
  };

  if (threads == 1) {
    worker(0, reps);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (reps + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(reps, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  RunResult out;
  std::vector<double> good;
  good.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    if (ok[static_cast<std::size_t>(i)])
      good.push_back(values[static_cast<std::size_t>(i)]);
    else
      out.failed.push_back(i);
  }
  if (static_cast<double>(out.failed.size()) > 0.01 * static_cast<double>(reps)) {
    throw std::runtime_error("experiment aborted: " + std::to_string(out.failed.size()) +
                             " of " + std::to_string(reps) + " replicates failed");
  }
  if (good.empty()) throw std::runtime_error("experiment produced no successful replicates");

  out.values = std::move(good);
  out.summary = summarize(out.values);
  const double z99 = 2.5758293035489004;  // two-sided 99% normal quantile
  out.ci_lo = out.summary.estimate - z99 * out.summary.stderr_est;
  out.ci_hi = out.summary.estimate + z99 * out.summary.stderr_est;
  const auto [mn, mx] = std::minmax_element(out.values.begin(), out.values.end());
  out.min_value = *mn;
  out.max_value = *mx;
  return out;
}

}  // namespace gmclab
