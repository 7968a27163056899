#pragma once
// Hyperbolic white-noise mesh: uniform x columns, geometric y rows, one
// N(0, lambda-area) value per cell. Fields are read off the noise by
// area-fraction weights, so every field built on the same mesh shares the
// same randomness and couplings across scales come for free.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gmclab/kernels.hpp"
#include "gmclab/regions.hpp"
#include "gmclab/rng.hpp"

namespace gmclab {

struct HyperbolicMesh {
  double x_lo = 0.0, x_hi = 1.0;
  int nx = 0;
  std::vector<double> yedge;  // ny+1 increasing heights, yedge[0] > 0
  bool periodic = false;      // x wraps with period x_hi - x_lo

  int ny() const { return static_cast<int>(yedge.size()) - 1; }
  double h() const { return (x_hi - x_lo) / nx; }
  double period() const { return x_hi - x_lo; }
  double y_lo() const { return yedge.front(); }
  double y_hi() const { return yedge.back(); }
  // lambda-area of any cell in row r
  double cell_area(int r) const { return h() * (1.0 / yedge[r] - 1.0 / yedge[r + 1]); }
  double x_center(int j) const { return x_lo + (j + 0.5) * h(); }

  void validate() const {
    if (nx < 1 || ny() < 1) throw std::invalid_argument("mesh needs nx, ny >= 1");
    if (!(x_lo < x_hi)) throw std::invalid_argument("mesh needs x_lo < x_hi");
    if (!(yedge.front() > 0.0)) throw std::invalid_argument("mesh needs y_lo > 0");
    for (std::size_t i = 0; i + 1 < yedge.size(); ++i)
      if (!(yedge[i] < yedge[i + 1]))
        throw std::invalid_argument("mesh y levels must increase");
  }
};

// Pure geometric row spacing between y_lo and y_hi.
HyperbolicMesh make_geometric_mesh(double x_lo, double x_hi, int nx, double y_lo,
                                   double y_hi, int ny, bool periodic = false);

// Geometric rows with the given heights forced onto row edges (used to cut a
// field into exact scale strips). rows_per_octave controls density.
HyperbolicMesh make_cut_mesh(double x_lo, double x_hi, int nx, double y_lo, double y_hi,
                             const std::vector<double>& cuts, int rows_per_octave,
                             bool periodic = false);

struct NoiseRealization {
  HyperbolicMesh mesh;
  std::vector<double> values;  // row-major, ny x nx
  std::uint64_t seed = 0;
  double at(int r, int j) const { return values[static_cast<std::size_t>(r) * mesh.nx + j]; }
};

NoiseRealization sample_white_noise(const HyperbolicMesh& mesh, std::uint64_t seed);

// Precomputed area-fraction weights of a region at a set of shifts; reusable
// across noise draws on the same mesh.
class ShiftWeights {
public:
  ShiftWeights(const HyperbolicMesh& mesh, const RegionSpec& region,
               const std::vector<double>& shifts);

  // entry i = sum over cells of value * lambda(cell cap (region+shift_i)) / lambda(cell)
  std::vector<double> apply(const NoiseRealization& noise) const;

  // Deterministic mesh covariance between shifts i and j:
  //   sum over cells of area(cell) * w_i(cell) * w_j(cell).
  double covariance(std::size_t i, std::size_t j) const;

  std::size_t size() const { return entries_.size(); }

private:
  struct Entry {
    std::vector<int> row;
    std::vector<int> col;
    std::vector<double> w;
  };
  const HyperbolicMesh mesh_;
  std::vector<Entry> entries_;
};

std::vector<double> field_from_noise(const NoiseRealization& noise, const RegionSpec& region,
                                     const std::vector<double>& shifts);

// Dense exact-covariance sampler: Cholesky of the kernel matrix on the given
// points, with a tiny diagonal jitter retry before giving up.
std::vector<std::vector<double>> sample_exact(const CovKernel& kernel,
                                              const std::vector<double>& points,
                                              std::size_t draws, std::uint64_t seed);

}  // namespace gmclab
