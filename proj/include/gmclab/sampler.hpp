#pragma once
// Strip sampler: evaluates mesh fields at every cell center of a periodic
// mesh. The map from white noise to field values is exactly the area-fraction
// stencil of noise.hpp; rows are convolved in frequency space purely as a way
// to evaluate those sums, so the law (and the randomness) is the cell model's.
//
// A "profile" is a region shape; its rows can be grouped into scale strips
// (consecutive row ranges) so one noise draw yields a whole family of fields
// (e.g. all truncation levels of the same cone) as partial sums over strips.

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "gmclab/noise.hpp"

namespace gmclab {

struct ProfileRequest {
  RegionSpec region;
  std::vector<double> cut_heights;  // strip boundaries; must lie on mesh row edges
};

class FieldSampler {
public:
  FieldSampler(const HyperbolicMesh& mesh, const std::vector<ProfileRequest>& profiles);
  ~FieldSampler();
  FieldSampler(const FieldSampler&) = delete;
  FieldSampler& operator=(const FieldSampler&) = delete;

  // Draws the mesh noise for `seed` and evaluates all profile/strip fields.
  void sample(std::uint64_t seed);

  int strips(int profile) const;
  // Field of strip s of profile p at all nx cell centers (valid until next sample()).
  const std::vector<double>& strip_field(int profile, int strip) const;
  // Sum of strips [strip_lo, strip_hi) accumulated into out.
  void accumulate(int profile, int strip_lo, int strip_hi, std::vector<double>& out) const;

  // Deterministic second moments of the stencil model (independent of draws):
  // covariance between cell centers offset by d columns, for the partial-sum
  // field of strips [lo,hi) of profiles p and q.
  double model_covariance(int p, int lo_p, int hi_p, int q, int lo_q, int hi_q,
                          int offset_cells) const;
  double model_variance(int p, int lo, int hi) const {
    return model_covariance(p, lo, hi, p, lo, hi, 0);
  }

  const HyperbolicMesh& mesh() const { return mesh_; }

private:
  struct Impl;
  HyperbolicMesh mesh_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gmclab
