#include "gmclab/regions.hpp"

#include <algorithm>

namespace gmclab {
namespace {

// Antiderivative pieces: integral over [p,q] of (alpha + beta*w(y))/y^2 where
// w is the region's section profile restricted to a breakpoint-free piece.
double piece_integral(const RegionSpec& r, double alpha, double beta, double p, double q) {
  double base = alpha * (1.0 / p - 1.0 / q);
  if (beta == 0.0) return base;
  switch (r.kind) {
    case RegionKind::TriangleU:
    case RegionKind::StripIncrement:
      return base + beta * std::log(q / p);
    case RegionKind::ConeA:
      if (p >= r.upper)  // above the cap the section is constant delta
        return base + beta * r.upper * (1.0 / p - 1.0 / q);
      return base + beta * std::log(q / p);
    case RegionKind::WedgeH:
      return base + beta * (wedge_tail_area(p) - wedge_tail_area(q));
  }
  return base;
}

}  // namespace

double box_overlap_area(const RegionSpec& r, double x0, double x1, double y0, double y1) {
  if (x1 <= x0 || y1 <= y0) return 0.0;
  double lo = std::max(y0, r.lower);
  double hi = std::min(y1, r.top());
  if (hi <= lo) return 0.0;

  const double t = r.shift;
  // Heights where the section endpoints t -/+ w(y)/2 cross a wall.
  std::vector<double> cuts{lo, hi};
  auto winv = [&](double v) -> double {
    if (v <= 0.0) return -1.0;
    switch (r.kind) {
      case RegionKind::TriangleU:
      case RegionKind::StripIncrement:
        return v;
      case RegionKind::ConeA:
        return v < r.upper ? v : -1.0;  // endpoints frozen above the cap
      case RegionKind::WedgeH:
        return wedge_width_inv(v);
    }
    return -1.0;
  };
  for (double v : {2.0 * (x0 - t), 2.0 * (x1 - t), 2.0 * (t - x0), 2.0 * (t - x1)}) {
    double y = winv(v);
    if (y > lo && y < hi) cuts.push_back(y);
  }
  if (r.kind == RegionKind::ConeA && r.upper > lo && r.upper < hi) cuts.push_back(r.upper);
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double p = cuts[i], q = cuts[i + 1];
    if (q - p <= 0.0) continue;
    double ym = 0.5 * (p + q);
    double w = r.width(ym);
    double L = t - 0.5 * w, R = t + 0.5 * w;
    if (R <= x0 || L >= x1 || w <= 0.0) continue;
    // classify the constant case on this piece: len = alpha + beta * w(y)
    double alpha, beta;
    bool right_inside = R <= x1;  // section right endpoint inside the box
    bool left_inside = L >= x0;
    if (right_inside && left_inside) {
      alpha = 0.0;
      beta = 1.0;  // len = w
    } else if (right_inside) {
      alpha = t - x0;
      beta = 0.5;  // len = t + w/2 - x0
    } else if (left_inside) {
      alpha = x1 - t;
      beta = 0.5;  // len = x1 - (t - w/2)
    } else {
      alpha = x1 - x0;
      beta = 0.0;  // box spanned
    }
    total += piece_integral(r, alpha, beta, p, q);
  }
  return total;
}

}  // namespace gmclab
