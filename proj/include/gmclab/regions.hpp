#pragma once
// Upper-half-plane regions whose hyperbolic areas drive the covariance
// kernels: the triangle over an interval, the capped cone, the arctan wedge
// (circle geometry), and the strip between two triangle tops. All are
// symmetric about a vertical axis, so a region is its section-width profile
// w(y) plus a height range; every area computation reduces to closed-form
// integrals of (alpha + beta*w(y))/y^2 between breakpoints.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gmclab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RegionKind { TriangleU, ConeA, WedgeH, StripIncrement };

// Wedge section length at height y: (2/pi) * atan(pi*y/2), increasing, < 1.
inline double wedge_width(double y) { return (2.0 / kPi) * std::atan(kPi * y / 2.0); }
inline double wedge_width_inv(double w) {
  if (w >= 1.0) return kInf;
  return (2.0 / kPi) * std::tan(kPi * w / 2.0);
}

// Integral of wedge_width(u)/u^2 over (e, inf); the wedge variance profile.
inline double wedge_tail_area(double e) {
  if (e <= 0.0) throw std::domain_error("infinite hyperbolic area");
  if (std::isinf(e)) return 0.0;
  return std::log(1.0 / e) + 0.5 * std::log(kPi * kPi * e * e + 4.0) +
         wedge_width(e) / e - std::log(kPi);
}

struct RegionSpec {
  RegionKind kind = RegionKind::TriangleU;
  double lower = 0.0;  // bottom height (eps / delta2)
  double upper = 0.0;  // top height (delta / delta1); wedge and cone may be inf
  double shift = 0.0;  // horizontal translation of the symmetry axis

  RegionSpec() = default;
  RegionSpec(RegionKind k, double lo, double hi, double sh = 0.0)
      : kind(k), lower(lo), upper(hi), shift(sh) {
    if (!(lower < upper)) throw std::invalid_argument("region requires lower < upper");
    if (kind == RegionKind::ConeA && std::isinf(upper))
      throw std::invalid_argument("cone width cap must be finite");
  }

  // Section width at height y. Cone sections keep width `upper` above the cap
  // and extend to arbitrary height; other kinds vanish above `upper`.
  double width(double y) const {
    if (y <= lower) return 0.0;
    switch (kind) {
      case RegionKind::TriangleU:
        return y <= upper ? y : 0.0;
      case RegionKind::ConeA:
        return std::min(y, upper);
      case RegionKind::WedgeH:
        return y <= upper ? wedge_width(y) : 0.0;
      case RegionKind::StripIncrement:
        return y <= upper ? y : 0.0;
    }
    return 0.0;
  }

  double top() const { return kind == RegionKind::ConeA ? kInf : upper; }
};

inline RegionSpec triangle_region(double eps, double delta, double shift = 0.0) {
  return {RegionKind::TriangleU, eps, delta, shift};
}
inline RegionSpec cone_region(double eps, double delta, double shift = 0.0) {
  return {RegionKind::ConeA, eps, delta, shift};
}
inline RegionSpec wedge_region(double eps, double y_hi = kInf, double shift = 0.0) {
  return {RegionKind::WedgeH, eps, y_hi, shift};
}
inline RegionSpec strip_region(double delta2, double delta1, double shift = 0.0) {
  return {RegionKind::StripIncrement, delta2, delta1, shift};
}

// Hyperbolic (dx dy / y^2) area, in closed form per kind.
inline double lambda_area(const RegionSpec& r) {
  if (r.lower <= 0.0) throw std::domain_error("infinite hyperbolic area");
  switch (r.kind) {
    case RegionKind::TriangleU:
      return std::log(r.upper / r.lower);
    case RegionKind::ConeA: {
      // sections min(y, delta) for y > eps, unbounded height
      double eps = r.lower, delta = r.upper;
      if (eps >= delta) return delta / eps;
      return std::log(delta / eps) + 1.0;
    }
    case RegionKind::WedgeH:
      return wedge_tail_area(r.lower) - wedge_tail_area(r.upper);
    case RegionKind::StripIncrement:
      return std::log(r.upper / r.lower);
  }
  return 0.0;
}

// Exact lambda-area of the intersection of region (already shifted) with the
// axis-aligned box [x0,x1] x [y0,y1]. Splits [y0,y1] at every height where a
// section endpoint crosses a box wall (plus the cone cap), then integrates the
// piecewise form (alpha + beta * w(y))/y^2 in closed form.
double box_overlap_area(const RegionSpec& r, double x0, double x1, double y0, double y1);

}  // namespace gmclab
