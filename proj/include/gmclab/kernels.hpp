#pragma once
// Closed-form covariance kernels of the hyperbolic-area fields. Each kernel
// value at separation s equals the lambda-area of the intersection of two
// shifted copies of the generating region; the branch formulas below are
// those overlap areas worked out exactly.

#include <cmath>
#include <functional>
#include <stdexcept>

#include "gmclab/regions.hpp"

namespace gmclab {

enum class KernelFamily { U, H, Omega, ULambda, Increment, GKernel };

struct CovKernel {
  KernelFamily family = KernelFamily::U;
  double delta = 1.0;   // outer scale (delta1 for Increment)
  double eps = 0.1;     // inner scale (unused by Increment)
  double lambda = 1.0;  // ULambda contraction in (0,1]
  double delta2 = 0.0;  // Increment inner scale
  std::function<double(double)> g;  // optional bounded perturbation, support [0,delta]
  double m_g = 0.0;                 // sup bound used by dependent estimates

  // Largest separation with a nonzero value (H folds on the unit circle).
  double support() const {
    switch (family) {
      case KernelFamily::U:
      case KernelFamily::Omega:
      case KernelFamily::GKernel:
        return delta;
      case KernelFamily::ULambda:
        return delta / lambda;
      case KernelFamily::Increment:
        return delta;
      case KernelFamily::H:
        return kInf;
    }
    return delta;
  }
};

inline CovKernel kernel_u(double delta, double eps) {
  if (!(eps > 0.0 && delta > eps)) throw std::invalid_argument("kernel U requires 0 < eps < delta");
  return {KernelFamily::U, delta, eps};
}
inline CovKernel kernel_omega(double delta, double eps) {
  if (!(eps > 0.0 && delta > eps))
    throw std::invalid_argument("kernel omega requires 0 < eps < delta");
  return {KernelFamily::Omega, delta, eps};
}
inline CovKernel kernel_h(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("kernel H requires eps > 0");
  CovKernel k;
  k.family = KernelFamily::H;
  k.eps = eps;
  k.delta = kInf;
  return k;
}
inline CovKernel kernel_u_lambda(double delta, double eps, double lambda) {
  if (!(eps > 0.0 && delta > eps))
    throw std::invalid_argument("kernel U-lambda requires 0 < eps < delta");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("kernel U-lambda requires lambda in (0,1]");
  CovKernel k{KernelFamily::ULambda, delta, eps};
  k.lambda = lambda;
  return k;
}
inline CovKernel increment_kernel(double delta1, double delta2) {
  if (!(delta2 > 0.0 && delta1 > delta2))
    throw std::invalid_argument("increment kernel requires delta1 > delta2 > 0");
  CovKernel k{KernelFamily::Increment, delta1};
  k.delta2 = delta2;
  return k;
}
inline CovKernel kernel_g(double delta, double eps, std::function<double(double)> g,
                          double m_g) {
  CovKernel k = kernel_u(delta, eps);
  k.family = KernelFamily::GKernel;
  k.g = std::move(g);
  k.m_g = m_g;
  return k;
}

// Fold a circle separation to [0, 1/2].
inline double circle_fold(double s) {
  double y = std::fabs(s);
  y -= std::floor(y);
  return y <= 0.5 ? y : 1.0 - y;
}

double eval_kernel(const CovKernel& k, double separation);

// Variance of the field the kernel belongs to; equals eval_kernel(k, 0).
inline double kernel_variance(const CovKernel& k) { return eval_kernel(k, 0.0); }

}  // namespace gmclab
