#include "gmclab/kernels.hpp"

namespace gmclab {
namespace {

double eval_u(double delta, double eps, double s) {
  if (s >= delta) return 0.0;
  if (s <= eps) return std::log(delta / eps) - (1.0 / eps - 1.0 / delta) * s;
  return std::log(delta / s) - 1.0 + s / delta;
}

double eval_omega(double delta, double eps, double s) {
  if (s >= delta) return 0.0;
  if (s <= eps) return std::log(delta / eps) + 1.0 - s / eps;
  return std::log(delta / s);
}

// U-lambda: equals the plain U branches plus (1-lambda)(1-s/delta) up to the
// extended middle branch; the value drops to 0 with a jump at s = delta/lambda.
double eval_u_lambda(double delta, double eps, double lambda, double s) {
  if (s >= delta / lambda) return 0.0;
  if (s <= eps)
    return std::log(delta / eps) + 1.0 - lambda - s / eps + lambda * s / delta;
  return std::log(delta / s) + lambda * s / delta - lambda;
}

double eval_increment(double delta1, double delta2, double s) {
  if (s >= delta1) return 0.0;
  if (s <= delta2) return std::log(delta1 / delta2) - s * (1.0 / delta2 - 1.0 / delta1);
  return std::log(delta1 / s) - 1.0 + s / delta1;
}

// Circle wedge kernel as a function of the folded distance y in [0, 1/2].
double eval_h(double eps, double y) {
  double ystar = wedge_width(eps);
  if (y > ystar) return std::log(2.0 / std::sin(kPi * y));
  return wedge_tail_area(eps) - y / eps - std::log(std::cos(kPi * y / 2.0));
}

}  // namespace

double eval_kernel(const CovKernel& k, double separation) {
  double s = std::fabs(separation);
  switch (k.family) {
    case KernelFamily::U:
      return eval_u(k.delta, k.eps, s);
    case KernelFamily::Omega:
      return eval_omega(k.delta, k.eps, s);
    case KernelFamily::ULambda:
      return eval_u_lambda(k.delta, k.eps, k.lambda, s);
    case KernelFamily::Increment:
      return eval_increment(k.delta, k.delta2, s);
    case KernelFamily::H:
      return eval_h(k.eps, circle_fold(s));
    case KernelFamily::GKernel: {
      double base = eval_u(k.delta, k.eps, s);
      if (s < k.delta && k.g) base += k.g(s);
      return base;
    }
  }
  return 0.0;
}

}  // namespace gmclab
