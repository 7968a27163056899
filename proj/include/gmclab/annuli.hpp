#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gmclab {

// Geometric data for the nested annulus family. The base scale is
// rho_star = 2^{-p_star}; level-k radii are powers rho_star^{r + k}, so all
// derived quantities are evaluated in log space to survive large p_star.
struct AnnulusParams {
  int p_star = 4;
  double r_a = 0.1;
  double r_b = 0.05;
  double r_d = 0.2;
  double r_p = 0.3;
  // Per-level perturbation exponents; size 1 broadcasts to every level.
  std::vector<double> P{0.01};

  double log_rho_star() const { return -static_cast<double>(p_star) * std::numbers::ln2; }

  double rho_star() const { return std::exp(log_rho_star()); }
  double rho_a() const { return std::exp(r_a * log_rho_star()); }
  double rho_b() const { return std::exp(r_b * log_rho_star()); }
  double rho_d() const { return std::exp(r_d * log_rho_star()); }
  double rho_p() const { return std::exp(r_p * log_rho_star()); }

  double P_at(int k) const {
    if (P.empty()) throw std::invalid_argument("annulus params: empty perturbation list");
    if (P.size() == 1) return P[0];
    if (k < 1 || static_cast<std::size_t>(k) > P.size())
      throw std::out_of_range("annulus params: no perturbation for requested level");
    return P[static_cast<std::size_t>(k) - 1];
  }

  // Inner/outer base radii and widths at level k >= 1.
  double a(int k) const { return std::exp((r_a + k) * log_rho_star()); }
  double b(int k) const { return std::exp((r_b + k) * log_rho_star()); }
  double delta(int k) const { return std::exp(static_cast<double>(k) * log_rho_star()); }
  double d(int k) const { return std::exp((r_d + k) * log_rho_star()); }
  double a_pert(int k) const { return a(k) * std::exp(P_at(k)); }
  double b_pert(int k) const { return b(k) * std::exp(-P_at(k)); }

  void validate(int levels = 1) const {
    if (p_star < 1) throw std::invalid_argument("annulus params: p_star must be >= 1");
    if (!(r_b > 0.0)) throw std::invalid_argument("annulus params: r_b must be positive");
    if (!(r_a > r_b)) throw std::invalid_argument("annulus params: r_a must exceed r_b");
    if (!(r_d > r_b)) throw std::invalid_argument("annulus params: r_d must exceed r_b");
    if (!(r_p > 0.0)) throw std::invalid_argument("annulus params: r_p must be positive");
    const double log_inv = -log_rho_star();
    for (int k = 1; k <= levels; ++k) {
      const double pk = P_at(k);
      if (!(pk > 0.0 && pk < 1.0))
        throw std::invalid_argument("annulus params: perturbation exponent outside (0,1)");
      if (!((r_a - r_b) * log_inv > 2.0 * pk))
        throw std::invalid_argument(
            "annulus params: perturbed annulus empty, needs (r_a-r_b)ln(1/rho_star) > 2P");
    }
  }
};

}  // namespace gmclab
