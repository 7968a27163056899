#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gmclab/annuli.hpp"

namespace gmclab {

// One point of the ten-variable feasibility system.
struct ConstraintPoint {
  double beta = 0.0;
  double lambda0 = 0.0;
  double eps_ratio = 0.0;
  double c_idb = 0.0;
  double p = 0.0;
  double r_a = 0.0;
  double alpha = 0.0;
  double c_r = 0.0;
  double p1 = 2.0;
  double y = 1.0001;
};

struct ConstraintItem {
  std::string name;
  // Left side minus right side of the strict inequality; positive passes.
  double slack = 0.0;
  bool pass = false;
};

struct FeasibilityReport {
  std::array<ConstraintItem, 7> items;
  bool feasible = false;
};

// Validates box membership and evaluates the seven strict inequalities.
FeasibilityReport check_point(const ConstraintPoint& pt);

// Fills c_r and p (the two free coordinates of the deterministic system) by
// log-grid search plus coordinate descent, maximizing the minimum slack.
// Returns the completed point when a feasible completion exists.
std::optional<ConstraintPoint> search_cr_p(const ConstraintPoint& pt);

// Largest p-slack of the growth inequality at fixed c_r, maximized over p in
// closed form; positive iff c_r < (1 - sqrt(beta))^2.
double growth_slack_closed_form(double beta, double c_r);
// Same maximization by grid search over p, for cross-checking.
double growth_slack_numeric(double beta, double c_r);

struct ProfileSolve {
  std::string profile;
  double threshold = 0.0;
  double tolerance = 1e-6;
  ConstraintPoint witness;
  // Reduced profile inequalities evaluated at the witness.
  std::vector<ConstraintItem> reduced;
  double gamma_threshold = 0.0;
};

// Supremum of feasible beta for a named substitution profile. Bisection with
// absolute tolerance 1e-6; throws std::domain_error("profile infeasible")
// when even beta = 1e-6 fails.
ProfileSolve solve_profile(const std::string& profile);
double max_beta(const std::string& profile);

// Canonical profile names accepted by solve_profile (aliases normalize here).
const std::vector<std::string>& constraint_profiles();

double gamma_from_beta(double beta);

// Differing reported gamma thresholds retained for comparison, never adjudicated.
const std::vector<double>& reported_gamma_values();

// Inputs for the annulus checklists that are not part of AnnulusParams.
struct AnnuliExtras {
  double gamma = 0.2;
  double c = 1.0;  // constant in the containment bound
  double eps_ratio = 0.0;  // <= 0 selects the default 256.1 * beta1
  double c_idb = 0.5;
  double p1 = 2.0;
  double c_r = 0.2;
  double n0 = 6.0;
  double c_ov = 0.49;
  double beta1 = 0.0;  // <= 0 defaults to gamma^2 / 2
  double beta2 = 0.0;  // <= 0 defaults to beta1
  int level = 1;       // level at which per-level items are evaluated
};

struct AnnuliReport {
  std::vector<ConstraintItem> welding;      // eight items
  std::vector<ConstraintItem> independent;  // five items
  bool all_pass = false;
};

AnnuliReport check_annuli_profile(const AnnulusParams& params, const AnnuliExtras& extras);

}  // namespace gmclab
