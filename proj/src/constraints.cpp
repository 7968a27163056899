#include "gmclab/constraints.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gmclab {
namespace {

void require_box(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("point outside parameter box: ") + what);
}

double sq(double x) { return x * x; }

// Slack of the moment-growth inequality at fixed (beta, c_r, p).
double growth_slack_at(double beta, double c_r, double p) {
  return -p * c_r + p * (1.0 - beta * (p - 1.0)) - 1.0;
}

double chain_rhs(double beta, double t) {
  return t * (1.0 + beta) + std::sqrt(32.0 * beta * t);
}

double t_substituted(double beta, double c_idb) {
  return c_idb + 4.0 * beta / sq(1.0 + beta);
}

double slack_c2(double beta, double eps_ratio, double p1) {
  const double lhs = (p1 - 1.0) / (p1 * beta);
  const double rhs = (1.0 + eps_ratio) * (1.0 + beta * (p1 * (1.0 + eps_ratio) + 1.0));
  return lhs - rhs;
}

// Canonical profile ids.
enum class Profile { Constraint2Only, Forcing, FullLambda0, FullCidb0, Joint };

Profile parse_profile(const std::string& raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) {
    if (c == ' ' || c == '\t') continue;
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  auto has = [&](const char* sub) { return s.find(sub) != std::string::npos; };
  if (has("constraint-2") || has("constraint2")) return Profile::Constraint2Only;
  if (has("forcing")) return Profile::Forcing;
  if (has("joint")) return Profile::Joint;
  if (has("cidb->0") || has("cidb-0") || has("cidb0") || has("c_idb->0") || has("c_idb-0") ||
      has("c_idb=0"))
    return Profile::FullCidb0;
  if (has("full")) return Profile::FullLambda0;
  throw std::invalid_argument("unknown constraint profile: " + raw);
}

std::string canonical_name(Profile p) {
  switch (p) {
    case Profile::Constraint2Only: return "constraint-2-only-p1-2";
    case Profile::Forcing: return "forcing-lambda0-0.01";
    case Profile::FullLambda0: return "full-lambda0-0.01";
    case Profile::FullCidb0: return "full-cidb-0";
    case Profile::Joint: return "joint-beta-lambda0";
  }
  throw std::logic_error("unreachable profile");
}

// Reduced inequalities per profile, each as name plus slack. The minimum
// slack decides feasibility for the bisection.
std::vector<ConstraintItem> reduced_items(Profile profile, double beta) {
  const double lambda0 = 0.01;
  const double root = std::sqrt(beta);
  const double cap = sq(1.0 - root);  // largest c_R allowed by the growth inequality
  std::vector<ConstraintItem> out;
  auto push = [&out](std::string name, double slack) {
    out.push_back({std::move(name), slack, slack > 0.0});
  };
  switch (profile) {
    case Profile::Constraint2Only: {
      push("ratio-moment", slack_c2(beta, 256.1 * beta, 2.0));
      break;
    }
    case Profile::Forcing: {
      push("decay-rate-forcing", cap - beta / lambda0);
      break;
    }
    case Profile::FullLambda0: {
      const double t = t_substituted(beta, 0.5);
      push("increment-deviation", 256.1 * 0.5 / 128.0 - 1.0);
      push("ratio-moment", slack_c2(beta, 256.1 * beta, 2.0));
      push("decay-rate-forcing", cap - beta / lambda0);
      push("tail-chain", (1.0 - lambda0) * cap - chain_rhs(beta, t));
      break;
    }
    case Profile::FullCidb0: {
      const double t = 4.0 * beta / sq(1.0 + beta);
      push("tail-chain", (1.0 - lambda0) * cap - chain_rhs(beta, t));
      break;
    }
    case Profile::Joint: {
      const double t = t_substituted(beta, 0.5);
      push("ratio-moment", slack_c2(beta, 256.1 * beta, 2.0));
      // lambda0 eliminated at its lower limit beta / c_R, which adds beta.
      push("tail-chain", cap - (chain_rhs(beta, t) + beta));
      break;
    }
  }
  return out;
}

bool profile_feasible(Profile profile, double beta) {
  const auto items = reduced_items(profile, beta);
  return std::all_of(items.begin(), items.end(),
                     [](const ConstraintItem& it) { return it.pass; });
}

}  // namespace

FeasibilityReport check_point(const ConstraintPoint& pt) {
  require_box(pt.beta > 0.0 && pt.beta < 1.0, "beta in (0,1)");
  require_box(pt.lambda0 > 0.0 && pt.lambda0 < 1.0, "lambda0 in (0,1)");
  require_box(pt.eps_ratio > 0.0, "eps_ratio positive");
  require_box(pt.c_idb > 0.0 && pt.c_idb < 1.0, "c_idb in (0,1)");
  require_box(pt.p > 0.0 && pt.p < 1.0 / pt.beta, "p in (0,1/beta)");
  require_box(pt.r_a > 0.0 && pt.r_a < pt.beta, "r_a in (0,beta)");
  require_box(pt.alpha > 0.0, "alpha positive");
  require_box(pt.c_r > 0.0, "c_R positive");
  require_box(pt.p1 > 1.0, "p1 > 1");
  require_box(pt.y > 1.0 && pt.y < 1.0005, "y in (1,1.0005)");

  FeasibilityReport rep;
  const double beta = pt.beta;
  const double t = (1.0 + pt.alpha) * pt.c_idb;
  const double st = std::sqrt(beta * t);

  rep.items[0] = {"increment-deviation",
                  pt.eps_ratio * (1.0 - pt.c_idb) / (128.0 * beta) - 1.0, false};
  rep.items[1] = {"ratio-moment", slack_c2(beta, pt.eps_ratio, pt.p1), false};
  rep.items[2] = {"decoupling-gap",
                  sq(beta + 1.0) / (4.0 * beta) - 0.5 * (1.0 / beta + 1.0) * pt.r_a -
                      4.0 / (pt.eps_ratio * (1.0 - pt.c_idb)),
                  false};
  rep.items[3] = {"moment-growth", growth_slack_at(beta, pt.c_r, pt.p), false};
  rep.items[4] = {"decay-rate", pt.c_r * pt.lambda0 / beta - 1.0, false};
  rep.items[5] = {"tail-chain",
                  ((1.0 - pt.lambda0) * pt.c_r - t) / st - st - std::sqrt(32.0 * pt.y), false};
  rep.items[6] = {"dilatation-moment",
                  sq(beta + 1.0) / (4.0 * beta) * pt.alpha * pt.c_idb - 1.0, false};

  rep.feasible = true;
  for (auto& item : rep.items) {
    item.pass = item.slack > 0.0;
    rep.feasible = rep.feasible && item.pass;
  }
  return rep;
}

double growth_slack_closed_form(double beta, double c_r) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const double p_opt = (1.0 + beta - c_r) / (2.0 * beta);
  if (p_opt > 0.0 && p_opt < 1.0 / beta) return sq(1.0 + beta - c_r) / (4.0 * beta) - 1.0;
  // Concave in p, so the supremum sits at the nearer end of (0, 1/beta).
  return std::max(-1.0, -c_r / beta);
}

double growth_slack_numeric(double beta, double c_r) {
  const double hi = 1.0 / beta;
  double best = -std::numeric_limits<double>::infinity();
  double best_p = hi / 2.0;
  for (int i = 1; i < 64; ++i) {
    const double p = hi * i / 64.0;
    const double s = growth_slack_at(beta, c_r, p);
    if (s > best) {
      best = s;
      best_p = p;
    }
  }
  double step = hi / 64.0;
  for (int round = 0; round < 3; ++round) {
    step /= 8.0;
    for (int i = -8; i <= 8; ++i) {
      const double p = best_p + step * i;
      if (p <= 0.0 || p >= hi) continue;
      const double s = growth_slack_at(beta, c_r, p);
      if (s > best) {
        best = s;
        best_p = p;
      }
    }
  }
  return best;
}

std::optional<ConstraintPoint> search_cr_p(const ConstraintPoint& pt) {
  const double beta = pt.beta;
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  const double cap = sq(1.0 - std::sqrt(beta));
  const double lo = std::max(beta, 1e-12);
  if (!(cap > lo)) return std::nullopt;

  auto min_slack = [&pt](double c_r, double p) -> double {
    ConstraintPoint cand = pt;
    cand.c_r = c_r;
    cand.p = p;
    const auto rep = check_point(cand);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& item : rep.items) worst = std::min(worst, item.slack);
    return worst;
  };
  auto best_p_for = [&beta](double c_r) {
    double p = (1.0 + beta - c_r) / (2.0 * beta);
    const double hi = 1.0 / beta;
    return std::clamp(p, hi * 1e-6, hi * (1.0 - 1e-6));
  };

  double best = -std::numeric_limits<double>::infinity();
  double best_cr = lo;
  const double llo = std::log(lo), lhi = std::log(cap * (1.0 - 1e-9));
  for (int i = 0; i < 64; ++i) {
    const double c_r = std::exp(llo + (lhi - llo) * (i + 0.5) / 64.0);
    const double s = min_slack(c_r, best_p_for(c_r));
    if (s > best) {
      best = s;
      best_cr = c_r;
    }
  }
  double step = (lhi - llo) / 64.0;
  double best_pp = best_p_for(best_cr);
  for (int round = 0; round < 3; ++round) {
    step /= 8.0;
    for (int i = -8; i <= 8; ++i) {
      const double c_r = std::exp(std::log(best_cr) + step * i);
      if (c_r <= lo || c_r >= cap) continue;
      const double s = min_slack(c_r, best_p_for(c_r));
      if (s > best) {
        best = s;
        best_cr = c_r;
      }
    }
    best_pp = best_p_for(best_cr);
    const double pstep = best_pp * 0.05 / (round + 1);
    for (int i = -8; i <= 8; ++i) {
      const double p = best_pp + pstep * i;
      if (p <= 0.0 || p >= 1.0 / beta) continue;
      const double s = min_slack(best_cr, p);
      if (s > best) {
        best = s;
        best_pp = p;
      }
    }
  }

  ConstraintPoint out = pt;
  out.c_r = best_cr;
  out.p = best_pp;
  if (!check_point(out).feasible) return std::nullopt;
  return out;
}

ProfileSolve solve_profile(const std::string& profile) {
  const Profile id = parse_profile(profile);
  const double tol = 1e-6;
  double lo = 1e-6;
  double hi = 0.99;
  if (!profile_feasible(id, lo)) throw std::domain_error("profile infeasible");
  if (profile_feasible(id, hi)) throw std::logic_error("bisection bracket invalid at upper end");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (profile_feasible(id, mid) ? lo : hi) = mid;
  }

  ProfileSolve out;
  out.profile = canonical_name(id);
  out.threshold = 0.5 * (lo + hi);
  out.tolerance = tol;
  out.gamma_threshold = gamma_from_beta(out.threshold);

  const double beta_w = std::max(out.threshold - 8.0 * tol, 0.5 * out.threshold);
  out.reduced = reduced_items(id, beta_w);

  ConstraintPoint w;
  w.beta = beta_w;
  w.lambda0 = 0.01;
  w.eps_ratio = 256.1 * beta_w;
  w.c_idb = (id == Profile::FullCidb0) ? 1e-6 : 0.5;
  w.alpha = 4.1 * beta_w / (sq(beta_w + 1.0) * w.c_idb);
  w.p1 = 2.0;
  w.r_a = beta_w / 4.0;
  w.y = 1.0001;
  if (id == Profile::Joint) {
    const double cap = sq(1.0 - std::sqrt(beta_w));
    w.lambda0 = std::min(0.5, 1.01 * beta_w / cap);
  }
  if (auto filled = search_cr_p(w)) {
    out.witness = *filled;
  } else {
    w.c_r = 0.9 * sq(1.0 - std::sqrt(beta_w));
    w.p = std::clamp((1.0 + beta_w - w.c_r) / (2.0 * beta_w), 1e-9, 1.0 / beta_w - 1e-9);
    out.witness = w;
  }
  return out;
}

double max_beta(const std::string& profile) { return solve_profile(profile).threshold; }

const std::vector<std::string>& constraint_profiles() {
  static const std::vector<std::string> names = {
      "constraint-2-only-p1-2", "forcing-lambda0-0.01", "full-lambda0-0.01",
      "full-cidb-0", "joint-beta-lambda0"};
  return names;
}

double gamma_from_beta(double beta) {
  if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
  return std::sqrt(2.0 * beta);
}

const std::vector<double>& reported_gamma_values() {
  static const std::vector<double> values = {0.1818, 0.17678, 0.11289};
  return values;
}

AnnuliReport check_annuli_profile(const AnnulusParams& params, const AnnuliExtras& extras) {
  const double beta1 = extras.beta1 > 0.0 ? extras.beta1 : 0.5 * sq(extras.gamma);
  const double beta2 = extras.beta2 > 0.0 ? extras.beta2 : beta1;
  const double beta = beta1;
  const double eps_ratio = extras.eps_ratio > 0.0 ? extras.eps_ratio : 256.1 * beta1;
  const double log_inv = -params.log_rho_star();
  const int k = extras.level;
  const double pk = params.P_at(k);

  AnnuliReport rep;
  auto push = [](std::vector<ConstraintItem>& list, std::string name, double slack,
                 bool strict = true) {
    list.push_back({std::move(name), slack, strict ? slack > 0.0 : slack >= 0.0});
  };

  // Welding checklist.
  push(rep.welding, "disjoint-annuli",
       std::min({params.r_a - params.r_b, 1.0 - (params.r_a - params.r_b),
                 beta / 2.0 - params.r_a}));
  push(rep.welding, "non-empty-annuli", (params.r_a - params.r_b) * log_inv - 2.0 * pk);
  {
    const double root_rho = std::exp(0.5 * params.log_rho_star());
    const double u = extras.c * extras.gamma *
                         (root_rho / (1.0 - root_rho)) *
                         std::pow(params.b(k) + params.d(k), 1.0 / 6.0) +
                     extras.c * extras.gamma * (params.rho_b() + params.rho_d());
    push(rep.welding, "pre-annulus-containment", std::min(pk - u, 1.0 - pk));
  }
  push(rep.welding, "disjoint-random-annuli", 1.0 - (params.r_a - params.r_b));
  push(rep.welding, "upper-truncation-scale", params.r_d - params.r_b);
  push(rep.welding, "truncated-increments",
       std::min(eps_ratio * (1.0 - extras.c_idb) / (128.0 * beta) - 1.0,
                slack_c2(beta, eps_ratio, extras.p1)));
  push(rep.welding, "decoupling-gap",
       sq(beta + 1.0) / (4.0 * beta) - 0.5 * (1.0 / beta + 1.0) * params.r_a -
           4.0 / (eps_ratio * (1.0 - extras.c_idb)));
  push(rep.welding, "annulus-count-floor",
       extras.n0 - (params.r_a - params.r_b + 1.0) / extras.c_r);

  // Independent-copies checklist. Radius ratios stay on the exponent scale
  // so very small rho_star cannot underflow them.
  const double ratio_ab = std::exp(-(params.r_a - params.r_b) * log_inv);
  const double ratio_pb = std::exp(-(params.r_p - params.r_b) * log_inv);
  push(rep.independent, "copy-exponent-order", beta1 - beta2, false);
  push(rep.independent, "overlapped-base-window",
       std::min({params.r_b + 0.5 * std::min(1.0, beta) - params.r_a,
                 params.r_a - params.r_b, 1.0 - ratio_ab - ratio_pb}));
  push(rep.independent, "overlap-deviation",
       (1.0 / (64.0 * beta1)) * sq(1.0 + beta1) * (eps_ratio / 2.0) - 1.0);
  push(rep.independent, "halved-base-exponent", beta / 2.0 - params.r_a);
  push(rep.independent, "base-overlap-margin",
       (1.0 - extras.c_ov * ratio_ab) / (1.0 + extras.c_ov * ratio_ab) -
           (ratio_ab + ratio_pb));

  rep.all_pass = true;
  for (const auto& item : rep.welding) rep.all_pass = rep.all_pass && item.pass;
  for (const auto& item : rep.independent) rep.all_pass = rep.all_pass && item.pass;
  return rep;
}

}  // namespace gmclab
