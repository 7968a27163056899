// Python bindings for the core library: kernels, measures, inverse maps,
// welding diagnostics, feasibility solving, Lehto machinery, tree modulus.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmclab/constraints.hpp"
#include "gmclab/gmc.hpp"
#include "gmclab/inverse.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/lehto.hpp"
#include "gmclab/treemod.hpp"
#include "gmclab/welding.hpp"

namespace py = pybind11;
using namespace gmclab;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian multiplicative chaos measures, conformal welding "
            "diagnostics, and Lehto lower-bound machinery";

  // ---- kernels ----
  py::class_<CovKernel>(m, "CovKernel")
      .def_property_readonly("support", &CovKernel::support);
  m.def("kernel_u", &kernel_u, py::arg("delta"), py::arg("eps"));
  m.def("kernel_omega", &kernel_omega, py::arg("delta"), py::arg("eps"));
  m.def("kernel_h", &kernel_h, py::arg("eps"));
  m.def("kernel_u_lambda", &kernel_u_lambda, py::arg("delta"), py::arg("eps"),
        py::arg("lambda_"));
  m.def("increment_kernel", &increment_kernel, py::arg("delta1"), py::arg("delta2"));
  m.def("eval_kernel", &eval_kernel, py::arg("kernel"), py::arg("separation"));
  m.def("kernel_variance", &kernel_variance, py::arg("kernel"));
  m.def("circle_fold", &circle_fold, py::arg("s"));

  // ---- measures ----
  py::class_<GmcMeasure>(m, "GmcMeasure")
      .def_readonly("x_lo", &GmcMeasure::x_lo)
      .def_readonly("h", &GmcMeasure::h)
      .def_readonly("periodic", &GmcMeasure::periodic)
      .def_readonly("mass", &GmcMeasure::mass)
      .def_readonly("cum", &GmcMeasure::cum)
      .def("cells", &GmcMeasure::cells)
      .def("period", &GmcMeasure::period)
      .def("x_hi", &GmcMeasure::x_hi)
      .def("total", &GmcMeasure::total)
      .def("cum_at", &GmcMeasure::cum_at, py::arg("x"))
      .def("measure_of", &GmcMeasure::measure_of, py::arg("a"), py::arg("b"));
  m.def(
      "build_measure",
      [](const std::vector<double>& field, double x_lo, double h, double gamma,
         double variance, bool periodic) {
        return build_measure(field, x_lo, h, gamma, variance, periodic);
      },
      py::arg("field"), py::arg("x_lo"), py::arg("h"), py::arg("gamma"),
      py::arg("variance"), py::arg("periodic") = false);
  m.def("zeta", &zeta, py::arg("gamma"), py::arg("q"));

  py::class_<CircleFieldConfig>(m, "CircleFieldConfig")
      .def(py::init<>())
      .def_readwrite("resolution", &CircleFieldConfig::resolution)
      .def_readwrite("delta", &CircleFieldConfig::delta)
      .def_readwrite("gamma", &CircleFieldConfig::gamma)
      .def_readwrite("rows_per_octave", &CircleFieldConfig::rows_per_octave)
      .def_readwrite("period", &CircleFieldConfig::period);
  py::class_<CircleGmc>(m, "CircleGmc")
      .def(py::init<const CircleFieldConfig&>(), py::arg("config"))
      .def("draw", &CircleGmc::draw, py::arg("seed"))
      .def("point_variance", &CircleGmc::point_variance);

  // ---- inverse maps ----
  m.def("q_of", &q_of, py::arg("measure"), py::arg("x"));
  m.def("q_increment", &q_increment, py::arg("measure"), py::arg("y"), py::arg("x"));
  m.def("q_bullet", &q_bullet, py::arg("measure"), py::arg("T"), py::arg("x"));
  m.def("dyadic_upper", &dyadic_upper, py::arg("a"), py::arg("n"));
  py::class_<Homeomorphism>(m, "Homeomorphism")
      .def(py::init<GmcMeasure>(), py::arg("tau"))
      .def("hinv", &Homeomorphism::hinv, py::arg("x"))
      .def("h", &Homeomorphism::h, py::arg("y"))
      .def("hinv_integral", &Homeomorphism::hinv_integral, py::arg("x"))
      .def("c0", &Homeomorphism::c0);

  // ---- welding ----
  py::class_<DyadicInterval>(m, "DyadicInterval")
      .def(py::init([](int n, std::uint64_t mm) {
             return DyadicInterval{n, mm};
           }),
           py::arg("n"), py::arg("m"))
      .def_readonly("n", &DyadicInterval::n)
      .def_readonly("m", &DyadicInterval::m)
      .def("lo", &DyadicInterval::lo)
      .def("hi", &DyadicInterval::hi)
      .def("length", &DyadicInterval::length);
  m.def("j5_intervals", &j5_intervals, py::arg("interval"));
  m.def("j5_pair_count", &j5_pair_count);
  m.def(
      "pair_ratio_sum",
      [](const std::vector<double>& masses) { return pair_ratio_sum(masses); },
      py::arg("masses"));
  m.def("ab_extension", &ab_extension, py::arg("hom"), py::arg("z"));
  py::class_<Dilatation>(m, "Dilatation")
      .def_readonly("mu", &Dilatation::mu)
      .def_readonly("k", &Dilatation::k);
  m.def("dilatation_numeric", &dilatation_numeric, py::arg("hom"), py::arg("z"),
        py::arg("step"));
  m.def("quasisym_delta", &quasisym_delta, py::arg("m1"), py::arg("m2"));
  m.def("dilatation_bound", &dilatation_bound, py::arg("tau"), py::arg("interval"));
  py::class_<IntegrabilityScan>(m, "IntegrabilityScan")
      .def_readonly("total", &IntegrabilityScan::total)
      .def_readonly("level_totals", &IntegrabilityScan::level_totals);
  m.def("integrability_scan", &integrability_scan, py::arg("tau"), py::arg("n_max"));

  // ---- feasibility system ----
  py::class_<ConstraintPoint>(m, "ConstraintPoint")
      .def(py::init<>())
      .def_readwrite("beta", &ConstraintPoint::beta)
      .def_readwrite("lambda0", &ConstraintPoint::lambda0)
      .def_readwrite("eps_ratio", &ConstraintPoint::eps_ratio)
      .def_readwrite("c_idb", &ConstraintPoint::c_idb)
      .def_readwrite("p", &ConstraintPoint::p)
      .def_readwrite("r_a", &ConstraintPoint::r_a)
      .def_readwrite("alpha", &ConstraintPoint::alpha)
      .def_readwrite("c_r", &ConstraintPoint::c_r)
      .def_readwrite("p1", &ConstraintPoint::p1)
      .def_readwrite("y", &ConstraintPoint::y);
  py::class_<ConstraintItem>(m, "ConstraintItem")
      .def_readonly("name", &ConstraintItem::name)
      .def_readonly("slack", &ConstraintItem::slack)
      .def_readonly("pass_", &ConstraintItem::pass);
  py::class_<FeasibilityReport>(m, "FeasibilityReport")
      .def_property_readonly("items",
                             [](const FeasibilityReport& r) {
                               return std::vector<ConstraintItem>(r.items.begin(),
                                                                  r.items.end());
                             })
      .def_readonly("feasible", &FeasibilityReport::feasible);
  m.def("check_point", &check_point, py::arg("point"));
  m.def("search_cr_p", &search_cr_p, py::arg("point"));
  m.def("growth_slack_closed_form", &growth_slack_closed_form, py::arg("beta"),
        py::arg("c_r"));
  m.def("growth_slack_numeric", &growth_slack_numeric, py::arg("beta"), py::arg("c_r"));
  py::class_<ProfileSolve>(m, "ProfileSolve")
      .def_readonly("profile", &ProfileSolve::profile)
      .def_readonly("threshold", &ProfileSolve::threshold)
      .def_readonly("tolerance", &ProfileSolve::tolerance)
      .def_readonly("witness", &ProfileSolve::witness)
      .def_readonly("reduced", &ProfileSolve::reduced)
      .def_readonly("gamma_threshold", &ProfileSolve::gamma_threshold);
  m.def("solve_profile", &solve_profile, py::arg("profile"));
  m.def("max_beta", &max_beta, py::arg("profile"));
  m.def("constraint_profiles", []() { return constraint_profiles(); });
  m.def("gamma_from_beta", &gamma_from_beta, py::arg("beta"));
  m.def("reported_gamma_values", []() { return reported_gamma_values(); });

  // ---- annuli ----
  py::class_<AnnulusParams>(m, "AnnulusParams")
      .def(py::init<>())
      .def_readwrite("p_star", &AnnulusParams::p_star)
      .def_readwrite("r_a", &AnnulusParams::r_a)
      .def_readwrite("r_b", &AnnulusParams::r_b)
      .def_readwrite("r_d", &AnnulusParams::r_d)
      .def_readwrite("r_p", &AnnulusParams::r_p)
      .def_readwrite("P", &AnnulusParams::P)
      .def("rho_star", &AnnulusParams::rho_star)
      .def("a", &AnnulusParams::a, py::arg("k"))
      .def("b", &AnnulusParams::b, py::arg("k"))
      .def("delta", &AnnulusParams::delta, py::arg("k"))
      .def("d", &AnnulusParams::d, py::arg("k"));
  py::class_<AnnuliExtras>(m, "AnnuliExtras")
      .def(py::init<>())
      .def_readwrite("gamma", &AnnuliExtras::gamma)
      .def_readwrite("c", &AnnuliExtras::c)
      .def_readwrite("eps_ratio", &AnnuliExtras::eps_ratio)
      .def_readwrite("c_idb", &AnnuliExtras::c_idb)
      .def_readwrite("p1", &AnnuliExtras::p1)
      .def_readwrite("c_r", &AnnuliExtras::c_r)
      .def_readwrite("n0", &AnnuliExtras::n0)
      .def_readwrite("c_ov", &AnnuliExtras::c_ov)
      .def_readwrite("beta1", &AnnuliExtras::beta1)
      .def_readwrite("beta2", &AnnuliExtras::beta2)
      .def_readwrite("level", &AnnuliExtras::level);
  py::class_<AnnuliReport>(m, "AnnuliReport")
      .def_readonly("welding", &AnnuliReport::welding)
      .def_readonly("independent", &AnnuliReport::independent)
      .def_readonly("all_pass", &AnnuliReport::all_pass);
  m.def("check_annuli_profile", &check_annuli_profile, py::arg("params"),
        py::arg("extras"));

  // ---- lehto ----
  py::class_<AnnulusLevel>(m, "AnnulusLevel")
      .def_readonly("k", &AnnulusLevel::k)
      .def_readonly("a", &AnnulusLevel::a)
      .def_readonly("b", &AnnulusLevel::b)
      .def_readonly("delta", &AnnulusLevel::delta)
      .def_readonly("d", &AnnulusLevel::d)
      .def_readonly("a_pert", &AnnulusLevel::a_pert)
      .def_readonly("b_pert", &AnnulusLevel::b_pert);
  py::class_<AnnulusFamily>(m, "AnnulusFamily")
      .def_readonly("levels", &AnnulusFamily::levels)
      .def_readonly("checklist", &AnnulusFamily::checklist)
      .def_readonly("all_pass", &AnnulusFamily::all_pass);
  m.def("annulus_family", &annulus_family, py::arg("params"), py::arg("n_levels"),
        py::arg("gamma") = 0.2, py::arg("c") = 1.0);
  m.def("center_count", &center_count, py::arg("params"), py::arg("n"),
        py::arg("eps_star") = 0.05);
  m.def("scaling_factor", &scaling_factor, py::arg("tau"), py::arg("eta_n"),
        py::arg("params"), py::arg("n"), py::arg("k"), py::arg("centers") = 0);
  py::class_<RandomAnnulus>(m, "RandomAnnulus")
      .def_readonly("level", &RandomAnnulus::level)
      .def_readonly("center", &RandomAnnulus::center)
      .def_readonly("scale", &RandomAnnulus::scale)
      .def_readonly("a0", &RandomAnnulus::a0)
      .def_readonly("b0", &RandomAnnulus::b0)
      .def_readonly("margin", &RandomAnnulus::margin)
      .def("a_scaled", &RandomAnnulus::a_scaled)
      .def("b_scaled", &RandomAnnulus::b_scaled);
  m.def("random_annulus", &random_annulus, py::arg("tau"), py::arg("eta_n"),
        py::arg("params"), py::arg("n"), py::arg("k"), py::arg("centers") = 0);
  m.def("disjointness_check", &disjointness_check, py::arg("m_n"), py::arg("m_next"),
        py::arg("params"), py::arg("n"));
  py::class_<LehtoQuad>(m, "LehtoQuad")
      .def_readonly("value", &LehtoQuad::value)
      .def_readonly("tolerance", &LehtoQuad::tolerance)
      .def_readonly("evaluations", &LehtoQuad::evaluations);
  m.def("lehto_integral", &lehto_integral, py::arg("k_field"), py::arg("center"),
        py::arg("r"), py::arg("big_r"), py::arg("tol") = 1e-9);
  m.def("lehto_integral_cubes", &lehto_integral_cubes, py::arg("h"), py::arg("r"),
        py::arg("big_r"), py::arg("tol") = 1e-9);
  m.def("branched_lehto", &branched_lehto, py::arg("k_upper"), py::arg("k_lower"),
        py::arg("r"), py::arg("big_r"));
  py::class_<DecoupledLevel>(m, "DecoupledLevel")
      .def_readonly("n", &DecoupledLevel::n)
      .def_readonly("sigma", &DecoupledLevel::sigma)
      .def_readonly("m", &DecoupledLevel::m)
      .def_readonly("l_diag", &DecoupledLevel::l_diag)
      .def_readonly("l_window", &DecoupledLevel::l_window)
      .def_readonly("radial", &DecoupledLevel::radial)
      .def_readonly("cube_count", &DecoupledLevel::cube_count)
      .def_readonly("scale_count", &DecoupledLevel::scale_count)
      .def_readonly("scale_count_ok", &DecoupledLevel::scale_count_ok);
  py::class_<DecoupledBound>(m, "DecoupledBound")
      .def_readonly("total", &DecoupledBound::total)
      .def_readonly("radial_integral", &DecoupledBound::radial_integral)
      .def_readonly("tolerance", &DecoupledBound::tolerance)
      .def_readonly("levels", &DecoupledBound::levels)
      .def_readonly("cardinality_ok", &DecoupledBound::cardinality_ok);
  m.def(
      "lehto_lower_bound",
      [](const GmcMeasure& h, const std::vector<double>& m_scale,
         const AnnulusParams& params, const std::vector<int>& chosen) {
        return lehto_lower_bound(h, m_scale, params, chosen);
      },
      py::arg("h"), py::arg("m_scale"), py::arg("params"), py::arg("chosen"));

  py::class_<LehtoStackConfig>(m, "LehtoStackConfig")
      .def(py::init<>())
      .def_readwrite("params", &LehtoStackConfig::params)
      .def_readwrite("levels", &LehtoStackConfig::levels)
      .def_readwrite("gamma", &LehtoStackConfig::gamma)
      .def_readwrite("resolution", &LehtoStackConfig::resolution)
      .def_readwrite("rows_per_octave", &LehtoStackConfig::rows_per_octave)
      .def_readwrite("eps_star", &LehtoStackConfig::eps_star);
  py::class_<LehtoStack>(m, "LehtoStack")
      .def(py::init<const LehtoStackConfig&>(), py::arg("config"))
      .def("sample", &LehtoStack::sample, py::arg("seed"))
      .def("tau", &LehtoStack::tau, py::return_value_policy::copy)
      .def("eta", &LehtoStack::eta, py::arg("n"), py::return_value_policy::copy)
      .def("scale_factors", &LehtoStack::scale_factors, py::arg("k"),
           py::arg("centers") = 0);

  py::class_<TailResult>(m, "TailResult")
      .def_readonly("n_values", &TailResult::n_values)
      .def_readonly("threshold", &TailResult::threshold)
      .def_readonly("frequency", &TailResult::frequency)
      .def_readonly("stderr_freq", &TailResult::stderr_freq)
      .def_readonly("mean_lehto", &TailResult::mean_lehto)
      .def_readonly("reps", &TailResult::reps);
  m.def(
      "lehto_tail_mc",
      [](const LehtoStackConfig& cfg, const std::vector<int>& n_values, double delta,
         std::size_t reps, std::uint64_t seed) {
        return lehto_tail_mc(cfg, n_values, delta, reps, seed);
      },
      py::arg("config"), py::arg("n_values"), py::arg("delta"), py::arg("reps"),
      py::arg("seed"));
  py::class_<GapAlphaResult>(m, "GapAlphaResult")
      .def_readonly("n_levels", &GapAlphaResult::n_levels)
      .def_readonly("histogram", &GapAlphaResult::histogram)
      .def_readonly("mean_ratio", &GapAlphaResult::mean_ratio)
      .def_readonly("stderr_ratio", &GapAlphaResult::stderr_ratio)
      .def_readonly("c_grid", &GapAlphaResult::c_grid)
      .def_readonly("below_freq", &GapAlphaResult::below_freq)
      .def_readonly("reps", &GapAlphaResult::reps);
  m.def("gap_alpha_mc", &gap_alpha_mc, py::arg("config"), py::arg("reps"),
        py::arg("seed"));
  m.def(
      "alpha_greedy",
      [](const std::vector<double>& lo, const std::vector<double>& hi) {
        return alpha_greedy(lo, hi);
      },
      py::arg("lo"), py::arg("hi"));
  m.def(
      "alpha_exact",
      [](const std::vector<double>& lo, const std::vector<double>& hi) {
        return alpha_exact(lo, hi);
      },
      py::arg("lo"), py::arg("hi"));
  py::class_<CenterPairing>(m, "CenterPairing")
      .def_readonly("k_idx", &CenterPairing::k_idx)
      .def_readonly("m_idx", &CenterPairing::m_idx)
      .def_readonly("radius", &CenterPairing::radius)
      .def_readonly("covers", &CenterPairing::covers);
  m.def(
      "pair_centers",
      [](const std::vector<double>& xs, const std::vector<double>& ys, double radius) {
        return pair_centers(xs, ys, radius);
      },
      py::arg("xs"), py::arg("ys"), py::arg("radius"));
  m.def("overlap_event",
        py::overload_cast<const RandomAnnulus&, const RandomAnnulus&, double>(
            &overlap_event),
        py::arg("a1"), py::arg("a2"), py::arg("margin"));

  // ---- tree modulus ----
  py::class_<TreeSpec>(m, "TreeSpec")
      .def(py::init<>())
      .def_readwrite("n_branch", &TreeSpec::n_branch)
      .def_readwrite("k", &TreeSpec::k)
      .def_readwrite("s", &TreeSpec::s)
      .def_readwrite("c_inf", &TreeSpec::c_inf)
      .def("depth", &TreeSpec::depth)
      .def("branches", &TreeSpec::branches);
  m.def("modulus_lower_bound", &modulus_lower_bound, py::arg("spec"));
  py::class_<WeightArea>(m, "WeightArea")
      .def_readonly("b", &WeightArea::b)
      .def_readonly("area", &WeightArea::area);
  m.def("weights_and_area", &weights_and_area, py::arg("spec"));
  m.def(
      "min_rho_length",
      [](const TreeSpec& spec, int base_scale, int window,
         const std::vector<double>& custom_b) {
        return min_rho_length(spec, base_scale, window, custom_b);
      },
      py::arg("spec"), py::arg("base_scale"), py::arg("window"),
      py::arg("custom_b") = std::vector<double>{});
  m.def("extinction_probability", &extinction_probability, py::arg("offspring_prob"));
  py::class_<GwProcess>(m, "GwProcess")
      .def(py::init<>())
      .def_readwrite("offspring_prob", &GwProcess::offspring_prob)
      .def_readwrite("roots", &GwProcess::roots)
      .def_readwrite("seed", &GwProcess::seed);
  py::class_<GwEstimate>(m, "GwEstimate")
      .def_readonly("mean_population", &GwEstimate::mean_population)
      .def_readonly("population_se", &GwEstimate::population_se)
      .def_readonly("c_estimate", &GwEstimate::c_estimate)
      .def_readonly("c_se", &GwEstimate::c_se)
      .def_readonly("survival_fraction", &GwEstimate::survival_fraction)
      .def_readonly("survival_se", &GwEstimate::survival_se)
      .def_readonly("extinction_root", &GwEstimate::extinction_root);
  m.def("gw_estimate", &gw_estimate, py::arg("process"), py::arg("max_depth"),
        py::arg("reps"));

  // ---- Monte Carlo inverse diagnostics ----
  py::class_<McSummary>(m, "McSummary")
      .def_readonly("estimate", &McSummary::estimate)
      .def_readonly("stderr_est", &McSummary::stderr_est)
      .def_readonly("reps", &McSummary::reps)
      .def_readonly("reliable", &McSummary::reliable)
      .def_readonly("kurtosis", &McSummary::kurtosis);
  py::class_<SmpTestResult>(m, "SmpTestResult")
      .def_readonly("pearson", &SmpTestResult::pearson)
      .def_readonly("dcor", &SmpTestResult::dcor)
      .def_readonly("perm_p", &SmpTestResult::perm_p)
      .def_readonly("threshold", &SmpTestResult::threshold)
      .def_readonly("pass_", &SmpTestResult::pass)
      .def_readonly("degenerate", &SmpTestResult::degenerate);
  m.def("smp_test", &smp_test, py::arg("gamma"), py::arg("delta"), py::arg("r"),
        py::arg("reps"), py::arg("seed"), py::arg("resolution") = 1024);
  py::class_<MeanShiftResult>(m, "MeanShiftResult")
      .def_readonly("mean_q", &MeanShiftResult::mean_q)
      .def_readonly("stderr_est", &MeanShiftResult::stderr_est)
      .def_readonly("lower99", &MeanShiftResult::lower99)
      .def_readonly("pass_", &MeanShiftResult::pass);
  m.def("mean_shift_mc", &mean_shift_mc, py::arg("gamma"), py::arg("delta"),
        py::arg("a"), py::arg("reps"), py::arg("seed"), py::arg("resolution") = 1024);
}
