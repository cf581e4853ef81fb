#pragma once

#include <cstdint>
#include <optional>

#include "persuasion/dataset.hpp"
#include "persuasion/nuisance.hpp"
#include "persuasion/report.hpp"

namespace persuasion {

// ---------------------------------------------------------------------------
// The counterfactual success probability Psi
// ---------------------------------------------------------------------------

// Psi(x) predicts Pr{Y1(0) = 1 | D = 1, x}: the post-period success rate the
// treated would have had without treatment. On a chosen scale Lambda it is
//   Psi = Lambda^{-1}[ Lambda(Pi_0(1,x)) + Lambda(Pi_1(0,x)) - Lambda(Pi_0(0,x)) ],
// i.e. the treated pre-period level shifted by the control group's trend.
enum class Link {
  IDENTITY,     // additive trends; result clipped to [0,1] (clips counted)
  LOGIT,        // log-odds scale; inputs must lie in (0,1)
  EXPONENTIAL,  // Lambda(p) = -log(1-p); composed value must stay >= 0
};

const char* link_name(Link link);

// Psi from the three ingredient probabilities
// (Pi_0(1,x), Pi_1(0,x), Pi_0(0,x)). `clipped` (optional) reports whether the
// IDENTITY result had to be clipped. Domain violations raise LINK_DOMAIN.
double psi_value(double pi0_treated, double pi1_control, double pi0_control,
                 Link link, bool* clipped = nullptr);

struct PsiValues {
  std::vector<double> value;  // per unit
  int clip_count = 0;
};

PsiValues compute_psi(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                      Link link);

// Psi at new covariates through the fit's full-sample models.
double psi_at(const NuisanceFit& fit, Link link, const Eigen::RowVectorXd& x);

// ---------------------------------------------------------------------------
// Semiparametric estimators
// ---------------------------------------------------------------------------

enum class SemiparEstimator { DID, PI, POW, DR };

const char* semipar_estimator_name(SemiparEstimator e);

// Per-unit pieces of the efficient influence function, in two algebraically
// equivalent arrangements: "pow" weights raw outcomes by the propensity odds
// w(x) = P(x)/(1-P(x)); "pi" centers outcomes at the fitted control trend
// Delta(0,x). For every unit,
//   pow_num + pow_adj == pi_num + pi_adj  and
//   pow_den + pow_adj == pi_den + pi_adj
// hold exactly (same rearrangement of the same terms).
struct EifTerms {
  std::vector<double> pow_num, pow_den, pow_adj;
  std::vector<double> pi_num, pi_den, pi_adj;
};

EifTerms compute_eif_terms(const TwoPeriodPanel& panel, const NuisanceFit& fit);

// The four estimators of the persuasion rate (target APRT) or the reverse
// rate (target RAPRT). All formulas are trimmed-nuisance plug-ins; sums run
// in unit order so results are deterministic.
//
//   DID: ratio of outcome-regression contrasts; accepts a Psi link.
//   PI:  plug-in using only the control trend Delta(0,x).
//   POW: propensity-odds weighting, no outcome model.
//   DR:  doubly robust combination (consistent if either leg is right).
//
// Standard errors come from the efficient influence function evaluated at the
// estimator's own point and denominator: se = sqrt(mean(F^2)/n)
// (cluster-aggregated with a G/(G-1) factor when cluster ids are present).
EstimateReport estimate_did(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                            Estimand target, double alpha = 0.05,
                            Link link = Link::IDENTITY);
EstimateReport estimate_pi(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                           Estimand target, double alpha = 0.05);
EstimateReport estimate_pow(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                            Estimand target, double alpha = 0.05);
EstimateReport estimate_dr(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                           Estimand target, double alpha = 0.05);

EstimateReport estimate_semipar(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                                SemiparEstimator estimator, Estimand target,
                                double alpha = 0.05, Link link = Link::IDENTITY);

// Standalone EIF standard error at an externally supplied point, using the
// doubly-robust sample-analog denominators (mean F vanishes exactly at the DR
// point under this convention).
double eif_se(const TwoPeriodPanel& panel, const NuisanceFit& fit, double point,
              Estimand target);

// Per-unit influence values under the same convention (for diagnostics/CSV).
std::vector<double> eif_values(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                               double point, Estimand target);

// ---------------------------------------------------------------------------
// Selection-on-observables variant and its diagnostic
// ---------------------------------------------------------------------------

// Re-runs a semiparametric estimator treating Z = [Y0, X] as the conditioning
// set (unconfoundedness instead of parallel trends). The t = 0 outcome models
// are then degenerate -- Pr(Y0 = 1 | d, z) is Y0 itself -- and are pinned to
// the observed Y0 exactly rather than fitted.
EstimateReport estimate_unconfoundedness_mode(
    const TwoPeriodPanel& panel, NuisanceMethod method,
    SemiparEstimator estimator, Estimand target, double alpha = 0.05,
    std::optional<int> crossfit_k = std::nullopt, std::uint64_t seed = 0);

// Wald test of the Y0 coefficient in a logistic regression of D on (1, X, Y0):
// under unconfoundedness-style selection Y0 predicts D, under parallel-trends
// randomization it should not.
struct WaldTest {
  double coefficient = 0;
  double se = 0;
  double statistic = 0;
  double pvalue = 1;
};

WaldTest test_y0_independence(const TwoPeriodPanel& panel);

}  // namespace persuasion
