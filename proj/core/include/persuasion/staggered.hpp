#pragma once

// Staggered-adoption persuasion rates.
//
// For each adopting cohort s and horizon j, the pair {cohort s vs. the
// never-treated group} x {period s-1 vs. period s+j} is a two-period design,
// estimated either by a saturated regression on the pair (REGRESSION) or by
// the doubly robust estimator with per-pair nuisance models (DR). Cohort
// results aggregate into the event-study persuasion rate at horizon j by
// weighting numerators and denominators separately with the cohort shares
// before taking the ratio. Standard errors come from a stacked
// influence-function expansion across cohorts.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "persuasion/dataset.hpp"
#include "persuasion/nuisance.hpp"
#include "persuasion/report.hpp"

namespace persuasion {

// Cohort/horizon persuasion rate from the saturated regression on the
// restricted pair. num and den are on the conditional (per-cohort) scale:
// num is the interaction coefficient of the pair regression and den is
// 1 - gamma0 - gamma1 - gamma2.
struct PairwiseTheta {
  int s = 0;
  int j = 0;
  double num = 0.0;
  double den = 0.0;
  double theta = 0.0;
  double gamma0 = 0.0;  // never-treated mean at t = s-1
  double gamma1 = 0.0;  // cohort-minus-control gap at t = s-1
  double gamma2 = 0.0;  // never-treated trend from s-1 to s+j
  // Cell means behind the gammas: [group][period] with group 0 = never
  // treated, group 1 = cohort s; period 0 = s-1, period 1 = s+j.
  double mean_pre_inf = 0.0;
  double mean_post_inf = 0.0;
  double mean_pre_s = 0.0;
  double mean_post_s = 0.0;
  int n_s = 0;
  int n_inf = 0;
};

// Saturated two-group, two-period estimate for cohort s at horizon j (j may
// be negative; j = -1 returns num = 0 and theta = 0 by construction).
// Errors: HORIZON_OUT_OF_RANGE when s or s+j leaves [0, T] (with s >= 1),
// EMPTY_GROUP when either group has no units, DEGENERATE_DENOMINATOR when
// the denominator is numerically zero (j != -1 only).
PairwiseTheta pairwise_theta(const StaggeredPanel& panel, int s, int j);

// Within-group saturated event-study regression: per-period outcome means
// relative to the anchor cohort's pre period (calendar time anchor - 1).
// For an adopting cohort the anchor is its own adoption time; the
// never-treated group needs the paired cohort's anchor passed explicitly.
struct EventStudyCoefficients {
  int group = 0;   // adoption time or kNeverTreated
  int anchor = 0;  // event time j corresponds to calendar t = anchor + j
  double mu_ref = 0.0;          // mean outcome at t = anchor - 1
  std::map<int, double> alpha;  // event time (j != -1) -> shift vs mu_ref
  int n_units = 0;
};

EventStudyCoefficients event_study_regression(const StaggeredPanel& panel,
                                              int group, int anchor);
// Anchor defaults to the group itself; rejects kNeverTreated, whose anchor
// is ambiguous without a paired cohort.
EventStudyCoefficients event_study_regression(const StaggeredPanel& panel,
                                              int group);

// theta(s, s+j) assembled from the cohort and never-treated event-study
// coefficients; agrees with pairwise_theta up to floating-point roundoff
// because both regressions are fully saturated.
double assemble_event_study_theta(const StaggeredPanel& panel, int s, int j);

enum class StaggerEstimator { REGRESSION, DR };
const char* stagger_estimator_name(StaggerEstimator e);

struct StaggeredOptions {
  NuisanceMethod method = NuisanceMethod::LOGISTIC;  // DR nuisances
  double eps_trim = 0.01;
  int level_cap = 20;  // CELL_MEANS cardinality cap
  double alpha = 0.05;
};

struct EsprReport {
  int j = 0;
  double theta = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.95;
  double num = 0.0;  // sum_s weight_s * num_s
  double den = 0.0;  // sum_s weight_s * den_s
  std::map<int, double> weights;  // cohort -> raw sample share n_s / n
  std::vector<PairwiseTheta> components;
  bool pretrend = false;
  StaggerEstimator estimator = StaggerEstimator::REGRESSION;
  int n = 0;
  std::vector<std::string> warnings;
};

// Event-study persuasion rate at horizon j: cohort numerators and
// denominators are aggregated with raw cohort shares BEFORE the ratio.
// Cohorts with fewer than two units in either group drop with a warning;
// NO_ELIGIBLE_GROUPS when none remain. DEGENERATE_DENOMINATOR when the
// aggregated denominator is numerically zero.
EsprReport espr(const StaggeredPanel& panel, int j,
                StaggerEstimator estimator = StaggerEstimator::REGRESSION,
                const StaggeredOptions& options = {});

// Pre-treatment placebo: same aggregation for j <= -1, restricted to cohorts
// whose pre period s+j is observable. j = -1 is identically zero by
// construction (reference-period normalization).
EsprReport espr_pretrend(const StaggeredPanel& panel, int j,
                         StaggerEstimator estimator = StaggerEstimator::REGRESSION,
                         const StaggeredOptions& options = {});

// Stacked influence-function inference for the weighted ratio-of-sums. The
// per-unit contribution vector stacks, per retained cohort, the centered
// numerator and denominator influence terms and the cohort-share term; sigma
// is its (cluster-aggregated) covariance and se projects sigma through the
// plug-in weight/ratio Jacobian. This overload rebuilds regression-style
// contributions (constant within-pair odds and control trend) from the panel;
// espr() itself reuses the same expansion with the DR nuisance values when
// estimator = DR.
struct StackedInference {
  double se = 0.0;
  Eigen::MatrixXd sigma;  // 3m x 3m, m = number of retained cohorts
};

StackedInference stacked_inference(const StaggeredPanel& panel,
                                   const std::vector<PairwiseTheta>& components,
                                   int j);

}  // namespace persuasion
