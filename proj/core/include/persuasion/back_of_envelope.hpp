#pragma once

// Back-of-the-envelope persuasion-rate estimates from published ATT numbers.
//
// Given an ATT estimate, its standard error, and an interval [q_lower,
// q_upper] bounding q = Pr(Y1 = 0 | D1 = 1), these helpers rescale the ATT
// into APRT / R-APRT points and build Bonferroni confidence intervals that
// split the error budget between the ATT estimate and the q interval.

#include <optional>
#include <utility>

#include "persuasion/report.hpp"

namespace persuasion {

struct BoeInput {
  double att = 0.0;
  double se_att = 0.0;
  // Optional point value for q; when present it must lie in
  // [q_lower, q_upper].
  std::optional<double> q;
  double q_lower = 0.0;
  double q_upper = 0.0;
  double alpha = 0.05;
  // Share of the error budget allocated to the q interval; defaults to
  // alpha / 2 when unset.
  std::optional<double> alpha0;

  double resolved_alpha0() const { return alpha0 ? *alpha0 : alpha / 2.0; }
  // Throws Error on violated field constraints.
  void validate() const;
};

// Rescales an ATT into a persuasion rate at a fixed q:
//   APRT(q)   = att / (att + q)
//   R-APRT(q) = att / (1 - q)
// Errors: NEGATIVE_ATT if att < 0; DEGENERATE_DENOMINATOR if the denominator
// is not positive; INVALID_INPUT for targets other than APRT / RAPRT.
double boe_point(double att, double q, Estimand target);

// Bonferroni confidence interval for the chosen target. The z quantile is
// z_{1 - (alpha - alpha0)/2}; the interval combines the worst-case endpoint
// of [q_lower, q_upper] with a delta-method standard error at that endpoint.
std::pair<double, double> boe_ci(const BoeInput& input, Estimand target);

// Wald interval for q from treated-arm counts: successes is the number of
// treated units with Y1 = 0. Returns qhat +/- z_{(1+level)/2} *
// sqrt(qhat (1 - qhat) / n), truncated to the open interval (0, 1).
std::pair<double, double> q_interval_from_counts(long long successes,
                                                 long long n_treated,
                                                 double level);

// Full report for CLI output: point (when q given) and CI for one target.
EstimateReport boe_report(const BoeInput& input, Estimand target);

}  // namespace persuasion
