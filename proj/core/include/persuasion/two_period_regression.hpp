#pragma once

#include <Eigen/Dense>

#include "persuasion/dataset.hpp"
#include "persuasion/report.hpp"

namespace persuasion {

// Coefficients of the saturated two-way fixed-effects regression
//   Y_it = gamma0 + D_i*gamma1 + t*gamma2 + t*D_i*gamma + eps_it.
// For a saturated binary design the OLS solution is a bijection of the four
// (arm, period) cell means, which is how it is computed here:
//   gamma0 = E[Y_0|D=0], gamma1 = E[Y_0|D=1] - E[Y_0|D=0],
//   gamma2 = E[Y_1|D=0] - E[Y_0|D=0], gamma = difference-in-differences.
struct FeCoefficients {
  double gamma0 = 0, gamma1 = 0, gamma2 = 0, gamma = 0;
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;  // m[d][t] cell means
  int n0 = 0, n1 = 0;
};

FeCoefficients fit_two_way_fe(const TwoPeriodPanel& panel);

// Persuasion rate from the FE coefficients:
//   theta = gamma / (1 - gamma0 - gamma1 - gamma2).
// The denominator estimates Pr{Y_1(0) = 0 | D = 1} under parallel trends.
// Standard errors: delta method over the joint (cluster-robust) covariance of
// the cell means; units are the default clusters.
EstimateReport aprt_from_fe(const FeCoefficients& coef, const TwoPeriodPanel& panel,
                            double alpha = 0.05);

// Reverse persuasion rate: theta_r = gamma / (gamma0+gamma1+gamma2+gamma),
// whose denominator is E[Y_1 | D = 1].
EstimateReport raprt_from_fe(const FeCoefficients& coef, const TwoPeriodPanel& panel,
                             double alpha = 0.05);

// ATT (= gamma) with its own standard error, for back-of-envelope inputs.
EstimateReport att_from_fe(const FeCoefficients& coef, const TwoPeriodPanel& panel,
                           double alpha = 0.05);

// IV/GMM form of the same estimands: slope of Delta Y on A instrumented by D,
// where A = D + Y1(1-D) - Y0 for the persuasion rate and A = Y1*D for the
// reverse rate. Point estimates coincide with the FE transforms; the standard
// error comes from the just-identified GMM sandwich, so t-statistics can
// differ slightly.
EstimateReport gmm_iv(const TwoPeriodPanel& panel, Estimand target,
                      double alpha = 0.05);

// Joint GMM over both targets' moment conditions: enables a Wald test of
// APRT - RAPRT using the joint covariance of the two slopes.
struct JointGmm {
  EstimateReport aprt;
  EstimateReport raprt;
  double difference = 0;
  double difference_se = 0;
  double difference_z = 0;
  double difference_pvalue = 1;
};

JointGmm gmm_iv_joint(const TwoPeriodPanel& panel, double alpha = 0.05);

// Decomposition of the treated at t = 1 into never-persuaded (Y1 = 0),
// already-persuaded (Y1 = 1 without the campaign) and the persuaded (ATT),
// computed so that tp + np + ap == 1 holds exactly in floating point.
struct TypeShares {
  double tp = 0;  // persuaded (= ATT)
  double np = 0;  // never persuaded: Pr(Y1 = 0 | D = 1)
  double ap = 0;  // already persuaded
  std::vector<std::string> warnings;
};

TypeShares type_shares(const TwoPeriodPanel& panel, double att);

// Residualizes each period's outcome on the (demeaned) covariates by OLS,
// preserving period means so the level structure the persuasion denominators
// need stays intact. The result is flagged `residualized` and carries a
// mandatory warning: downstream FE/GMM persuasion rates are then linear
// approximations, and the semiparametric estimators refuse such panels.
TwoPeriodPanel partial_out_covariates(const TwoPeriodPanel& panel);

}  // namespace persuasion
