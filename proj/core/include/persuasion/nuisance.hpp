#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "persuasion/dataset.hpp"

namespace persuasion {

enum class NuisanceMethod {
  LOGISTIC,    // logistic index model in the covariates
  CELL_MEANS,  // saturated: one mean per discrete covariate cell
  CONSTANT,    // covariate-free arm mean
  MANUAL,      // caller-supplied per-unit values (sensitivity analysis)
};

const char* nuisance_method_name(NuisanceMethod m);

// ---------------------------------------------------------------------------
// Cross-fitting folds
// ---------------------------------------------------------------------------

// Fold assignment is a pure function of (seed, n, k, treatment stratum,
// canonical unit index): units are ranked inside each arm by a hash of their
// index and dealt round-robin through a global position counter, so fold
// sizes differ by at most one overall and within each arm.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // fold id per unit, in [0, k)

  static FoldPlan make(const TwoPeriodPanel& panel, int k, std::uint64_t seed);
};

// ---------------------------------------------------------------------------
// Fitted probability models
// ---------------------------------------------------------------------------

// A single conditional-probability model Pr(response = 1 | x), fitted by one
// of the methods above. Predictions are raw (untrimmed).
struct ProbModel {
  NuisanceMethod kind = NuisanceMethod::CONSTANT;
  double constant = 0.5;
  std::map<std::vector<double>, double> cells;  // CELL_MEANS lookup
  Eigen::VectorXd beta;                         // LOGISTIC: intercept first
  bool converged = true;
  int iterations = 0;

  double predict(const Eigen::RowVectorXd& x) const;
};

// Fits Pr(y = 1 | x) on the given subset of rows. LOGISTIC requires
// subset size >= x_dim + 1 (INSUFFICIENT_ARM otherwise) and falls back to the
// closed-form arm mean when there are no covariates, so that covariate-free
// fits are exact rather than iterative.
ProbModel fit_binary_model(const Eigen::MatrixXd& x, const std::vector<double>& y,
                           const std::vector<int>& subset, NuisanceMethod method,
                           int level_cap = 20);

// ---------------------------------------------------------------------------
// NuisanceFit: everything the semiparametric estimators consume
// ---------------------------------------------------------------------------

// Per-unit predictions of the four outcome regressions Pr(Y_t = 1 | D = d, x)
// and of the treatment propensity Pr(D = 1 | x), aligned with the panel used
// for fitting. With a fold plan the per-unit values are out-of-fold
// (cross-fitted); the stored models are always full-sample and serve
// prediction at new covariate values. All stored predictions are trimmed to
// [eps_trim, 1 - eps_trim], with bind counts recorded.
struct NuisanceFit {
  NuisanceMethod method = NuisanceMethod::CONSTANT;
  double eps_trim = 0.01;

  std::array<std::array<std::vector<double>, 2>, 2> pi_hat;  // [t][d][unit]
  std::vector<double> p_hat;                                 // propensity

  std::array<std::array<ProbModel, 2>, 2> models;  // [t][d], full sample
  ProbModel propensity_model;

  std::optional<FoldPlan> folds;
  int trim_count_outcome = 0;
  int trim_count_propensity = 0;
  // Unconfoundedness-mode fits pin Pr(Y_0 = 1 | d, z) to the observed Y_0
  // (it is part of z); those values are exact and deliberately untrimmed.
  bool unconfoundedness = false;

  double pi(int t, int d, int i) const { return pi_hat[t][d][i]; }
  double p(int i) const { return p_hat[i]; }
  // Trend of the d-arm outcome regression at unit i's covariates.
  double delta(int d, int i) const { return pi_hat[1][d][i] - pi_hat[0][d][i]; }
  double odds(int i) const { return p_hat[i] / (1.0 - p_hat[i]); }

  // Sensitivity-analysis overrides: replace one leg with caller-supplied
  // per-unit values (trimmed like any other prediction) and keep the rest.
  NuisanceFit with_propensity(std::vector<double> values) const;
  NuisanceFit with_outcome(int t, int d, std::vector<double> values) const;
};

NuisanceFit fit_nuisance(const TwoPeriodPanel& panel, NuisanceMethod method,
                         std::optional<FoldPlan> folds = std::nullopt,
                         double eps_trim = 0.01, int level_cap = 20);

// Builds a fit from explicit per-unit values (method = MANUAL).
NuisanceFit manual_nuisance(const TwoPeriodPanel& panel,
                            std::vector<double> pi_t0_d0,
                            std::vector<double> pi_t0_d1,
                            std::vector<double> pi_t1_d0,
                            std::vector<double> pi_t1_d1,
                            std::vector<double> propensity,
                            double eps_trim = 0.01);

// Trend prediction Delta(0, x) = Pr(Y1=1|D=0,x) - Pr(Y0=1|D=0,x) at new x,
// through the full-sample models (trimmed).
double predict_delta0(const NuisanceFit& fit, const Eigen::RowVectorXd& x);

// Propensity odds P(x) / (1 - P(x)) at new x (propensity trimmed first).
double propensity_odds(const NuisanceFit& fit, const Eigen::RowVectorXd& x);

}  // namespace persuasion
