#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "persuasion/errors.hpp"
#include "persuasion/nuisance.hpp"
#include "support.hpp"

using namespace persuasion;

namespace {

// Panel with one binary covariate driving treatment and outcomes.
TwoPeriodPanel covariate_panel(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0, 1);
  TwoPeriodPanel p;
  p.x.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const double x = i % 2;
    const int d = unif(rng) < 0.3 + 0.4 * x ? 1 : 0;
    p.x(i, 0) = x;
    p.d1.push_back(d);
    p.y0.push_back(unif(rng) < 0.3 + 0.2 * x ? 1 : 0);
    p.y1.push_back(unif(rng) < 0.35 + 0.2 * x + 0.15 * d ? 1 : 0);
  }
  return p;
}

double arm_mean(const TwoPeriodPanel& p, int t, int d) {
  double sum = 0;
  int count = 0;
  for (int i = 0; i < p.n(); ++i) {
    if (p.d1[i] != d) continue;
    sum += t == 0 ? p.y0[i] : p.y1[i];
    ++count;
  }
  return sum / count;
}

double cell_mean(const TwoPeriodPanel& p, int t, int d, double x) {
  double sum = 0;
  int count = 0;
  for (int i = 0; i < p.n(); ++i) {
    if (p.d1[i] != d || p.x(i, 0) != x) continue;
    sum += t == 0 ? p.y0[i] : p.y1[i];
    ++count;
  }
  return sum / count;
}

}  // namespace

TEST_CASE("constant nuisance equals arm means") {
  TwoPeriodPanel p = covariate_panel(300, 1);
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::CONSTANT);
  for (int t = 0; t < 2; ++t) {
    for (int d = 0; d < 2; ++d) {
      const double m = arm_mean(p, t, d);
      for (int i = 0; i < p.n(); ++i) {
        CHECK(fit.pi(t, d, i) == doctest::Approx(m).epsilon(1e-14));
      }
    }
  }
  double share = 0;
  for (int d : p.d1) share += d;
  share /= p.n();
  CHECK(fit.p(0) == doctest::Approx(share).epsilon(1e-14));
}

TEST_CASE("cell-means nuisance equals per-level means") {
  TwoPeriodPanel p = covariate_panel(400, 2);
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::CELL_MEANS);
  for (int i = 0; i < 10; ++i) {
    const double x = p.x(i, 0);
    CHECK(fit.pi(1, 1, i) == doctest::Approx(cell_mean(p, 1, 1, x)).epsilon(1e-12));
    CHECK(fit.pi(0, 0, i) == doctest::Approx(cell_mean(p, 0, 0, x)).epsilon(1e-12));
  }
}

TEST_CASE("covariate-free logistic collapses to the closed-form arm mean") {
  TwoPeriodPanel p = covariate_panel(200, 3);
  p.x.resize(p.n(), 0);  // drop the covariate
  NuisanceFit logistic = fit_nuisance(p, NuisanceMethod::LOGISTIC);
  NuisanceFit constant = fit_nuisance(p, NuisanceMethod::CONSTANT);
  for (int t = 0; t < 2; ++t) {
    for (int d = 0; d < 2; ++d) {
      CHECK(logistic.pi(t, d, 0) ==
            doctest::Approx(constant.pi(t, d, 0)).epsilon(1e-13));
    }
  }
}

TEST_CASE("logistic nuisance approximates saturated means on one binary x") {
  TwoPeriodPanel p = covariate_panel(4000, 4);
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::LOGISTIC);
  // With a single binary covariate the logistic model is saturated, so the
  // fitted values must match the cell means up to solver tolerance.
  for (int i = 0; i < 6; ++i) {
    const double x = p.x(i, 0);
    CHECK(fit.pi(1, 0, i) == doctest::Approx(cell_mean(p, 1, 0, x)).epsilon(1e-5));
    CHECK(fit.p(i) > 0);
    CHECK(fit.p(i) < 1);
  }
}

TEST_CASE("predictions are trimmed and the binds are counted") {
  // All-zero outcomes in the control pre period force a 0 mean -> trimmed.
  TwoPeriodPanel p;
  const int n = 60;
  p.x.resize(n, 0);
  for (int i = 0; i < n; ++i) {
    p.d1.push_back(i % 2);
    p.y0.push_back(0);
    p.y1.push_back(i % 4 == 0 ? 1 : 0);
  }
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::CONSTANT, std::nullopt, 0.02);
  CHECK(fit.pi(0, 0, 0) == doctest::Approx(0.02));
  CHECK(fit.trim_count_outcome > 0);
}

TEST_CASE("fold plan is deterministic, balanced, and arm-stratified") {
  TwoPeriodPanel p = covariate_panel(203, 5);
  FoldPlan a = FoldPlan::make(p, 5, 7);
  FoldPlan b = FoldPlan::make(p, 5, 7);
  CHECK(a.assignment == b.assignment);
  FoldPlan c = FoldPlan::make(p, 5, 8);
  CHECK(a.assignment != c.assignment);

  for (int arm = -1; arm < 2; ++arm) {  // -1 = overall
    std::vector<int> sizes(5, 0);
    for (int i = 0; i < p.n(); ++i) {
      if (arm >= 0 && p.d1[i] != arm) continue;
      ++sizes[a.assignment[i]];
    }
    const int lo = *std::min_element(sizes.begin(), sizes.end());
    const int hi = *std::max_element(sizes.begin(), sizes.end());
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("cross-fitted values are out-of-fold but stay close in large samples") {
  TwoPeriodPanel p = covariate_panel(5000, 6);
  NuisanceFit full = fit_nuisance(p, NuisanceMethod::CELL_MEANS);
  NuisanceFit cf = fit_nuisance(p, NuisanceMethod::CELL_MEANS,
                                FoldPlan::make(p, 5, 1));
  bool any_difference = false;
  double max_gap = 0;
  for (int i = 0; i < p.n(); ++i) {
    const double gap = std::abs(full.pi(1, 1, i) - cf.pi(1, 1, i));
    if (gap > 1e-12) any_difference = true;
    max_gap = std::max(max_gap, gap);
  }
  CHECK(any_difference);       // leave-fold-out estimates differ
  CHECK(max_gap < 0.08);       // ... but only by sampling noise
}

TEST_CASE("logistic fit on a tiny arm raises INSUFFICIENT_ARM") {
  Eigen::MatrixXd x(4, 3);
  x.setRandom();
  std::vector<double> y = {0, 1, 0, 1};
  std::vector<int> subset = {0, 1};  // 2 rows < x_dim + 1 = 4
  CHECK_THROWS_AS(fit_binary_model(x, y, subset, NuisanceMethod::LOGISTIC),
                  Error);
  try {
    fit_binary_model(x, y, subset, NuisanceMethod::LOGISTIC);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::INSUFFICIENT_ARM);
  }
}

TEST_CASE("manual nuisance carries supplied values through trimming") {
  TwoPeriodPanel p = covariate_panel(40, 7);
  const int n = p.n();
  std::vector<double> v00(n, 0.3), v01(n, 0.4), v10(n, 0.35), v11(n, 0.6);
  std::vector<double> prop(n, 0.995);  // will be trimmed at 0.99
  NuisanceFit fit = manual_nuisance(p, v00, v01, v10, v11, prop, 0.01);
  CHECK(fit.method == NuisanceMethod::MANUAL);
  CHECK(fit.pi(0, 0, 0) == doctest::Approx(0.3));
  CHECK(fit.pi(1, 1, 5) == doctest::Approx(0.6));
  CHECK(fit.p(0) == doctest::Approx(0.99));
  CHECK(fit.trim_count_propensity == n);
}

TEST_CASE("sensitivity overrides replace exactly one leg") {
  TwoPeriodPanel p = covariate_panel(50, 8);
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::CONSTANT);
  std::vector<double> newprop(p.n(), 0.5);
  NuisanceFit swapped = fit.with_propensity(newprop);
  CHECK(swapped.p(3) == doctest::Approx(0.5));
  CHECK(swapped.pi(1, 1, 3) == doctest::Approx(fit.pi(1, 1, 3)));

  std::vector<double> newpi(p.n(), 0.25);
  NuisanceFit swapped2 = fit.with_outcome(1, 0, newpi);
  CHECK(swapped2.pi(1, 0, 3) == doctest::Approx(0.25));
  CHECK(swapped2.p(3) == doctest::Approx(fit.p(3)));
}

TEST_CASE("propensity odds and delta prediction at new covariates") {
  TwoPeriodPanel p = covariate_panel(600, 9);
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::CELL_MEANS);
  Eigen::RowVectorXd x0(1);
  x0 << 0.0;
  const double odds = propensity_odds(fit, x0);
  CHECK(odds > 0);
  const double d0 = predict_delta0(fit, x0);
  CHECK(d0 == doctest::Approx(cell_mean(p, 1, 0, 0) - cell_mean(p, 0, 0, 0))
                  .epsilon(1e-9));
}
