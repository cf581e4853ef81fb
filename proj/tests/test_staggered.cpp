#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "persuasion/errors.hpp"
#include "persuasion/staggered.hpp"
#include "persuasion/two_period_regression.hpp"
#include "support.hpp"

using namespace persuasion;

namespace {

ErrorCode thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::INVALID_INPUT;
}

}  // namespace

TEST_CASE("one adopting cohort at horizon one is the two-period design") {
  std::mt19937 rng(101);
  for (int rep = 0; rep < 5; ++rep) {
    StaggeredPanel sp = testutil::random_staggered_panel(rng, 400, 1);
    TwoPeriodPanel tp = testutil::two_period_view(sp);
    PairwiseTheta pair = pairwise_theta(sp, 1, 0);
    FeCoefficients fe = fit_two_way_fe(tp);
    EstimateReport rep_fe = aprt_from_fe(fe, tp);
    // bitwise: both paths run the identical cell-mean arithmetic
    CHECK(pair.theta == rep_fe.point);
    CHECK(pair.gamma0 == fe.gamma0);
    CHECK(pair.gamma1 == fe.gamma1);
    CHECK(pair.gamma2 == fe.gamma2);
    CHECK(pair.num == fe.gamma);

    EsprReport agg = espr(sp, 0);
    CHECK(agg.theta == doctest::Approx(pair.theta).epsilon(1e-14));
    CHECK(std::abs(agg.se - rep_fe.se) < 1e-8);
  }
}

TEST_CASE("reference horizon is identically zero") {
  std::mt19937 rng(103);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 300, 3);
  for (int s = 1; s <= 3; ++s) {
    PairwiseTheta pair = pairwise_theta(sp, s, -1);
    CHECK(pair.num == 0.0);
    CHECK(pair.theta == 0.0);
  }
  EsprReport pre = espr_pretrend(sp, -1);
  CHECK(pre.theta == 0.0);
  CHECK(pre.pretrend);
}

TEST_CASE("horizon and group errors carry their codes") {
  std::mt19937 rng(107);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 300, 2);
  CHECK(thrown_code([&] { pairwise_theta(sp, 0, 0); }) ==
        ErrorCode::HORIZON_OUT_OF_RANGE);
  CHECK(thrown_code([&] { pairwise_theta(sp, 2, 1); }) ==
        ErrorCode::HORIZON_OUT_OF_RANGE);
  CHECK(thrown_code([&] { pairwise_theta(sp, 1, -3); }) ==
        ErrorCode::HORIZON_OUT_OF_RANGE);

  // remove cohort 2 entirely: the pair has an empty group
  StaggeredPanel no2 = sp;
  for (int& si : no2.s) {
    if (si == 2) si = 1;
  }
  CHECK(thrown_code([&] { pairwise_theta(no2, 2, 0); }) ==
        ErrorCode::EMPTY_GROUP);

  CHECK(thrown_code([&] { espr(sp, -1); }) == ErrorCode::INVALID_INPUT);
  CHECK(thrown_code([&] { espr_pretrend(sp, 0); }) == ErrorCode::INVALID_INPUT);
  CHECK(thrown_code([&] { event_study_regression(sp, kNeverTreated); }) ==
        ErrorCode::INVALID_INPUT);
}

TEST_CASE("event-study assembly reproduces every pairwise estimate") {
  std::mt19937 rng(109);
  for (int rep = 0; rep < 8; ++rep) {
    const int T = 2 + rep % 3;
    StaggeredPanel sp = testutil::random_staggered_panel(rng, 500, T);
    for (int s = 1; s <= T; ++s) {
      for (int j = -s; j <= T - s; ++j) {
        double direct = 0;
        try {
          direct = pairwise_theta(sp, s, j).theta;
        } catch (const Error&) {
          continue;  // infeasible pair: nothing to compare
        }
        CHECK(std::abs(assemble_event_study_theta(sp, s, j) - direct) < 1e-10);
      }
    }
  }
}

TEST_CASE("aggregation uses raw cohort shares before the ratio") {
  std::mt19937 rng(113);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 600, 3);
  EsprReport agg = espr(sp, 0);
  CHECK(!agg.components.empty());
  double num = 0, den = 0;
  for (const PairwiseTheta& c : agg.components) {
    const double w = agg.weights.at(c.s);
    CHECK(w == doctest::Approx(static_cast<double>(c.n_s) / sp.n())
                   .epsilon(1e-14));
    num += w * c.num;
    den += w * c.den;
  }
  CHECK(agg.num == doctest::Approx(num).epsilon(1e-14));
  CHECK(agg.den == doctest::Approx(den).epsilon(1e-14));
  CHECK(agg.theta == doctest::Approx(num / den).epsilon(1e-14));
  CHECK(agg.se > 0);
  CHECK(agg.ci_lower < agg.theta);
  CHECK(agg.ci_upper > agg.theta);
}

TEST_CASE("dr with constant nuisances equals the regression path") {
  std::mt19937 rng(127);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 500, 2);
  StaggeredOptions opt;
  opt.method = NuisanceMethod::CONSTANT;
  for (int j = 0; j <= 1; ++j) {
    EsprReport reg = espr(sp, j, StaggerEstimator::REGRESSION);
    EsprReport dr = espr(sp, j, StaggerEstimator::DR, opt);
    CHECK(std::abs(reg.theta - dr.theta) < 1e-10);
  }
}

TEST_CASE("tiny cohorts drop with a warning, never silently") {
  std::mt19937 rng(131);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 400, 2);
  // shrink cohort 2 to a single unit
  int kept = 0;
  for (int i = 0; i < sp.n(); ++i) {
    if (sp.s[i] == 2 && ++kept > 1) sp.s[i] = kNeverTreated;
  }
  EsprReport agg = espr(sp, 0);
  CHECK(agg.weights.count(2) == 0);
  bool warned = false;
  for (const auto& w : agg.warnings) {
    if (w.find("cohort 2 dropped") != std::string::npos) warned = true;
  }
  CHECK(warned);

  // dropping every cohort leaves nothing to aggregate
  StaggeredPanel all_tiny = sp;
  std::map<int, int> seen;
  for (int i = 0; i < all_tiny.n(); ++i) {
    if (all_tiny.s[i] != kNeverTreated && ++seen[all_tiny.s[i]] > 1) {
      all_tiny.s[i] = kNeverTreated;
    }
  }
  CHECK(thrown_code([&] { espr(all_tiny, 0); }) ==
        ErrorCode::NO_ELIGIBLE_GROUPS);
}

TEST_CASE("pretrend horizons restrict to cohorts that can look back") {
  std::mt19937 rng(137);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 600, 3);
  EsprReport pre = espr_pretrend(sp, -2);
  // s + j >= 0 requires s >= 2
  for (const PairwiseTheta& c : pre.components) CHECK(c.s >= 2);
  CHECK(pre.pretrend);
  CHECK(std::isfinite(pre.theta));
  CHECK(pre.se > 0);
}

TEST_CASE("stacked covariance has the advertised dimension") {
  std::mt19937 rng(139);
  StaggeredPanel sp = testutil::random_staggered_panel(rng, 500, 2);
  EsprReport agg = espr(sp, 0);
  StackedInference stacked = stacked_inference(sp, agg.components, 0);
  const int m = static_cast<int>(agg.components.size());
  CHECK(stacked.sigma.rows() == 3 * m);
  CHECK(stacked.sigma.cols() == 3 * m);
  CHECK(stacked.se == doctest::Approx(agg.se).epsilon(1e-12));
  // sigma is symmetric positive semidefinite
  CHECK((stacked.sigma - stacked.sigma.transpose()).cwiseAbs().maxCoeff() <
        1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stacked.sigma);
  CHECK(es.eigenvalues().minCoeff() > -1e-8);
}
