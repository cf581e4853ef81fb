#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "persuasion/errors.hpp"
#include "persuasion/json_io.hpp"
#include "persuasion/nuisance.hpp"
#include "persuasion/simulate.hpp"
#include "persuasion/staggered.hpp"
#include "persuasion/two_period_regression.hpp"
#include "persuasion/two_period_semiparametric.hpp"

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

TwoPeriodDgp two_level_dgp() {
  TwoPeriodDgp dgp;
  DgpLevel a;
  a.x = {0.0};
  a.prob = 0.5;
  a.propensity = 0.4;
  a.trend = 0.07;
  a.treated = {0.35, 0.20, 0.0, 0.45};
  a.control = {0.55, 0.0, 0.0, 0.45};
  DgpLevel b;
  b.x = {1.0};
  b.prob = 0.5;
  b.propensity = 0.6;
  b.trend = 0.07;
  b.treated = {0.25, 0.30, 0.0, 0.45};
  b.control = {0.55, 0.0, 0.0, 0.45};
  dgp.levels = {a, b};
  dgp.seed = 11;
  return dgp;
}

}  // namespace

TEST_CASE("two-period oracle matches a hand enumeration") {
  OracleValues o = oracle(two_level_dgp());
  // treated level shares: (.5*.4, .5*.6)/.5 = (.4, .6)
  CHECK(o.att == doctest::Approx(0.26).epsilon(1e-14));
  CHECK(o.q == doctest::Approx(0.29).epsilon(1e-14));
  CHECK(o.theta == doctest::Approx(0.26 / 0.55).epsilon(1e-14));
  CHECK(o.theta_r == doctest::Approx(0.26 / 0.71).epsilon(1e-14));
  // no backlash: the lower-bound targets coincide with the full targets
  CHECK(o.theta_l == doctest::Approx(o.theta).epsilon(1e-14));
  CHECK(o.theta_r_l == doctest::Approx(o.theta_r).epsilon(1e-14));
}

TEST_CASE("invalid configurations are rejected not clipped") {
  TwoPeriodDgp dgp = two_level_dgp();
  dgp.levels[0].treated.p11 = 0.50;  // joint sums to 1.05
  CHECK(thrown_code([&] { dgp.validate(); }) == ErrorCode::DOMAIN);

  dgp = two_level_dgp();
  dgp.levels[0].treated = {0.35, 0.15, 0.05, 0.45};  // backlash w/o the flag
  CHECK(thrown_code([&] { dgp.validate(); }) == ErrorCode::DOMAIN);
  dgp.allow_backlash = true;
  CHECK_NOTHROW(dgp.validate());

  dgp = two_level_dgp();
  dgp.levels[0].control = {0.96, 0.0, 0.0, 0.04};
  dgp.levels[0].trend = 0.07;  // pre-period prob would be 0.04 - 0.07 < 0
  CHECK(thrown_code([&] { dgp.validate(); }) == ErrorCode::DOMAIN);

  dgp = two_level_dgp();
  dgp.levels[0].prob = 0.6;  // level probs sum to 1.1
  CHECK(thrown_code([&] { dgp.validate(); }) == ErrorCode::DOMAIN);
}

TEST_CASE("panel generation is a pure function of seed and stream") {
  const TwoPeriodDgp dgp = two_level_dgp();
  TwoPeriodPanel a = gen_two_period(dgp, 200, 7, 3);
  TwoPeriodPanel b = gen_two_period(dgp, 200, 7, 3);
  CHECK(a.y0 == b.y0);
  CHECK(a.y1 == b.y1);
  CHECK(a.d1 == b.d1);
  CHECK(a.x == b.x);
  TwoPeriodPanel c = gen_two_period(dgp, 200, 7, 4);
  CHECK(a.y1 != c.y1);
  TwoPeriodPanel d = gen_two_period(dgp, 200, 8, 3);
  CHECK(a.y1 != d.y1);
}

TEST_CASE("large samples reproduce the two-period oracle") {
  const TwoPeriodDgp dgp = two_level_dgp();
  const OracleValues o = oracle(dgp);
  TwoPeriodPanel p = gen_two_period(dgp, 200000, 5, 0);
  FeCoefficients fe = fit_two_way_fe(p);
  CHECK(std::abs(aprt_from_fe(fe, p).point - o.theta) < 0.02);
  CHECK(std::abs(fe.gamma - o.att) < 0.01);
  // the parallel-trends construction: control trend near 0.07
  CHECK(std::abs((fe.m01 - fe.m00) - 0.07) < 0.01);
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::CELL_MEANS);
  CHECK(std::abs(estimate_dr(p, fit, Estimand::APRT).point - o.theta) < 0.02);
}

TEST_CASE("gaussian oracle is stable in the quadrature order") {
  GaussianTwoPeriodDgp dgp;
  OracleValues o64 = oracle(dgp, 64);
  OracleValues o96 = oracle(dgp, 96);
  CHECK(std::abs(o64.theta_l - o96.theta_l) < 1e-8);
  CHECK(std::abs(o64.att - o96.att) < 1e-8);
  CHECK(std::abs(o64.q - o96.q) < 1e-8);
  // no backlash in this design either
  CHECK(o64.theta_l == doctest::Approx(o64.theta).epsilon(1e-12));
}

TEST_CASE("gaussian panels agree with their oracle at scale") {
  GaussianTwoPeriodDgp dgp;
  dgp.seed = 3;
  const OracleValues o = oracle(dgp);
  TwoPeriodPanel p = gen_gaussian_two_period(dgp, 60000, 3, 0);
  CHECK(p.x_dim() == 1);
  // propensity slope is negative: treated units have lower x on average
  double mx_t = 0, mx_c = 0;
  int nt = 0;
  for (int i = 0; i < p.n(); ++i) {
    if (p.d1[i]) {
      mx_t += p.x(i, 0);
      ++nt;
    } else {
      mx_c += p.x(i, 0);
    }
  }
  CHECK(mx_t / nt < mx_c / (p.n() - nt));
  // the propensity leg is exactly logistic, so DR is consistent here
  NuisanceFit fit = fit_nuisance(p, NuisanceMethod::LOGISTIC);
  CHECK(std::abs(estimate_dr(p, fit, Estimand::APRT).point - o.theta_l) < 0.02);
}

TEST_CASE("staggered oracle equals the lift parameters") {
  StaggeredDgp st;
  st.horizon = 2;
  StaggeredDgp::Level lvl;
  lvl.x = {};
  lvl.prob = 1.0;
  lvl.adoption = {0.3, 0.2};
  lvl.g = {0.20, 0.25, 0.30};
  lvl.h = {0.0, 0.05, 0.10};
  lvl.lift = {{0.5, 0.4}, {0.3}};
  st.levels = {lvl};
  st.seed = 13;
  st.validate();

  OracleValues o = oracle(st);
  CHECK(o.theta_pair.at({1, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(o.theta_pair.at({1, 1}) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(o.theta_pair.at({2, 0}) == doctest::Approx(0.3).epsilon(1e-12));
  // espr(0): shares .3/.2, untreated probs at adoption .25 and .35
  const double num = 0.3 * 0.75 * 0.5 + 0.2 * 0.65 * 0.3;
  const double den = 0.3 * 0.75 + 0.2 * 0.65;
  CHECK(o.theta_espr.at(0) == doctest::Approx(num / den).epsilon(1e-12));
  CHECK(o.theta_espr.at(1) == doctest::Approx(0.4).epsilon(1e-12));

  StaggeredPanel panel = gen_staggered(st, 100000, 13, 0);
  CHECK(panel.horizon() == 2);
  EsprReport agg = espr(panel, 0);
  CHECK(std::abs(agg.theta - o.theta_espr.at(0)) < 0.02);
  EsprReport pre = espr_pretrend(panel, -2);
  CHECK(std::abs(pre.theta) < 0.05);
}

TEST_CASE("monte carlo counts failures and keeps moments honest") {
  const TwoPeriodDgp dgp = two_level_dgp();
  int calls = 0;
  auto fragile = [&](const TwoPeriodPanel& p) {
    ++calls;
    if (p.y1[0] == 1) {
      throw Error(ErrorCode::DEGENERATE_DENOMINATOR, "synthetic failure");
    }
    EstimateReport r;
    r.point = 0.5;
    r.se = 0.1;
    r.ci_lower = 0.3;
    r.ci_upper = 0.7;
    return r;
  };
  MonteCarloSummary s =
      monte_carlo_two_period(dgp, 50, 40, 21, 0.4727, 0.95, fragile);
  CHECK(calls == 40);
  CHECK(s.reps == 40);
  CHECK(s.failures > 0);
  CHECK(s.failures < 40);
  CHECK(static_cast<int>(s.points.size()) == 40 - s.failures);
  CHECK(s.mean_point == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.sd == 0.0);
  CHECK(s.coverage == 1.0);  // [0.3, 0.7] always covers 0.4727

  auto doomed = [](const TwoPeriodPanel&) -> EstimateReport {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR, "always");
  };
  CHECK(thrown_code([&] {
          monte_carlo_two_period(dgp, 50, 5, 21, 0.5, 0.95, doomed);
        }) == ErrorCode::INVALID_INPUT);
  CHECK(thrown_code([&] {
          monte_carlo_two_period(dgp, 50, 1, 21, 0.5, 0.95, fragile);
        }) == ErrorCode::INVALID_INPUT);
}

TEST_CASE("monte carlo summaries are reproducible") {
  const TwoPeriodDgp dgp = two_level_dgp();
  auto est = [](const TwoPeriodPanel& p) {
    FeCoefficients fe = fit_two_way_fe(p);
    return aprt_from_fe(fe, p);
  };
  MonteCarloSummary a =
      monte_carlo_two_period(dgp, 300, 20, 9, 0.26 / 0.55, 0.95, est);
  MonteCarloSummary b =
      monte_carlo_two_period(dgp, 300, 20, 9, 0.26 / 0.55, 0.95, est);
  CHECK(a.points == b.points);
  CHECK(a.mean_point == b.mean_point);
  CHECK(a.failures == 0);
  CHECK(std::abs(a.bias) < 0.1);
  CHECK(a.mean_se > 0);
  // bias definition: mean_point - oracle
  CHECK(a.bias == doctest::Approx(a.mean_point - 0.26 / 0.55).epsilon(1e-12));
}

TEST_CASE("dgp configurations survive a json round trip") {
  const TwoPeriodDgp dgp = two_level_dgp();
  nlohmann::json j = dgp;
  auto back = j.get<TwoPeriodDgp>();
  CHECK(back.levels.size() == 2);
  CHECK(back.levels[0].treated.p01 == dgp.levels[0].treated.p01);
  CHECK(back.levels[1].propensity == dgp.levels[1].propensity);
  CHECK(back.levels[1].trend == dgp.levels[1].trend);
  CHECK(back.seed == dgp.seed);
  CHECK(back.allow_backlash == dgp.allow_backlash);
  CHECK_NOTHROW(back.validate());

  GaussianTwoPeriodDgp g;
  g.h1 = 0.9;
  g.seed = 77;
  nlohmann::json jg = g;
  auto gback = jg.get<GaussianTwoPeriodDgp>();
  CHECK(gback.h1 == 0.9);
  CHECK(gback.seed == 77);
  CHECK(gback.c2 == g.c2);

  StaggeredDgp st;
  st.horizon = 2;
  StaggeredDgp::Level lvl;
  lvl.prob = 1.0;
  lvl.adoption = {0.3, 0.2};
  lvl.g = {0.2, 0.25, 0.3};
  lvl.h = {0.0, 0.05, 0.1};
  lvl.lift = {{0.5, 0.4}, {0.3}};
  st.levels = {lvl};
  nlohmann::json js = st;
  auto sback = js.get<StaggeredDgp>();
  CHECK(sback.horizon == 2);
  CHECK(sback.levels.size() == 1);
  CHECK(sback.levels[0].lift[0][1] == 0.4);
  CHECK_NOTHROW(sback.validate());
}
