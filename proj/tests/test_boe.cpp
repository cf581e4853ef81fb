#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <string>

#include "doctest.h"
#include "persuasion/back_of_envelope.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/stats.hpp"

using namespace persuasion;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::INVALID_INPUT;
}

BoeInput published_example() {
  BoeInput in;
  in.att = 0.109;
  in.se_att = 0.041;
  in.q = 0.583;
  in.q_lower = 0.507;
  in.q_upper = 0.659;
  in.alpha = 0.05;
  in.alpha0 = 0.025;
  return in;
}

}  // namespace

TEST_CASE("point rescalings are exact ratios") {
  CHECK(boe_point(0.109, 0.583, Estimand::APRT) ==
        doctest::Approx(0.109 / 0.692).epsilon(1e-14));
  CHECK(boe_point(0.109, 0.583, Estimand::RAPRT) ==
        doctest::Approx(0.109 / 0.417).epsilon(1e-14));
  CHECK(boe_point(0.0, 0.5, Estimand::APRT) == 0.0);
}

TEST_CASE("published example reproduces to published precision") {
  const BoeInput in = published_example();
  EstimateReport aprt = boe_report(in, Estimand::APRT);
  CHECK(std::abs(aprt.point - 0.1575) < 5e-4);
  CHECK(std::abs(aprt.ci_lower - 0.0393) < 1e-3);
  CHECK(std::abs(aprt.ci_upper - 0.2997) < 1e-3);
  CHECK(std::isnan(aprt.se));
  CHECK(aprt.level == doctest::Approx(0.95));

  EstimateReport raprt = boe_report(in, Estimand::RAPRT);
  CHECK(std::abs(raprt.point - 0.2614) < 5e-4);
  CHECK(std::abs(raprt.ci_lower - 0.0347) < 1e-3);
  CHECK(std::abs(raprt.ci_upper - 0.5891) < 1e-3);
}

TEST_CASE("bonferroni interval matches a hand delta-method computation") {
  const BoeInput in = published_example();
  const double z = inverse_normal_cdf(0.9875);
  CHECK(z == doctest::Approx(2.241402727604947).epsilon(1e-12));
  {
    auto [lo, hi] = boe_ci(in, Estimand::APRT);
    const double at_hi = 0.109 / (0.109 + 0.659);
    const double at_lo = 0.109 / (0.109 + 0.507);
    const double slope_hi = 0.659 / ((0.109 + 0.659) * (0.109 + 0.659));
    const double slope_lo = 0.507 / ((0.109 + 0.507) * (0.109 + 0.507));
    CHECK(lo == doctest::Approx(at_hi - z * 0.041 * slope_hi).epsilon(1e-12));
    CHECK(hi == doctest::Approx(at_lo + z * 0.041 * slope_lo).epsilon(1e-12));
  }
  {
    auto [lo, hi] = boe_ci(in, Estimand::RAPRT);
    CHECK(lo == doctest::Approx(0.109 / 0.493 - z * 0.041 / 0.493).epsilon(1e-12));
    CHECK(hi == doctest::Approx(0.109 / 0.341 + z * 0.041 / 0.341).epsilon(1e-12));
  }
}

TEST_CASE("q interval from counts matches the published interval") {
  auto [lo, hi] = q_interval_from_counts(123, 211, 0.975);
  CHECK(std::abs(lo - 0.5069) < 2e-4);
  CHECK(std::abs(hi - 0.6590) < 2e-4);
  // analytic cross-check
  const double qhat = 123.0 / 211.0;
  const double z = inverse_normal_cdf(0.9875);
  const double half = z * std::sqrt(qhat * (1 - qhat) / 211.0);
  CHECK(lo == doctest::Approx(qhat - half).epsilon(1e-12));
  CHECK(hi == doctest::Approx(qhat + half).epsilon(1e-12));
}

TEST_CASE("q interval truncates to the open unit interval") {
  auto [lo0, hi0] = q_interval_from_counts(0, 50, 0.95);
  CHECK(lo0 > 0.0);
  CHECK(hi0 < 1.0);
  CHECK(lo0 <= hi0);
  auto [lo1, hi1] = q_interval_from_counts(50, 50, 0.95);
  CHECK(lo1 > 0.0);
  CHECK(hi1 < 1.0);
  CHECK(lo1 <= hi1);
}

TEST_CASE("domain violations carry the right codes") {
  CHECK(code_of([] { boe_point(-0.1, 0.5, Estimand::APRT); }) ==
        ErrorCode::NEGATIVE_ATT);
  CHECK(code_of([] { boe_point(0.0, 0.0, Estimand::APRT); }) ==
        ErrorCode::DEGENERATE_DENOMINATOR);
  CHECK(code_of([] { boe_point(0.1, 1.0, Estimand::RAPRT); }) ==
        ErrorCode::DEGENERATE_DENOMINATOR);
  CHECK(code_of([] { boe_point(0.1, 1.5, Estimand::APRT); }) ==
        ErrorCode::DOMAIN);
  CHECK(code_of([] { q_interval_from_counts(5, 0, 0.95); }) ==
        ErrorCode::DOMAIN);
  CHECK(code_of([] { q_interval_from_counts(60, 50, 0.95); }) ==
        ErrorCode::DOMAIN);
  CHECK(code_of([] { q_interval_from_counts(10, 50, 1.0); }) ==
        ErrorCode::DOMAIN);

  BoeInput bad = published_example();
  bad.alpha0 = bad.alpha;  // the whole budget: not allowed
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::DOMAIN);
  bad = published_example();
  bad.q = 0.9;  // outside [q_lower, q_upper]
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::DOMAIN);
  bad = published_example();
  bad.q_lower = 0.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::DOMAIN);
}

TEST_CASE("report without a q point falls back to the midpoint") {
  BoeInput in = published_example();
  in.q.reset();
  EstimateReport rep = boe_report(in, Estimand::APRT);
  CHECK(rep.point ==
        doctest::Approx(boe_point(in.att, 0.583, Estimand::APRT)).epsilon(1e-12));
  CHECK(!rep.warnings.empty());
  CHECK(rep.diagnostics.count("q") == 0);
  CHECK(rep.diagnostics.at("alpha0") == doctest::Approx(0.025));
}

TEST_CASE("intervals escaping the unit interval are flagged not clipped") {
  BoeInput in;
  in.att = 0.9;
  in.se_att = 0.5;
  in.q_lower = 0.05;
  in.q = 0.3;
  in.q_upper = 0.5;
  EstimateReport rep = boe_report(in, Estimand::RAPRT);
  CHECK(rep.ci_upper > 1.0);
  bool flagged = false;
  for (const auto& w : rep.warnings) {
    if (w.find("outside [0, 1]") != std::string::npos) flagged = true;
  }
  CHECK(flagged);
}
