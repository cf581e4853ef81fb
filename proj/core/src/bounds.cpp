#include "persuasion/bounds.hpp"

#include <cmath>
#include <string>

#include "persuasion/errors.hpp"

namespace persuasion {

namespace {

constexpr double kDenominatorGuard = 1e-8;
// Ties between Psi and the set thresholds count as inside the set.
constexpr double kSetTolerance = 1e-10;

}  // namespace

ConditionalBounds conditional_bounds(double pi1_1x, double tau_cx) {
  if (!(pi1_1x >= 0.0 && pi1_1x <= 1.0 && tau_cx >= 0.0 && tau_cx <= 1.0)) {
    throw Error(ErrorCode::DOMAIN, "bounds need probabilities in [0,1]",
                {{"pi", std::to_string(pi1_1x)}, {"tau", std::to_string(tau_cx)}});
  }
  if (pi1_1x < kDenominatorGuard) {
    throw Error(ErrorCode::DOMAIN,
                "reverse persuasion rate undefined when Pr{Y1(1)=1|D=1,x} = 0",
                {{"pi", std::to_string(pi1_1x)}});
  }
  if (1.0 - tau_cx < kDenominatorGuard) {
    throw Error(ErrorCode::DOMAIN,
                "persuasion rate undefined when Pr{Y1(0)=0|D=1,x} = 0",
                {{"tau", std::to_string(tau_cx)}});
  }
  ConditionalBounds b;
  b.theta_cl = (pi1_1x - tau_cx) / (1.0 - tau_cx);
  b.theta_cu = pi1_1x / (1.0 - tau_cx);
  b.rtheta_cl = (pi1_1x - tau_cx) / pi1_1x;
  b.alpha_x = (1.0 - tau_cx) / pi1_1x;
  b.rtheta_cu = b.alpha_x;
  return b;
}

AggregateBounds aggregate_sharp_bounds(const TwoPeriodPanel& panel,
                                       const NuisanceFit& fit, Link link) {
  panel.validate();
  if (!panel.binary_outcomes()) {
    throw Error(ErrorCode::NON_BINARY_VALUE, "bounds require binary outcomes");
  }
  PsiValues psi = compute_psi(panel, fit, link);

  AggregateBounds out;
  double lower_sum = 0, upper_sum = 0, den_sum = 0, den_r_sum = 0;
  for (int i = 0; i < panel.n(); ++i) {
    if (!panel.d1[i]) continue;
    ++out.n_treated;
    const double pi11 = fit.pi(1, 1, i);
    const double ps = psi.value[i];
    den_sum += 1.0 - ps;
    den_r_sum += pi11;
    // Lower envelope: only cells whose persuasion effect is nonnegative can
    // be forced to contribute.
    if (pi11 >= ps - kSetTolerance) {
      lower_sum += pi11 - ps;
      ++out.in_lower_set;
    }
    // Upper envelope: each cell contributes min(pi11, 1 - Psi).
    if (ps <= 1.0 - pi11 + kSetTolerance) {
      upper_sum += pi11;
      ++out.in_upper_set;
    } else {
      upper_sum += 1.0 - ps;
    }
  }
  if (out.n_treated == 0) {
    throw Error(ErrorCode::EMPTY_ARM, "no treated units");
  }
  if (!(std::abs(den_sum) > kDenominatorGuard) ||
      !(std::abs(den_r_sum) > kDenominatorGuard)) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                "aggregate bound denominator is numerically zero");
  }
  out.theta_star_l = lower_sum / den_sum;
  out.theta_star_u = upper_sum / den_sum;
  out.rtheta_star_l = lower_sum / den_r_sum;
  out.rtheta_star_u = upper_sum / den_r_sum;
  out.alpha_slope = den_sum / den_r_sum;
  return out;
}

LineSegment identified_line(const AggregateBounds& bounds) {
  LineSegment seg;
  seg.slope = bounds.alpha_slope;
  seg.lower_endpoint = {bounds.theta_star_l, bounds.rtheta_star_l};
  seg.upper_endpoint = {bounds.theta_star_u, bounds.rtheta_star_u};
  return seg;
}

}  // namespace persuasion
