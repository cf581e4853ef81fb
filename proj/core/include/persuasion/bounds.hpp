#pragma once

#include <array>

#include "persuasion/dataset.hpp"
#include "persuasion/nuisance.hpp"
#include "persuasion/two_period_semiparametric.hpp"

namespace persuasion {

// ---------------------------------------------------------------------------
// Partial identification of the conditional persuasion rate
// ---------------------------------------------------------------------------

// Without assuming how the with- and without-exposure outcomes correlate, the
// conditional persuasion rate is only set-identified from the two observable
// marginals pi = Pr{Y1(1)=1 | D=1, x} and tau = Pr{Y1(0)=1 | D=1, x}.
// Stored bounds are the raw ratio forms; the *_lo/_hi accessors clip to [0,1],
// which is where the sharp (attainable) interval lives.
struct ConditionalBounds {
  double theta_cl = 0;   // (pi - tau) / (1 - tau)
  double theta_cu = 0;   // pi / (1 - tau)
  double rtheta_cl = 0;  // (pi - tau) / pi
  double rtheta_cu = 0;  // (1 - tau) / pi  == alpha_x
  double alpha_x = 0;    // slope linking reverse and forward rates

  double theta_lo() const { return theta_cl > 0.0 ? theta_cl : 0.0; }
  double theta_hi() const { return theta_cu < 1.0 ? theta_cu : 1.0; }
  double rtheta_lo() const { return rtheta_cl > 0.0 ? rtheta_cl : 0.0; }
  double rtheta_hi() const { return rtheta_cu < 1.0 ? rtheta_cu : 1.0; }
};

// Requires tau < 1 and pi > 0 (otherwise the conditioning events are empty).
ConditionalBounds conditional_bounds(double pi1_1x, double tau_cx);

// ---------------------------------------------------------------------------
// Aggregated sharp bounds
// ---------------------------------------------------------------------------

// Sharp bounds on the aggregate persuasion rate: each covariate cell
// contributes its best/worst admissible joint. The lower envelope keeps cells
// where the no-treatment success prediction Psi does not exceed the treated
// success rate; the upper envelope caps each cell at min(Pi_1(1,x), 1-Psi).
struct AggregateBounds {
  double theta_star_l = 0;
  double theta_star_u = 0;
  double rtheta_star_l = 0;
  double rtheta_star_u = 0;
  double alpha_slope = 0;  // E[1-Psi|D=1] / E[Pi_1(1,X)|D=1]
  int n_treated = 0;
  int in_lower_set = 0;  // treated units contributing to the lower envelope
  int in_upper_set = 0;  // treated units below the upper cap
};

AggregateBounds aggregate_sharp_bounds(const TwoPeriodPanel& panel,
                                       const NuisanceFit& fit,
                                       Link link = Link::IDENTITY);

// The (forward, reverse) pair is identified up to a line segment: reverse
// bounds are the forward bounds scaled by alpha_slope.
struct LineSegment {
  double slope = 0;
  std::array<double, 2> lower_endpoint{};  // (theta_star_l, rtheta_star_l)
  std::array<double, 2> upper_endpoint{};  // (theta_star_u, rtheta_star_u)
};

LineSegment identified_line(const AggregateBounds& bounds);

}  // namespace persuasion
