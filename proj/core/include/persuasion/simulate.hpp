#pragma once

// Ground-truth data-generating processes with explicit joint potential
// outcomes, exact population oracles, and a Monte Carlo harness.
//
// Two-period DGPs specify, per discrete covariate level, the joint law of
// (Y1(0), Y1(1)) within each treatment arm plus a common pre-to-post trend
// for the untreated state; the pre-period outcome then has
// Pr(Y0 = 1 | arm, level) = Pr(Y1(0) = 1 | arm, level) - trend(level), which
// makes the parallel-trends restriction hold exactly. Construction is
// rejected (not clipped) when a probability would leave [0, 1].

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "persuasion/dataset.hpp"
#include "persuasion/report.hpp"

namespace persuasion {

// Joint law of (Y1(0), Y1(1)) within one treatment arm at one covariate
// level: p_ab = Pr(Y1(0) = a, Y1(1) = b). p10 > 0 means some units would
// flip from 1 to 0 under treatment (backlash).
struct ArmJoint {
  double p00 = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;

  double pr_untreated_one() const { return p10 + p11; }  // Pr(Y1(0) = 1)
  double pr_treated_one() const { return p01 + p11; }    // Pr(Y1(1) = 1)
  double catt() const { return p01 - p10; }
};

struct DgpLevel {
  std::vector<double> x;    // covariate values exposed to the estimators
  double prob = 1.0;        // Pr(level)
  double propensity = 0.5;  // Pr(D1 = 1 | level)
  double trend = 0.0;       // Pr(Y1(0)=1|arm) - Pr(Y0=1|arm), common to arms
  ArmJoint treated;         // joint law given D1 = 1
  ArmJoint control;         // joint law given D1 = 0
};

struct TwoPeriodDgp {
  std::vector<DgpLevel> levels;
  bool allow_backlash = false;
  std::uint64_t seed = 0;

  // Throws Error (DOMAIN) on: probabilities outside [0, 1], level
  // probabilities not summing to one, joints not summing to one, backlash
  // mass without the flag, or a pre-period probability pushed outside [0, 1]
  // by the trend (the construction must hold exactly, so out-of-range values
  // are rejected rather than clipped).
  void validate() const;
};

// Smooth-covariate DGP with X ~ N(0, 1), logistic treatment propensity, and
// probabilities built from bounded logistic components so that nothing ever
// needs clipping:
//   Pr(D1 = 1 | x)            = sigmoid(propensity_intercept + propensity_slope x)
//   H(d, x)                   = h_floor + h_scale * sigmoid(h0 + h1 x + h2 d)
//   G(1, x)                   = g_scale * sigmoid(g0 + g1 x), G(0, x) = 0
//   Pr(Y0 = 1 | d, x)         = H(d, x)
//   Pr(Y1(0) = 1 | d, x)      = H(d, x) + G(1, x)
//   Pr(Y1(1) = 1 | Y1(0)=0, d, x) = sigmoid(c0 + c1 x + c2 d), no backlash.
struct GaussianTwoPeriodDgp {
  double propensity_intercept = 0.5;
  double propensity_slope = -1.0;
  double h0 = 0.0, h1 = 0.8, h2 = -0.3;
  double h_floor = 0.2, h_scale = 0.5;
  double g0 = -0.2, g1 = 0.5, g_scale = 0.25;
  double c0 = -0.5, c1 = 0.7, c2 = 0.4;
  std::uint64_t seed = 0;

  void validate() const;  // requires h_floor > 0, h_floor+h_scale+g_scale < 1
};

// Staggered DGP with separable untreated dynamics: per level,
//   Pr(Y_t(never) = 1 | S = s, level) = g[t] + h[cohort index of s],
// so the staggered parallel-trends restriction holds exactly; treatment
// flips untreated zeros up with probability lift[s-1][t-s] for t >= s
// (monotone, hence no backlash at any horizon) and leaves t < s untouched
// (no anticipation by construction).
struct StaggeredDgp {
  struct Level {
    std::vector<double> x;
    double prob = 1.0;
    std::vector<double> adoption;  // Pr(S = s | level), s = 1..T; rest never
    std::vector<double> g;         // size T+1: time component
    std::vector<double> h;         // size T+1: h[s-1] per cohort, h[T] never
    std::vector<std::vector<double>> lift;  // [s-1][j], j = 0..T-s
  };
  int horizon = 1;  // T
  std::vector<Level> levels;
  std::uint64_t seed = 0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

// Draw an i.i.d. panel; deterministic in (seed, stream) regardless of any
// surrounding parallelism. Y1 = D1 Y1(1) + (1 - D1) Y1(0); Y0 is drawn from
// its arm/level law independently of the period-1 pair.
TwoPeriodPanel gen_two_period(const TwoPeriodDgp& dgp, int n,
                              std::uint64_t seed, std::uint64_t stream = 0);

TwoPeriodPanel gen_gaussian_two_period(const GaussianTwoPeriodDgp& dgp, int n,
                                       std::uint64_t seed,
                                       std::uint64_t stream = 0);

StaggeredPanel gen_staggered(const StaggeredDgp& dgp, int n,
                             std::uint64_t seed, std::uint64_t stream = 0);

// ---------------------------------------------------------------------------
// Population oracles
// ---------------------------------------------------------------------------

struct OracleValues {
  double theta = std::numeric_limits<double>::quiet_NaN();    // APRT
  double theta_r = std::numeric_limits<double>::quiet_NaN();  // reverse APRT
  double att = std::numeric_limits<double>::quiet_NaN();
  double theta_l = std::numeric_limits<double>::quiet_NaN();    // ATT/(ATT+q)
  double theta_r_l = std::numeric_limits<double>::quiet_NaN();  // ATT/(1-q)
  double q = std::numeric_limits<double>::quiet_NaN();  // Pr(Y1=0|D1=1)
  // Staggered targets, when applicable.
  std::map<std::pair<int, int>, double> theta_pair;  // (s, j) -> theta(s,s+j)
  std::map<int, double> theta_espr;                  // j -> ESPR(j)
};

// Exact enumeration over covariate levels and potential-outcome cells.
OracleValues oracle(const TwoPeriodDgp& dgp);

// Gauss-Hermite quadrature over the Gaussian covariate (default 64 nodes).
OracleValues oracle(const GaussianTwoPeriodDgp& dgp, int nodes = 64);

// Exact enumeration; fills theta_pair for every estimable (s, j) and
// theta_espr for horizons 0..T-1 (negative horizons are identically zero
// under the construction and are omitted).
OracleValues oracle(const StaggeredDgp& dgp);

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

struct MonteCarloSummary {
  int reps = 0;
  int n = 0;
  int failures = 0;  // replications whose estimator threw
  double level = 0.95;
  double oracle_value = std::numeric_limits<double>::quiet_NaN();
  double mean_point = std::numeric_limits<double>::quiet_NaN();
  double bias = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();    // across-rep, n-1
  double rmse = std::numeric_limits<double>::quiet_NaN();  // vs oracle
  double mean_se = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> points;  // per successful replication, in rep order
};

// Runs `estimate` on reps independent panels; replication r uses RNG stream
// r, so the panel sequence is a pure function of (dgp, n, seed). Estimator
// exceptions are counted as failures and excluded from the moments.
// Throws INVALID_INPUT when reps < 2 or every replication fails.
MonteCarloSummary monte_carlo_two_period(
    const TwoPeriodDgp& dgp, int n, int reps, std::uint64_t seed,
    double oracle_value, double level,
    const std::function<EstimateReport(const TwoPeriodPanel&)>& estimate);

MonteCarloSummary monte_carlo_gaussian(
    const GaussianTwoPeriodDgp& dgp, int n, int reps, std::uint64_t seed,
    double oracle_value, double level,
    const std::function<EstimateReport(const TwoPeriodPanel&)>& estimate);

MonteCarloSummary monte_carlo_staggered(
    const StaggeredDgp& dgp, int n, int reps, std::uint64_t seed,
    double oracle_value, double level,
    const std::function<EstimateReport(const StaggeredPanel&)>& estimate);

}  // namespace persuasion
