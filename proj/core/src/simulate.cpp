#include "persuasion/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "persuasion/errors.hpp"
#include "persuasion/stats.hpp"

namespace persuasion {

namespace {

constexpr double kProbTolerance = 1e-9;

void require_prob(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::DOMAIN,
                std::string(what) + " must lie in [0, 1]",
                {{what, std::to_string(v)}});
  }
}

void require_joint(const ArmJoint& j, const char* arm, bool allow_backlash) {
  for (double p : {j.p00, j.p01, j.p10, j.p11}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::DOMAIN,
                  std::string("joint probabilities of the ") + arm +
                      " arm must lie in [0, 1]");
    }
  }
  const double sum = j.p00 + j.p01 + j.p10 + j.p11;
  if (std::abs(sum - 1.0) > kProbTolerance) {
    throw Error(ErrorCode::DOMAIN,
                std::string("joint law of the ") + arm + " arm must sum to 1",
                {{"sum", std::to_string(sum)}});
  }
  if (!allow_backlash && j.p10 > 0.0) {
    throw Error(ErrorCode::DOMAIN,
                std::string("backlash mass in the ") + arm +
                    " arm requires allow_backlash",
                {{"p10", std::to_string(j.p10)}});
  }
}

}  // namespace

void TwoPeriodDgp::validate() const {
  if (levels.empty()) {
    throw Error(ErrorCode::INVALID_INPUT, "DGP needs at least one level");
  }
  const std::size_t x_dim = levels.front().x.size();
  double total = 0.0;
  for (const DgpLevel& lev : levels) {
    if (lev.x.size() != x_dim) {
      throw Error(ErrorCode::INVALID_INPUT,
                  "all levels must share the covariate dimension");
    }
    require_prob(lev.prob, "level probability");
    require_prob(lev.propensity, "propensity");
    total += lev.prob;
    require_joint(lev.treated, "treated", allow_backlash);
    require_joint(lev.control, "control", allow_backlash);
    // The pre-period law is Pr(Y1(0)=1|arm) - trend; reject (never clip)
    // parameterizations that leave [0, 1], so the trend restriction holds
    // exactly in the sampled law.
    for (const ArmJoint* arm : {&lev.treated, &lev.control}) {
      const double pre = arm->pr_untreated_one() - lev.trend;
      if (!(pre >= 0.0 && pre <= 1.0)) {
        throw Error(ErrorCode::DOMAIN,
                    "trend pushes a pre-period probability outside [0, 1]",
                    {{"pre_probability", std::to_string(pre)},
                     {"trend", std::to_string(lev.trend)}});
      }
    }
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw Error(ErrorCode::DOMAIN, "level probabilities must sum to 1",
                {{"sum", std::to_string(total)}});
  }
}

void GaussianTwoPeriodDgp::validate() const {
  if (!(h_floor > 0.0) || !(h_scale >= 0.0) || !(g_scale >= 0.0) ||
      !(h_floor + h_scale + g_scale < 1.0)) {
    throw Error(ErrorCode::DOMAIN,
                "require h_floor > 0, h_scale >= 0, g_scale >= 0 and "
                "h_floor + h_scale + g_scale < 1 so probabilities stay "
                "inside (0, 1)",
                {{"h_floor", std::to_string(h_floor)},
                 {"h_scale", std::to_string(h_scale)},
                 {"g_scale", std::to_string(g_scale)}});
  }
}

void StaggeredDgp::validate() const {
  const int T = horizon;
  if (T < 1) {
    throw Error(ErrorCode::INVALID_INPUT, "horizon must be at least 1");
  }
  if (levels.empty()) {
    throw Error(ErrorCode::INVALID_INPUT, "DGP needs at least one level");
  }
  const std::size_t x_dim = levels.front().x.size();
  double total = 0.0;
  for (const Level& lev : levels) {
    if (lev.x.size() != x_dim) {
      throw Error(ErrorCode::INVALID_INPUT,
                  "all levels must share the covariate dimension");
    }
    require_prob(lev.prob, "level probability");
    total += lev.prob;
    if (static_cast<int>(lev.adoption.size()) != T) {
      throw Error(ErrorCode::INVALID_INPUT,
                  "adoption law needs one entry per cohort 1..T");
    }
    double adopt = 0.0;
    for (double a : lev.adoption) {
      require_prob(a, "adoption probability");
      adopt += a;
    }
    if (!(adopt < 1.0 - 1e-12)) {
      throw Error(ErrorCode::DOMAIN,
                  "adoption probabilities must leave positive never-treated "
                  "mass",
                  {{"sum", std::to_string(adopt)}});
    }
    if (static_cast<int>(lev.g.size()) != T + 1 ||
        static_cast<int>(lev.h.size()) != T + 1) {
      throw Error(ErrorCode::INVALID_INPUT,
                  "g and h need T+1 entries (h: one per cohort plus never)");
    }
    for (double gt : lev.g) {
      for (double hs : lev.h) {
        if (!(gt + hs >= 0.0 && gt + hs <= 1.0)) {
          throw Error(ErrorCode::DOMAIN,
                      "g(t) + h(s) must lie in [0, 1] for every (t, s)",
                      {{"value", std::to_string(gt + hs)}});
        }
      }
    }
    if (static_cast<int>(lev.lift.size()) != T) {
      throw Error(ErrorCode::INVALID_INPUT, "lift needs one row per cohort");
    }
    for (int s = 1; s <= T; ++s) {
      if (static_cast<int>(lev.lift[s - 1].size()) != T - s + 1) {
        throw Error(ErrorCode::INVALID_INPUT,
                    "lift row for cohort s needs T - s + 1 horizons");
      }
      for (double b : lev.lift[s - 1]) require_prob(b, "lift");
    }
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw Error(ErrorCode::DOMAIN, "level probabilities must sum to 1",
                {{"sum", std::to_string(total)}});
  }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

TwoPeriodPanel gen_two_period(const TwoPeriodDgp& dgp, int n,
                              std::uint64_t seed, std::uint64_t stream) {
  dgp.validate();
  if (n < 1) throw Error(ErrorCode::INVALID_INPUT, "n must be at least 1");
  CounterRng rng(seed, stream);
  const int n_levels = static_cast<int>(dgp.levels.size());
  std::vector<double> level_probs(n_levels);
  for (int l = 0; l < n_levels; ++l) level_probs[l] = dgp.levels[l].prob;
  const int x_dim = static_cast<int>(dgp.levels.front().x.size());

  TwoPeriodPanel panel;
  panel.y0.resize(n);
  panel.y1.resize(n);
  panel.d1.resize(n);
  panel.x.resize(n, x_dim);
  for (int i = 0; i < n; ++i) {
    const int l = rng.categorical(level_probs.data(), n_levels);
    const DgpLevel& lev = dgp.levels[l];
    for (int k = 0; k < x_dim; ++k) panel.x(i, k) = lev.x[k];
    const int d = rng.bernoulli(lev.propensity) ? 1 : 0;
    const ArmJoint& joint = d ? lev.treated : lev.control;
    const double cells[4] = {joint.p00, joint.p01, joint.p10, joint.p11};
    const int cell = rng.categorical(cells, 4);
    const int y1_untreated = cell >= 2 ? 1 : 0;
    const int y1_treated = (cell == 1 || cell == 3) ? 1 : 0;
    const double pre_prob = joint.pr_untreated_one() - lev.trend;
    panel.d1[i] = d;
    panel.y0[i] = rng.bernoulli(pre_prob) ? 1.0 : 0.0;
    panel.y1[i] = d ? y1_treated : y1_untreated;
  }
  return panel;
}

TwoPeriodPanel gen_gaussian_two_period(const GaussianTwoPeriodDgp& dgp, int n,
                                       std::uint64_t seed,
                                       std::uint64_t stream) {
  dgp.validate();
  if (n < 1) throw Error(ErrorCode::INVALID_INPUT, "n must be at least 1");
  CounterRng rng(seed, stream);
  TwoPeriodPanel panel;
  panel.y0.resize(n);
  panel.y1.resize(n);
  panel.d1.resize(n);
  panel.x.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    panel.x(i, 0) = x;
    const int d =
        rng.bernoulli(sigmoid(dgp.propensity_intercept + dgp.propensity_slope * x))
            ? 1
            : 0;
    const double h =
        dgp.h_floor + dgp.h_scale * sigmoid(dgp.h0 + dgp.h1 * x + dgp.h2 * d);
    const double g1 = dgp.g_scale * sigmoid(dgp.g0 + dgp.g1 * x);
    const int y1_untreated = rng.bernoulli(h + g1) ? 1 : 0;
    const int y1_treated =
        y1_untreated
            ? 1
            : (rng.bernoulli(sigmoid(dgp.c0 + dgp.c1 * x + dgp.c2 * d)) ? 1 : 0);
    panel.d1[i] = d;
    panel.y0[i] = rng.bernoulli(h) ? 1.0 : 0.0;
    panel.y1[i] = d ? y1_treated : y1_untreated;
  }
  return panel;
}

StaggeredPanel gen_staggered(const StaggeredDgp& dgp, int n,
                             std::uint64_t seed, std::uint64_t stream) {
  dgp.validate();
  if (n < 1) throw Error(ErrorCode::INVALID_INPUT, "n must be at least 1");
  CounterRng rng(seed, stream);
  const int T = dgp.horizon;
  const int n_levels = static_cast<int>(dgp.levels.size());
  std::vector<double> level_probs(n_levels);
  for (int l = 0; l < n_levels; ++l) level_probs[l] = dgp.levels[l].prob;
  const int x_dim = static_cast<int>(dgp.levels.front().x.size());

  StaggeredPanel panel;
  panel.y.resize(n, T + 1);
  panel.s.resize(n);
  panel.x.resize(n, x_dim);
  std::vector<double> s_probs(T + 1);
  for (int i = 0; i < n; ++i) {
    const int l = rng.categorical(level_probs.data(), n_levels);
    const StaggeredDgp::Level& lev = dgp.levels[l];
    for (int k = 0; k < x_dim; ++k) panel.x(i, k) = lev.x[k];
    double rest = 1.0;
    for (int s = 1; s <= T; ++s) {
      s_probs[s - 1] = lev.adoption[s - 1];
      rest -= lev.adoption[s - 1];
    }
    s_probs[T] = rest;  // never treated
    const int draw = rng.categorical(s_probs.data(), T + 1);
    const int s = draw == T ? kNeverTreated : draw + 1;
    const int h_index = draw;  // h[s-1] for cohorts, h[T] for never treated
    panel.s[i] = s;
    for (int t = 0; t <= T; ++t) {
      int y = rng.bernoulli(lev.g[t] + lev.h[h_index]) ? 1 : 0;
      if (s != kNeverTreated && t >= s && y == 0) {
        // Treatment only flips zeros upward: monotone in the treatment at
        // every horizon, and periods before adoption are untouched.
        y = rng.bernoulli(lev.lift[s - 1][t - s]) ? 1 : 0;
      }
      panel.y(i, t) = y;
    }
  }
  return panel;
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

namespace {

OracleValues two_period_oracle_from_moments(double w, double p00, double p01,
                                            double p10, double p11) {
  OracleValues o;
  if (p01 + p00 > 0.0) o.theta = p01 / (p01 + p00);
  if (p01 + p11 > 0.0) o.theta_r = p01 / (p01 + p11);
  if (w > 0.0) {
    o.att = (p01 - p10) / w;
    o.q = (p00 + p10) / w;
    if (o.att + o.q > 0.0) o.theta_l = o.att / (o.att + o.q);
    if (1.0 - o.q > 0.0) o.theta_r_l = o.att / (1.0 - o.q);
  }
  return o;
}

}  // namespace

OracleValues oracle(const TwoPeriodDgp& dgp) {
  dgp.validate();
  double w = 0.0, p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
  for (const DgpLevel& lev : dgp.levels) {
    const double w1 = lev.prob * lev.propensity;
    w += w1;
    p00 += w1 * lev.treated.p00;
    p01 += w1 * lev.treated.p01;
    p10 += w1 * lev.treated.p10;
    p11 += w1 * lev.treated.p11;
  }
  return two_period_oracle_from_moments(w, p00, p01, p10, p11);
}

OracleValues oracle(const GaussianTwoPeriodDgp& dgp, int nodes) {
  dgp.validate();
  GaussHermite gh = gauss_hermite(nodes);
  auto treated_cell = [&](double x, int which) {
    const double pd = sigmoid(dgp.propensity_intercept + dgp.propensity_slope * x);
    const double h = dgp.h_floor +
                     dgp.h_scale * sigmoid(dgp.h0 + dgp.h1 * x + dgp.h2 * 1.0);
    const double b1 = h + dgp.g_scale * sigmoid(dgp.g0 + dgp.g1 * x);
    const double c = sigmoid(dgp.c0 + dgp.c1 * x + dgp.c2 * 1.0);
    switch (which) {
      case 0: return pd * (1.0 - b1) * (1.0 - c);  // p00
      case 1: return pd * (1.0 - b1) * c;          // p01
      case 2: return pd * b1;                      // p11
      default: return pd;                          // treated share
    }
  };
  const double p00 = gauss_hermite_normal_mean(gh, [&](double x) {
    return treated_cell(x, 0);
  });
  const double p01 = gauss_hermite_normal_mean(gh, [&](double x) {
    return treated_cell(x, 1);
  });
  const double p11 = gauss_hermite_normal_mean(gh, [&](double x) {
    return treated_cell(x, 2);
  });
  const double w = gauss_hermite_normal_mean(gh, [&](double x) {
    return treated_cell(x, 3);
  });
  return two_period_oracle_from_moments(w, p00, p01, 0.0, p11);
}

OracleValues oracle(const StaggeredDgp& dgp) {
  dgp.validate();
  OracleValues o;
  const int T = dgp.horizon;
  // Unconditional-scale per-cohort sums: weight prob * Pr(S=s|level).
  for (int j = 0; j <= T - 1; ++j) {
    double agg_num = 0.0, agg_den = 0.0, agg_w = 0.0;
    for (int s = 1; s <= T - j; ++s) {
      double w_s = 0.0, num_s = 0.0, den_s = 0.0;
      for (const StaggeredDgp::Level& lev : dgp.levels) {
        const double w = lev.prob * lev.adoption[s - 1];
        const double m = lev.g[s + j] + lev.h[s - 1];  // Pr(Y_{s+j}(never)=1)
        w_s += w;
        num_s += w * (1.0 - m) * lev.lift[s - 1][j];
        den_s += w * (1.0 - m);
      }
      if (w_s <= 0.0) continue;
      if (den_s > 0.0) o.theta_pair[{s, j}] = num_s / den_s;
      agg_num += num_s;
      agg_den += den_s;
      agg_w += w_s;
    }
    if (agg_w > 0.0 && agg_den > 0.0) o.theta_espr[j] = agg_num / agg_den;
  }
  return o;
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

namespace {

template <typename Panel>
MonteCarloSummary run_monte_carlo(
    int n, int reps, double oracle_value, double level,
    const std::function<Panel(std::uint64_t)>& gen,
    const std::function<EstimateReport(const Panel&)>& estimate) {
  if (reps < 2) {
    throw Error(ErrorCode::INVALID_INPUT, "need at least 2 replications",
                {{"reps", std::to_string(reps)}});
  }
  MonteCarloSummary out;
  out.reps = reps;
  out.n = n;
  out.level = level;
  out.oracle_value = oracle_value;

  std::vector<double> ses;
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    Panel panel = gen(static_cast<std::uint64_t>(r));
    try {
      EstimateReport rep = estimate(panel);
      out.points.push_back(rep.point);
      ses.push_back(rep.se);
      if (rep.ci_lower <= oracle_value && oracle_value <= rep.ci_upper) {
        ++covered;
      }
    } catch (const Error&) {
      ++out.failures;
    }
  }
  const int ok = static_cast<int>(out.points.size());
  if (ok == 0) {
    throw Error(ErrorCode::INVALID_INPUT, "every replication failed",
                {{"reps", std::to_string(reps)}});
  }
  double mean = 0.0;
  for (double p : out.points) mean += p;
  mean /= ok;
  out.mean_point = mean;
  out.bias = mean - oracle_value;
  double ss = 0.0, se_sum = 0.0, mse = 0.0;
  for (double p : out.points) {
    ss += (p - mean) * (p - mean);
    mse += (p - oracle_value) * (p - oracle_value);
  }
  for (double s : ses) se_sum += s;
  out.sd = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
  out.rmse = std::sqrt(mse / ok);
  out.mean_se = se_sum / ok;
  out.coverage = static_cast<double>(covered) / ok;
  return out;
}

}  // namespace

MonteCarloSummary monte_carlo_two_period(
    const TwoPeriodDgp& dgp, int n, int reps, std::uint64_t seed,
    double oracle_value, double level,
    const std::function<EstimateReport(const TwoPeriodPanel&)>& estimate) {
  return run_monte_carlo<TwoPeriodPanel>(
      n, reps, oracle_value, level,
      [&](std::uint64_t r) { return gen_two_period(dgp, n, seed, r); },
      estimate);
}

MonteCarloSummary monte_carlo_gaussian(
    const GaussianTwoPeriodDgp& dgp, int n, int reps, std::uint64_t seed,
    double oracle_value, double level,
    const std::function<EstimateReport(const TwoPeriodPanel&)>& estimate) {
  return run_monte_carlo<TwoPeriodPanel>(
      n, reps, oracle_value, level,
      [&](std::uint64_t r) { return gen_gaussian_two_period(dgp, n, seed, r); },
      estimate);
}

MonteCarloSummary monte_carlo_staggered(
    const StaggeredDgp& dgp, int n, int reps, std::uint64_t seed,
    double oracle_value, double level,
    const std::function<EstimateReport(const StaggeredPanel&)>& estimate) {
  return run_monte_carlo<StaggeredPanel>(
      n, reps, oracle_value, level,
      [&](std::uint64_t r) { return gen_staggered(dgp, n, seed, r); },
      estimate);
}

}  // namespace persuasion
