#include "persuasion/staggered.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "persuasion/errors.hpp"
#include "persuasion/stats.hpp"

namespace persuasion {

namespace {

constexpr double kDenominatorGuard = 1e-8;

void check_pair_range(const StaggeredPanel& panel, int s, int j) {
  const int T = panel.horizon();
  if (s < 1 || s > T || s + j < 0 || s + j > T) {
    throw Error(ErrorCode::HORIZON_OUT_OF_RANGE,
                "pair (s, s+j) must satisfy 1 <= s <= T and 0 <= s+j <= T",
                {{"s", std::to_string(s)},
                 {"j", std::to_string(j)},
                 {"T", std::to_string(T)}});
  }
}

// Group-by-period cell means over the pair {cohort s, never treated} x
// {t_pre, t_post}, accumulated in unit order (the same single-pass shape as
// the two-period regression module, so the T = 1 case reduces to it exactly).
struct PairCells {
  double a_inf = 0, b_inf = 0, a_s = 0, b_s = 0;  // means: pre/post x group
  int n_s = 0, n_inf = 0;
};

PairCells pair_cells(const StaggeredPanel& panel, int s, int t_pre, int t_post) {
  PairCells c;
  double sum_inf[2] = {0, 0};  // [pre, post]
  double sum_s[2] = {0, 0};
  for (int i = 0; i < panel.n(); ++i) {
    if (panel.s[i] == s) {
      sum_s[0] += panel.y(i, t_pre);
      sum_s[1] += panel.y(i, t_post);
      ++c.n_s;
    } else if (panel.s[i] == kNeverTreated) {
      sum_inf[0] += panel.y(i, t_pre);
      sum_inf[1] += panel.y(i, t_post);
      ++c.n_inf;
    }
  }
  if (c.n_s == 0 || c.n_inf == 0) {
    throw Error(ErrorCode::EMPTY_GROUP,
                "both the adopting cohort and the never-treated group must be "
                "non-empty",
                {{"s", std::to_string(s)},
                 {"n_cohort", std::to_string(c.n_s)},
                 {"n_never_treated", std::to_string(c.n_inf)}});
  }
  c.a_inf = sum_inf[0] / c.n_inf;
  c.b_inf = sum_inf[1] / c.n_inf;
  c.a_s = sum_s[0] / c.n_s;
  c.b_s = sum_s[1] / c.n_s;
  return c;
}

PairwiseTheta theta_from_cells(const PairCells& c, int s, int j,
                               bool strict = true) {
  PairwiseTheta p;
  p.s = s;
  p.j = j;
  p.mean_pre_inf = c.a_inf;
  p.mean_post_inf = c.b_inf;
  p.mean_pre_s = c.a_s;
  p.mean_post_s = c.b_s;
  p.n_s = c.n_s;
  p.n_inf = c.n_inf;
  p.gamma0 = c.a_inf;
  p.gamma1 = c.a_s - c.a_inf;
  p.gamma2 = c.b_inf - c.a_inf;
  p.num = (c.b_s - c.a_s) - (c.b_inf - c.a_inf);
  p.den = 1.0 - p.gamma0 - p.gamma1 - p.gamma2;
  if (j == -1) {
    // Reference-period normalization: pre and post coincide, so the
    // numerator is identically zero and the rate is zero by construction.
    p.theta = 0.0;
  } else if (std::abs(p.den) > kDenominatorGuard) {
    p.theta = p.num / p.den;
  } else if (strict) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                "pairwise persuasion-rate denominator is numerically zero",
                {{"s", std::to_string(s)},
                 {"j", std::to_string(j)},
                 {"denominator", std::to_string(p.den)}});
  } else {
    // Inside an aggregate a degenerate component denominator is tolerated:
    // only the weighted sums matter, the per-cohort ratio is undefined.
    p.theta = std::numeric_limits<double>::quiet_NaN();
  }
  return p;
}

}  // namespace

const char* stagger_estimator_name(StaggerEstimator e) {
  switch (e) {
    case StaggerEstimator::REGRESSION: return "REGRESSION";
    case StaggerEstimator::DR: return "DR";
  }
  return "UNKNOWN";
}

PairwiseTheta pairwise_theta(const StaggeredPanel& panel, int s, int j) {
  panel.validate();
  check_pair_range(panel, s, j);
  PairCells c = pair_cells(panel, s, s - 1, s + j);
  return theta_from_cells(c, s, j);
}

EventStudyCoefficients event_study_regression(const StaggeredPanel& panel,
                                              int group, int anchor) {
  panel.validate();
  const int T = panel.horizon();
  if (anchor < 1 || anchor > T) {
    throw Error(ErrorCode::HORIZON_OUT_OF_RANGE,
                "event-study anchor must satisfy 1 <= anchor <= T",
                {{"anchor", std::to_string(anchor)}, {"T", std::to_string(T)}});
  }
  EventStudyCoefficients out;
  out.group = group;
  out.anchor = anchor;
  std::vector<double> sums(T + 1, 0.0);
  for (int i = 0; i < panel.n(); ++i) {
    if (panel.s[i] != group) continue;
    for (int t = 0; t <= T; ++t) sums[t] += panel.y(i, t);
    ++out.n_units;
  }
  if (out.n_units == 0) {
    throw Error(ErrorCode::EMPTY_GROUP, "event-study group has no units",
                {{"group", std::to_string(group)}});
  }
  out.mu_ref = sums[anchor - 1] / out.n_units;
  for (int t = 0; t <= T; ++t) {
    if (t == anchor - 1) continue;
    out.alpha[t - anchor] = sums[t] / out.n_units - out.mu_ref;
  }
  return out;
}

EventStudyCoefficients event_study_regression(const StaggeredPanel& panel,
                                              int group) {
  if (group == kNeverTreated) {
    throw Error(ErrorCode::INVALID_INPUT,
                "the never-treated group needs an explicit anchor cohort");
  }
  return event_study_regression(panel, group, group);
}

double assemble_event_study_theta(const StaggeredPanel& panel, int s, int j) {
  panel.validate();
  check_pair_range(panel, s, j);
  EventStudyCoefficients cohort = event_study_regression(panel, s, s);
  EventStudyCoefficients control =
      event_study_regression(panel, kNeverTreated, s);
  const double alpha_s = j == -1 ? 0.0 : cohort.alpha.at(j);
  const double alpha_inf = j == -1 ? 0.0 : control.alpha.at(j);
  const double num = alpha_s - alpha_inf;
  const double den = 1.0 - cohort.mu_ref - alpha_inf;
  if (j == -1) return 0.0;
  if (!(std::abs(den) > kDenominatorGuard)) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                "event-study persuasion-rate denominator is numerically zero",
                {{"s", std::to_string(s)}, {"j", std::to_string(j)}});
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// ESPR aggregation with stacked influence-function inference
// ---------------------------------------------------------------------------

namespace {

// Everything one cohort pair contributes to the aggregate and its variance:
// the conditional-scale numerator/denominator and the per-unit nuisance
// values entering the influence terms. odds and delta are full-length and
// read only at units belonging to the pair.
struct PairData {
  PairwiseTheta summary;
  int t_pre = 0;
  int t_post = 0;
  std::vector<double> odds;
  std::vector<double> delta;
};

double clamp_unit(double v, double eps, int* binds) {
  if (v < eps) {
    ++*binds;
    return eps;
  }
  if (v > 1.0 - eps) {
    ++*binds;
    return 1.0 - eps;
  }
  return v;
}

// Regression-style plug-ins: constant within-pair adoption odds and the
// never-treated trend as the control-trend value for every unit.
void fill_constant_nuisances(const StaggeredPanel& panel, const PairCells& cells,
                             PairData* pair) {
  const int n = panel.n();
  const double odds =
      static_cast<double>(cells.n_s) / static_cast<double>(cells.n_inf);
  pair->odds.assign(n, odds);
  pair->delta.assign(n, cells.b_inf - cells.a_inf);
}

// Doubly robust plug-ins: outcome models for the two periods fitted on the
// never-treated group, adoption propensity fitted within the pair.
void fill_dr_nuisances(const StaggeredPanel& panel, int s,
                       const StaggeredOptions& options, PairData* pair,
                       int* outcome_binds, int* propensity_binds) {
  const int n = panel.n();
  std::vector<double> y_pre(n), y_post(n), is_cohort(n);
  std::vector<int> members, never_treated;
  for (int i = 0; i < n; ++i) {
    y_pre[i] = panel.y(i, pair->t_pre);
    y_post[i] = panel.y(i, pair->t_post);
    is_cohort[i] = panel.s[i] == s ? 1.0 : 0.0;
    if (panel.s[i] == s) {
      members.push_back(i);
    } else if (panel.s[i] == kNeverTreated) {
      members.push_back(i);
      never_treated.push_back(i);
    }
  }
  ProbModel pre_model = fit_binary_model(panel.x, y_pre, never_treated,
                                         options.method, options.level_cap);
  ProbModel post_model = fit_binary_model(panel.x, y_post, never_treated,
                                          options.method, options.level_cap);
  ProbModel prop_model = fit_binary_model(panel.x, is_cohort, members,
                                          options.method, options.level_cap);
  pair->odds.assign(n, 0.0);
  pair->delta.assign(n, 0.0);
  const double eps = options.eps_trim;
  for (int i : members) {
    const Eigen::RowVectorXd xi = panel.x_dim() > 0
                                      ? Eigen::RowVectorXd(panel.x.row(i))
                                      : Eigen::RowVectorXd(0);
    const double pre = clamp_unit(pre_model.predict(xi), eps, outcome_binds);
    const double post = clamp_unit(post_model.predict(xi), eps, outcome_binds);
    pair->delta[i] = post - pre;
    const double p =
        clamp_unit(prop_model.predict(xi), eps, propensity_binds);
    pair->odds[i] = p / (1.0 - p);
  }
}

// Per-pair doubly robust numerator/denominator on the conditional scale:
// sums of the influence terms over the pair, divided by the cohort size.
void dr_pair_estimates(const StaggeredPanel& panel, int s, PairData* pair) {
  double bracket_num = 0.0, bracket_den = 0.0;
  for (int i = 0; i < panel.n(); ++i) {
    const double dy = panel.y(i, pair->t_post) - panel.y(i, pair->t_pre);
    if (panel.s[i] == s) {
      bracket_num += dy - pair->delta[i];
      bracket_den += 1.0 - panel.y(i, pair->t_pre) - pair->delta[i];
    } else if (panel.s[i] == kNeverTreated) {
      const double c = pair->odds[i] * (dy - pair->delta[i]);
      bracket_num -= c;
      bracket_den -= c;
    }
  }
  pair->summary.num = bracket_num / pair->summary.n_s;
  pair->summary.den = bracket_den / pair->summary.n_s;
  if (pair->summary.j == -1) {
    pair->summary.theta = 0.0;
  } else if (std::abs(pair->summary.den) > kDenominatorGuard) {
    pair->summary.theta = pair->summary.num / pair->summary.den;
  } else {
    pair->summary.theta = std::numeric_limits<double>::quiet_NaN();
  }
}

struct StackedResult {
  double se = 0.0;
  Eigen::MatrixXd sigma;
};

// Stacked expansion across cohorts. Per unit i and retained cohort s (m of
// them, share p_s = n_s / n):
//   num term:  [w_num(i) - num_s 1(S_i = s)] / p_s
//   den term:  [w_den(i) - den_s 1(S_i = s)] / p_s
//   share term: 1(S_i = s) - p_s
// where w_num / w_den are the doubly robust influence pieces whose sums give
// the pair estimates. Contributions are summed within clusters, their outer
// products form sigma, and the variance of the ratio-of-weighted-sums is the
// plug-in Jacobian sandwich sigma / n.
StackedResult stacked_core(const StaggeredPanel& panel,
                           const std::vector<PairData>& pairs, double agg_num,
                           double agg_den) {
  const int n = panel.n();
  const int m = static_cast<int>(pairs.size());
  std::vector<int> idx = cluster_index(panel.cluster, n);
  int n_clusters = 0;
  for (int i = 0; i < n; ++i) n_clusters = std::max(n_clusters, idx[i] + 1);

  Eigen::VectorXd shares(m), nums(m), dens(m);
  for (int k = 0; k < m; ++k) {
    shares[k] = static_cast<double>(pairs[k].summary.n_s) / n;
    nums[k] = pairs[k].summary.num;
    dens[k] = pairs[k].summary.den;
  }

  Eigen::MatrixXd cluster_q = Eigen::MatrixXd::Zero(n_clusters, 3 * m);
  for (int i = 0; i < n; ++i) {
    const bool never = panel.s[i] == kNeverTreated;
    for (int k = 0; k < m; ++k) {
      const PairData& pair = pairs[k];
      const bool member = panel.s[i] == pair.summary.s;
      double w_num = 0.0, w_den = 0.0;
      if (member) {
        const double dy = panel.y(i, pair.t_post) - panel.y(i, pair.t_pre);
        w_num = dy - pair.delta[i];
        w_den = 1.0 - panel.y(i, pair.t_pre) - pair.delta[i];
      } else if (never) {
        const double dy = panel.y(i, pair.t_post) - panel.y(i, pair.t_pre);
        const double c = pair.odds[i] * (dy - pair.delta[i]);
        w_num = -c;
        w_den = -c;
      }
      const double ind = member ? 1.0 : 0.0;
      cluster_q(idx[i], k) += (w_num - nums[k] * ind) / shares[k];
      cluster_q(idx[i], m + k) += (w_den - dens[k] * ind) / shares[k];
      cluster_q(idx[i], 2 * m + k) += ind - shares[k];
    }
  }

  const double factor =
      n_clusters > 1 ? static_cast<double>(n_clusters) / (n_clusters - 1) : 1.0;
  StackedResult out;
  out.sigma = (cluster_q.transpose() * cluster_q) * (factor / n);

  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(2, 3 * m);
  proj.block(0, 0, 1, m) = shares.transpose();
  proj.block(0, 2 * m, 1, m) = nums.transpose();
  proj.block(1, m, 1, m) = shares.transpose();
  proj.block(1, 2 * m, 1, m) = dens.transpose();
  Eigen::RowVector2d jac(1.0 / agg_den, -agg_num / (agg_den * agg_den));

  const double variance =
      (jac * proj * out.sigma * proj.transpose() * jac.transpose())(0, 0) / n;
  if (!std::isfinite(variance) || variance < -1e-12) {
    throw Error(ErrorCode::SINGULAR_SIGMA,
                "stacked covariance produced an invalid variance",
                {{"variance", std::to_string(variance)}});
  }
  out.se = std::sqrt(std::max(variance, 0.0));
  return out;
}

EsprReport espr_core(const StaggeredPanel& panel, int j,
                     StaggerEstimator estimator, const StaggeredOptions& options,
                     bool pretrend) {
  panel.validate();
  const int T = panel.horizon();
  const int n = panel.n();
  EsprReport report;
  report.j = j;
  report.estimator = estimator;
  report.pretrend = pretrend;
  report.level = 1.0 - options.alpha;
  report.n = n;

  const int s_lo = std::max(1, -j);
  const int s_hi = std::min(T, T - j);
  std::vector<int> cohort_count(T + 1, 0);
  int n_inf = 0;
  for (int i = 0; i < n; ++i) {
    if (panel.s[i] == kNeverTreated) {
      ++n_inf;
    } else {
      ++cohort_count[panel.s[i]];
    }
  }

  std::vector<PairData> pairs;
  int outcome_binds = 0, propensity_binds = 0;
  for (int s = s_lo; s <= s_hi; ++s) {
    if (cohort_count[s] == 0) continue;  // cohort absent from the design
    if (cohort_count[s] < 2 || n_inf < 2) {
      report.warnings.push_back("cohort " + std::to_string(s) +
                                " dropped: fewer than 2 units in the cohort "
                                "or never-treated group");
      continue;
    }
    PairData pair;
    pair.t_pre = s - 1;
    pair.t_post = s + j;
    PairCells cells = pair_cells(panel, s, pair.t_pre, pair.t_post);
    pair.summary = theta_from_cells(cells, s, j);
    if (estimator == StaggerEstimator::REGRESSION) {
      fill_constant_nuisances(panel, cells, &pair);
    } else {
      fill_dr_nuisances(panel, s, options, &pair, &outcome_binds,
                        &propensity_binds);
      dr_pair_estimates(panel, s, &pair);
    }
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) {
    throw Error(ErrorCode::NO_ELIGIBLE_GROUPS,
                "no cohort has an estimable pair at this horizon",
                {{"j", std::to_string(j)},
                 {"s_lo", std::to_string(s_lo)},
                 {"s_hi", std::to_string(s_hi)}});
  }

  double agg_num = 0.0, agg_den = 0.0;
  for (const PairData& pair : pairs) {
    const double share = static_cast<double>(pair.summary.n_s) / n;
    report.weights[pair.summary.s] = share;
    report.components.push_back(pair.summary);
    agg_num += share * pair.summary.num;
    agg_den += share * pair.summary.den;
  }
  if (!(std::abs(agg_den) > kDenominatorGuard)) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                "aggregated persuasion-rate denominator is numerically zero",
                {{"denominator", std::to_string(agg_den)}});
  }
  report.num = agg_num;
  report.den = agg_den;
  report.theta = agg_num / agg_den;

  StackedResult stacked = stacked_core(panel, pairs, agg_num, agg_den);
  report.se = stacked.se;
  const double z = inverse_normal_cdf(1.0 - options.alpha / 2.0);
  report.ci_lower = report.theta - z * report.se;
  report.ci_upper = report.theta + z * report.se;

  if (outcome_binds > 0) {
    report.warnings.push_back("outcome-model predictions trimmed at " +
                              std::to_string(outcome_binds) + " evaluations");
  }
  if (propensity_binds > 0) {
    report.warnings.push_back("propensity predictions trimmed at " +
                              std::to_string(propensity_binds) + " evaluations");
  }
  if (!pretrend && (report.theta < 0.0 || report.theta > 1.0)) {
    report.warnings.push_back("estimate lies outside [0,1]; reported raw");
  }
  report.warnings.insert(report.warnings.end(), panel.notes.begin(),
                         panel.notes.end());
  return report;
}

}  // namespace

EsprReport espr(const StaggeredPanel& panel, int j, StaggerEstimator estimator,
                const StaggeredOptions& options) {
  if (j < 0) {
    throw Error(ErrorCode::INVALID_INPUT,
                "espr takes j >= 0; use espr_pretrend for placebo horizons",
                {{"j", std::to_string(j)}});
  }
  return espr_core(panel, j, estimator, options, /*pretrend=*/false);
}

EsprReport espr_pretrend(const StaggeredPanel& panel, int j,
                         StaggerEstimator estimator,
                         const StaggeredOptions& options) {
  if (j > -1) {
    throw Error(ErrorCode::INVALID_INPUT,
                "pre-trend horizons are j <= -1",
                {{"j", std::to_string(j)}});
  }
  return espr_core(panel, j, estimator, options, /*pretrend=*/true);
}

StackedInference stacked_inference(const StaggeredPanel& panel,
                                   const std::vector<PairwiseTheta>& components,
                                   int j) {
  panel.validate();
  const int n = panel.n();
  std::vector<PairData> pairs;
  double agg_num = 0.0, agg_den = 0.0;
  for (const PairwiseTheta& comp : components) {
    check_pair_range(panel, comp.s, j);
    int n_s = 0;
    for (int i = 0; i < n; ++i) n_s += panel.s[i] == comp.s;
    if (n_s == 0) continue;  // empty cohort: weight zero, no contribution
    PairData pair;
    pair.summary = comp;
    pair.summary.j = j;
    pair.summary.n_s = n_s;
    pair.t_pre = comp.s - 1;
    pair.t_post = comp.s + j;
    PairCells cells = pair_cells(panel, comp.s, pair.t_pre, pair.t_post);
    fill_constant_nuisances(panel, cells, &pair);
    const double share = static_cast<double>(n_s) / n;
    agg_num += share * comp.num;
    agg_den += share * comp.den;
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) {
    throw Error(ErrorCode::NO_ELIGIBLE_GROUPS,
                "no component cohort is present in the panel");
  }
  if (!(std::abs(agg_den) > kDenominatorGuard)) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                "aggregated persuasion-rate denominator is numerically zero",
                {{"denominator", std::to_string(agg_den)}});
  }
  StackedResult res = stacked_core(panel, pairs, agg_num, agg_den);
  StackedInference out;
  out.se = res.se;
  out.sigma = std::move(res.sigma);
  return out;
}

}  // namespace persuasion
