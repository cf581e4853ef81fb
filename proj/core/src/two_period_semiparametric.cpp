#include "persuasion/two_period_semiparametric.hpp"

#include <cmath>

#include "persuasion/errors.hpp"
#include "persuasion/stats.hpp"

namespace persuasion {

namespace {

constexpr double kDenominatorGuard = 1e-8;

void check_denominator(double den, const char* what) {
  if (!(std::abs(den) > kDenominatorGuard)) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                std::string(what) + " denominator is numerically zero",
                {{"denominator", std::to_string(den)}});
  }
}

}  // namespace

const char* link_name(Link link) {
  switch (link) {
    case Link::IDENTITY: return "IDENTITY";
    case Link::LOGIT: return "LOGIT";
    case Link::EXPONENTIAL: return "EXPONENTIAL";
  }
  return "UNKNOWN";
}

const char* semipar_estimator_name(SemiparEstimator e) {
  switch (e) {
    case SemiparEstimator::DID: return "DID";
    case SemiparEstimator::PI: return "PI";
    case SemiparEstimator::POW: return "POW";
    case SemiparEstimator::DR: return "DR";
  }
  return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// Psi
// ---------------------------------------------------------------------------

double psi_value(double pi0_treated, double pi1_control, double pi0_control,
                 Link link, bool* clipped) {
  if (clipped) *clipped = false;
  switch (link) {
    case Link::IDENTITY: {
      double raw = pi0_treated + pi1_control - pi0_control;
      if (raw < 0.0) {
        if (clipped) *clipped = true;
        return 0.0;
      }
      if (raw > 1.0) {
        if (clipped) *clipped = true;
        return 1.0;
      }
      return raw;
    }
    case Link::LOGIT: {
      for (double v : {pi0_treated, pi1_control, pi0_control}) {
        if (!(v > 0.0 && v < 1.0)) {
          throw Error(ErrorCode::LINK_DOMAIN,
                      "LOGIT link needs probabilities strictly inside (0,1)",
                      {{"value", std::to_string(v)}});
        }
      }
      double s = std::log(pi0_treated / (1.0 - pi0_treated)) +
                 std::log(pi1_control / (1.0 - pi1_control)) -
                 std::log(pi0_control / (1.0 - pi0_control));
      return sigmoid(s);
    }
    case Link::EXPONENTIAL: {
      for (double v : {pi0_treated, pi1_control, pi0_control}) {
        if (!(v >= 0.0 && v < 1.0)) {
          throw Error(ErrorCode::LINK_DOMAIN,
                      "EXPONENTIAL link needs probabilities in [0,1)",
                      {{"value", std::to_string(v)}});
        }
      }
      // Lambda(p) = -log(1-p); the composition must stay in Lambda's range.
      double s = -std::log1p(-pi0_treated) - std::log1p(-pi1_control) +
                 std::log1p(-pi0_control);
      if (s < 0.0) {
        throw Error(ErrorCode::LINK_DOMAIN,
                    "EXPONENTIAL link composition is negative",
                    {{"composition", std::to_string(s)}});
      }
      return -std::expm1(-s);
    }
  }
  throw Error(ErrorCode::INVALID_INPUT, "unknown link");
}

PsiValues compute_psi(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                      Link link) {
  PsiValues out;
  out.value.resize(panel.n());
  for (int i = 0; i < panel.n(); ++i) {
    bool clipped = false;
    out.value[i] = psi_value(fit.pi(0, 1, i), fit.pi(1, 0, i), fit.pi(0, 0, i),
                             link, &clipped);
    if (clipped) ++out.clip_count;
  }
  return out;
}

double psi_at(const NuisanceFit& fit, Link link, const Eigen::RowVectorXd& x) {
  auto trimmed = [&](const ProbModel& m) {
    double v = m.predict(x);
    return std::min(std::max(v, fit.eps_trim), 1.0 - fit.eps_trim);
  };
  return psi_value(trimmed(fit.models[0][1]), trimmed(fit.models[1][0]),
                   trimmed(fit.models[0][0]), link);
}

// ---------------------------------------------------------------------------
// EIF terms
// ---------------------------------------------------------------------------

EifTerms compute_eif_terms(const TwoPeriodPanel& panel, const NuisanceFit& fit) {
  const int n = panel.n();
  EifTerms t;
  t.pow_num.resize(n);
  t.pow_den.resize(n);
  t.pow_adj.resize(n);
  t.pi_num.resize(n);
  t.pi_den.resize(n);
  t.pi_adj.resize(n);
  for (int i = 0; i < n; ++i) {
    const double d = panel.d1[i];
    const double dy = panel.y1[i] - panel.y0[i];
    const double w = fit.odds(i);
    const double delta0 = fit.delta(0, i);
    const double ctrl = (1.0 - d) * w;  // odds-weighted control indicator
    t.pow_num[i] = d * dy - ctrl * dy;
    t.pow_den[i] = d * (1.0 - panel.y0[i]) - ctrl * dy;
    t.pow_adj[i] = -(d - ctrl) * delta0;
    t.pi_num[i] = d * (dy - delta0);
    t.pi_den[i] = d * ((1.0 - panel.y0[i]) - delta0);
    t.pi_adj[i] = -ctrl * (dy - delta0);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Shared assembly
// ---------------------------------------------------------------------------

namespace {

// se = sqrt(mean(F^2)/n) where F is the efficient influence function at the
// given point/denominator. With explicit cluster ids the per-unit values are
// summed within clusters and the meat carries G/(G-1).
double se_from_influence(const std::vector<double>& f,
                         const std::vector<std::string>& cluster_ids) {
  const int n = static_cast<int>(f.size());
  if (cluster_ids.empty()) {
    double ss = 0.0;
    for (double v : f) ss += v * v;
    return std::sqrt(ss / n) / std::sqrt(static_cast<double>(n));
  }
  std::vector<int> idx = cluster_index(cluster_ids, n);
  int n_clusters = 0;
  for (int i = 0; i < n; ++i) n_clusters = std::max(n_clusters, idx[i] + 1);
  std::vector<double> sums(n_clusters, 0.0);
  for (int i = 0; i < n; ++i) sums[idx[i]] += f[i];
  double ss = 0.0;
  for (double v : sums) ss += v * v;
  double factor =
      n_clusters > 1 ? static_cast<double>(n_clusters) / (n_clusters - 1) : 1.0;
  return std::sqrt(factor * ss) / n;
}

// Influence values for the persuasion rate: both arrangements of the EIF give
// the same F because num+adj and den+adj match term by term.
std::vector<double> influence_values(const TwoPeriodPanel& panel,
                                     const EifTerms& t, Estimand target,
                                     double theta, double theta_den,
                                     bool pow_family) {
  const int n = panel.n();
  std::vector<double> f(n);
  const auto& num = pow_family ? t.pow_num : t.pi_num;
  const auto& den = pow_family ? t.pow_den : t.pi_den;
  const auto& adj = pow_family ? t.pow_adj : t.pi_adj;
  for (int i = 0; i < n; ++i) {
    if (target == Estimand::APRT) {
      f[i] = ((num[i] + adj[i]) - theta * (den[i] + adj[i])) / theta_den;
    } else {
      // Reverse rate: the denominator contribution is the observed Y1*D.
      f[i] = ((num[i] + adj[i]) - theta * (panel.y1[i] * panel.d1[i])) / theta_den;
    }
  }
  return f;
}

struct SumParts {
  double pi_num = 0, pi_den = 0, pi_adj = 0;
  double pow_num = 0, pow_den = 0;
  double y1d = 0;
};

SumParts sum_terms(const TwoPeriodPanel& panel, const EifTerms& t) {
  SumParts s;
  for (int i = 0; i < panel.n(); ++i) {
    s.pi_num += t.pi_num[i];
    s.pi_den += t.pi_den[i];
    s.pi_adj += t.pi_adj[i];
    s.pow_num += t.pow_num[i];
    s.pow_den += t.pow_den[i];
    s.y1d += panel.y1[i] * panel.d1[i];
  }
  return s;
}

void require_binary(const TwoPeriodPanel& panel) {
  panel.validate();
  if (!panel.binary_outcomes()) {
    throw Error(ErrorCode::NON_BINARY_VALUE,
                "semiparametric estimators require binary outcomes "
                "(residualized panels are regression-only)");
  }
}

EstimateReport finish_report(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                             Estimand target, const char* name, double num,
                             double den, const std::vector<double>& f,
                             double alpha) {
  const int n = panel.n();
  double theta = num / den;
  double se = se_from_influence(f, panel.cluster);
  EstimateReport rep = make_report(target, name, theta, se, alpha, n);
  rep.diagnostics["num"] = num;
  rep.diagnostics["den"] = den;
  rep.diagnostics["trim_count_outcome"] = fit.trim_count_outcome;
  rep.diagnostics["trim_count_propensity"] = fit.trim_count_propensity;
  rep.diagnostics["cross_fitted"] = fit.folds ? 1.0 : 0.0;
  rep.warnings.insert(rep.warnings.end(), panel.notes.begin(), panel.notes.end());
  return rep;
}

}  // namespace

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

EstimateReport estimate_did(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                            Estimand target, double alpha, Link link) {
  require_binary(panel);
  const int n = panel.n();
  PsiValues psi = compute_psi(panel, fit, link);

  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    if (!panel.d1[i]) continue;
    double pi11 = fit.pi(1, 1, i);
    num += pi11 - psi.value[i];
    den += target == Estimand::APRT ? 1.0 - psi.value[i] : pi11;
  }
  check_denominator(den, "DID");

  EifTerms terms = compute_eif_terms(panel, fit);
  std::vector<double> f = influence_values(panel, terms, target, num / den,
                                           den / n, /*pow_family=*/false);
  EstimateReport rep = finish_report(panel, fit, target, "DID", num, den, f, alpha);
  rep.diagnostics["psi_clip_count"] = psi.clip_count;
  if (psi.clip_count > 0) {
    rep.warnings.push_back("Psi clipped to [0,1] for " +
                           std::to_string(psi.clip_count) + " unit(s)");
  }
  return rep;
}

EstimateReport estimate_pi(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                           Estimand target, double alpha) {
  require_binary(panel);
  EifTerms terms = compute_eif_terms(panel, fit);
  SumParts s = sum_terms(panel, terms);
  double num = s.pi_num;
  double den = target == Estimand::APRT ? s.pi_den : s.y1d;
  check_denominator(den, "PI");
  std::vector<double> f = influence_values(panel, terms, target, num / den,
                                           den / panel.n(), /*pow_family=*/false);
  return finish_report(panel, fit, target, "PI", num, den, f, alpha);
}

EstimateReport estimate_pow(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                            Estimand target, double alpha) {
  require_binary(panel);
  EifTerms terms = compute_eif_terms(panel, fit);
  SumParts s = sum_terms(panel, terms);
  double num = s.pow_num;
  double den = target == Estimand::APRT ? s.pow_den : s.y1d;
  check_denominator(den, "POW");
  std::vector<double> f = influence_values(panel, terms, target, num / den,
                                           den / panel.n(), /*pow_family=*/true);
  return finish_report(panel, fit, target, "POW", num, den, f, alpha);
}

EstimateReport estimate_dr(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                           Estimand target, double alpha) {
  require_binary(panel);
  EifTerms terms = compute_eif_terms(panel, fit);
  SumParts s = sum_terms(panel, terms);
  // The odds-weighted control correction enters numerator and (for the
  // persuasion rate) denominator alike.
  double num = s.pi_num + s.pi_adj;
  double den = target == Estimand::APRT ? s.pi_den + s.pi_adj : s.y1d;
  check_denominator(den, "DR");
  std::vector<double> f = influence_values(panel, terms, target, num / den,
                                           den / panel.n(), /*pow_family=*/false);
  EstimateReport rep = finish_report(panel, fit, target, "DR", num, den, f, alpha);
  rep.diagnostics["adjustment"] = s.pi_adj;
  return rep;
}

EstimateReport estimate_semipar(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                                SemiparEstimator estimator, Estimand target,
                                double alpha, Link link) {
  switch (estimator) {
    case SemiparEstimator::DID: return estimate_did(panel, fit, target, alpha, link);
    case SemiparEstimator::PI: return estimate_pi(panel, fit, target, alpha);
    case SemiparEstimator::POW: return estimate_pow(panel, fit, target, alpha);
    case SemiparEstimator::DR: return estimate_dr(panel, fit, target, alpha);
  }
  throw Error(ErrorCode::INVALID_INPUT, "unknown estimator");
}

std::vector<double> eif_values(const TwoPeriodPanel& panel, const NuisanceFit& fit,
                               double point, Estimand target) {
  require_binary(panel);
  EifTerms terms = compute_eif_terms(panel, fit);
  SumParts s = sum_terms(panel, terms);
  double theta_den = (target == Estimand::APRT ? s.pi_den + s.pi_adj : s.y1d) /
                     panel.n();
  check_denominator(theta_den, "EIF");
  return influence_values(panel, terms, target, point, theta_den,
                          /*pow_family=*/false);
}

double eif_se(const TwoPeriodPanel& panel, const NuisanceFit& fit, double point,
              Estimand target) {
  return se_from_influence(eif_values(panel, fit, point, target), panel.cluster);
}

// ---------------------------------------------------------------------------
// Unconfoundedness mode
// ---------------------------------------------------------------------------

EstimateReport estimate_unconfoundedness_mode(const TwoPeriodPanel& panel,
                                              NuisanceMethod method,
                                              SemiparEstimator estimator,
                                              Estimand target, double alpha,
                                              std::optional<int> crossfit_k,
                                              std::uint64_t seed) {
  require_binary(panel);
  const int n = panel.n();

  // Conditioning set Z = [Y0, X].
  TwoPeriodPanel aug = panel;
  aug.x.resize(n, panel.x_dim() + 1);
  for (int i = 0; i < n; ++i) aug.x(i, 0) = panel.y0[i];
  if (panel.x_dim() > 0) aug.x.rightCols(panel.x_dim()) = panel.x;

  std::optional<FoldPlan> folds;
  if (crossfit_k) folds = FoldPlan::make(aug, *crossfit_k, seed);

  // Fit only the legs that are genuinely unknown: the t=1 outcome models and
  // the propensity. Pr(Y0 = 1 | d, z) is Y0 itself -- fitting it by logistic
  // regression would be a guaranteed perfect separation.
  NuisanceFit fit;
  fit.method = method;
  fit.unconfoundedness = true;
  fit.folds = folds;

  std::vector<int> arm[2];
  for (int i = 0; i < n; ++i) arm[aug.d1[i]].push_back(i);
  std::vector<int> everyone(n);
  for (int i = 0; i < n; ++i) everyone[i] = i;
  std::vector<double> d_as_double(n);
  for (int i = 0; i < n; ++i) d_as_double[i] = aug.d1[i];

  for (int d = 0; d <= 1; ++d) {
    fit.models[1][d] = fit_binary_model(aug.x, aug.y1, arm[d], method);
    fit.models[0][d].kind = NuisanceMethod::MANUAL;
  }
  fit.propensity_model = fit_binary_model(aug.x, d_as_double, everyone, method);

  for (int t = 0; t <= 1; ++t) {
    for (int d = 0; d <= 1; ++d) fit.pi_hat[t][d].assign(n, 0.0);
  }
  fit.p_hat.assign(n, 0.0);

  auto fill_predictions = [&](const std::vector<int>& targets,
                              const ProbModel m1[2], const ProbModel& prop) {
    for (int i : targets) {
      for (int d = 0; d <= 1; ++d) {
        fit.pi_hat[0][d][i] = aug.y0[i];  // exact, deliberately untrimmed
        double v = m1[d].predict(aug.x.row(i));
        fit.pi_hat[1][d][i] =
            std::min(std::max(v, fit.eps_trim), 1.0 - fit.eps_trim);
      }
      double pv = prop.predict(aug.x.row(i));
      fit.p_hat[i] = std::min(std::max(pv, fit.eps_trim), 1.0 - fit.eps_trim);
    }
  };

  if (!folds) {
    ProbModel m1[2] = {fit.models[1][0], fit.models[1][1]};
    fill_predictions(everyone, m1, fit.propensity_model);
  } else {
    for (int f = 0; f < folds->k; ++f) {
      std::vector<int> in_fold, train_all;
      for (int i = 0; i < n; ++i) {
        (folds->assignment[i] == f ? in_fold : train_all).push_back(i);
      }
      ProbModel m1[2];
      for (int d = 0; d <= 1; ++d) {
        std::vector<int> train_arm;
        for (int i : train_all) {
          if (aug.d1[i] == d) train_arm.push_back(i);
        }
        m1[d] = fit_binary_model(aug.x, aug.y1, train_arm, method);
      }
      ProbModel prop = fit_binary_model(aug.x, d_as_double, train_all, method);
      fill_predictions(in_fold, m1, prop);
    }
  }

  EstimateReport rep = estimate_semipar(aug, fit, estimator, target, alpha);
  rep.mode = "UNCONFOUNDEDNESS";
  return rep;
}

WaldTest test_y0_independence(const TwoPeriodPanel& panel) {
  require_binary(panel);
  const int n = panel.n();
  const int p = panel.x_dim();
  Eigen::MatrixXd design(n, p + 2);
  Eigen::VectorXd resp(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (int j = 0; j < p; ++j) design(i, 1 + j) = panel.x(i, j);
    design(i, p + 1) = panel.y0[i];
    resp[i] = panel.d1[i];
  }
  LogisticFit fit = logistic_irls(design, resp);
  WaldTest out;
  out.coefficient = fit.beta[p + 1];
  out.se = std::sqrt(fit.cov(p + 1, p + 1));
  out.statistic = out.se > 0 ? out.coefficient / out.se : 0.0;
  out.pvalue = 2.0 * (1.0 - normal_cdf(std::abs(out.statistic)));
  return out;
}

}  // namespace persuasion
