#include "persuasion/two_period_regression.hpp"

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

const char* estimand_name(Estimand e) {
  switch (e) {
    case Estimand::APRT: return "APRT";
    case Estimand::RAPRT: return "RAPRT";
    case Estimand::ATT: return "ATT";
    case Estimand::ESPR: return "ESPR";
    case Estimand::THETA_ST: return "THETA_ST";
  }
  return "UNKNOWN";
}

EstimateReport make_report(Estimand estimand, const std::string& estimator,
                           double point, double se, double alpha, int n,
                           bool flag_unit_interval) {
  EstimateReport rep;
  rep.estimand = estimand;
  rep.estimator = estimator;
  rep.point = point;
  rep.se = se;
  rep.level = 1.0 - alpha;
  rep.n = n;
  if (std::isfinite(se)) {
    double z = inverse_normal_cdf(1.0 - alpha / 2.0);
    rep.ci_lower = point - z * se;
    rep.ci_upper = point + z * se;
  }
  if (flag_unit_interval && (point < 0.0 || point > 1.0)) {
    rep.warnings.push_back("estimate lies outside [0,1]; reported raw");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Two-way FE via cell means
// ---------------------------------------------------------------------------

FeCoefficients fit_two_way_fe(const TwoPeriodPanel& panel) {
  panel.validate();
  FeCoefficients c;
  double sum[2][2] = {{0, 0}, {0, 0}};  // [d][t]
  for (int i = 0; i < panel.n(); ++i) {
    sum[panel.d1[i]][0] += panel.y0[i];
    sum[panel.d1[i]][1] += panel.y1[i];
    (panel.d1[i] ? c.n1 : c.n0)++;
  }
  c.m00 = sum[0][0] / c.n0;
  c.m01 = sum[0][1] / c.n0;
  c.m10 = sum[1][0] / c.n1;
  c.m11 = sum[1][1] / c.n1;
  c.gamma0 = c.m00;
  c.gamma1 = c.m10 - c.m00;
  c.gamma2 = c.m01 - c.m00;
  c.gamma = (c.m11 - c.m10) - (c.m01 - c.m00);
  return c;
}

namespace {

// Influence contributions of the DID numerator gamma-hat: treated units move
// the treated trend, controls the control trend.
void did_contributions(const FeCoefficients& c, const TwoPeriodPanel& panel,
                       std::vector<double>* phi) {
  const int n = panel.n();
  const double q = static_cast<double>(c.n1) / n;
  const double trend1 = c.m11 - c.m10;
  const double trend0 = c.m01 - c.m00;
  phi->assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double dy = panel.y1[i] - panel.y0[i];
    (*phi)[i] = panel.d1[i] ? (dy - trend1) / q : -(dy - trend0) / (1.0 - q);
  }
}

}  // namespace

EstimateReport aprt_from_fe(const FeCoefficients& c, const TwoPeriodPanel& panel,
                            double alpha) {
  const int n = panel.n();
  const double num = c.gamma;
  const double den = 1.0 - c.gamma0 - c.gamma1 - c.gamma2;
  check_denominator(den, "persuasion-rate");
  const double theta = num / den;
  const double q = static_cast<double>(c.n1) / n;

  std::vector<double> phi_num, phi_den(n, 0.0);
  did_contributions(c, panel, &phi_num);
  const double trend0 = c.m01 - c.m00;
  for (int i = 0; i < n; ++i) {
    // den = 1 - E[Y0|D=1] - control trend; both pieces enter negatively.
    phi_den[i] = panel.d1[i]
                     ? -(panel.y0[i] - c.m10) / q
                     : -((panel.y1[i] - panel.y0[i]) - trend0) / (1.0 - q);
  }
  double se = ratio_se_from_contributions(phi_num, phi_den, theta, den, panel.cluster);

  EstimateReport rep = make_report(Estimand::APRT, "FE", theta, se, alpha, n);
  rep.diagnostics = {{"gamma0", c.gamma0}, {"gamma1", c.gamma1},
                     {"gamma2", c.gamma2}, {"gamma", c.gamma},
                     {"num", num},         {"den", den},
                     {"n_treated", static_cast<double>(c.n1)}};
  rep.warnings.insert(rep.warnings.end(), panel.notes.begin(), panel.notes.end());
  return rep;
}

EstimateReport raprt_from_fe(const FeCoefficients& c, const TwoPeriodPanel& panel,
                             double alpha) {
  const int n = panel.n();
  const double num = c.gamma;
  const double den = c.gamma0 + c.gamma1 + c.gamma2 + c.gamma;  // = E[Y1|D=1]
  check_denominator(den, "reverse-persuasion-rate");
  const double theta = num / den;
  const double q = static_cast<double>(c.n1) / n;

  std::vector<double> phi_num, phi_den(n, 0.0);
  did_contributions(c, panel, &phi_num);
  for (int i = 0; i < n; ++i) {
    if (panel.d1[i]) phi_den[i] = (panel.y1[i] - c.m11) / q;
  }
  double se = ratio_se_from_contributions(phi_num, phi_den, theta, den, panel.cluster);

  EstimateReport rep = make_report(Estimand::RAPRT, "FE", theta, se, alpha, n);
  rep.diagnostics = {{"gamma0", c.gamma0}, {"gamma1", c.gamma1},
                     {"gamma2", c.gamma2}, {"gamma", c.gamma},
                     {"num", num},         {"den", den},
                     {"n_treated", static_cast<double>(c.n1)}};
  rep.warnings.insert(rep.warnings.end(), panel.notes.begin(), panel.notes.end());
  return rep;
}

EstimateReport att_from_fe(const FeCoefficients& c, const TwoPeriodPanel& panel,
                           double alpha) {
  const int n = panel.n();
  std::vector<double> phi_num, phi_den(n, 0.0);
  did_contributions(c, panel, &phi_num);
  double se = ratio_se_from_contributions(phi_num, phi_den, /*theta=*/0.0,
                                          /*den=*/1.0, panel.cluster);
  EstimateReport rep = make_report(Estimand::ATT, "FE", c.gamma, se, alpha, n,
                                   /*flag_unit_interval=*/false);
  rep.diagnostics = {{"gamma", c.gamma}};
  rep.warnings.insert(rep.warnings.end(), panel.notes.begin(), panel.notes.end());
  return rep;
}

// ---------------------------------------------------------------------------
// GMM / IV
// ---------------------------------------------------------------------------

namespace {

// A-variable of the IV form: regress (Y1 - Y0) on A with instrument D.
double iv_regressor(const TwoPeriodPanel& panel, Estimand target, int i) {
  if (target == Estimand::APRT) {
    // D + Y1 (1 - D) - Y0
    return panel.d1[i] ? 1.0 - panel.y0[i] : panel.y1[i] - panel.y0[i];
  }
  return panel.y1[i] * panel.d1[i];  // RAPRT
}

struct IvSolution {
  double b0 = 0, b1 = 0;
  double cov_ad = 0;
};

IvSolution solve_iv(const TwoPeriodPanel& panel, Estimand target) {
  const int n = panel.n();
  double mean_a = 0, mean_dy = 0, mean_d = 0;
  for (int i = 0; i < n; ++i) {
    mean_a += iv_regressor(panel, target, i);
    mean_dy += panel.y1[i] - panel.y0[i];
    mean_d += panel.d1[i];
  }
  mean_a /= n;
  mean_dy /= n;
  mean_d /= n;
  double cov_ad = 0, cov_dyd = 0;
  for (int i = 0; i < n; ++i) {
    cov_ad += (iv_regressor(panel, target, i) - mean_a) * (panel.d1[i] - mean_d);
    cov_dyd += ((panel.y1[i] - panel.y0[i]) - mean_dy) * (panel.d1[i] - mean_d);
  }
  cov_ad /= n;
  cov_dyd /= n;
  if (!(std::abs(cov_ad) > 1e-10)) {
    throw Error(ErrorCode::WEAK_DENOMINATOR,
                "sample covariance of the IV regressor with treatment is zero",
                {{"cov", std::to_string(cov_ad)}});
  }
  IvSolution s;
  s.cov_ad = cov_ad;
  s.b1 = cov_dyd / cov_ad;
  s.b0 = mean_dy - s.b1 * mean_a;
  return s;
}

}  // namespace

EstimateReport gmm_iv(const TwoPeriodPanel& panel, Estimand target, double alpha) {
  panel.validate();
  if (target != Estimand::APRT && target != Estimand::RAPRT) {
    throw Error(ErrorCode::INVALID_INPUT, "gmm_iv targets APRT or RAPRT");
  }
  const int n = panel.n();
  IvSolution s = solve_iv(panel, target);

  // Just-identified GMM sandwich with instruments z = (1, D).
  Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    double a = iv_regressor(panel, target, i);
    G(0, 0) += 1.0;
    G(0, 1) += a;
    G(1, 0) += panel.d1[i];
    G(1, 1) += panel.d1[i] * a;
  }
  G /= n;

  std::vector<int> idx = cluster_index(panel.cluster, n);
  int n_clusters = 0;
  for (int i = 0; i < n; ++i) n_clusters = std::max(n_clusters, idx[i] + 1);
  std::vector<Eigen::Vector2d> g_sum(n_clusters, Eigen::Vector2d::Zero());
  for (int i = 0; i < n; ++i) {
    double a = iv_regressor(panel, target, i);
    double eps = (panel.y1[i] - panel.y0[i]) - s.b0 - s.b1 * a;
    g_sum[idx[i]] += Eigen::Vector2d(eps, panel.d1[i] * eps);
  }
  Eigen::Matrix2d meat = Eigen::Matrix2d::Zero();
  for (const auto& g : g_sum) meat += g * g.transpose();
  double factor =
      n_clusters > 1 ? static_cast<double>(n_clusters) / (n_clusters - 1) : 1.0;
  Eigen::Matrix2d Ginv = G.inverse();
  Eigen::Matrix2d V = Ginv * (factor * meat / (static_cast<double>(n) * n)) *
                      Ginv.transpose();
  double se = std::sqrt(V(1, 1));

  EstimateReport rep = make_report(target, "GMM", s.b1, se, alpha, n);
  rep.diagnostics = {{"intercept", s.b0}, {"cov_instrument", s.cov_ad}};
  rep.warnings.insert(rep.warnings.end(), panel.notes.begin(), panel.notes.end());
  return rep;
}

JointGmm gmm_iv_joint(const TwoPeriodPanel& panel, double alpha) {
  panel.validate();
  const int n = panel.n();
  IvSolution sa = solve_iv(panel, Estimand::APRT);
  IvSolution sr = solve_iv(panel, Estimand::RAPRT);

  // Stack both targets' moment conditions; the Jacobian is block diagonal, so
  // the points match the separate fits and only the meat couples them.
  Eigen::Matrix4d G = Eigen::Matrix4d::Zero();
  std::vector<int> idx = cluster_index(panel.cluster, n);
  int n_clusters = 0;
  for (int i = 0; i < n; ++i) n_clusters = std::max(n_clusters, idx[i] + 1);
  std::vector<Eigen::Vector4d> g_sum(n_clusters, Eigen::Vector4d::Zero());

  for (int i = 0; i < n; ++i) {
    double aa = iv_regressor(panel, Estimand::APRT, i);
    double ar = iv_regressor(panel, Estimand::RAPRT, i);
    double d = panel.d1[i];
    G(0, 0) += 1.0;
    G(0, 1) += aa;
    G(1, 0) += d;
    G(1, 1) += d * aa;
    G(2, 2) += 1.0;
    G(2, 3) += ar;
    G(3, 2) += d;
    G(3, 3) += d * ar;
    double dy = panel.y1[i] - panel.y0[i];
    double ea = dy - sa.b0 - sa.b1 * aa;
    double er = dy - sr.b0 - sr.b1 * ar;
    g_sum[idx[i]] += Eigen::Vector4d(ea, d * ea, er, d * er);
  }
  G /= n;
  Eigen::Matrix4d meat = Eigen::Matrix4d::Zero();
  for (const auto& g : g_sum) meat += g * g.transpose();
  double factor =
      n_clusters > 1 ? static_cast<double>(n_clusters) / (n_clusters - 1) : 1.0;
  Eigen::Matrix4d Ginv = G.inverse();
  Eigen::Matrix4d V = Ginv * (factor * meat / (static_cast<double>(n) * n)) *
                      Ginv.transpose();

  JointGmm out;
  out.aprt = make_report(Estimand::APRT, "GMM", sa.b1, std::sqrt(V(1, 1)), alpha, n);
  out.raprt = make_report(Estimand::RAPRT, "GMM", sr.b1, std::sqrt(V(3, 3)), alpha, n);
  out.difference = sa.b1 - sr.b1;
  out.difference_se = std::sqrt(V(1, 1) + V(3, 3) - 2.0 * V(1, 3));
  out.difference_z =
      out.difference_se > 0 ? out.difference / out.difference_se : 0.0;
  out.difference_pvalue = 2.0 * (1.0 - normal_cdf(std::abs(out.difference_z)));
  return out;
}

// ---------------------------------------------------------------------------
// Type shares
// ---------------------------------------------------------------------------

TypeShares type_shares(const TwoPeriodPanel& panel, double att) {
  panel.validate();
  if (!panel.binary_outcomes()) {
    throw Error(ErrorCode::NON_BINARY_VALUE,
                "type shares require binary outcomes");
  }
  double sum_y1 = 0;
  long n1 = 0;
  for (int i = 0; i < panel.n(); ++i) {
    if (panel.d1[i]) {
      sum_y1 += panel.y1[i];
      ++n1;
    }
  }
  double pr_y1 = sum_y1 / n1;
  TypeShares s;
  s.np = 1.0 - pr_y1;
  s.tp = att;
  // Define the remainder so the three shares sum to one exactly.
  s.ap = 1.0 - (s.np + s.tp);
  if (s.tp < 0.0) s.warnings.push_back("negative ATT: persuaded share below zero");
  if (s.ap < 0.0) {
    s.warnings.push_back("ATT exceeds Pr(Y1=1|D=1): already-persuaded share below zero");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Covariate partialling
// ---------------------------------------------------------------------------

TwoPeriodPanel partial_out_covariates(const TwoPeriodPanel& panel) {
  panel.validate();
  const int n = panel.n();
  const int p = panel.x_dim();
  if (p == 0) {
    throw Error(ErrorCode::INVALID_INPUT, "no covariates to partial out");
  }

  // Rank check on [1 X]: catches collinear columns and constants.
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = panel.x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1) {
    throw Error(ErrorCode::RANK_DEFICIENT_X,
                "covariate matrix (with intercept) is rank deficient",
                {{"rank", std::to_string(qr.rank())},
                 {"columns", std::to_string(p + 1)}});
  }

  // Demean X, project each period's outcome on the demeaned covariates and
  // subtract only the slope part: period means survive, covariate variation
  // does not.
  Eigen::MatrixXd xc = panel.x.rowwise() - panel.x.colwise().mean();
  auto residualize = [&](const std::vector<double>& y) {
    Eigen::VectorXd yv(n);
    for (int i = 0; i < n; ++i) yv[i] = y[i];
    Eigen::VectorXd beta =
        (xc.transpose() * xc).ldlt().solve(xc.transpose() * yv);
    Eigen::VectorXd resid = yv - xc * beta;
    return std::vector<double>(resid.data(), resid.data() + n);
  };

  TwoPeriodPanel out = panel;
  out.y0 = residualize(panel.y0);
  out.y1 = residualize(panel.y1);
  out.residualized = true;
  out.notes.push_back(
      "outcomes residualized on covariates; downstream persuasion rates are "
      "linear-adjustment approximations");
  return out;
}

}  // namespace persuasion
