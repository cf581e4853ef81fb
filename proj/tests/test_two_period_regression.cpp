#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "persuasion/errors.hpp"
#include "persuasion/two_period_regression.hpp"
#include "support.hpp"

using namespace persuasion;

TEST_CASE("saturated fe equals the four cell means") {
  // control: pre mean .3, post mean .4; treated: pre .2, post .8
  TwoPeriodPanel p = testutil::panel_from_margins(10, 3, 4, 10, 2, 8);
  FeCoefficients fe = fit_two_way_fe(p);
  CHECK(fe.m00 == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(fe.m01 == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(fe.m10 == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(fe.m11 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(fe.gamma0 == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(fe.gamma1 == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(fe.gamma2 == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(fe.gamma == doctest::Approx(0.5).epsilon(1e-15));

  EstimateReport aprt = aprt_from_fe(fe, p);
  CHECK(aprt.point == doctest::Approx(0.5 / 0.7).epsilon(1e-12));
  EstimateReport raprt = raprt_from_fe(fe, p);
  CHECK(raprt.point == doctest::Approx(0.5 / 0.8).epsilon(1e-12));
  EstimateReport att = att_from_fe(fe, p);
  CHECK(att.point == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("degenerate persuasion denominator raises") {
  // gamma0 + gamma1 + gamma2 = 1 exactly: everyone treated starts at one.
  TwoPeriodPanel p = testutil::panel_from_margins(10, 5, 5, 10, 10, 7);
  FeCoefficients fe = fit_two_way_fe(p);
  CHECK_THROWS_AS(aprt_from_fe(fe, p), Error);
  try {
    aprt_from_fe(fe, p);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DEGENERATE_DENOMINATOR);
  }
}

// Independent oracle: the same delta-method standard error computed from an
// explicit long OLS regression with a cluster-robust matrix sandwich.
namespace {

struct OlsOracle {
  double aprt_se = 0;
  double raprt_se = 0;
  double att_se = 0;
};

OlsOracle ols_sandwich_oracle(const TwoPeriodPanel& panel) {
  const int n = panel.n();
  Eigen::MatrixXd X(2 * n, 4);
  Eigen::VectorXd y(2 * n);
  for (int i = 0; i < n; ++i) {
    const double d = panel.d1[i];
    X.row(2 * i) << 1, d, 0, 0;
    X.row(2 * i + 1) << 1, d, 1, d;
    y(2 * i) = panel.y0[i];
    y(2 * i + 1) = panel.y1[i];
  }
  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
  const Eigen::VectorXd beta = xtx_inv * (X.transpose() * y);
  const Eigen::VectorXd resid = y - X * beta;

  // Clusters default to units; both rows of a unit share its cluster.
  std::vector<int> cl(n);
  int G = 0;
  if (panel.has_clusters()) {
    std::map<std::string, int> ids;
    for (int i = 0; i < n; ++i) {
      auto [it, fresh] = ids.emplace(panel.cluster[i], G);
      if (fresh) ++G;
      cl[i] = it->second;
    }
  } else {
    for (int i = 0; i < n; ++i) cl[i] = i;
    G = n;
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(4, 4);
  std::vector<Eigen::Vector4d> sums(G, Eigen::Vector4d::Zero());
  for (int i = 0; i < n; ++i) {
    sums[cl[i]] += X.row(2 * i).transpose() * resid(2 * i);
    sums[cl[i]] += X.row(2 * i + 1).transpose() * resid(2 * i + 1);
  }
  for (const auto& s : sums) meat += s * s.transpose();
  meat *= static_cast<double>(G) / (G - 1);
  const Eigen::MatrixXd V = xtx_inv * meat * xtx_inv;

  const double g0 = beta(0), g1 = beta(1), g2 = beta(2), g3 = beta(3);
  OlsOracle out;
  {
    const double den = 1 - g0 - g1 - g2;
    const double theta = g3 / den;
    Eigen::Vector4d grad(theta / den, theta / den, theta / den, 1.0 / den);
    out.aprt_se = std::sqrt(grad.dot(V * grad));
  }
  {
    const double den = g0 + g1 + g2 + g3;
    const double theta = g3 / den;
    Eigen::Vector4d grad(-theta / den, -theta / den, -theta / den,
                         (1.0 - theta) / den);
    out.raprt_se = std::sqrt(grad.dot(V * grad));
  }
  out.att_se = std::sqrt(V(3, 3));
  return out;
}

}  // namespace

TEST_CASE("fe standard errors match the explicit ols cluster sandwich") {
  std::mt19937 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    TwoPeriodPanel p = testutil::random_interior_panel(rng, 40, 250);
    if (rep % 2 == 1) {  // alternate: grouped clusters
      p.cluster.resize(p.n());
      for (int i = 0; i < p.n(); ++i) p.cluster[i] = "g" + std::to_string(i % 17);
    }
    FeCoefficients fe = fit_two_way_fe(p);
    OlsOracle oracle = ols_sandwich_oracle(p);
    CHECK(aprt_from_fe(fe, p).se ==
          doctest::Approx(oracle.aprt_se).epsilon(1e-9));
    CHECK(raprt_from_fe(fe, p).se ==
          doctest::Approx(oracle.raprt_se).epsilon(1e-9));
    CHECK(att_from_fe(fe, p).se ==
          doctest::Approx(oracle.att_se).epsilon(1e-9));
  }
}

TEST_CASE("gmm point estimates coincide with fe transforms") {
  std::mt19937 rng(23);
  for (int rep = 0; rep < 25; ++rep) {
    TwoPeriodPanel p = testutil::random_interior_panel(rng, 20, 300);
    FeCoefficients fe = fit_two_way_fe(p);
    CHECK(std::abs(gmm_iv(p, Estimand::APRT).point -
                   aprt_from_fe(fe, p).point) < 1e-12);
    CHECK(std::abs(gmm_iv(p, Estimand::RAPRT).point -
                   raprt_from_fe(fe, p).point) < 1e-12);
  }
}

TEST_CASE("gmm and fe standard errors agree to first order") {
  std::mt19937 rng(29);
  TwoPeriodPanel p = testutil::random_interior_panel(rng, 400, 500);
  FeCoefficients fe = fit_two_way_fe(p);
  const EstimateReport g = gmm_iv(p, Estimand::APRT);
  const EstimateReport f = aprt_from_fe(fe, p);
  // Same asymptotic variance; finite-sample implementations may differ a bit.
  CHECK(g.se == doctest::Approx(f.se).epsilon(0.02));
}

TEST_CASE("weak instrument raises WEAK_DENOMINATOR") {
  // For the reverse target the IV regressor is Y1*D; with every treated unit
  // at zero post-period it never varies with D, so the slope is unidentified.
  TwoPeriodPanel p;
  p.x.resize(20, 0);
  for (int i = 0; i < 20; ++i) {
    const int d = i < 10 ? 1 : 0;
    p.d1.push_back(d);
    p.y0.push_back(0);
    p.y1.push_back(d == 1 ? 0 : i % 2);  // treated all zero post
  }
  try {
    gmm_iv(p, Estimand::RAPRT);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WEAK_DENOMINATOR);
  }
}

TEST_CASE("joint gmm reports a wald test of aprt - raprt") {
  std::mt19937 rng(31);
  TwoPeriodPanel p = testutil::random_interior_panel(rng, 200, 400);
  JointGmm joint = gmm_iv_joint(p);
  CHECK(joint.aprt.point == doctest::Approx(gmm_iv(p, Estimand::APRT).point)
                                .epsilon(1e-12));
  CHECK(joint.raprt.point == doctest::Approx(gmm_iv(p, Estimand::RAPRT).point)
                                 .epsilon(1e-12));
  CHECK(joint.difference ==
        doctest::Approx(joint.aprt.point - joint.raprt.point).epsilon(1e-12));
  CHECK(joint.difference_se > 0);
  CHECK(joint.difference_pvalue >= 0);
  CHECK(joint.difference_pvalue <= 1);
  // z and p are consistent
  const double z = joint.difference / joint.difference_se;
  CHECK(joint.difference_z == doctest::Approx(z).epsilon(1e-12));
}

TEST_CASE("type shares add to one exactly and match the published pattern") {
  // Zero ATT: shares are (0, 1 - m, m) with m the treated post mean.
  TwoPeriodPanel p = testutil::panel_from_margins(10, 3, 3, 10, 8, 8);
  TypeShares zero = type_shares(p, 0.0);
  CHECK(zero.tp == 0.0);
  CHECK(zero.np == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(zero.ap == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(zero.tp + zero.np + zero.ap == 1.0);  // exact by construction

  // The worked decomposition: treated post mean .8, ATT .5 -> (.5, .2, .3).
  TwoPeriodPanel q = testutil::panel_from_margins(10, 3, 4, 10, 2, 8);
  TypeShares shares = type_shares(q, 0.5);
  CHECK(shares.tp == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(shares.np == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(shares.ap == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(shares.tp + shares.np + shares.ap == 1.0);
}

TEST_CASE("negative implied share warns") {
  TwoPeriodPanel p = testutil::panel_from_margins(10, 3, 3, 10, 8, 8);
  TypeShares shares = type_shares(p, 0.9);  // ap = 1 - (0.2 + 0.9) < 0
  CHECK(shares.ap < 0);
  CHECK(!shares.warnings.empty());
}

TEST_CASE("partial out covariates keeps period structure") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> unif(0, 1);
  TwoPeriodPanel p;
  const int n = 500;
  p.x.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x1 = unif(rng), x2 = unif(rng);
    p.x(i, 0) = x1;
    p.x(i, 1) = x2;
    const int d = unif(rng) < 0.5 ? 1 : 0;
    p.d1.push_back(d);
    p.y0.push_back(unif(rng) < 0.3 + 0.3 * x1 ? 1 : 0);
    p.y1.push_back(unif(rng) < 0.3 + 0.3 * x1 + 0.2 * d ? 1 : 0);
  }
  TwoPeriodPanel r = partial_out_covariates(p);
  CHECK(r.residualized);
  CHECK(!r.notes.empty());
  // Period means are preserved.
  double m1_before = 0, m1_after = 0;
  for (int i = 0; i < n; ++i) {
    m1_before += p.y1[i];
    m1_after += r.y1[i];
  }
  CHECK(m1_after / n == doctest::Approx(m1_before / n).epsilon(1e-10));
  // Residualized outcomes are orthogonal to the demeaned covariates.
  Eigen::VectorXd y1v(n);
  for (int i = 0; i < n; ++i) y1v(i) = r.y1[i];
  Eigen::MatrixXd xc = p.x.rowwise() - p.x.colwise().mean();
  CHECK((xc.transpose() * y1v).cwiseAbs().maxCoeff() / n < 1e-10);
  // FE still runs on the residualized panel.
  CHECK_NOTHROW(fit_two_way_fe(r));
}

TEST_CASE("collinear covariates raise RANK_DEFICIENT_X") {
  TwoPeriodPanel p;
  const int n = 40;
  p.x.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    p.x(i, 0) = i % 5;
    p.x(i, 1) = 2.0 * (i % 5);  // exact collinearity
    p.d1.push_back(i % 2);
    p.y0.push_back((i / 2) % 2);
    p.y1.push_back((i / 3) % 2);
  }
  try {
    partial_out_covariates(p);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RANK_DEFICIENT_X);
  }
}
