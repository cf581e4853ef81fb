#include "persuasion/json_io.hpp"

namespace persuasion {

using nlohmann::json;

void to_json(json& j, const EstimateReport& r) {
  j = json{{"estimand", estimand_name(r.estimand)},
           {"estimator", r.estimator},
           {"point", r.point},
           {"se", r.se},
           {"ci_lower", r.ci_lower},
           {"ci_upper", r.ci_upper},
           {"level", r.level},
           {"n", r.n},
           {"diagnostics", r.diagnostics},
           {"warnings", r.warnings}};
  if (!r.mode.empty()) j["mode"] = r.mode;
}

void to_json(json& j, const TypeShares& s) {
  j = json{{"persuaded", s.tp},
           {"never_persuaded", s.np},
           {"already_persuaded", s.ap},
           {"warnings", s.warnings}};
}

void to_json(json& j, const JointGmm& g) {
  j = json{{"aprt", g.aprt},
           {"raprt", g.raprt},
           {"difference", g.difference},
           {"difference_se", g.difference_se},
           {"difference_z", g.difference_z},
           {"difference_pvalue", g.difference_pvalue}};
}

void to_json(json& j, const WaldTest& w) {
  j = json{{"coefficient", w.coefficient},
           {"se", w.se},
           {"statistic", w.statistic},
           {"pvalue", w.pvalue}};
}

void to_json(json& j, const ConditionalBounds& b) {
  j = json{{"theta_lower_raw", b.theta_cl},
           {"theta_upper_raw", b.theta_cu},
           {"rtheta_lower_raw", b.rtheta_cl},
           {"rtheta_upper_raw", b.rtheta_cu},
           {"alpha_x", b.alpha_x},
           {"theta_lower", b.theta_lo()},
           {"theta_upper", b.theta_hi()},
           {"rtheta_lower", b.rtheta_lo()},
           {"rtheta_upper", b.rtheta_hi()}};
}

void to_json(json& j, const AggregateBounds& b) {
  j = json{{"theta_lower", b.theta_star_l},
           {"theta_upper", b.theta_star_u},
           {"rtheta_lower", b.rtheta_star_l},
           {"rtheta_upper", b.rtheta_star_u},
           {"alpha_slope", b.alpha_slope},
           {"n_treated", b.n_treated},
           {"in_lower_set", b.in_lower_set},
           {"in_upper_set", b.in_upper_set}};
}

void to_json(json& j, const LineSegment& l) {
  j = json{{"slope", l.slope},
           {"lower_endpoint", l.lower_endpoint},
           {"upper_endpoint", l.upper_endpoint}};
}

void to_json(json& j, const PairwiseTheta& p) {
  j = json{{"s", p.s},
           {"j", p.j},
           {"num", p.num},
           {"den", p.den},
           {"theta", p.theta},
           {"gamma0", p.gamma0},
           {"gamma1", p.gamma1},
           {"gamma2", p.gamma2},
           {"n_cohort", p.n_s},
           {"n_never_treated", p.n_inf}};
}

void to_json(json& j, const EsprReport& r) {
  json weights = json::object();
  for (const auto& [s, w] : r.weights) weights[std::to_string(s)] = w;
  j = json{{"j", r.j},
           {"estimand", r.pretrend ? "ESPR_PRETREND" : "ESPR"},
           {"estimator", stagger_estimator_name(r.estimator)},
           {"theta", r.theta},
           {"se", r.se},
           {"ci_lower", r.ci_lower},
           {"ci_upper", r.ci_upper},
           {"level", r.level},
           {"num", r.num},
           {"den", r.den},
           {"weights", weights},
           {"components", r.components},
           {"n", r.n},
           {"warnings", r.warnings}};
}

void to_json(json& j, const MonteCarloSummary& m) {
  j = json{{"reps", m.reps},
           {"n", m.n},
           {"failures", m.failures},
           {"level", m.level},
           {"oracle_value", m.oracle_value},
           {"mean_point", m.mean_point},
           {"bias", m.bias},
           {"sd", m.sd},
           {"rmse", m.rmse},
           {"mean_se", m.mean_se},
           {"coverage", m.coverage},
           {"points", m.points}};
}

void to_json(json& j, const BoeInput& b) {
  j = json{{"att", b.att},
           {"se_att", b.se_att},
           {"q_lower", b.q_lower},
           {"q_upper", b.q_upper},
           {"alpha", b.alpha},
           {"alpha0", b.resolved_alpha0()}};
  if (b.q) j["q"] = *b.q;
}

json error_to_json(const Error& e) {
  json context = json::object();
  for (const auto& [k, v] : e.context()) context[k] = v;
  return json{{"code", error_code_name(e.code())},
              {"message", e.what()},
              {"context", context}};
}

// ---------------------------------------------------------------------------
// DGP configuration
// ---------------------------------------------------------------------------

void to_json(json& j, const ArmJoint& a) {
  j = json{{"p00", a.p00}, {"p01", a.p01}, {"p10", a.p10}, {"p11", a.p11}};
}

void from_json(const json& j, ArmJoint& a) {
  a.p00 = j.at("p00").get<double>();
  a.p01 = j.at("p01").get<double>();
  a.p10 = j.value("p10", 0.0);
  a.p11 = j.at("p11").get<double>();
}

void to_json(json& j, const DgpLevel& l) {
  j = json{{"x", l.x},
           {"prob", l.prob},
           {"propensity", l.propensity},
           {"trend", l.trend},
           {"treated", l.treated},
           {"control", l.control}};
}

void from_json(const json& j, DgpLevel& l) {
  l.x = j.value("x", std::vector<double>{});
  l.prob = j.at("prob").get<double>();
  l.propensity = j.at("propensity").get<double>();
  l.trend = j.value("trend", 0.0);
  l.treated = j.at("treated").get<ArmJoint>();
  l.control = j.at("control").get<ArmJoint>();
}

void to_json(json& j, const TwoPeriodDgp& d) {
  j = json{{"kind", "two_period"},
           {"levels", d.levels},
           {"allow_backlash", d.allow_backlash},
           {"seed", d.seed}};
}

void from_json(const json& j, TwoPeriodDgp& d) {
  d.levels = j.at("levels").get<std::vector<DgpLevel>>();
  d.allow_backlash = j.value("allow_backlash", false);
  d.seed = j.value("seed", std::uint64_t{0});
}

void to_json(json& j, const GaussianTwoPeriodDgp& d) {
  j = json{{"kind", "gaussian_two_period"},
           {"propensity_intercept", d.propensity_intercept},
           {"propensity_slope", d.propensity_slope},
           {"h0", d.h0},
           {"h1", d.h1},
           {"h2", d.h2},
           {"h_floor", d.h_floor},
           {"h_scale", d.h_scale},
           {"g0", d.g0},
           {"g1", d.g1},
           {"g_scale", d.g_scale},
           {"c0", d.c0},
           {"c1", d.c1},
           {"c2", d.c2},
           {"seed", d.seed}};
}

void from_json(const json& j, GaussianTwoPeriodDgp& d) {
  GaussianTwoPeriodDgp defaults;
  d.propensity_intercept =
      j.value("propensity_intercept", defaults.propensity_intercept);
  d.propensity_slope = j.value("propensity_slope", defaults.propensity_slope);
  d.h0 = j.value("h0", defaults.h0);
  d.h1 = j.value("h1", defaults.h1);
  d.h2 = j.value("h2", defaults.h2);
  d.h_floor = j.value("h_floor", defaults.h_floor);
  d.h_scale = j.value("h_scale", defaults.h_scale);
  d.g0 = j.value("g0", defaults.g0);
  d.g1 = j.value("g1", defaults.g1);
  d.g_scale = j.value("g_scale", defaults.g_scale);
  d.c0 = j.value("c0", defaults.c0);
  d.c1 = j.value("c1", defaults.c1);
  d.c2 = j.value("c2", defaults.c2);
  d.seed = j.value("seed", std::uint64_t{0});
}

void to_json(json& j, const StaggeredDgp::Level& l) {
  j = json{{"x", l.x},
           {"prob", l.prob},
           {"adoption", l.adoption},
           {"g", l.g},
           {"h", l.h},
           {"lift", l.lift}};
}

void from_json(const json& j, StaggeredDgp::Level& l) {
  l.x = j.value("x", std::vector<double>{});
  l.prob = j.at("prob").get<double>();
  l.adoption = j.at("adoption").get<std::vector<double>>();
  l.g = j.at("g").get<std::vector<double>>();
  l.h = j.at("h").get<std::vector<double>>();
  l.lift = j.at("lift").get<std::vector<std::vector<double>>>();
}

void to_json(json& j, const StaggeredDgp& d) {
  j = json{{"kind", "staggered"},
           {"horizon", d.horizon},
           {"levels", d.levels},
           {"seed", d.seed}};
}

void from_json(const json& j, StaggeredDgp& d) {
  d.horizon = j.at("horizon").get<int>();
  d.levels = j.at("levels").get<std::vector<StaggeredDgp::Level>>();
  d.seed = j.value("seed", std::uint64_t{0});
}

}  // namespace persuasion
