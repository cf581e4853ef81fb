#include "persuasion/back_of_envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "persuasion/errors.hpp"
#include "persuasion/stats.hpp"

namespace persuasion {

namespace {

constexpr double kDenominatorFloor = 1e-12;

void require_unit_interval(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::DOMAIN,
                std::string(name) + " must lie in [0, 1]",
                {{name, std::to_string(value)}});
  }
}

}  // namespace

void BoeInput::validate() const {
  if (!(se_att >= 0.0) || !std::isfinite(se_att)) {
    throw Error(ErrorCode::DOMAIN, "se_att must be a finite value >= 0",
                {{"se_att", std::to_string(se_att)}});
  }
  if (!std::isfinite(att)) {
    throw Error(ErrorCode::DOMAIN, "att must be finite",
                {{"att", std::to_string(att)}});
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::DOMAIN, "alpha must lie in (0, 1)",
                {{"alpha", std::to_string(alpha)}});
  }
  const double a0 = resolved_alpha0();
  if (!(a0 >= 0.0 && a0 < alpha)) {
    throw Error(ErrorCode::DOMAIN, "alpha0 must lie in [0, alpha)",
                {{"alpha0", std::to_string(a0)}, {"alpha", std::to_string(alpha)}});
  }
  if (!(q_lower > 0.0 && q_lower <= q_upper && q_upper < 1.0)) {
    throw Error(ErrorCode::DOMAIN,
                "q bounds must satisfy 0 < q_lower <= q_upper < 1",
                {{"q_lower", std::to_string(q_lower)},
                 {"q_upper", std::to_string(q_upper)}});
  }
  if (q && !(*q >= q_lower && *q <= q_upper)) {
    throw Error(ErrorCode::DOMAIN, "q must lie in [q_lower, q_upper]",
                {{"q", std::to_string(*q)},
                 {"q_lower", std::to_string(q_lower)},
                 {"q_upper", std::to_string(q_upper)}});
  }
}

double boe_point(double att, double q, Estimand target) {
  if (att < 0.0 || !std::isfinite(att)) {
    throw Error(ErrorCode::NEGATIVE_ATT,
                "back-of-envelope rescaling requires att >= 0",
                {{"att", std::to_string(att)}});
  }
  require_unit_interval(q, "q");
  double denom = 0.0;
  switch (target) {
    case Estimand::APRT:
      denom = att + q;
      break;
    case Estimand::RAPRT:
      denom = 1.0 - q;
      break;
    default:
      throw Error(ErrorCode::INVALID_INPUT,
                  "boe_point supports APRT and RAPRT targets only",
                  {{"target", estimand_name(target)}});
  }
  if (denom < kDenominatorFloor) {
    throw Error(ErrorCode::DEGENERATE_DENOMINATOR,
                "rescaling denominator is not positive",
                {{"denominator", std::to_string(denom)},
                 {"target", estimand_name(target)}});
  }
  return att / denom;
}

std::pair<double, double> boe_ci(const BoeInput& input, Estimand target) {
  input.validate();
  if (target != Estimand::APRT && target != Estimand::RAPRT) {
    throw Error(ErrorCode::INVALID_INPUT,
                "boe_ci supports APRT and RAPRT targets only",
                {{"target", estimand_name(target)}});
  }
  const double tail = (input.alpha - input.resolved_alpha0()) / 2.0;
  // tail == 0 means the whole budget went to the q interval; use se weight 0.
  const double z = tail > 0.0 ? inverse_normal_cdf(1.0 - tail)
                              : 0.0;
  const double se = input.se_att;
  if (target == Estimand::APRT) {
    const double at_upper = boe_point(input.att, input.q_upper, target);
    const double at_lower = boe_point(input.att, input.q_lower, target);
    const double slope_upper =
        input.q_upper / ((input.att + input.q_upper) * (input.att + input.q_upper));
    const double slope_lower =
        input.q_lower / ((input.att + input.q_lower) * (input.att + input.q_lower));
    return {at_upper - z * se * slope_upper, at_lower + z * se * slope_lower};
  }
  const double at_lower = boe_point(input.att, input.q_lower, target);
  const double at_upper = boe_point(input.att, input.q_upper, target);
  return {at_lower - z * se / (1.0 - input.q_lower),
          at_upper + z * se / (1.0 - input.q_upper)};
}

std::pair<double, double> q_interval_from_counts(long long successes,
                                                 long long n_treated,
                                                 double level) {
  if (n_treated < 1 || successes < 0 || successes > n_treated) {
    throw Error(ErrorCode::DOMAIN,
                "counts must satisfy 0 <= successes <= n_treated, n >= 1",
                {{"successes", std::to_string(successes)},
                 {"n_treated", std::to_string(n_treated)}});
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::DOMAIN, "level must lie in (0, 1)",
                {{"level", std::to_string(level)}});
  }
  const double n = static_cast<double>(n_treated);
  const double qhat = static_cast<double>(successes) / n;
  const double z = inverse_normal_cdf((1.0 + level) / 2.0);
  const double half = z * std::sqrt(qhat * (1.0 - qhat) / n);
  constexpr double kOpenEps = 1e-12;
  const double lower =
      std::min(std::max(qhat - half, kOpenEps), 1.0 - kOpenEps);
  const double upper = std::min(qhat + half, 1.0 - kOpenEps);
  return {lower, std::max(lower, upper)};
}

EstimateReport boe_report(const BoeInput& input, Estimand target) {
  input.validate();
  EstimateReport report;
  report.estimand = target;
  report.estimator = "BOE";
  report.level = 1.0 - input.alpha;
  report.n = 0;
  report.mode = "BOE";
  const auto ci = boe_ci(input, target);
  report.ci_lower = ci.first;
  report.ci_upper = ci.second;
  if (input.q) {
    report.point = boe_point(input.att, *input.q, target);
  } else {
    // No point value for q: report the midpoint rescaling for reference.
    report.point = boe_point(
        input.att, 0.5 * (input.q_lower + input.q_upper), target);
    report.warnings.push_back(
        "no q point supplied; point uses the midpoint of [q_lower, q_upper]");
  }
  report.se = std::numeric_limits<double>::quiet_NaN();
  report.diagnostics["att"] = input.att;
  report.diagnostics["se_att"] = input.se_att;
  report.diagnostics["q_lower"] = input.q_lower;
  report.diagnostics["q_upper"] = input.q_upper;
  report.diagnostics["alpha0"] = input.resolved_alpha0();
  if (input.q) report.diagnostics["q"] = *input.q;
  if (report.ci_lower < 0.0 || report.ci_upper > 1.0) {
    report.warnings.push_back(
        "confidence interval extends outside [0, 1]; rates are reported unclipped");
  }
  return report;
}

}  // namespace persuasion
