#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace persuasion {

enum class Estimand {
  APRT,      // persuasion rate on the treated
  RAPRT,     // reverse persuasion rate on the treated
  ATT,       // average treatment effect on the treated
  ESPR,      // event-study persuasion rate (staggered aggregate)
  THETA_ST,  // cohort/horizon-specific persuasion rate (staggered pairwise)
};

const char* estimand_name(Estimand e);

// Universal result record. ci is point +/- z_{1-alpha/2} * se whenever se is
// finite, so ci_lower <= point <= ci_upper by construction.
struct EstimateReport {
  Estimand estimand = Estimand::APRT;
  std::string estimator;
  double point = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double ci_lower = std::numeric_limits<double>::quiet_NaN();
  double ci_upper = std::numeric_limits<double>::quiet_NaN();
  double level = 0.95;  // 1 - alpha
  int n = 0;
  std::string mode;  // "" or "UNCONFOUNDEDNESS"
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
};

// Fills point/se/ci/level and flags estimates outside [0,1] (they are
// reported raw; probabilities outside the unit interval signal either
// sampling noise or assumption failure, and hiding them would mask both).
EstimateReport make_report(Estimand estimand, const std::string& estimator,
                           double point, double se, double alpha, int n,
                           bool flag_unit_interval = true);

}  // namespace persuasion
