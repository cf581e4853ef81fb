#pragma once

// JSON serialization for reports, bounds, simulation summaries, and DGP
// configuration files. Uses argument-dependent lookup so that
// nlohmann::json j = report; and dgp = j.get<TwoPeriodDgp>(); just work.

#include <nlohmann/json.hpp>

#include "persuasion/back_of_envelope.hpp"
#include "persuasion/bounds.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/report.hpp"
#include "persuasion/simulate.hpp"
#include "persuasion/staggered.hpp"
#include "persuasion/two_period_regression.hpp"
#include "persuasion/two_period_semiparametric.hpp"

namespace persuasion {

void to_json(nlohmann::json& j, const EstimateReport& r);
void to_json(nlohmann::json& j, const TypeShares& s);
void to_json(nlohmann::json& j, const JointGmm& g);
void to_json(nlohmann::json& j, const WaldTest& w);
void to_json(nlohmann::json& j, const ConditionalBounds& b);
void to_json(nlohmann::json& j, const AggregateBounds& b);
void to_json(nlohmann::json& j, const LineSegment& l);
void to_json(nlohmann::json& j, const PairwiseTheta& p);
void to_json(nlohmann::json& j, const EsprReport& r);
void to_json(nlohmann::json& j, const MonteCarloSummary& m);
void to_json(nlohmann::json& j, const BoeInput& b);

// Error payload: {"code": ..., "message": ..., "context": {...}}.
nlohmann::json error_to_json(const Error& e);

// DGP configuration files (round-trippable).
void to_json(nlohmann::json& j, const ArmJoint& a);
void from_json(const nlohmann::json& j, ArmJoint& a);
void to_json(nlohmann::json& j, const DgpLevel& l);
void from_json(const nlohmann::json& j, DgpLevel& l);
void to_json(nlohmann::json& j, const TwoPeriodDgp& d);
void from_json(const nlohmann::json& j, TwoPeriodDgp& d);
void to_json(nlohmann::json& j, const GaussianTwoPeriodDgp& d);
void from_json(const nlohmann::json& j, GaussianTwoPeriodDgp& d);
void to_json(nlohmann::json& j, const StaggeredDgp& d);
void from_json(const nlohmann::json& j, StaggeredDgp& d);

}  // namespace persuasion
