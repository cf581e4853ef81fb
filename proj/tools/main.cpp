// persuade: command-line front end for the persuasion-rate estimators.
//
// Subcommands
//   estimate   two-period persuasion rates (fe, gmm, did, pi, pow, dr)
//   staggered  event-study persuasion rates on staggered-adoption panels
//   bounds     sharp partial-identification bounds without parallel trends
//   boe        back-of-envelope rates from published (ATT, se, q) summaries
//   simulate   Monte Carlo study of an estimator on a configured DGP
//
// Conventions
//   - Output is pretty-printed JSON on stdout; --out redirects to a file and
//     --format csv switches tabular subcommands to CSV (config echoed in
//     leading '#' comment lines, so CSV runs are byte-identical).
//   - Every JSON payload embeds the resolved configuration, the library
//     version, and a generated_at timestamp (the only non-deterministic field).
//   - Failures print an error JSON {code, message, context} on stderr and
//     exit 1 for input/validation problems, 2 for estimation-time problems.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "persuasion/back_of_envelope.hpp"
#include "persuasion/bounds.hpp"
#include "persuasion/dataset.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/json_io.hpp"
#include "persuasion/nuisance.hpp"
#include "persuasion/report.hpp"
#include "persuasion/simulate.hpp"
#include "persuasion/staggered.hpp"
#include "persuasion/stats.hpp"
#include "persuasion/two_period_regression.hpp"
#include "persuasion/two_period_semiparametric.hpp"
#include "persuasion/version.hpp"

namespace {

using nlohmann::json;
using namespace persuasion;

// ---------------------------------------------------------------------------
// Small shared plumbing
// ---------------------------------------------------------------------------

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MISSING_COLUMN:
    case ErrorCode::NON_BINARY_VALUE:
    case ErrorCode::EMPTY_ARM:
    case ErrorCode::NO_NEVER_TREATED:
    case ErrorCode::TOO_MANY_LEVELS:
    case ErrorCode::RANK_DEFICIENT_X:
    case ErrorCode::HORIZON_OUT_OF_RANGE:
    case ErrorCode::NEGATIVE_ATT:
    case ErrorCode::DOMAIN:
    case ErrorCode::INVALID_INPUT:
      return 1;  // the request or the data is malformed
    case ErrorCode::SEPARATION:
    case ErrorCode::INSUFFICIENT_ARM:
    case ErrorCode::DEGENERATE_DENOMINATOR:
    case ErrorCode::WEAK_DENOMINATOR:
    case ErrorCode::LINK_DOMAIN:
    case ErrorCode::EMPTY_GROUP:
    case ErrorCode::NO_ELIGIBLE_GROUPS:
    case ErrorCode::SINGULAR_SIGMA:
      return 2;  // the request was valid but estimation failed on this data
  }
  return 2;
}

std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json envelope(json config) {
  return json{{"version", kVersion},
              {"generated_at", timestamp_utc()},
              {"config", std::move(config)}};
}

struct OutputOptions {
  std::string out;            // empty = stdout
  std::string format = "json";
};

void add_output_flags(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.out, "Write the output to this file instead of stdout");
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

void emit(const OutputOptions& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream file(o.out);
  if (!file) {
    throw Error(ErrorCode::INVALID_INPUT, "cannot open output file for writing",
                {{"path", o.out}});
  }
  file << text;
  if (text.empty() || text.back() != '\n') file << '\n';
}

void emit_json(const OutputOptions& o, const json& payload) {
  emit(o, payload.dump(2));
}

// Number formatting for CSV cells; NaN becomes an empty cell.
std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Leading comment lines that make a CSV self-describing without breaking
// determinism (no timestamp here on purpose).
std::string csv_preamble(const json& config) {
  std::string s;
  s += "# version " + std::string(kVersion) + "\n";
  s += "# config " + config.dump() + "\n";
  return s;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(raw);
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

NuisanceMethod parse_nuisance(const std::string& name) {
  if (name == "logistic") return NuisanceMethod::LOGISTIC;
  if (name == "cells" || name == "cell_means") return NuisanceMethod::CELL_MEANS;
  if (name == "constant") return NuisanceMethod::CONSTANT;
  throw Error(ErrorCode::INVALID_INPUT, "unknown nuisance method",
              {{"nuisance", name}, {"choices", "logistic|cells|constant"}});
}

Link parse_link(const std::string& name) {
  if (name == "identity") return Link::IDENTITY;
  if (name == "logit") return Link::LOGIT;
  if (name == "exp" || name == "exponential") return Link::EXPONENTIAL;
  throw Error(ErrorCode::INVALID_INPUT, "unknown link",
              {{"link", name}, {"choices", "identity|logit|exp"}});
}

Estimand parse_target(const std::string& name) {
  if (name == "aprt") return Estimand::APRT;
  if (name == "raprt") return Estimand::RAPRT;
  throw Error(ErrorCode::INVALID_INPUT, "unknown target",
              {{"target", name}, {"choices", "aprt|raprt"}});
}

SemiparEstimator parse_semipar(const std::string& name) {
  if (name == "did") return SemiparEstimator::DID;
  if (name == "pi") return SemiparEstimator::PI;
  if (name == "pow") return SemiparEstimator::POW;
  if (name == "dr") return SemiparEstimator::DR;
  throw Error(ErrorCode::INVALID_INPUT, "unknown estimator",
              {{"estimator", name}});
}

// Horizon specs: comma-separated integers and/or inclusive "a..b" ranges,
// e.g. "-2..2" or "0,1,3". Returns a sorted, deduplicated list.
std::vector<int> parse_horizons(const std::string& spec) {
  auto parse_int = [&](const std::string& tok) {
    size_t pos = 0;
    int value = 0;
    try {
      value = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size()) {
      throw Error(ErrorCode::INVALID_INPUT, "bad horizon token",
                  {{"token", tok}, {"spec", spec}});
    }
    return value;
  };
  std::set<int> js;
  for (const std::string& tok : split_list(spec)) {
    size_t dots = tok.find("..", 1);  // skip a leading '-'
    if (dots == std::string::npos) {
      js.insert(parse_int(tok));
      continue;
    }
    int lo = parse_int(tok.substr(0, dots));
    int hi = parse_int(tok.substr(dots + 2));
    if (lo > hi) {
      throw Error(ErrorCode::INVALID_INPUT, "horizon range is reversed",
                  {{"token", tok}});
    }
    for (int j = lo; j <= hi; ++j) js.insert(j);
  }
  if (js.empty()) {
    throw Error(ErrorCode::INVALID_INPUT, "empty horizon specification",
                {{"spec", spec}});
  }
  return {js.begin(), js.end()};
}

std::optional<FoldPlan> make_folds(const TwoPeriodPanel& panel, int crossfit,
                                   std::uint64_t seed) {
  if (crossfit == 0) return std::nullopt;
  if (crossfit < 2) {
    throw Error(ErrorCode::INVALID_INPUT, "--crossfit must be 0 (off) or >= 2",
                {{"crossfit", std::to_string(crossfit)}});
  }
  return FoldPlan::make(panel, crossfit, seed);
}

// ---------------------------------------------------------------------------
// Two-period input flags shared by `estimate` and `bounds`
// ---------------------------------------------------------------------------

struct TwoPeriodInput {
  std::string path;
  TwoPeriodSchema schema;
  std::string x_cols_raw;
};

void add_two_period_flags(CLI::App* cmd, TwoPeriodInput& in) {
  cmd->add_option("--input", in.path, "CSV file, one row per unit")->required();
  cmd->add_option("--y0-col", in.schema.y0_col, "Pre-period outcome column")
      ->capture_default_str();
  cmd->add_option("--y1-col", in.schema.y1_col, "Post-period outcome column")
      ->capture_default_str();
  cmd->add_option("--d-col", in.schema.d_col, "Treatment indicator column")
      ->capture_default_str();
  cmd->add_option("--x-cols", in.x_cols_raw,
                  "Comma-separated covariate columns");
  cmd->add_option("--cluster-col", in.schema.cluster_col,
                  "Cluster id column for standard errors");
}

TwoPeriodPanel load_two_period(TwoPeriodInput& in) {
  in.schema.x_cols = split_list(in.x_cols_raw);
  return load_two_period_csv(in.path, in.schema);
}

json two_period_config(const TwoPeriodInput& in) {
  return json{{"input", in.path},
              {"y0_col", in.schema.y0_col},
              {"y1_col", in.schema.y1_col},
              {"d_col", in.schema.d_col},
              {"x_cols", split_list(in.x_cols_raw)},
              {"cluster_col", in.schema.cluster_col}};
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  TwoPeriodInput in;
  std::string estimators = "fe,gmm,did,pi,pow,dr";
  std::string targets = "aprt,raprt";
  std::string nuisance = "logistic";
  std::string link = "identity";
  std::string mode = "did";
  double alpha = 0.05;
  double eps_trim = 0.01;
  int crossfit = 0;
  std::uint64_t seed = 0;
  bool test_y0 = false;
  bool partial_out = false;
  OutputOptions out;
};

int run_estimate(EstimateArgs& a) {
  json config = two_period_config(a.in);
  config["estimators"] = split_list(a.estimators);
  config["targets"] = split_list(a.targets);
  config["nuisance"] = a.nuisance;
  config["link"] = a.link;
  config["mode"] = a.mode;
  config["alpha"] = a.alpha;
  config["eps_trim"] = a.eps_trim;
  config["crossfit"] = a.crossfit;
  config["seed"] = a.seed;
  config["test_y0_independence"] = a.test_y0;
  config["partial_out"] = a.partial_out;

  const std::vector<std::string> estimators = split_list(a.estimators);
  const std::vector<std::string> targets = split_list(a.targets);
  if (estimators.empty() || targets.empty()) {
    throw Error(ErrorCode::INVALID_INPUT,
                "--estimators and --targets must each name at least one entry");
  }
  for (const std::string& e : estimators) {
    if (e != "fe" && e != "gmm" && e != "did" && e != "pi" && e != "pow" &&
        e != "dr") {
      throw Error(ErrorCode::INVALID_INPUT, "unknown estimator",
                  {{"estimator", e}, {"choices", "fe|gmm|did|pi|pow|dr"}});
    }
  }
  if (a.mode != "did" && a.mode != "unconfoundedness") {
    throw Error(ErrorCode::INVALID_INPUT, "unknown mode",
                {{"mode", a.mode}, {"choices", "did|unconfoundedness"}});
  }
  const NuisanceMethod method = parse_nuisance(a.nuisance);
  const Link link = parse_link(a.link);

  TwoPeriodPanel panel = load_two_period(a.in);
  if (a.partial_out) panel = partial_out_covariates(panel);

  const bool want_semipar =
      std::any_of(estimators.begin(), estimators.end(), [](const std::string& e) {
        return e == "did" || e == "pi" || e == "pow" || e == "dr";
      });

  std::optional<FeCoefficients> fe;
  auto fe_coefficients = [&]() -> const FeCoefficients& {
    if (!fe) fe = fit_two_way_fe(panel);
    return *fe;
  };

  std::optional<NuisanceFit> fit;
  if (want_semipar && a.mode == "did") {
    fit = fit_nuisance(panel, method, make_folds(panel, a.crossfit, a.seed),
                       a.eps_trim);
  }

  json reports = json::array();
  for (const std::string& name : estimators) {
    for (const std::string& tname : targets) {
      const Estimand target = parse_target(tname);
      EstimateReport rep;
      if (name == "fe") {
        rep = target == Estimand::APRT
                  ? aprt_from_fe(fe_coefficients(), panel, a.alpha)
                  : raprt_from_fe(fe_coefficients(), panel, a.alpha);
      } else if (name == "gmm") {
        rep = gmm_iv(panel, target, a.alpha);
      } else if (a.mode == "unconfoundedness") {
        std::optional<int> k;
        if (a.crossfit > 0) k = a.crossfit;
        rep = estimate_unconfoundedness_mode(panel, method, parse_semipar(name),
                                             target, a.alpha, k, a.seed);
      } else {
        rep = estimate_semipar(panel, *fit, parse_semipar(name), target,
                               a.alpha, link);
      }
      reports.push_back(rep);
    }
  }

  json payload = envelope(config);
  payload["n"] = panel.n();
  payload["notes"] = panel.notes;
  payload["reports"] = reports;

  if (!panel.residualized) {
    payload["type_shares"] = type_shares(panel, fe_coefficients().gamma);
  }
  const bool both_targets =
      std::find(targets.begin(), targets.end(), "aprt") != targets.end() &&
      std::find(targets.begin(), targets.end(), "raprt") != targets.end();
  if (both_targets &&
      std::find(estimators.begin(), estimators.end(), "gmm") != estimators.end()) {
    payload["gmm_joint"] = gmm_iv_joint(panel, a.alpha);
  }
  if (a.test_y0) payload["y0_independence"] = test_y0_independence(panel);

  if (a.out.format == "csv") {
    std::string csv = csv_preamble(config);
    csv += "estimator,target,point,se,ci_lower,ci_upper,level,n\n";
    for (const json& r : reports) {
      csv += r["estimator"].get<std::string>() + "," +
             r["estimand"].get<std::string>() + "," +
             csv_num(r["point"].is_null() ? NAN : r["point"].get<double>()) + "," +
             csv_num(r["se"].is_null() ? NAN : r["se"].get<double>()) + "," +
             csv_num(r["ci_lower"].is_null() ? NAN : r["ci_lower"].get<double>()) + "," +
             csv_num(r["ci_upper"].is_null() ? NAN : r["ci_upper"].get<double>()) + "," +
             csv_num(r["level"].get<double>()) + "," +
             std::to_string(r["n"].get<int>()) + "\n";
    }
    emit(a.out, csv);
  } else {
    emit_json(a.out, payload);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// staggered
// ---------------------------------------------------------------------------

struct StaggeredArgs {
  std::string path;
  StaggeredSchema schema;
  std::string y_cols_raw;
  std::string x_cols_raw;
  std::string horizons;
  bool pretrend = false;
  std::string estimator = "regression";
  std::string nuisance = "logistic";
  double eps_trim = 0.01;
  double alpha = 0.05;
  int level_cap = 20;
  OutputOptions out;
};

int run_staggered(StaggeredArgs& a) {
  a.schema.y_cols = split_list(a.y_cols_raw);
  a.schema.x_cols = split_list(a.x_cols_raw);

  json config{{"input", a.path},
              {"s_col", a.schema.s_col},
              {"y_cols", a.schema.y_cols},
              {"x_cols", a.schema.x_cols},
              {"cluster_col", a.schema.cluster_col},
              {"infinity_token", a.schema.infinity_token},
              {"long", a.schema.long_layout},
              {"unit_col", a.schema.unit_col},
              {"t_col", a.schema.t_col},
              {"y_col", a.schema.y_col},
              {"horizons", a.horizons},
              {"pretrend", a.pretrend},
              {"estimator", a.estimator},
              {"nuisance", a.nuisance},
              {"eps_trim", a.eps_trim},
              {"alpha", a.alpha},
              {"level_cap", a.level_cap}};

  StaggerEstimator estimator;
  if (a.estimator == "regression") {
    estimator = StaggerEstimator::REGRESSION;
  } else if (a.estimator == "dr") {
    estimator = StaggerEstimator::DR;
  } else {
    throw Error(ErrorCode::INVALID_INPUT, "unknown estimator",
                {{"estimator", a.estimator}, {"choices", "regression|dr"}});
  }
  StaggeredOptions options;
  options.method = parse_nuisance(a.nuisance);
  options.eps_trim = a.eps_trim;
  options.level_cap = a.level_cap;
  options.alpha = a.alpha;

  StaggeredPanel panel = load_staggered_csv(a.path, a.schema);
  const int T = panel.horizon();

  // Explicit horizons are strict (errors propagate); horizons added
  // implicitly (no --horizons, or the --pretrend sweep) are best-effort and
  // infeasible ones are reported under skipped_horizons instead of failing.
  std::set<int> js;
  std::set<int> implicit;
  if (a.horizons.empty()) {
    for (int j = 0; j < T; ++j) {
      js.insert(j);
      implicit.insert(j);
    }
  } else {
    for (int j : parse_horizons(a.horizons)) js.insert(j);
  }
  if (a.pretrend) {
    for (int j = -T; j <= -1; ++j) {
      if (js.insert(j).second) implicit.insert(j);
    }
  }

  std::vector<EsprReport> results;
  json skipped = json::array();
  for (int j : js) {
    try {
      results.push_back(j >= 0 ? espr(panel, j, estimator, options)
                               : espr_pretrend(panel, j, estimator, options));
    } catch (const Error& e) {
      if (!implicit.count(j)) throw;
      skipped.push_back(json{{"j", j},
                             {"code", error_code_name(e.code())},
                             {"message", e.what()}});
    }
  }
  if (results.empty()) {
    throw Error(ErrorCode::NO_ELIGIBLE_GROUPS,
                "no requested horizon could be estimated",
                {{"horizons", a.horizons.empty() ? "(default)" : a.horizons}});
  }

  if (a.out.format == "csv") {
    const double z = inverse_normal_cdf(1.0 - a.alpha / 2.0);
    std::string csv = csv_preamble(config);
    csv += "s,j,estimand,point,se,ci_lo,ci_hi\n";
    for (const EsprReport& rep : results) {
      for (const PairwiseTheta& comp : rep.components) {
        double se = NAN;
        try {
          se = stacked_inference(panel, {comp}, comp.j).se;
        } catch (const Error&) {
          // leave the cell empty when single-pair inference is unavailable
        }
        const double lo = std::isnan(se) ? NAN : comp.theta - z * se;
        const double hi = std::isnan(se) ? NAN : comp.theta + z * se;
        csv += std::to_string(comp.s) + "," + std::to_string(comp.j) +
               ",THETA_ST," + csv_num(comp.theta) + "," + csv_num(se) + "," +
               csv_num(lo) + "," + csv_num(hi) + "\n";
      }
      csv += std::string(",") + std::to_string(rep.j) + "," +
             (rep.pretrend ? "ESPR_PRETREND" : "ESPR") + "," +
             csv_num(rep.theta) + "," + csv_num(rep.se) + "," +
             csv_num(rep.ci_lower) + "," + csv_num(rep.ci_upper) + "\n";
    }
    emit(a.out, csv);
  } else {
    json payload = envelope(config);
    payload["n"] = panel.n();
    payload["periods"] = T + 1;
    payload["notes"] = panel.notes;
    payload["results"] = results;
    payload["skipped_horizons"] = skipped;
    emit_json(a.out, payload);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsArgs {
  TwoPeriodInput in;
  std::string nuisance = "logistic";
  std::string link = "identity";
  double eps_trim = 0.01;
  int crossfit = 0;
  std::uint64_t seed = 0;
  OutputOptions out;
};

int run_bounds(BoundsArgs& a) {
  json config = two_period_config(a.in);
  config["nuisance"] = a.nuisance;
  config["link"] = a.link;
  config["eps_trim"] = a.eps_trim;
  config["crossfit"] = a.crossfit;
  config["seed"] = a.seed;

  const NuisanceMethod method = parse_nuisance(a.nuisance);
  const Link link = parse_link(a.link);
  TwoPeriodPanel panel = load_two_period(a.in);
  NuisanceFit fit = fit_nuisance(panel, method,
                                 make_folds(panel, a.crossfit, a.seed),
                                 a.eps_trim);
  AggregateBounds bounds = aggregate_sharp_bounds(panel, fit, link);
  LineSegment line = identified_line(bounds);

  if (a.out.format == "csv") {
    std::string csv = csv_preamble(config);
    csv += "theta_lower,theta_upper,rtheta_lower,rtheta_upper,alpha_slope,n_treated\n";
    csv += csv_num(bounds.theta_star_l) + "," + csv_num(bounds.theta_star_u) +
           "," + csv_num(bounds.rtheta_star_l) + "," +
           csv_num(bounds.rtheta_star_u) + "," + csv_num(bounds.alpha_slope) +
           "," + std::to_string(bounds.n_treated) + "\n";
    emit(a.out, csv);
  } else {
    json payload = envelope(config);
    payload["n"] = panel.n();
    payload["notes"] = panel.notes;
    payload["bounds"] = bounds;
    payload["identified_line"] = line;
    emit_json(a.out, payload);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// boe
// ---------------------------------------------------------------------------

struct BoeArgs {
  double att = 0;
  double se = 0;
  double q = NAN;
  double q_lower = NAN;
  double q_upper = NAN;
  long long q_successes = -1;
  long long q_n = -1;
  double alpha = 0.05;
  double alpha0 = NAN;
  OutputOptions out;
};

int run_boe(BoeArgs& a) {
  BoeInput input;
  input.att = a.att;
  input.se_att = a.se;
  input.alpha = a.alpha;
  if (!std::isnan(a.alpha0)) input.alpha0 = a.alpha0;

  // Resolve the q interval: counts < explicit bounds < a point q filling
  // whichever bound is still missing.
  double lo = NAN, hi = NAN;
  const bool have_counts = a.q_successes >= 0 || a.q_n >= 0;
  if (have_counts) {
    if (a.q_successes < 0 || a.q_n < 0) {
      throw Error(ErrorCode::INVALID_INPUT,
                  "--q-successes and --q-n must be given together");
    }
    std::tie(lo, hi) = q_interval_from_counts(a.q_successes, a.q_n,
                                              1.0 - input.resolved_alpha0());
    input.q = static_cast<double>(a.q_successes) / static_cast<double>(a.q_n);
  }
  if (!std::isnan(a.q_lower)) lo = a.q_lower;
  if (!std::isnan(a.q_upper)) hi = a.q_upper;
  if (!std::isnan(a.q)) {
    input.q = a.q;
    if (std::isnan(lo)) lo = a.q;
    if (std::isnan(hi)) hi = a.q;
  }
  if (std::isnan(lo) || std::isnan(hi)) {
    throw Error(ErrorCode::INVALID_INPUT,
                "supply --q, --q-lower/--q-upper, or --q-successes/--q-n");
  }
  input.q_lower = lo;
  input.q_upper = hi;
  input.validate();

  json config = input;  // resolved att/se/q bounds/alpha/alpha0
  if (input.q) config["q"] = *input.q;
  if (have_counts) {
    config["q_successes"] = a.q_successes;
    config["q_n"] = a.q_n;
  }

  EstimateReport aprt = boe_report(input, Estimand::APRT);
  EstimateReport raprt = boe_report(input, Estimand::RAPRT);

  if (a.out.format == "csv") {
    std::string csv = csv_preamble(config);
    csv += "target,point,ci_lower,ci_upper,level\n";
    for (const EstimateReport* r : {&aprt, &raprt}) {
      csv += std::string(estimand_name(r->estimand)) + "," +
             csv_num(r->point) + "," + csv_num(r->ci_lower) + "," +
             csv_num(r->ci_upper) + "," + csv_num(r->level) + "\n";
    }
    emit(a.out, csv);
  } else {
    json payload = envelope(config);
    payload["aprt"] = aprt;
    payload["raprt"] = raprt;
    emit_json(a.out, payload);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  int n = 0;
  int reps = 500;
  long long seed = -1;  // -1 = use the DGP's own seed field
  int j = 0;
  std::string estimator;  // default depends on the DGP kind
  std::string target = "aprt";
  std::string nuisance = "logistic";
  double eps_trim = 0.01;
  double alpha = 0.05;
  int crossfit = 0;
  int level_cap = 20;
  OutputOptions out;
};

json oracle_to_json(const OracleValues& o) {
  json j{{"theta", o.theta},   {"theta_r", o.theta_r},
         {"att", o.att},       {"theta_l", o.theta_l},
         {"theta_r_l", o.theta_r_l}, {"q", o.q}};
  if (!o.theta_pair.empty()) {
    json pairs = json::array();
    for (const auto& [key, value] : o.theta_pair) {
      pairs.push_back(json{{"s", key.first}, {"j", key.second}, {"theta", value}});
    }
    j["theta_pair"] = pairs;
  }
  if (!o.theta_espr.empty()) {
    json espr_map = json::object();
    for (const auto& [jj, value] : o.theta_espr) {
      espr_map[std::to_string(jj)] = value;
    }
    j["theta_espr"] = espr_map;
  }
  return j;
}

int run_simulate(SimulateArgs& a) {
  std::ifstream file(a.config_path);
  if (!file) {
    throw Error(ErrorCode::INVALID_INPUT, "cannot open DGP config",
                {{"path", a.config_path}});
  }
  json dgp_json;
  try {
    file >> dgp_json;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::INVALID_INPUT, "DGP config is not valid JSON",
                {{"path", a.config_path}, {"detail", e.what()}});
  }
  std::string kind;
  try {
    kind = dgp_json.at("kind").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::INVALID_INPUT,
                "DGP config needs a \"kind\" key",
                {{"choices", "two_period|gaussian_two_period|staggered"}});
  }
  if (a.n <= 0) {
    throw Error(ErrorCode::INVALID_INPUT, "--n must be positive",
                {{"n", std::to_string(a.n)}});
  }

  const NuisanceMethod method = parse_nuisance(a.nuisance);
  const double level = 1.0 - a.alpha;

  MonteCarloSummary summary;
  json oracle_json;
  std::uint64_t seed = 0;
  std::string estimator = a.estimator;

  auto two_period_oracle_value = [&](const OracleValues& o) {
    // Estimators converge to the lower-bound rates; without backlash these
    // coincide with the full rates.
    if (a.target == "aprt") return o.theta_l;
    if (a.target == "raprt") return o.theta_r_l;
    if (a.target == "att") return o.att;
    throw Error(ErrorCode::INVALID_INPUT, "unknown target",
                {{"target", a.target}, {"choices", "aprt|raprt|att"}});
  };

  auto make_two_period_estimator =
      [&](const std::string& name) -> std::function<EstimateReport(const TwoPeriodPanel&)> {
    const Estimand target =
        a.target == "raprt" ? Estimand::RAPRT : Estimand::APRT;
    if (a.target == "att") {
      return [this_alpha = a.alpha](const TwoPeriodPanel& p) {
        return att_from_fe(fit_two_way_fe(p), p, this_alpha);
      };
    }
    if (name == "fe") {
      return [target, alpha = a.alpha](const TwoPeriodPanel& p) {
        FeCoefficients coef = fit_two_way_fe(p);
        return target == Estimand::APRT ? aprt_from_fe(coef, p, alpha)
                                        : raprt_from_fe(coef, p, alpha);
      };
    }
    if (name == "gmm") {
      return [target, alpha = a.alpha](const TwoPeriodPanel& p) {
        return gmm_iv(p, target, alpha);
      };
    }
    const SemiparEstimator semi = parse_semipar(name);
    return [semi, target, method, alpha = a.alpha, eps = a.eps_trim,
            crossfit = a.crossfit, &seed](const TwoPeriodPanel& p) {
      NuisanceFit fit =
          fit_nuisance(p, method, make_folds(p, crossfit, seed), eps);
      return estimate_semipar(p, fit, semi, target, alpha);
    };
  };

  if (kind == "two_period") {
    TwoPeriodDgp dgp = dgp_json.get<TwoPeriodDgp>();
    seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : dgp.seed;
    if (estimator.empty()) estimator = "dr";
    OracleValues o = oracle(dgp);
    oracle_json = oracle_to_json(o);
    summary = monte_carlo_two_period(dgp, a.n, a.reps, seed,
                                     two_period_oracle_value(o), level,
                                     make_two_period_estimator(estimator));
  } else if (kind == "gaussian" || kind == "gaussian_two_period") {
    GaussianTwoPeriodDgp dgp = dgp_json.get<GaussianTwoPeriodDgp>();
    seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : dgp.seed;
    if (estimator.empty()) estimator = "dr";
    OracleValues o = oracle(dgp);
    oracle_json = oracle_to_json(o);
    summary = monte_carlo_gaussian(dgp, a.n, a.reps, seed,
                                   two_period_oracle_value(o), level,
                                   make_two_period_estimator(estimator));
  } else if (kind == "staggered") {
    StaggeredDgp dgp = dgp_json.get<StaggeredDgp>();
    seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : dgp.seed;
    if (estimator.empty()) estimator = "regression";
    StaggerEstimator st;
    if (estimator == "regression") {
      st = StaggerEstimator::REGRESSION;
    } else if (estimator == "dr") {
      st = StaggerEstimator::DR;
    } else {
      throw Error(ErrorCode::INVALID_INPUT,
                  "staggered simulation estimator must be regression or dr",
                  {{"estimator", estimator}});
    }
    OracleValues o = oracle(dgp);
    oracle_json = oracle_to_json(o);
    double oracle_value = 0.0;  // pretrend horizons target zero
    if (a.j >= 0) {
      auto it = o.theta_espr.find(a.j);
      if (it == o.theta_espr.end()) {
        throw Error(ErrorCode::HORIZON_OUT_OF_RANGE,
                    "horizon has no oracle value under this DGP",
                    {{"j", std::to_string(a.j)}});
      }
      oracle_value = it->second;
    }
    StaggeredOptions options;
    options.method = method;
    options.eps_trim = a.eps_trim;
    options.level_cap = a.level_cap;
    options.alpha = a.alpha;
    const int j = a.j;
    summary = monte_carlo_staggered(
        dgp, a.n, a.reps, seed, oracle_value, level,
        [j, st, options, alpha = a.alpha](const StaggeredPanel& p) {
          EsprReport rep = j >= 0 ? espr(p, j, st, options)
                                  : espr_pretrend(p, j, st, options);
          return make_report(Estimand::ESPR, stagger_estimator_name(st),
                             rep.theta, rep.se, alpha, rep.n, false);
        });
  } else {
    throw Error(ErrorCode::INVALID_INPUT, "unknown DGP kind",
                {{"kind", kind}, {"choices", "two_period|gaussian_two_period|staggered"}});
  }

  json config{{"dgp", dgp_json},
              {"n", a.n},
              {"reps", a.reps},
              {"seed", seed},
              {"estimator", estimator},
              {"target", kind == "staggered" ? "espr" : a.target},
              {"nuisance", a.nuisance},
              {"eps_trim", a.eps_trim},
              {"alpha", a.alpha},
              {"crossfit", a.crossfit}};
  if (kind == "staggered") config["j"] = a.j;

  if (a.out.format == "csv") {
    std::string csv = csv_preamble(config);
    csv += "index,point\n";
    for (size_t i = 0; i < summary.points.size(); ++i) {
      csv += std::to_string(i) + "," + csv_num(summary.points[i]) + "\n";
    }
    emit(a.out, csv);
  } else {
    json payload = envelope(config);
    payload["oracle"] = oracle_json;
    payload["summary"] = summary;
    emit_json(a.out, payload);
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"persuade: persuasion-rate estimation from panel data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(persuasion::kVersion));

  EstimateArgs est;
  CLI::App* cmd_estimate = app.add_subcommand(
      "estimate", "Two-period persuasion-rate estimates");
  add_two_period_flags(cmd_estimate, est.in);
  cmd_estimate->add_option("--estimators", est.estimators,
                           "Comma list from fe,gmm,did,pi,pow,dr")
      ->capture_default_str();
  cmd_estimate->add_option("--targets", est.targets,
                           "Comma list from aprt,raprt")
      ->capture_default_str();
  cmd_estimate->add_option("--nuisance", est.nuisance,
                           "Nuisance model: logistic|cells|constant")
      ->capture_default_str();
  cmd_estimate->add_option("--link", est.link,
                           "Trend link for did: identity|logit|exp")
      ->capture_default_str();
  cmd_estimate->add_option("--mode", est.mode,
                           "Identification mode: did|unconfoundedness")
      ->capture_default_str();
  cmd_estimate->add_option("--alpha", est.alpha, "CI significance level")
      ->capture_default_str();
  cmd_estimate->add_option("--eps-trim", est.eps_trim,
                           "Nuisance trimming threshold")
      ->capture_default_str();
  cmd_estimate->add_option("--crossfit", est.crossfit,
                           "Cross-fitting folds (0 = off)")
      ->capture_default_str();
  cmd_estimate->add_option("--seed", est.seed, "Fold-assignment seed")
      ->capture_default_str();
  cmd_estimate->add_flag("--test-y0-independence", est.test_y0,
                         "Run the pre-period selection diagnostic");
  cmd_estimate->add_flag("--partial-out", est.partial_out,
                         "Residualize outcomes on covariates first (fe/gmm only)");
  add_output_flags(cmd_estimate, est.out);

  StaggeredArgs stag;
  CLI::App* cmd_staggered = app.add_subcommand(
      "staggered", "Event-study persuasion rates under staggered adoption");
  cmd_staggered->add_option("--input", stag.path, "CSV file")->required();
  cmd_staggered->add_option("--s-col", stag.schema.s_col,
                            "Adoption-period column")
      ->capture_default_str();
  cmd_staggered->add_option("--y-cols", stag.y_cols_raw,
                            "Comma list of outcome columns, one per period");
  cmd_staggered->add_option("--x-cols", stag.x_cols_raw,
                            "Comma-separated covariate columns");
  cmd_staggered->add_option("--cluster-col", stag.schema.cluster_col,
                            "Cluster id column");
  cmd_staggered->add_option("--infinity-token", stag.schema.infinity_token,
                            "Never-treated marker in the adoption column")
      ->capture_default_str();
  cmd_staggered->add_flag("--long", stag.schema.long_layout,
                          "Input is long (one row per unit-period)");
  cmd_staggered->add_option("--unit-col", stag.schema.unit_col,
                            "Unit id column (long layout)")
      ->capture_default_str();
  cmd_staggered->add_option("--t-col", stag.schema.t_col,
                            "Period column (long layout)")
      ->capture_default_str();
  cmd_staggered->add_option("--y-col", stag.schema.y_col,
                            "Outcome column (long layout)")
      ->capture_default_str();
  cmd_staggered->add_option("--horizons", stag.horizons,
                            "Horizons, e.g. \"-2..2\" or \"0,1\" (default 0..T-1)");
  cmd_staggered->add_flag("--pretrend", stag.pretrend,
                          "Also estimate every feasible pre-treatment horizon");
  cmd_staggered->add_option("--estimator", stag.estimator,
                            "regression|dr")
      ->capture_default_str();
  cmd_staggered->add_option("--nuisance", stag.nuisance,
                            "DR nuisance model: logistic|cells|constant")
      ->capture_default_str();
  cmd_staggered->add_option("--eps-trim", stag.eps_trim,
                            "Nuisance trimming threshold")
      ->capture_default_str();
  cmd_staggered->add_option("--level-cap", stag.level_cap,
                            "Max distinct values per discrete covariate")
      ->capture_default_str();
  cmd_staggered->add_option("--alpha", stag.alpha, "CI significance level")
      ->capture_default_str();
  add_output_flags(cmd_staggered, stag.out);

  BoundsArgs bnd;
  CLI::App* cmd_bounds = app.add_subcommand(
      "bounds", "Sharp bounds without the parallel-trends point identification");
  add_two_period_flags(cmd_bounds, bnd.in);
  cmd_bounds->add_option("--nuisance", bnd.nuisance,
                         "Nuisance model: logistic|cells|constant")
      ->capture_default_str();
  cmd_bounds->add_option("--link", bnd.link,
                         "Trend link: identity|logit|exp")
      ->capture_default_str();
  cmd_bounds->add_option("--eps-trim", bnd.eps_trim,
                         "Nuisance trimming threshold")
      ->capture_default_str();
  cmd_bounds->add_option("--crossfit", bnd.crossfit,
                         "Cross-fitting folds (0 = off)")
      ->capture_default_str();
  cmd_bounds->add_option("--seed", bnd.seed, "Fold-assignment seed")
      ->capture_default_str();
  add_output_flags(cmd_bounds, bnd.out);

  BoeArgs boe;
  CLI::App* cmd_boe = app.add_subcommand(
      "boe", "Back-of-envelope rates from published ATT summaries");
  cmd_boe->add_option("--att", boe.att, "ATT point estimate")->required();
  cmd_boe->add_option("--se", boe.se, "Standard error of the ATT")->required();
  cmd_boe->add_option("--q", boe.q,
                      "Share of treated with Y1 = 0 (point value)");
  cmd_boe->add_option("--q-lower", boe.q_lower, "Lower bound on q");
  cmd_boe->add_option("--q-upper", boe.q_upper, "Upper bound on q");
  cmd_boe->add_option("--q-successes", boe.q_successes,
                      "Treated count with Y1 = 0 (interval from counts)");
  cmd_boe->add_option("--q-n", boe.q_n, "Treated sample size behind --q-successes");
  cmd_boe->add_option("--alpha", boe.alpha, "Overall significance level")
      ->capture_default_str();
  cmd_boe->add_option("--alpha0", boe.alpha0,
                      "Budget spent on the q interval (default alpha/2)");
  add_output_flags(cmd_boe, boe.out);

  SimulateArgs sim;
  CLI::App* cmd_simulate = app.add_subcommand(
      "simulate", "Monte Carlo study of an estimator on a configured DGP");
  cmd_simulate->add_option("--config", sim.config_path,
                           "DGP JSON file with a \"kind\" key")
      ->required();
  cmd_simulate->add_option("--n", sim.n, "Units per replication")->required();
  cmd_simulate->add_option("--reps", sim.reps, "Number of replications")
      ->capture_default_str();
  cmd_simulate->add_option("--seed", sim.seed,
                           "Master seed (default: the DGP's seed field)");
  cmd_simulate->add_option("--estimator", sim.estimator,
                           "fe|gmm|did|pi|pow|dr, or regression|dr when staggered");
  cmd_simulate->add_option("--target", sim.target, "aprt|raprt|att")
      ->capture_default_str();
  cmd_simulate->add_option("--j", sim.j, "Horizon (staggered DGPs)")
      ->capture_default_str();
  cmd_simulate->add_option("--nuisance", sim.nuisance,
                           "Nuisance model: logistic|cells|constant")
      ->capture_default_str();
  cmd_simulate->add_option("--eps-trim", sim.eps_trim,
                           "Nuisance trimming threshold")
      ->capture_default_str();
  cmd_simulate->add_option("--alpha", sim.alpha, "CI significance level")
      ->capture_default_str();
  cmd_simulate->add_option("--crossfit", sim.crossfit,
                           "Cross-fitting folds (0 = off)")
      ->capture_default_str();
  cmd_simulate->add_option("--level-cap", sim.level_cap,
                           "Max distinct values per discrete covariate")
      ->capture_default_str();
  add_output_flags(cmd_simulate, sim.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cmd_estimate) return run_estimate(est);
    if (*cmd_staggered) return run_staggered(stag);
    if (*cmd_bounds) return run_bounds(bnd);
    if (*cmd_boe) return run_boe(boe);
    if (*cmd_simulate) return run_simulate(sim);
  } catch (const persuasion::Error& e) {
    std::cerr << persuasion::error_to_json(e).dump(2) << std::endl;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"code", "INTERNAL"}, {"message", e.what()}}.dump(2)
              << std::endl;
    return 2;
  }
  return 0;
}
