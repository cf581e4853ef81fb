#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace persuasion {

// Every failure mode the library can signal. The CLI maps these to exit
// codes: data/validation problems -> 1, estimation-time problems -> 2.
enum class ErrorCode {
  MISSING_COLUMN,           // CSV header lacks a required column
  NON_BINARY_VALUE,         // outcome/treatment cell not 0/1 (or adoption time out of range)
  EMPTY_ARM,                // no treated or no control units
  NO_NEVER_TREATED,         // staggered data without a never-treated group
  TOO_MANY_LEVELS,          // discrete covariate exceeds the level cap
  SEPARATION,               // logistic fit diverged / perfect separation
  INSUFFICIENT_ARM,         // too few units in an arm (or an uncovered cell) to fit
  DEGENERATE_DENOMINATOR,   // ratio denominator numerically zero
  WEAK_DENOMINATOR,         // instrument covariance numerically zero
  RANK_DEFICIENT_X,         // covariate matrix not full rank
  LINK_DOMAIN,              // value outside the link function's domain
  EMPTY_GROUP,              // adoption cohort or control group absent
  HORIZON_OUT_OF_RANGE,     // requested (s, j) falls outside observed periods
  NO_ELIGIBLE_GROUPS,       // no cohort usable for the requested horizon
  SINGULAR_SIGMA,           // stacked covariance not usable
  NEGATIVE_ATT,             // back-of-envelope input with ATT < 0
  DOMAIN,                   // argument outside its mathematical domain
  INVALID_INPUT,            // malformed input not covered by a code above
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MISSING_COLUMN: return "MISSING_COLUMN";
    case ErrorCode::NON_BINARY_VALUE: return "NON_BINARY_VALUE";
    case ErrorCode::EMPTY_ARM: return "EMPTY_ARM";
    case ErrorCode::NO_NEVER_TREATED: return "NO_NEVER_TREATED";
    case ErrorCode::TOO_MANY_LEVELS: return "TOO_MANY_LEVELS";
    case ErrorCode::SEPARATION: return "SEPARATION";
    case ErrorCode::INSUFFICIENT_ARM: return "INSUFFICIENT_ARM";
    case ErrorCode::DEGENERATE_DENOMINATOR: return "DEGENERATE_DENOMINATOR";
    case ErrorCode::WEAK_DENOMINATOR: return "WEAK_DENOMINATOR";
    case ErrorCode::RANK_DEFICIENT_X: return "RANK_DEFICIENT_X";
    case ErrorCode::LINK_DOMAIN: return "LINK_DOMAIN";
    case ErrorCode::EMPTY_GROUP: return "EMPTY_GROUP";
    case ErrorCode::HORIZON_OUT_OF_RANGE: return "HORIZON_OUT_OF_RANGE";
    case ErrorCode::NO_ELIGIBLE_GROUPS: return "NO_ELIGIBLE_GROUPS";
    case ErrorCode::SINGULAR_SIGMA: return "SINGULAR_SIGMA";
    case ErrorCode::NEGATIVE_ATT: return "NEGATIVE_ATT";
    case ErrorCode::DOMAIN: return "DOMAIN";
    case ErrorCode::INVALID_INPUT: return "INVALID_INPUT";
  }
  return "UNKNOWN";
}

// Exception carrying a machine-readable code plus free-form key/value context
// (column names, row numbers, offending values, ...). The CLI serializes all
// three fields into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::map<std::string, std::string> context = {})
      : std::runtime_error(message), code_(code), context_(std::move(context)) {}

  ErrorCode code() const { return code_; }
  const std::map<std::string, std::string>& context() const { return context_; }

 private:
  ErrorCode code_;
  std::map<std::string, std::string> context_;
};

}  // namespace persuasion
