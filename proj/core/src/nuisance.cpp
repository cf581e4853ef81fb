#include "persuasion/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "persuasion/errors.hpp"
#include "persuasion/stats.hpp"

namespace persuasion {

const char* nuisance_method_name(NuisanceMethod m) {
  switch (m) {
    case NuisanceMethod::LOGISTIC: return "LOGISTIC";
    case NuisanceMethod::CELL_MEANS: return "CELL_MEANS";
    case NuisanceMethod::CONSTANT: return "CONSTANT";
    case NuisanceMethod::MANUAL: return "MANUAL";
  }
  return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// FoldPlan
// ---------------------------------------------------------------------------

FoldPlan FoldPlan::make(const TwoPeriodPanel& panel, int k, std::uint64_t seed) {
  const int n = panel.n();
  if (k < 2) throw Error(ErrorCode::DOMAIN, "fold plans need k >= 2");
  if (k > n) throw Error(ErrorCode::DOMAIN, "more folds than units");

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(n, 0);

  // Hash-rank units inside each treatment arm, then deal folds round-robin
  // through one global counter: balanced within arm and overall.
  CounterRng rng(seed, /*stream=*/0x666f6c64);  // "fold"
  std::vector<std::uint64_t> h(n);
  for (int i = 0; i < n; ++i) h[i] = rng.next_u64();

  int position = 0;
  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (panel.d1[i] == arm) members.push_back(i);
    }
    std::sort(members.begin(), members.end(),
              [&](int a, int b) { return std::tie(h[a], a) < std::tie(h[b], b); });
    for (int i : members) plan.assignment[i] = position++ % k;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// ProbModel
// ---------------------------------------------------------------------------

double ProbModel::predict(const Eigen::RowVectorXd& x) const {
  switch (kind) {
    case NuisanceMethod::CONSTANT:
      return constant;
    case NuisanceMethod::CELL_MEANS: {
      std::vector<double> key(x.data(), x.data() + x.size());
      auto it = cells.find(key);
      if (it == cells.end()) {
        throw Error(ErrorCode::INSUFFICIENT_ARM,
                    "no training observations in this covariate cell");
      }
      return it->second;
    }
    case NuisanceMethod::LOGISTIC: {
      double eta = beta[0];
      for (int j = 0; j < x.size(); ++j) eta += beta[j + 1] * x[j];
      return sigmoid(eta);
    }
    case NuisanceMethod::MANUAL:
      throw Error(ErrorCode::INVALID_INPUT,
                  "manual nuisance values cannot predict at new covariates");
  }
  return constant;
}

ProbModel fit_binary_model(const Eigen::MatrixXd& x, const std::vector<double>& y,
                           const std::vector<int>& subset, NuisanceMethod method,
                           int level_cap) {
  if (subset.empty()) {
    throw Error(ErrorCode::INSUFFICIENT_ARM, "no observations to fit on");
  }
  const int p = static_cast<int>(x.cols());
  ProbModel model;

  // Covariate-free fits collapse to the arm mean regardless of method, and
  // computing them in closed form keeps the collapse exact.
  if (method == NuisanceMethod::CONSTANT || p == 0) {
    model.kind = NuisanceMethod::CONSTANT;
    double sum = 0.0;
    for (int i : subset) sum += y[i];
    model.constant = sum / static_cast<double>(subset.size());
    return model;
  }

  if (method == NuisanceMethod::CELL_MEANS) {
    model.kind = NuisanceMethod::CELL_MEANS;
    // Level cap enforced on the full matrix so the error does not depend on
    // which subset happens to be in the training split.
    discrete_levels(x, level_cap, nullptr);
    std::map<std::vector<double>, std::pair<double, long>> acc;
    for (int i : subset) {
      std::vector<double> key(x.row(i).data(), x.row(i).data() + p);
      auto& [sum, count] = acc[key];
      sum += y[i];
      ++count;
    }
    for (auto& [key, sc] : acc) {
      model.cells[key] = sc.first / static_cast<double>(sc.second);
    }
    return model;
  }

  if (method == NuisanceMethod::LOGISTIC) {
    if (static_cast<int>(subset.size()) < p + 1) {
      throw Error(ErrorCode::INSUFFICIENT_ARM,
                  "logistic fit needs at least dim(x)+1 observations",
                  {{"n", std::to_string(subset.size())},
                   {"needed", std::to_string(p + 1)}});
    }
    Eigen::MatrixXd design(subset.size(), p + 1);
    Eigen::VectorXd resp(subset.size());
    for (int r = 0; r < static_cast<int>(subset.size()); ++r) {
      design(r, 0) = 1.0;
      design.row(r).tail(p) = x.row(subset[r]);
      resp[r] = y[subset[r]];
    }
    LogisticFit fit = logistic_irls(design, resp);
    model.kind = NuisanceMethod::LOGISTIC;
    model.beta = fit.beta;
    model.converged = fit.converged;
    model.iterations = fit.iterations;
    return model;
  }

  throw Error(ErrorCode::INVALID_INPUT, "MANUAL is not a fitting method");
}

// ---------------------------------------------------------------------------
// NuisanceFit
// ---------------------------------------------------------------------------

namespace {

double trim_value(double v, double eps, int* bind_counter) {
  if (v < eps) {
    ++*bind_counter;
    return eps;
  }
  if (v > 1.0 - eps) {
    ++*bind_counter;
    return 1.0 - eps;
  }
  return v;
}

std::vector<int> complement(const std::vector<int>& members,
                            const std::vector<int>& folds, int fold) {
  std::vector<int> out;
  for (int i : members) {
    if (folds[i] != fold) out.push_back(i);
  }
  return out;
}

}  // namespace

NuisanceFit fit_nuisance(const TwoPeriodPanel& panel, NuisanceMethod method,
                         std::optional<FoldPlan> folds, double eps_trim,
                         int level_cap) {
  if (method == NuisanceMethod::MANUAL) {
    throw Error(ErrorCode::INVALID_INPUT,
                "use manual_nuisance() to build MANUAL fits");
  }
  if (!panel.binary_outcomes()) {
    throw Error(ErrorCode::NON_BINARY_VALUE,
                "nuisance fits require binary outcomes (panel is residualized?)");
  }
  if (!(eps_trim >= 0.0 && eps_trim < 0.5)) {
    throw Error(ErrorCode::DOMAIN, "eps_trim must lie in [0, 0.5)");
  }
  const int n = panel.n();

  NuisanceFit fit;
  fit.method = method;
  fit.eps_trim = eps_trim;
  fit.folds = folds;

  std::vector<int> arm[2];
  for (int i = 0; i < n; ++i) arm[panel.d1[i]].push_back(i);
  std::vector<int> everyone(n);
  std::iota(everyone.begin(), everyone.end(), 0);

  const std::vector<double>* outcome[2] = {&panel.y0, &panel.y1};
  std::vector<double> d_as_double(n);
  for (int i = 0; i < n; ++i) d_as_double[i] = panel.d1[i];

  // Full-sample models (used for prediction at new covariate values, and for
  // the per-unit values when not cross-fitting).
  for (int t = 0; t <= 1; ++t) {
    for (int d = 0; d <= 1; ++d) {
      fit.models[t][d] = fit_binary_model(panel.x, *outcome[t], arm[d], method,
                                          level_cap);
    }
  }
  fit.propensity_model =
      fit_binary_model(panel.x, d_as_double, everyone, method, level_cap);

  for (int t = 0; t <= 1; ++t) {
    for (int d = 0; d <= 1; ++d) fit.pi_hat[t][d].assign(n, 0.0);
  }
  fit.p_hat.assign(n, 0.0);

  if (!folds) {
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t <= 1; ++t) {
        for (int d = 0; d <= 1; ++d) {
          fit.pi_hat[t][d][i] = fit.models[t][d].predict(panel.x.row(i));
        }
      }
      fit.p_hat[i] = fit.propensity_model.predict(panel.x.row(i));
    }
  } else {
    if (static_cast<int>(folds->assignment.size()) != n) {
      throw Error(ErrorCode::INVALID_INPUT, "fold plan does not match panel size");
    }
    // Out-of-fold predictions: models trained on the complement of each fold.
    for (int f = 0; f < folds->k; ++f) {
      ProbModel pm[2][2];
      for (int t = 0; t <= 1; ++t) {
        for (int d = 0; d <= 1; ++d) {
          pm[t][d] = fit_binary_model(panel.x, *outcome[t],
                                      complement(arm[d], folds->assignment, f),
                                      method, level_cap);
        }
      }
      ProbModel prop = fit_binary_model(
          panel.x, d_as_double, complement(everyone, folds->assignment, f),
          method, level_cap);
      for (int i = 0; i < n; ++i) {
        if (folds->assignment[i] != f) continue;
        for (int t = 0; t <= 1; ++t) {
          for (int d = 0; d <= 1; ++d) {
            fit.pi_hat[t][d][i] = pm[t][d].predict(panel.x.row(i));
          }
        }
        fit.p_hat[i] = prop.predict(panel.x.row(i));
      }
    }
  }

  for (int t = 0; t <= 1; ++t) {
    for (int d = 0; d <= 1; ++d) {
      for (double& v : fit.pi_hat[t][d]) {
        v = trim_value(v, eps_trim, &fit.trim_count_outcome);
      }
    }
  }
  for (double& v : fit.p_hat) {
    v = trim_value(v, eps_trim, &fit.trim_count_propensity);
  }
  return fit;
}

NuisanceFit manual_nuisance(const TwoPeriodPanel& panel,
                            std::vector<double> pi_t0_d0,
                            std::vector<double> pi_t0_d1,
                            std::vector<double> pi_t1_d0,
                            std::vector<double> pi_t1_d1,
                            std::vector<double> propensity, double eps_trim) {
  const std::size_t n = static_cast<std::size_t>(panel.n());
  for (const auto* v : {&pi_t0_d0, &pi_t0_d1, &pi_t1_d0, &pi_t1_d1, &propensity}) {
    if (v->size() != n) {
      throw Error(ErrorCode::INVALID_INPUT, "manual nuisance vectors must have length n");
    }
  }
  NuisanceFit fit;
  fit.method = NuisanceMethod::MANUAL;
  fit.eps_trim = eps_trim;
  fit.pi_hat[0][0] = std::move(pi_t0_d0);
  fit.pi_hat[0][1] = std::move(pi_t0_d1);
  fit.pi_hat[1][0] = std::move(pi_t1_d0);
  fit.pi_hat[1][1] = std::move(pi_t1_d1);
  fit.p_hat = std::move(propensity);
  for (int t = 0; t <= 1; ++t) {
    for (int d = 0; d <= 1; ++d) {
      fit.models[t][d].kind = NuisanceMethod::MANUAL;
      for (double& v : fit.pi_hat[t][d]) {
        v = trim_value(v, eps_trim, &fit.trim_count_outcome);
      }
    }
  }
  fit.propensity_model.kind = NuisanceMethod::MANUAL;
  for (double& v : fit.p_hat) {
    v = trim_value(v, eps_trim, &fit.trim_count_propensity);
  }
  return fit;
}

NuisanceFit NuisanceFit::with_propensity(std::vector<double> values) const {
  if (values.size() != p_hat.size()) {
    throw Error(ErrorCode::INVALID_INPUT, "override vector must have length n");
  }
  NuisanceFit out = *this;
  out.p_hat = std::move(values);
  out.propensity_model = ProbModel{};
  out.propensity_model.kind = NuisanceMethod::MANUAL;
  for (double& v : out.p_hat) {
    v = trim_value(v, out.eps_trim, &out.trim_count_propensity);
  }
  return out;
}

NuisanceFit NuisanceFit::with_outcome(int t, int d, std::vector<double> values) const {
  if (values.size() != pi_hat[t][d].size()) {
    throw Error(ErrorCode::INVALID_INPUT, "override vector must have length n");
  }
  NuisanceFit out = *this;
  out.pi_hat[t][d] = std::move(values);
  out.models[t][d] = ProbModel{};
  out.models[t][d].kind = NuisanceMethod::MANUAL;
  for (double& v : out.pi_hat[t][d]) {
    v = trim_value(v, out.eps_trim, &out.trim_count_outcome);
  }
  return out;
}

double predict_delta0(const NuisanceFit& fit, const Eigen::RowVectorXd& x) {
  int scratch = 0;
  double p1 = trim_value(fit.models[1][0].predict(x), fit.eps_trim, &scratch);
  double p0 = trim_value(fit.models[0][0].predict(x), fit.eps_trim, &scratch);
  return p1 - p0;
}

double propensity_odds(const NuisanceFit& fit, const Eigen::RowVectorXd& x) {
  int scratch = 0;
  double p = trim_value(fit.propensity_model.predict(x), fit.eps_trim, &scratch);
  return p / (1.0 - p);
}

}  // namespace persuasion
