#include "persuasion/stats.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "persuasion/errors.hpp"

namespace persuasion {

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

// Rational approximation for the normal quantile (Acklam's coefficients,
// |error| < 1.2e-9 on its own; a single Halley step against erfc brings it
// to machine precision).
double inverse_normal_seed(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::DOMAIN, "inverse_normal_cdf requires p in (0,1)",
                {{"p", std::to_string(p)}});
  }
  double x = inverse_normal_seed(p);
  // Halley refinement: e = Phi(x) - p, u = e / phi(x).
  const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
  double e = normal_cdf(x) - p;
  double u = e * sqrt_2pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

// ---------------------------------------------------------------------------
// Counter-based RNG (SplitMix64 finalizer over key + counter)
// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
  // Decorrelate (seed, stream) pairs before they enter the counter sequence.
  key_ = mix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

std::uint64_t CounterRng::next_u64() {
  return mix64(key_ + 0x9E3779B97F4A7C15ULL * (++counter_));
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
  // Shift into the open interval (0,1) so the quantile is always finite.
  double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  return inverse_normal_cdf(u);
}

bool CounterRng::bernoulli(double p) { return uniform() < p; }

int CounterRng::categorical(const double* probs, int k) {
  double u = uniform();
  double cum = 0.0;
  for (int i = 0; i < k; ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return k - 1;  // guard against round-off in the cumulative sum
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (Newton iteration on the orthonormal recurrence)
// ---------------------------------------------------------------------------

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw Error(ErrorCode::DOMAIN, "gauss_hermite requires n >= 1");
  GaussHermite gh;
  gh.nodes.assign(n, 0.0);
  gh.weights.assign(n, 0.0);

  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int m = (n + 1) / 2;
  double z = 0.0, pp = 0.0;
  for (int i = 0; i < m; ++i) {
    // Initial guesses for the i-th largest root.
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * gh.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * gh.nodes[1];
    } else {
      z = 2.0 * z - gh.nodes[i - 2];
    }
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate the orthonormal Hermite polynomial of degree n at z.
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;  // derivative via the recurrence
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    gh.nodes[i] = z;                  // stored largest-to-smallest
    gh.nodes[n - 1 - i] = -z;
    gh.weights[i] = 2.0 / (pp * pp);
    gh.weights[n - 1 - i] = gh.weights[i];
  }
  return gh;
}

double gauss_hermite_normal_mean(const GaussHermite& gh,
                                 const std::function<double(double)>& f) {
  // E[f(Z)] = pi^{-1/2} sum w_i f(sqrt(2) x_i)
  double acc = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    acc += gh.weights[i] * f(std::numbers::sqrt2 * gh.nodes[i]);
  }
  return acc / std::sqrt(std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double sigmoid(double t) {
  if (t >= 0) {
    double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(t);
  return e / (1.0 + e);
}

LogisticFit logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double tol, int max_iter, double ridge) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n != y.size() || n == 0 || p == 0) {
    throw Error(ErrorCode::INVALID_INPUT, "logistic_irls: shape mismatch");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  LogisticFit fit;
  Eigen::MatrixXd hessian(p, p);

  // Tolerance on the mean score keeps the stopping rule sample-size free.
  const double score_tol = tol * std::max(1.0, static_cast<double>(n));

  for (int iter = 1; iter <= max_iter; ++iter) {
    fit.iterations = iter;
    Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (int i = 0; i < n; ++i) {
      mu[i] = sigmoid(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    Eigen::VectorXd score = X.transpose() * (y - mu) - ridge * beta;
    hessian = X.transpose() * w.asDiagonal() * X +
              ridge * Eigen::MatrixXd::Identity(p, p);
    if (score.lpNorm<Eigen::Infinity>() <= score_tol) {
      fit.converged = true;
      break;
    }
    Eigen::VectorXd step = hessian.ldlt().solve(score);
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-12) {
      fit.converged = true;
      break;
    }
  }

  fit.beta = beta;
  fit.max_abs_index = (X * beta).lpNorm<Eigen::Infinity>();
  // A diverging linear index is the IRLS signature of perfect separation.
  if (!fit.converged || fit.max_abs_index > 30.0) {
    throw Error(ErrorCode::SEPARATION,
                "logistic fit diverged (perfect separation suspected)",
                {{"max_abs_index", std::to_string(fit.max_abs_index)},
                 {"iterations", std::to_string(fit.iterations)}});
  }
  fit.cov = hessian.inverse();
  return fit;
}

// ---------------------------------------------------------------------------
// Cluster helpers
// ---------------------------------------------------------------------------

std::vector<int> cluster_index(const std::vector<std::string>& ids, int n) {
  std::vector<int> idx(n);
  if (ids.empty()) {
    for (int i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  std::map<std::string, int> seen;
  for (int i = 0; i < n; ++i) {
    auto [it, inserted] = seen.emplace(ids[i], static_cast<int>(seen.size()));
    idx[i] = it->second;
  }
  return idx;
}

double ratio_se_from_contributions(const std::vector<double>& phi_num,
                                   const std::vector<double>& phi_den,
                                   double theta, double den,
                                   const std::vector<std::string>& cluster_ids) {
  const int n = static_cast<int>(phi_num.size());
  std::vector<int> idx = cluster_index(cluster_ids, n);
  int n_clusters = 0;
  for (int i = 0; i < n; ++i) n_clusters = std::max(n_clusters, idx[i] + 1);

  std::vector<double> cluster_u(n_clusters, 0.0);
  for (int i = 0; i < n; ++i) {
    // Influence of unit i on the ratio, by the delta method.
    cluster_u[idx[i]] += (phi_num[i] - theta * phi_den[i]) / den;
  }
  double meat = 0.0;
  for (double u : cluster_u) meat += u * u;
  double factor =
      n_clusters > 1 ? static_cast<double>(n_clusters) / (n_clusters - 1) : 1.0;
  return std::sqrt(factor * meat) / n;
}

}  // namespace persuasion
