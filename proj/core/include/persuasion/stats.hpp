#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace persuasion {

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

// Standard normal CDF, evaluated through erfc for full double accuracy.
double normal_cdf(double z);

// Standard normal quantile. Rational approximation with one Halley polish
// step; absolute error is far below the 1e-9 the estimators need for
// confidence limits.
double inverse_normal_cdf(double p);

// ---------------------------------------------------------------------------
// Counter-based random number generation
// ---------------------------------------------------------------------------

// Stateless-style RNG: the i-th draw is a pure function of (seed, stream, i).
// Simulation replications can therefore be dispatched in any order (or in
// parallel) and still produce byte-identical results.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();                  // [0, 1)
  double normal();                   // N(0, 1) via inverse CDF
  bool bernoulli(double p);
  // Draws an index in [0, k) with the given (normalized) probabilities.
  int categorical(const double* probs, int k);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature
// ---------------------------------------------------------------------------

// Nodes/weights for \int f(x) exp(-x^2) dx (physicists' convention).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermite gauss_hermite(int n);

// E[f(Z)] for Z ~ N(0,1) using the substitution x = z / sqrt(2).
double gauss_hermite_normal_mean(const GaussHermite& gh,
                                 const std::function<double(double)>& f);

// ---------------------------------------------------------------------------
// Logistic regression (IRLS / Newton)
// ---------------------------------------------------------------------------

double sigmoid(double t);

struct LogisticFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;        // inverse observed information (model-based)
  bool converged = false;
  int iterations = 0;
  double max_abs_index = 0;   // max |x_i' beta| over the fitting sample
};

// Newton-Raphson fit of Pr(y=1|x) = sigmoid(x'beta). X must already contain
// the intercept column. A small ridge keeps the Hessian invertible; the
// tolerance is on the mean score (per-observation scale) so that convergence
// is attainable at any sample size. Perfect separation -- a fitted linear
// index beyond +/-30, or failure to converge -- raises SEPARATION.
LogisticFit logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double tol = 1e-8, int max_iter = 100,
                          double ridge = 1e-8);

// ---------------------------------------------------------------------------
// Cluster-aggregated sandwich helpers
// ---------------------------------------------------------------------------

// Maps unit -> cluster ordinal. Empty ids means every unit is its own cluster.
std::vector<int> cluster_index(const std::vector<std::string>& ids, int n);

// Standard error of a ratio estimate num/den from per-unit influence
// contributions of the numerator and denominator means. Contributions are
// summed within clusters (units are singleton clusters when no ids are
// given) and the meat carries the small-sample factor G/(G-1).
double ratio_se_from_contributions(const std::vector<double>& phi_num,
                                   const std::vector<double>& phi_den,
                                   double theta, double den,
                                   const std::vector<std::string>& cluster_ids);

}  // namespace persuasion
