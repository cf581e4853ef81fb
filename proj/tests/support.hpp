#pragma once

// Shared helpers for the test suites: deterministic panel builders, a
// rejection sampler for "well-behaved" random two-period panels, and small
// file utilities for the CSV loaders and the CLI tests.

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "persuasion/dataset.hpp"
#include "persuasion/nuisance.hpp"

namespace testutil {

using persuasion::StaggeredPanel;
using persuasion::TwoPeriodPanel;

// Manual nuisance fit with every leg constant across units.
inline persuasion::NuisanceFit constant_nuisance(
    const TwoPeriodPanel& panel, double pi_t0_d0, double pi_t0_d1,
    double pi_t1_d0, double pi_t1_d1, double propensity,
    double eps_trim = 0.01) {
  const std::size_t n = panel.d1.size();
  return persuasion::manual_nuisance(
      panel, std::vector<double>(n, pi_t0_d0), std::vector<double>(n, pi_t0_d1),
      std::vector<double>(n, pi_t1_d0), std::vector<double>(n, pi_t1_d1),
      std::vector<double>(n, propensity), eps_trim);
}

// Two-period panel from explicit joint cell counts. counts[d][y0][y1] gives
// the number of units in arm d with pre outcome y0 and post outcome y1.
inline TwoPeriodPanel panel_from_counts(const long counts[2][2][2]) {
  TwoPeriodPanel panel;
  for (int d = 0; d < 2; ++d) {
    for (int y0 = 0; y0 < 2; ++y0) {
      for (int y1 = 0; y1 < 2; ++y1) {
        for (long k = 0; k < counts[d][y0][y1]; ++k) {
          panel.d1.push_back(d);
          panel.y0.push_back(y0);
          panel.y1.push_back(y1);
        }
      }
    }
  }
  panel.x.resize(panel.n(), 0);
  return panel;
}

// The saturated regression only sees the four (arm, period) means, so any
// joint consistent with them works. Uses counts of ones per arm/period;
// the pre/post ones are paired greedily (ones first), which fixes the joint.
inline TwoPeriodPanel panel_from_margins(int n0, int ones0_pre, int ones0_post,
                                         int n1, int ones1_pre, int ones1_post) {
  TwoPeriodPanel panel;
  auto add_arm = [&](int d, int n, int pre, int post) {
    for (int i = 0; i < n; ++i) {
      panel.d1.push_back(d);
      panel.y0.push_back(i < pre ? 1 : 0);
      panel.y1.push_back(i < post ? 1 : 0);
    }
  };
  add_arm(0, n0, ones0_pre, ones0_post);
  add_arm(1, n1, ones1_pre, ones1_post);
  panel.x.resize(panel.n(), 0);
  return panel;
}

// Random binary panel whose realized cell means stay well inside (0, 1) and
// whose persuasion-rate denominators stay bounded away from zero, so that no
// trimming, clipping, or degeneracy guard can bind. Used by the algebraic
// equivalence suites.
inline TwoPeriodPanel random_interior_panel(std::mt19937& rng, int n_min = 20,
                                            int n_max = 500) {
  std::uniform_int_distribution<int> size(n_min, n_max);
  std::uniform_real_distribution<double> share(0.30, 0.70);
  std::uniform_real_distribution<double> prob(0.20, 0.80);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const int n = size(rng);
    const double p_treat = share(rng);
    const double pr[2][2] = {{prob(rng), prob(rng)}, {prob(rng), prob(rng)}};
    TwoPeriodPanel panel;
    int count[2] = {0, 0};
    double ones[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < n; ++i) {
      const int d = unif(rng) < p_treat ? 1 : 0;
      const int y0 = unif(rng) < pr[d][0] ? 1 : 0;
      const int y1 = unif(rng) < pr[d][1] ? 1 : 0;
      panel.d1.push_back(d);
      panel.y0.push_back(y0);
      panel.y1.push_back(y1);
      ++count[d];
      ones[d][0] += y0;
      ones[d][1] += y1;
    }
    if (count[0] < 8 || count[1] < 8) continue;
    bool interior = true;
    double m[2][2];
    for (int d = 0; d < 2 && interior; ++d) {
      for (int t = 0; t < 2; ++t) {
        m[d][t] = ones[d][t] / count[d];
        if (m[d][t] < 0.06 || m[d][t] > 0.94) interior = false;
      }
    }
    if (!interior) continue;
    // forward denominator 1 - E[Y0|1] - control trend; reverse denominator
    const double den_aprt = 1.0 - m[1][0] - (m[0][1] - m[0][0]);
    if (den_aprt < 0.06 || m[1][1] < 0.06) continue;
    const double p_share = static_cast<double>(count[1]) / n;
    if (p_share < 0.10 || p_share > 0.90) continue;
    panel.x.resize(panel.n(), 0);
    return panel;
  }
}

// Staggered panel with adoption times drawn from `cohort_probs` (index 0 =
// cohort 1, ...; remaining mass never-treated) and per-(group, period)
// success probabilities from a simple separable form.
inline StaggeredPanel random_staggered_panel(std::mt19937& rng, int n, int T) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  StaggeredPanel panel;
  panel.y.resize(n, T + 1);
  panel.s.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = unif(rng);
    int s = persuasion::kNeverTreated;
    const double slice = 0.5 / T;  // half the mass spread over cohorts
    for (int c = 1; c <= T; ++c) {
      if (u < slice * c) {
        s = c;
        break;
      }
    }
    panel.s[i] = s;
    for (int t = 0; t <= T; ++t) {
      double p = 0.25 + 0.05 * t;
      if (s != persuasion::kNeverTreated && t >= s) p += 0.30;
      panel.y(i, t) = unif(rng) < p ? 1 : 0;
    }
  }
  panel.x.resize(n, 0);
  return panel;
}

// Equivalent two-period view of a T = 1 staggered panel (s = 1 -> treated).
inline TwoPeriodPanel two_period_view(const StaggeredPanel& panel) {
  TwoPeriodPanel out;
  for (int i = 0; i < panel.n(); ++i) {
    out.d1.push_back(panel.s[i] == 1 ? 1 : 0);
    out.y0.push_back(panel.y(i, 0));
    out.y1.push_back(panel.y(i, 1));
  }
  out.x.resize(out.n(), 0);
  out.cluster = panel.cluster;
  return out;
}

// Unique temp file that deletes itself.
class TempFile {
 public:
  explicit TempFile(const std::string& contents, const std::string& tag = "t") {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("persuasion_test_" + tag + std::to_string(counter++) + "_" +
              std::to_string(::getpid()) + ".tmp"))
                .string();
    std::ofstream f(path_);
    f << contents;
  }
  ~TempFile() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace testutil
