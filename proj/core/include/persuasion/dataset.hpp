#pragma once

#include <Eigen/Dense>
#include <compare>
#include <map>
#include <string>
#include <vector>

namespace persuasion {

// Sentinel adoption time for never-treated units in staggered panels.
inline constexpr int kNeverTreated = -1;

// ---------------------------------------------------------------------------
// Two-period panel
// ---------------------------------------------------------------------------

// One binary outcome per period (t = 0 pre, t = 1 post), treatment switched on
// between the periods for the d1 = 1 group. Outcomes are stored as doubles so
// that covariate-residualized panels (see partial_out_covariates) can share
// the type; `residualized` marks that the binary invariant was deliberately
// given up.
struct TwoPeriodPanel {
  std::vector<double> y0;
  std::vector<double> y1;
  std::vector<int> d1;
  Eigen::MatrixXd x;                  // n rows; may have zero columns
  std::vector<std::string> cluster;   // empty, or one id per unit
  bool residualized = false;
  std::vector<std::string> notes;     // provenance warnings carried downstream

  int n() const { return static_cast<int>(d1.size()); }
  int x_dim() const { return static_cast<int>(x.cols()); }
  bool has_clusters() const { return !cluster.empty(); }
  bool binary_outcomes() const;

  // Structural checks: consistent sizes, binary values (unless residualized),
  // both treatment arms present. Throws Error; idempotent.
  void validate() const;
};

struct TwoPeriodSchema {
  std::string y0_col = "y0";
  std::string y1_col = "y1";
  std::string d_col = "d";
  std::vector<std::string> x_cols;
  std::string cluster_col;            // empty = no clustering column
};

// Loads a wide CSV (one row per unit). Rows with empty required fields are
// dropped listwise, with the drop count recorded in panel.notes. Row numbers
// in errors are 1-based data rows (the header is row 0).
TwoPeriodPanel load_two_period_csv(const std::string& path,
                                   const TwoPeriodSchema& schema);

// ---------------------------------------------------------------------------
// Staggered panel
// ---------------------------------------------------------------------------

// Outcomes observed at t = 0..T; adoption time s in {1..T} or never-treated.
struct StaggeredPanel {
  Eigen::MatrixXi y;                  // n x (T+1), binary
  std::vector<int> s;                 // adoption period or kNeverTreated
  Eigen::MatrixXd x;
  std::vector<std::string> cluster;
  std::vector<std::string> notes;

  int n() const { return static_cast<int>(s.size()); }
  int horizon() const { return static_cast<int>(y.cols()) - 1; }  // T
  int x_dim() const { return static_cast<int>(x.cols()); }
  bool has_clusters() const { return !cluster.empty(); }

  void validate() const;  // throws Error; requires a never-treated group
};

struct StaggeredSchema {
  std::string s_col = "s";
  std::vector<std::string> y_cols;    // wide layout: one column per period
  std::vector<std::string> x_cols;
  std::string cluster_col;
  std::string infinity_token = "inf"; // never-treated marker (case-insensitive)

  // Long layout (one row per unit x period), pivoted internally.
  bool long_layout = false;
  std::string unit_col = "unit";
  std::string t_col = "t";
  std::string y_col = "y";
};

StaggeredPanel load_staggered_csv(const std::string& path,
                                  const StaggeredSchema& schema);

// ---------------------------------------------------------------------------
// Cell table
// ---------------------------------------------------------------------------

// Sufficient statistics of a binary two-period panel: counts of every
// (y0, y1, d1[, covariate level]) combination. level = -1 when covariates are
// absent or deliberately collapsed.
struct CellKey {
  int y0 = 0;
  int y1 = 0;
  int d1 = 0;
  int level = -1;
  auto operator<=>(const CellKey&) const = default;
};

struct CellTable {
  std::map<CellKey, long> counts;
  // Covariate values per level id (empty when collapsed).
  std::vector<std::vector<double>> levels;

  long total() const;
  long arm_count(int d, int level = -1) const;
  // E[Y_t | D = d (, level)]; t in {0, 1}.
  double mean(int t, int d, int level = -1) const;
  double treated_share() const;
};

// Aggregates a panel into cells. With discrete_x, every covariate column must
// have at most level_cap distinct values (TOO_MANY_LEVELS otherwise).
CellTable to_cells(const TwoPeriodPanel& panel, bool discrete_x,
                   int level_cap = 20);

// Expands a cell table back into a panel (deterministic unit order). Clusters
// are not representable in cells and come back empty.
TwoPeriodPanel from_cells(const CellTable& cells);

// Per-unit discrete level ids for covariate rows, shared by the cell table
// and the CELL_MEANS nuisance fits. `values` (optional) receives the covariate
// vector of each level id. Enforces the per-column level cap.
std::vector<int> discrete_levels(const Eigen::MatrixXd& x, int level_cap,
                                 std::vector<std::vector<double>>* values);

}  // namespace persuasion
