#include "persuasion/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "persuasion/errors.hpp"

namespace persuasion {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(a, b - a + 1);
  // Strip one layer of surrounding double quotes.
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Header map, raising MISSING_COLUMN for each absent required name.
std::map<std::string, int> index_header(const std::vector<std::string>& header,
                                        const std::vector<std::string>& required) {
  std::map<std::string, int> idx;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) idx[header[i]] = i;
  for (const auto& col : required) {
    if (!idx.count(col)) {
      throw Error(ErrorCode::MISSING_COLUMN, "CSV is missing column '" + col + "'",
                  {{"column", col}});
    }
  }
  return idx;
}

double parse_number(const std::string& field, const std::string& column, long row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::INVALID_INPUT,
                "non-numeric value '" + field + "' in column '" + column + "'",
                {{"column", column}, {"row", std::to_string(row)}, {"value", field}});
  }
}

int parse_binary(const std::string& field, const std::string& column, long row) {
  double v = parse_number(field, column, row);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw Error(ErrorCode::NON_BINARY_VALUE,
              "value '" + field + "' in column '" + column + "' is not 0/1",
              {{"column", column}, {"row", std::to_string(row)}, {"value", field}});
}

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows, 1-based in errors
};

CsvFile read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::INVALID_INPUT, "cannot open file '" + path + "'",
                {{"path", path}});
  }
  CsvFile csv;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::INVALID_INPUT, "empty CSV file", {{"path", path}});
  }
  csv.header = split_csv_line(line);
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != csv.header.size()) {
      throw Error(ErrorCode::INVALID_INPUT,
                  "row has " + std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(csv.header.size()),
                  {{"row", std::to_string(row)}});
    }
    csv.rows.push_back(std::move(fields));
  }
  return csv;
}

bool any_empty(const std::vector<std::string>& fields, const std::vector<int>& cols) {
  for (int c : cols) {
    if (fields[c].empty()) return true;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// TwoPeriodPanel
// ---------------------------------------------------------------------------

bool TwoPeriodPanel::binary_outcomes() const {
  for (int i = 0; i < n(); ++i) {
    if ((y0[i] != 0.0 && y0[i] != 1.0) || (y1[i] != 0.0 && y1[i] != 1.0)) return false;
  }
  return true;
}

void TwoPeriodPanel::validate() const {
  const int m = n();
  if (m == 0) throw Error(ErrorCode::INVALID_INPUT, "panel has no units");
  if (static_cast<int>(y0.size()) != m || static_cast<int>(y1.size()) != m ||
      (x.size() != 0 && x.rows() != m) ||
      (!cluster.empty() && static_cast<int>(cluster.size()) != m)) {
    throw Error(ErrorCode::INVALID_INPUT, "panel field sizes disagree");
  }
  int n1 = 0;
  for (int i = 0; i < m; ++i) {
    if (d1[i] != 0 && d1[i] != 1) {
      throw Error(ErrorCode::NON_BINARY_VALUE, "treatment indicator is not 0/1",
                  {{"row", std::to_string(i + 1)}});
    }
    n1 += d1[i];
  }
  if (!residualized && !binary_outcomes()) {
    throw Error(ErrorCode::NON_BINARY_VALUE, "outcomes are not 0/1");
  }
  if (n1 == 0 || n1 == m) {
    throw Error(ErrorCode::EMPTY_ARM,
                n1 == 0 ? "no treated units" : "no control units",
                {{"n_treated", std::to_string(n1)}, {"n", std::to_string(m)}});
  }
}

TwoPeriodPanel load_two_period_csv(const std::string& path,
                                   const TwoPeriodSchema& schema) {
  CsvFile csv = read_csv(path);

  std::vector<std::string> required = {schema.y0_col, schema.y1_col, schema.d_col};
  for (const auto& c : schema.x_cols) required.push_back(c);
  if (!schema.cluster_col.empty()) required.push_back(schema.cluster_col);
  auto idx = index_header(csv.header, required);

  std::vector<int> needed;
  for (const auto& c : required) needed.push_back(idx[c]);

  TwoPeriodPanel panel;
  const int p = static_cast<int>(schema.x_cols.size());
  std::vector<std::vector<double>> x_rows;
  long dropped = 0;

  for (long r = 0; r < static_cast<long>(csv.rows.size()); ++r) {
    const auto& fields = csv.rows[r];
    if (any_empty(fields, needed)) {
      ++dropped;  // listwise deletion; count reported in notes
      continue;
    }
    long row = r + 1;
    panel.y0.push_back(parse_binary(fields[idx[schema.y0_col]], schema.y0_col, row));
    panel.y1.push_back(parse_binary(fields[idx[schema.y1_col]], schema.y1_col, row));
    panel.d1.push_back(parse_binary(fields[idx[schema.d_col]], schema.d_col, row));
    if (p > 0) {
      std::vector<double> xr(p);
      for (int j = 0; j < p; ++j) {
        xr[j] = parse_number(fields[idx[schema.x_cols[j]]], schema.x_cols[j], row);
      }
      x_rows.push_back(std::move(xr));
    }
    if (!schema.cluster_col.empty()) {
      panel.cluster.push_back(fields[idx[schema.cluster_col]]);
    }
  }

  panel.x.resize(static_cast<int>(panel.d1.size()), p);
  for (int i = 0; i < static_cast<int>(x_rows.size()); ++i) {
    for (int j = 0; j < p; ++j) panel.x(i, j) = x_rows[i][j];
  }
  if (dropped > 0) {
    panel.notes.push_back("dropped " + std::to_string(dropped) +
                          " row(s) with missing fields");
  }
  panel.validate();
  return panel;
}

// ---------------------------------------------------------------------------
// StaggeredPanel
// ---------------------------------------------------------------------------

void StaggeredPanel::validate() const {
  const int m = n();
  if (m == 0) throw Error(ErrorCode::INVALID_INPUT, "panel has no units");
  if (y.rows() != m || (x.size() != 0 && x.rows() != m) ||
      (!cluster.empty() && static_cast<int>(cluster.size()) != m)) {
    throw Error(ErrorCode::INVALID_INPUT, "panel field sizes disagree");
  }
  const int T = horizon();
  if (T < 1) throw Error(ErrorCode::INVALID_INPUT, "need at least two periods");
  int never = 0;
  for (int i = 0; i < m; ++i) {
    if (s[i] == kNeverTreated) {
      ++never;
    } else if (s[i] < 1 || s[i] > T) {
      throw Error(ErrorCode::NON_BINARY_VALUE,
                  "adoption time outside 1.." + std::to_string(T),
                  {{"row", std::to_string(i + 1)}, {"value", std::to_string(s[i])}});
    }
    for (int t = 0; t <= T; ++t) {
      if (y(i, t) != 0 && y(i, t) != 1) {
        throw Error(ErrorCode::NON_BINARY_VALUE, "outcome is not 0/1",
                    {{"row", std::to_string(i + 1)}, {"period", std::to_string(t)}});
      }
    }
  }
  if (never == 0) {
    throw Error(ErrorCode::NO_NEVER_TREATED, "no never-treated units present");
  }
}

namespace {

int parse_adoption(const std::string& field, const std::string& token, int T,
                   long row, const std::string& column) {
  if (lower(field) == lower(token)) return kNeverTreated;
  double v = parse_number(field, column, row);
  int s = static_cast<int>(v);
  if (v != s || s < 1 || s > T) {
    throw Error(ErrorCode::NON_BINARY_VALUE,
                "adoption time '" + field + "' outside 1.." + std::to_string(T),
                {{"column", column}, {"row", std::to_string(row)}, {"value", field}});
  }
  return s;
}

StaggeredPanel load_staggered_wide(const CsvFile& csv, const StaggeredSchema& schema) {
  if (schema.y_cols.size() < 2) {
    throw Error(ErrorCode::INVALID_INPUT, "need at least two outcome columns");
  }
  std::vector<std::string> required = {schema.s_col};
  for (const auto& c : schema.y_cols) required.push_back(c);
  for (const auto& c : schema.x_cols) required.push_back(c);
  if (!schema.cluster_col.empty()) required.push_back(schema.cluster_col);
  auto idx = index_header(csv.header, required);
  std::vector<int> needed;
  for (const auto& c : required) needed.push_back(idx[c]);

  const int T = static_cast<int>(schema.y_cols.size()) - 1;
  const int p = static_cast<int>(schema.x_cols.size());

  std::vector<std::vector<int>> y_rows;
  std::vector<std::vector<double>> x_rows;
  StaggeredPanel panel;
  long dropped = 0;

  for (long r = 0; r < static_cast<long>(csv.rows.size()); ++r) {
    const auto& fields = csv.rows[r];
    if (any_empty(fields, needed)) {
      ++dropped;
      continue;
    }
    long row = r + 1;
    panel.s.push_back(
        parse_adoption(fields[idx[schema.s_col]], schema.infinity_token, T, row,
                       schema.s_col));
    std::vector<int> yr(T + 1);
    for (int t = 0; t <= T; ++t) {
      yr[t] = parse_binary(fields[idx[schema.y_cols[t]]], schema.y_cols[t], row);
    }
    y_rows.push_back(std::move(yr));
    if (p > 0) {
      std::vector<double> xr(p);
      for (int j = 0; j < p; ++j) {
        xr[j] = parse_number(fields[idx[schema.x_cols[j]]], schema.x_cols[j], row);
      }
      x_rows.push_back(std::move(xr));
    }
    if (!schema.cluster_col.empty()) {
      panel.cluster.push_back(fields[idx[schema.cluster_col]]);
    }
  }

  const int n = static_cast<int>(panel.s.size());
  panel.y.resize(n, T + 1);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t <= T; ++t) panel.y(i, t) = y_rows[i][t];
  }
  panel.x.resize(n, p);
  for (int i = 0; i < static_cast<int>(x_rows.size()); ++i) {
    for (int j = 0; j < p; ++j) panel.x(i, j) = x_rows[i][j];
  }
  if (dropped > 0) {
    panel.notes.push_back("dropped " + std::to_string(dropped) +
                          " row(s) with missing fields");
  }
  panel.validate();
  return panel;
}

StaggeredPanel load_staggered_long(const CsvFile& csv, const StaggeredSchema& schema) {
  std::vector<std::string> required = {schema.unit_col, schema.t_col, schema.y_col,
                                       schema.s_col};
  for (const auto& c : schema.x_cols) required.push_back(c);
  if (!schema.cluster_col.empty()) required.push_back(schema.cluster_col);
  auto idx = index_header(csv.header, required);
  std::vector<int> needed;
  for (const auto& c : required) needed.push_back(idx[c]);

  // First pass: horizon T = max period in the file.
  int T = -1;
  for (long r = 0; r < static_cast<long>(csv.rows.size()); ++r) {
    const auto& fields = csv.rows[r];
    if (fields[idx[schema.t_col]].empty()) continue;
    double tv = parse_number(fields[idx[schema.t_col]], schema.t_col, r + 1);
    int t = static_cast<int>(tv);
    if (tv != t || t < 0) {
      throw Error(ErrorCode::INVALID_INPUT, "period index must be a non-negative integer",
                  {{"row", std::to_string(r + 1)}, {"value", fields[idx[schema.t_col]]}});
    }
    T = std::max(T, t);
  }
  if (T < 1) throw Error(ErrorCode::INVALID_INPUT, "need at least two periods");

  struct UnitRec {
    std::vector<int> y;           // indexed by period, -1 = unseen
    std::string s_field, cluster;
    std::vector<double> xr;
    bool meta_set = false;
    long first_row = 0;
  };
  std::map<std::string, UnitRec> units;   // keyed by unit id
  std::vector<std::string> order;         // first-appearance order
  const int p = static_cast<int>(schema.x_cols.size());
  long dropped_rows = 0;

  for (long r = 0; r < static_cast<long>(csv.rows.size()); ++r) {
    const auto& fields = csv.rows[r];
    if (any_empty(fields, needed)) {
      ++dropped_rows;
      continue;
    }
    long row = r + 1;
    const std::string& id = fields[idx[schema.unit_col]];
    auto [it, inserted] = units.try_emplace(id);
    UnitRec& rec = it->second;
    if (inserted) {
      rec.y.assign(T + 1, -1);
      rec.first_row = row;
      order.push_back(id);
    }
    int t = static_cast<int>(parse_number(fields[idx[schema.t_col]], schema.t_col, row));
    if (rec.y[t] != -1) {
      throw Error(ErrorCode::INVALID_INPUT, "duplicate (unit, period) row",
                  {{"row", std::to_string(row)}, {"unit", id}});
    }
    rec.y[t] = parse_binary(fields[idx[schema.y_col]], schema.y_col, row);

    std::string s_field = fields[idx[schema.s_col]];
    std::vector<double> xr(p);
    for (int j = 0; j < p; ++j) {
      xr[j] = parse_number(fields[idx[schema.x_cols[j]]], schema.x_cols[j], row);
    }
    std::string cl =
        schema.cluster_col.empty() ? "" : fields[idx[schema.cluster_col]];
    if (!rec.meta_set) {
      rec.s_field = s_field;
      rec.xr = xr;
      rec.cluster = cl;
      rec.meta_set = true;
    } else if (rec.s_field != s_field || rec.xr != xr || rec.cluster != cl) {
      // Adoption time, covariates and cluster are unit-level attributes.
      throw Error(ErrorCode::INVALID_INPUT,
                  "unit-level fields vary across periods for unit '" + id + "'",
                  {{"row", std::to_string(row)}, {"unit", id}});
    }
  }

  StaggeredPanel panel;
  std::vector<std::vector<int>> y_rows;
  std::vector<std::vector<double>> x_rows;
  long dropped_units = 0;
  for (const auto& id : order) {
    const UnitRec& rec = units[id];
    if (std::find(rec.y.begin(), rec.y.end(), -1) != rec.y.end()) {
      ++dropped_units;  // incomplete period coverage -> listwise unit drop
      continue;
    }
    panel.s.push_back(parse_adoption(rec.s_field, schema.infinity_token, T,
                                     rec.first_row, schema.s_col));
    y_rows.push_back(rec.y);
    x_rows.push_back(rec.xr);
    if (!schema.cluster_col.empty()) panel.cluster.push_back(rec.cluster);
  }

  const int n = static_cast<int>(panel.s.size());
  panel.y.resize(n, T + 1);
  panel.x.resize(n, p);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t <= T; ++t) panel.y(i, t) = y_rows[i][t];
    for (int j = 0; j < p; ++j) panel.x(i, j) = x_rows[i][j];
  }
  if (dropped_rows > 0) {
    panel.notes.push_back("dropped " + std::to_string(dropped_rows) +
                          " row(s) with missing fields");
  }
  if (dropped_units > 0) {
    panel.notes.push_back("dropped " + std::to_string(dropped_units) +
                          " unit(s) with incomplete period coverage");
  }
  panel.validate();
  return panel;
}

}  // namespace

StaggeredPanel load_staggered_csv(const std::string& path,
                                  const StaggeredSchema& schema) {
  CsvFile csv = read_csv(path);
  return schema.long_layout ? load_staggered_long(csv, schema)
                            : load_staggered_wide(csv, schema);
}

// ---------------------------------------------------------------------------
// CellTable
// ---------------------------------------------------------------------------

long CellTable::total() const {
  long t = 0;
  for (const auto& [k, c] : counts) t += c;
  return t;
}

long CellTable::arm_count(int d, int level) const {
  long t = 0;
  for (const auto& [k, c] : counts) {
    if (k.d1 == d && (level == -1 || k.level == level)) t += c;
  }
  return t;
}

double CellTable::mean(int t, int d, int level) const {
  long denom = 0, numer = 0;
  for (const auto& [k, c] : counts) {
    if (k.d1 != d) continue;
    if (level != -1 && k.level != level) continue;
    denom += c;
    numer += c * (t == 0 ? k.y0 : k.y1);
  }
  if (denom == 0) {
    throw Error(ErrorCode::EMPTY_ARM, "no observations in requested cell",
                {{"d", std::to_string(d)}, {"level", std::to_string(level)}});
  }
  return static_cast<double>(numer) / static_cast<double>(denom);
}

double CellTable::treated_share() const {
  long tot = total();
  if (tot == 0) throw Error(ErrorCode::INVALID_INPUT, "empty cell table");
  return static_cast<double>(arm_count(1)) / static_cast<double>(tot);
}

std::vector<int> discrete_levels(const Eigen::MatrixXd& x, int level_cap,
                                 std::vector<std::vector<double>>* values) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  // Per-column cardinality check first, for a precise error message.
  for (int j = 0; j < p; ++j) {
    std::set<double> distinct;
    for (int i = 0; i < n; ++i) distinct.insert(x(i, j));
    if (static_cast<int>(distinct.size()) > level_cap) {
      throw Error(ErrorCode::TOO_MANY_LEVELS,
                  "covariate column " + std::to_string(j) + " has " +
                      std::to_string(distinct.size()) + " levels (cap " +
                      std::to_string(level_cap) + ")",
                  {{"column", std::to_string(j)},
                   {"levels", std::to_string(distinct.size())},
                   {"cap", std::to_string(level_cap)}});
    }
  }
  std::map<std::vector<double>, int> ids;
  std::vector<int> level(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(p);
    for (int j = 0; j < p; ++j) row[j] = x(i, j);
    auto [it, inserted] = ids.emplace(std::move(row), static_cast<int>(ids.size()));
    level[i] = it->second;
  }
  if (values) {
    values->assign(ids.size(), {});
    for (const auto& [row, id] : ids) (*values)[id] = row;
  }
  return level;
}

CellTable to_cells(const TwoPeriodPanel& panel, bool discrete_x, int level_cap) {
  if (!panel.binary_outcomes()) {
    throw Error(ErrorCode::NON_BINARY_VALUE,
                "cell tables require binary outcomes (panel is residualized?)");
  }
  CellTable cells;
  std::vector<int> level(panel.n(), -1);
  if (discrete_x && panel.x_dim() > 0) {
    level = discrete_levels(panel.x, level_cap, &cells.levels);
  }
  for (int i = 0; i < panel.n(); ++i) {
    CellKey key{static_cast<int>(panel.y0[i]), static_cast<int>(panel.y1[i]),
                panel.d1[i], level[i]};
    ++cells.counts[key];
  }
  return cells;
}

TwoPeriodPanel from_cells(const CellTable& cells) {
  TwoPeriodPanel panel;
  const int p = cells.levels.empty() ? 0 : static_cast<int>(cells.levels[0].size());
  long total = cells.total();
  panel.x.resize(total, p);
  int i = 0;
  for (const auto& [key, count] : cells.counts) {
    for (long c = 0; c < count; ++c) {
      panel.y0.push_back(key.y0);
      panel.y1.push_back(key.y1);
      panel.d1.push_back(key.d1);
      if (p > 0) {
        const auto& row = cells.levels[key.level];
        for (int j = 0; j < p; ++j) panel.x(i, j) = row[j];
      }
      ++i;
    }
  }
  panel.validate();
  return panel;
}

}  // namespace persuasion
