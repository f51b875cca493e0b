#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rulepress/common.hpp"
#include "rulepress/rng.hpp"

namespace rulepress {

enum class ColumnKind { Continuous, OrderedCategorical, UnorderedCategorical };

inline const char* to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::Continuous: return "continuous";
    case ColumnKind::OrderedCategorical: return "ordered-categorical";
    case ColumnKind::UnorderedCategorical: return "unordered-categorical";
  }
  return "?";
}

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<std::string> levels;  // categorical kinds only; ordered for ordinal

  void validate() const {
    if (kind != ColumnKind::Continuous) {
      if (levels.empty())
        throw Error("column '" + name + "': categorical level list is empty");
      for (std::size_t i = 0; i < levels.size(); ++i)
        for (std::size_t j = i + 1; j < levels.size(); ++j)
          if (levels[i] == levels[j])
            throw Error("column '" + name + "': duplicate level '" +
                        levels[i] + "'");
    }
  }
};

// Columnar storage: continuous columns hold doubles, categorical columns hold
// 0-based level indices into the schema's level list.
struct Column {
  std::vector<double> num;
  std::vector<std::int32_t> cat;

  std::size_t size(ColumnKind kind) const {
    return kind == ColumnKind::Continuous ? num.size() : cat.size();
  }
  bool operator==(const Column&) const = default;
};

/// Immutable-after-construction table with typed columns, optional case
/// weights and a designated response column.
class Dataset {
 public:
  std::vector<ColumnSchema> schema;
  std::vector<Column> columns;
  std::vector<double> weights;  // length N, all >= 0, sum > 0
  std::string response;

  std::size_t n_rows() const {
    return columns.empty() ? 0 : columns[0].size(schema[0].kind);
  }
  std::size_t n_cols() const { return columns.size(); }

  int find_column(const std::string& name) const {
    for (std::size_t j = 0; j < schema.size(); ++j)
      if (schema[j].name == name) return static_cast<int>(j);
    return -1;
  }

  std::size_t column_index(const std::string& name) const {
    const int j = find_column(name);
    if (j < 0) throw Error("no column named '" + name + "'");
    return static_cast<std::size_t>(j);
  }

  std::size_t response_index() const { return column_index(response); }

  // Predictor column indices (everything but the response), in schema order.
  std::vector<std::size_t> predictor_indices() const {
    std::vector<std::size_t> out;
    const std::size_t r = response_index();
    for (std::size_t j = 0; j < schema.size(); ++j)
      if (j != r) out.push_back(j);
    return out;
  }

  // Numeric view of a cell: the value for continuous columns, the 1-based
  // level index for ordered-categorical columns.
  double numeric_value(std::size_t col, std::size_t row) const {
    const auto& sc = schema[col];
    if (sc.kind == ColumnKind::Continuous) return columns[col].num[row];
    if (sc.kind == ColumnKind::OrderedCategorical)
      return static_cast<double>(columns[col].cat[row] + 1);
    throw Error("column '" + sc.name + "' is unordered-categorical, not numeric");
  }

  std::int32_t level_index(std::size_t col, std::size_t row) const {
    return columns[col].cat[row];
  }

  std::vector<double> response_values() const {
    const std::size_t r = response_index();
    const auto& sc = schema[r];
    const std::size_t n = n_rows();
    std::vector<double> y(n);
    if (sc.kind == ColumnKind::Continuous) {
      y = columns[r].num;
    } else if (sc.kind == ColumnKind::UnorderedCategorical &&
               sc.levels.size() == 2) {
      // Two-level factor response: first level -> 0, second -> 1.
      for (std::size_t i = 0; i < n; ++i)
        y[i] = columns[r].cat[i] == 0 ? 0.0 : 1.0;
    } else {
      for (std::size_t i = 0; i < n; ++i) y[i] = numeric_value(r, i);
    }
    return y;
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.schema = schema;
    out.response = response;
    out.columns.resize(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (schema[j].kind == ColumnKind::Continuous) {
        out.columns[j].num.reserve(rows.size());
        for (std::size_t i : rows) out.columns[j].num.push_back(columns[j].num[i]);
      } else {
        out.columns[j].cat.reserve(rows.size());
        for (std::size_t i : rows) out.columns[j].cat.push_back(columns[j].cat[i]);
      }
    }
    out.weights.reserve(rows.size());
    for (std::size_t i : rows) out.weights.push_back(weights[i]);
    out.validate();
    return out;
  }

  void validate() const {
    if (schema.size() != columns.size())
      throw Error("dataset: schema/column count mismatch");
    if (schema.empty() || n_rows() == 0) throw Error("dataset: empty");
    for (std::size_t j = 0; j < schema.size(); ++j) {
      schema[j].validate();
      for (std::size_t k = j + 1; k < schema.size(); ++k)
        if (schema[j].name == schema[k].name)
          throw Error("duplicate column name '" + schema[j].name + "'");
      if (columns[j].size(schema[j].kind) != n_rows())
        throw Error("column '" + schema[j].name + "': ragged length");
    }
    if (weights.size() != n_rows())
      throw Error("weights length does not match row count");
    double sw = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw Error("negative or non-finite case weight");
      sw += w;
    }
    if (sw <= 0.0) throw Error("case weights sum to zero");
    if (!response.empty() && find_column(response) < 0)
      throw Error("response column '" + response + "' not present");
  }
};

/// Reorders/remaps a dataset onto a training schema: columns are matched by
/// name, kinds must agree, categorical level indices are translated (a level
/// never seen in training is an error naming the level). When the training
/// response column is absent and require_response is false, a zero placeholder
/// keeps column indices aligned and the result carries no response.
inline Dataset align_to_schema(const std::vector<ColumnSchema>& train_schema,
                               const std::string& response,
                               const Dataset& data,
                               bool require_response = false) {
  Dataset out;
  out.schema = train_schema;
  out.columns.resize(train_schema.size());
  out.weights = data.weights;
  const std::size_t n = data.n_rows();

  for (std::size_t j = 0; j < train_schema.size(); ++j) {
    const ColumnSchema& want = train_schema[j];
    const int src = data.find_column(want.name);
    if (src < 0) {
      if (want.name == response && !require_response) {
        if (want.kind == ColumnKind::Continuous)
          out.columns[j].num.assign(n, 0.0);
        else
          out.columns[j].cat.assign(n, 0);
        out.response.clear();
        continue;
      }
      throw Error("column '" + want.name + "' is missing from the data");
    }
    const ColumnSchema& have = data.schema[static_cast<std::size_t>(src)];
    if (have.kind != want.kind)
      throw Error("column '" + want.name + "' is " + to_string(have.kind) +
                  " but the model expects " + to_string(want.kind));
    if (want.kind == ColumnKind::Continuous) {
      out.columns[j].num = data.columns[static_cast<std::size_t>(src)].num;
    } else {
      std::vector<std::int32_t> remap(have.levels.size());
      for (std::size_t lv = 0; lv < have.levels.size(); ++lv) {
        auto it = std::find(want.levels.begin(), want.levels.end(),
                            have.levels[lv]);
        if (it == want.levels.end())
          throw Error("level '" + have.levels[lv] + "' of column '" +
                      want.name + "' was not seen in training");
        remap[lv] = static_cast<std::int32_t>(it - want.levels.begin());
      }
      auto& cat = out.columns[j].cat;
      cat.resize(n);
      const auto& src_cat = data.columns[static_cast<std::size_t>(src)].cat;
      for (std::size_t i = 0; i < n; ++i)
        cat[i] = remap[static_cast<std::size_t>(src_cat[i])];
    }
  }
  if (out.response.empty() && data.find_column(response) < 0) {
    // placeholder already installed above
  } else {
    out.response = response;
  }
  out.validate();
  return out;
}

struct FoldAssignment {
  std::vector<int> fold_of_row;  // values in [1..k]
  int k = 0;
  bool stratified = false;

  std::vector<std::size_t> rows_in_fold(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i)
      if (fold_of_row[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> rows_not_in_fold(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i)
      if (fold_of_row[i] != fold) out.push_back(i);
    return out;
  }
};

namespace detail {

// RFC-4180-style reader: quoted fields, doubled quotes, LF or CRLF endings.
inline std::vector<std::vector<std::string>> read_csv_records(
    std::istream& in, const std::string& path) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw Error(path + ": unterminated quoted field");
  if (!field.empty() || !fields.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  if (!any || records.empty()) throw Error(path + ": empty file");
  return records;
}

inline bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA";
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace detail

/// Loads a CSV with a header row. Columns named in schema_hint are typed as
/// the hint says; the rest are inferred (all cells parse as finite numbers ->
/// continuous, otherwise unordered-categorical with levels in order of first
/// appearance). Missing cells ("" or "NA") are a hard error.
inline Dataset load_csv(const std::string& path,
                        const std::vector<ColumnSchema>& schema_hint,
                        const std::string& response,
                        const std::string& weights_column = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  auto records = detail::read_csv_records(in, path);

  const std::vector<std::string> header = records[0];
  if (header.empty()) throw Error(path + ": empty header row");
  const std::size_t p = header.size();
  const std::size_t n = records.size() - 1;
  if (n == 0) throw Error(path + ": no data rows");

  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != p)
      throw Error(path + ": row " + std::to_string(r) + " has " +
                  std::to_string(records[r].size()) + " fields, expected " +
                  std::to_string(p));
    for (std::size_t j = 0; j < p; ++j)
      if (detail::is_missing(records[r][j]))
        throw Error("missing value at row " + std::to_string(r) +
                    ", column " + header[j]);
  }

  std::unordered_map<std::string, const ColumnSchema*> hints;
  for (const auto& h : schema_hint) hints[h.name] = &h;

  Dataset ds;
  ds.schema.resize(p);
  ds.columns.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    ColumnSchema sc;
    sc.name = header[j];
    auto it = hints.find(header[j]);
    if (it != hints.end()) {
      sc = *it->second;
      sc.name = header[j];
      sc.validate();
    } else {
      sc.kind = ColumnKind::Continuous;
      double tmp;
      for (std::size_t r = 1; r < records.size() && sc.kind == ColumnKind::Continuous; ++r)
        if (!parse_double(records[r][j], tmp)) sc.kind = ColumnKind::UnorderedCategorical;
      if (sc.kind == ColumnKind::UnorderedCategorical) {
        for (std::size_t r = 1; r < records.size(); ++r) {
          const std::string& cell = records[r][j];
          if (std::find(sc.levels.begin(), sc.levels.end(), cell) == sc.levels.end())
            sc.levels.push_back(cell);
        }
      }
    }

    Column col;
    if (sc.kind == ColumnKind::Continuous) {
      col.num.resize(n);
      for (std::size_t r = 1; r < records.size(); ++r) {
        double v;
        if (!parse_double(records[r][j], v))
          throw Error(path + ": cell '" + records[r][j] + "' at row " +
                      std::to_string(r) + ", column " + sc.name +
                      " is not a finite number");
        col.num[r - 1] = v;
      }
    } else {
      col.cat.resize(n);
      for (std::size_t r = 1; r < records.size(); ++r) {
        const std::string& cell = records[r][j];
        auto lv = std::find(sc.levels.begin(), sc.levels.end(), cell);
        if (lv == sc.levels.end())
          throw Error(path + ": level '" + cell + "' at row " +
                      std::to_string(r) + ", column " + sc.name +
                      " is not in the declared level list");
        col.cat[r - 1] = static_cast<std::int32_t>(lv - sc.levels.begin());
      }
    }
    ds.schema[j] = std::move(sc);
    ds.columns[j] = std::move(col);
  }

  if (!response.empty() && ds.find_column(response) < 0)
    throw Error("response column '" + response + "' not found in " + path);
  ds.response = response;

  ds.weights.assign(n, 1.0);
  if (!weights_column.empty()) {
    const std::size_t wj = ds.column_index(weights_column);
    if (ds.schema[wj].kind != ColumnKind::Continuous)
      throw Error("weights column '" + weights_column + "' must be numeric");
    if (weights_column == response)
      throw Error("weights column cannot be the response");
    ds.weights = ds.columns[wj].num;
    // Remove the weights column from the predictors.
    ds.schema.erase(ds.schema.begin() + static_cast<std::ptrdiff_t>(wj));
    ds.columns.erase(ds.columns.begin() + static_cast<std::ptrdiff_t>(wj));
  }

  ds.validate();
  return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& response,
                        const std::string& weights_column = "") {
  return load_csv(path, {}, response, weights_column);
}

/// Writes the dataset back out as CSV (values in shortest round-trip decimal
/// form, so load(save(ds)) reproduces every cell bit-exactly).
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (std::size_t j = 0; j < ds.schema.size(); ++j) {
    if (j) out << ',';
    out << detail::csv_quote(ds.schema[j].name);
  }
  out << '\n';
  const std::size_t n = ds.n_rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ds.schema.size(); ++j) {
      if (j) out << ',';
      if (ds.schema[j].kind == ColumnKind::Continuous)
        out << format_double(ds.columns[j].num[i]);
      else
        out << detail::csv_quote(ds.schema[j].levels[static_cast<std::size_t>(
            ds.columns[j].cat[i])]);
    }
    out << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

/// Draws a tree-growing sample. sampfrac < 1: round(sampfrac*n) distinct
/// indices without replacement, probability proportional to weights
/// (sequential weighted draws). sampfrac = 1: n draws with replacement.
inline std::vector<std::size_t> subsample(std::size_t n, double sampfrac,
                                          const std::vector<double>& weights,
                                          Rng& rng) {
  if (n < 1) throw Error("subsample: n must be >= 1");
  if (!(sampfrac > 0.0) || sampfrac > 1.0)
    throw Error("sampfrac must be in (0, 1]");
  if (weights.size() != n) throw Error("subsample: weights length mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("subsample: negative weight");
    total += w;
  }
  if (total <= 0.0) throw Error("subsample: all weights are zero");

  std::vector<std::size_t> out;
  if (sampfrac == 1.0) {
    out.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
      double u = rng.uniform01() * total;
      std::size_t pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] <= 0.0) continue;
        if (u < weights[i]) { pick = i; break; }
        u -= weights[i];
      }
      out.push_back(pick);
    }
    return out;
  }

  std::size_t m = static_cast<std::size_t>(
      std::llround(sampfrac * static_cast<double>(n)));
  if (m < 1) m = 1;
  std::vector<double> w = weights;
  double remaining = total;
  out.reserve(m);
  for (std::size_t d = 0; d < m; ++d) {
    if (remaining <= 0.0) {  // guard against subtraction drift
      remaining = 0.0;
      for (double v : w) remaining += v;
      if (remaining <= 0.0) break;  // only zero-weight rows left
    }
    double u = rng.uniform01() * remaining;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] <= 0.0) continue;
      if (u < w[i]) { pick = i; break; }
      u -= w[i];
    }
    if (pick == n) {  // numeric tail: take the last positive-weight index
      for (std::size_t i = n; i-- > 0;)
        if (w[i] > 0.0) { pick = i; break; }
      if (pick == n) break;
    }
    out.push_back(pick);
    remaining -= w[pick];
    w[pick] = 0.0;
  }
  return out;
}

/// Partitions rows into k folds with sizes differing by at most one.
/// With stratify (binary 0/1 response) the per-fold positive counts also
/// differ by at most one.
inline FoldAssignment split_folds(const Dataset& ds, int k, bool stratify,
                                  Rng& rng) {
  const std::size_t n = ds.n_rows();
  if (k < 2) throw Error("fold count must be >= 2");
  if (static_cast<std::size_t>(k) > n)
    throw Error("fold count " + std::to_string(k) + " exceeds row count " +
                std::to_string(n));
  FoldAssignment fa;
  fa.k = k;
  fa.stratified = stratify;
  fa.fold_of_row.assign(n, 0);

  if (stratify) {
    const std::vector<double> y = ds.response_values();
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i)
      (y[i] == 1.0 ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::size_t c = 0;
    for (std::size_t i : pos) fa.fold_of_row[i] = static_cast<int>(c++ % k) + 1;
    for (std::size_t i : neg) fa.fold_of_row[i] = static_cast<int>(c++ % k) + 1;
  } else {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t c = 0; c < n; ++c)
      fa.fold_of_row[order[c]] = static_cast<int>(c % static_cast<std::size_t>(k)) + 1;
  }
  return fa;
}

}  // namespace rulepress
