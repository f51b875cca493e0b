#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rulepress/dataset.hpp"
#include "rulepress/rulegen.hpp"

namespace rulepress {

enum class LearnerType { Rules, Linear, Both };

inline const char* to_string(LearnerType t) {
  switch (t) {
    case LearnerType::Rules: return "rules";
    case LearnerType::Linear: return "linear";
    case LearnerType::Both: return "both";
  }
  return "?";
}

inline LearnerType learner_type_from_string(const std::string& s) {
  if (s == "rules") return LearnerType::Rules;
  if (s == "linear") return LearnerType::Linear;
  if (s == "both") return LearnerType::Both;
  throw Error("unknown learner type '" + s + "' (rules, linear, both)");
}

// Type-7 quantile (linear interpolation of order statistics) on sorted data.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error("quantile of empty data");
  if (sorted.size() == 1) return sorted[0];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct LinearTermSpec {
  std::string variable;
  std::size_t column = 0;
  double lower = -kInf;  // winsorizing bounds (quantiles of the training data)
  double upper = kInf;
  double scale = 1.0;  // multiplier applied to the clamped value

  double clamp(double x) const { return std::min(upper, std::max(lower, x)); }
  bool winsorized() const { return std::isfinite(lower) || std::isfinite(upper); }
};

/// Winsorizes a column at its (beta, 1-beta) type-7 quantiles. beta = 0 keeps
/// the values untouched and leaves the bounds infinite.
inline std::pair<std::pair<double, double>, std::vector<double>> winsorize(
    std::vector<double> values, double beta) {
  if (!(beta >= 0.0) || beta >= 0.5) throw Error("winsfrac must be in [0, 0.5)");
  if (beta == 0.0) return {{-kInf, kInf}, std::move(values)};
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_type7(sorted, beta);
  const double hi = quantile_type7(sorted, 1.0 - beta);
  for (double& v : values) v = std::min(hi, std::max(lo, v));
  return {{lo, hi}, std::move(values)};
}

enum class TermKind { Rule, Linear, Dummy };

inline const char* to_string(TermKind k) {
  switch (k) {
    case TermKind::Rule: return "rule";
    case TermKind::Linear: return "linear";
    case TermKind::Dummy: return "dummy";
  }
  return "?";
}

/// One base-learner column: a 0/1 rule, a winsorized+scaled linear term or a
/// factor dummy. `values` holds scale * raw basis; metadata keeps the raw
/// training sd and (for rules) the support.
struct DesignColumn {
  TermKind kind = TermKind::Rule;
  std::string name;

  Rule rule;             // TermKind::Rule
  LinearTermSpec linear; // TermKind::Linear
  std::string dummy_variable;
  std::size_t dummy_column = 0;
  std::int32_t dummy_level = 0;  // TermKind::Dummy

  std::vector<double> values;
  double scale = 1.0;
  double sd_raw = 0.0;    // sample sd of the raw basis on the training data
  double support = 0.0;   // rules/dummies: mean of the raw 0/1 basis

  // Raw basis value on an aligned dataset row (before any scaling).
  double raw_basis(const Dataset& data, std::size_t row) const {
    switch (kind) {
      case TermKind::Rule:
        return rule.evaluate(data, row) ? 1.0 : 0.0;
      case TermKind::Linear:
        return linear.clamp(data.numeric_value(linear.column, row));
      case TermKind::Dummy:
        return data.level_index(dummy_column, row) == dummy_level ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

struct DroppedColumn {
  std::string name;
  std::string reason;
};

struct DesignMatrix {
  std::vector<DesignColumn> columns;
  std::vector<DroppedColumn> dropped;
  std::size_t n_rows = 0;
};

/// Spec'd rule-evaluation entry point (0/1 per row).
inline int evaluate_rule(const Rule& rule, const Dataset& data,
                         std::size_t row) {
  rule.validate();
  return rule.evaluate(data, row) ? 1 : 0;
}

/// Builds the base-learner design: rule columns (type != linear), winsorized
/// linear terms for continuous/ordered predictors plus (q-1) dummies per
/// unordered factor (type != rules). normalize rescales linear terms to the
/// 0.4 sd of a typical rule; standardize rescales every column to unit
/// variance. Constant columns are dropped with a warning record.
inline DesignMatrix build_design_matrix(const Dataset& data,
                                        const std::vector<Rule>& rules,
                                        LearnerType type, double winsfrac,
                                        bool normalize, bool standardize) {
  const std::size_t n = data.n_rows();
  if (n < 2) throw Error("design matrix needs at least 2 rows");

  DesignMatrix dm;
  dm.n_rows = n;

  auto keep_or_drop = [&](DesignColumn&& col) {
    if (col.sd_raw <= 0.0) {
      dm.dropped.push_back({col.name, "constant column"});
      return;
    }
    dm.columns.push_back(std::move(col));
  };

  if (type != LearnerType::Linear) {
    for (const Rule& r : rules) {
      r.validate();
      DesignColumn col;
      col.kind = TermKind::Rule;
      col.name = "rule" + std::to_string(r.sequence);
      col.rule = r;
      col.values.resize(n);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        col.values[i] = r.evaluate(data, i) ? 1.0 : 0.0;
        s += col.values[i];
      }
      col.support = s / static_cast<double>(n);
      col.sd_raw = sample_sd(col.values);
      keep_or_drop(std::move(col));
    }
  }

  if (type != LearnerType::Rules) {
    for (std::size_t j : data.predictor_indices()) {
      const ColumnSchema& sc = data.schema[j];
      if (sc.kind == ColumnKind::UnorderedCategorical) {
        // (q-1) dummies, first level as reference.
        for (std::size_t lv = 1; lv < sc.levels.size(); ++lv) {
          DesignColumn col;
          col.kind = TermKind::Dummy;
          col.name = sc.name + sc.levels[lv];
          col.dummy_variable = sc.name;
          col.dummy_column = j;
          col.dummy_level = static_cast<std::int32_t>(lv);
          col.values.resize(n);
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            col.values[i] =
                data.level_index(j, i) == col.dummy_level ? 1.0 : 0.0;
            s += col.values[i];
          }
          col.support = s / static_cast<double>(n);
          col.sd_raw = sample_sd(col.values);
          keep_or_drop(std::move(col));
        }
        continue;
      }
      // Continuous and ordered-categorical predictors enter as linear terms
      // (ordered ones through their 1..q level indices).
      std::vector<double> raw(n);
      for (std::size_t i = 0; i < n; ++i) raw[i] = data.numeric_value(j, i);
      auto [bounds, clamped] = winsorize(std::move(raw), winsfrac);
      DesignColumn col;
      col.kind = TermKind::Linear;
      col.name = sc.name;
      col.linear.variable = sc.name;
      col.linear.column = j;
      col.linear.lower = bounds.first;
      col.linear.upper = bounds.second;
      col.sd_raw = sample_sd(clamped);
      if (col.sd_raw <= 0.0) {
        dm.dropped.push_back({col.name, "constant column"});
        continue;
      }
      col.scale = normalize ? 0.4 / col.sd_raw : 1.0;
      col.linear.scale = col.scale;
      col.values.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        col.values[i] = col.scale * clamped[i];
      dm.columns.push_back(std::move(col));
    }
  }

  if (standardize) {
    for (auto it = dm.columns.begin(); it != dm.columns.end();) {
      const double sd = sample_sd(it->values);
      if (sd <= 0.0) {
        dm.dropped.push_back({it->name, "constant column"});
        it = dm.columns.erase(it);
        continue;
      }
      for (double& v : it->values) v /= sd;
      it->scale /= sd;
      if (it->kind == TermKind::Linear) it->linear.scale = it->scale;
      ++it;
    }
  }
  return dm;
}

}  // namespace rulepress
