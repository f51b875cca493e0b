#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rulepress/ensemble.hpp"
#include "rulepress/rng.hpp"

namespace rulepress {

struct LearnerImportance {
  std::string name;
  std::string description;
  double coefficient = 0.0;  // slope on the raw basis
  double sd = 0.0;           // sd used for this learner
  double importance = 0.0;
};

struct VariableImportance {
  std::string variable;
  double importance = 0.0;
};

struct ImportanceReport {
  std::vector<LearnerImportance> learners;
  std::vector<VariableImportance> variables;
  bool standardized = false;
  std::size_t n_rows_used = 0;
};

using RowPredicate = std::function<bool(const Dataset&, std::size_t)>;

namespace detail {

inline double sample_sd_at(const std::vector<double>& v,
                           const std::vector<std::size_t>& rows) {
  if (rows.size() < 2) return 0.0;
  double m = 0.0;
  for (std::size_t i : rows) m += v[i];
  m /= static_cast<double>(rows.size());
  double ss = 0.0;
  for (std::size_t i : rows) ss += (v[i] - m) * (v[i] - m);
  return std::sqrt(ss / static_cast<double>(rows.size() - 1));
}

inline double round_to(double v, std::optional<int> digits) {
  if (!digits) return v;
  const double f = std::pow(10.0, *digits);
  return std::round(v * f) / f;
}

}  // namespace detail

/// Base-learner and input-variable importances. A rule's importance is its
/// |coefficient| times sqrt(s(1-s)); a linear term's (and a factor dummy's)
/// its |coefficient| times the sample sd of its basis. Variable importances
/// distribute each rule's importance equally over its condition occurrences.
/// With a subregion, supports and sds are computed over the matching rows
/// only; with standardize, everything divides by the (localized) sd of y.
inline ImportanceReport importance(const EnsembleModel& model,
                                   const Dataset& data, bool standardize = false,
                                   const RowPredicate& subregion = nullptr,
                                   std::optional<int> round_digits = {}) {
  if (standardize && model.family != Family::Gaussian)
    throw Error("standardized importances require the gaussian family");
  const Dataset aligned = align_for_model(model, data,
                                          /*require_response=*/standardize);
  const std::size_t n = aligned.n_rows();
  if (n == 0) throw Error("importance: empty data");

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i)
    if (!subregion || subregion(aligned, i)) rows.push_back(i);
  if (subregion && rows.size() < 2)
    throw Error("subregion matches fewer than 2 rows");

  double sd_y = 1.0;
  if (standardize) {
    std::vector<double> y = aligned.response_values();
    sd_y = detail::sample_sd_at(y, rows);
    if (sd_y <= 0.0) throw Error("response is constant; cannot standardize");
  }

  ImportanceReport report;
  report.standardized = standardize;
  report.n_rows_used = rows.size();
  std::map<std::string, double> var_imp;

  for (const ModelTerm& t : model.terms) {
    if (t.coefficient == 0.0) continue;
    std::vector<double> basis(n);
    for (std::size_t i : rows) basis[i] = t.raw_basis(aligned, i);

    double sd_used = 0.0;
    if (t.kind == TermKind::Rule) {
      double s = 0.0;
      for (std::size_t i : rows) s += basis[i];
      s /= static_cast<double>(rows.size());
      sd_used = std::sqrt(s * (1.0 - s));
    } else {
      sd_used = detail::sample_sd_at(basis, rows);
    }

    const double coef = t.effective_coefficient();
    const double imp = std::abs(coef) * sd_used / sd_y;

    LearnerImportance li;
    li.name = t.name;
    li.description = describe_term(t, model.schema);
    li.coefficient = detail::round_to(coef, round_digits);
    li.sd = detail::round_to(sd_used, round_digits);
    li.importance = detail::round_to(imp, round_digits);
    report.learners.push_back(std::move(li));

    switch (t.kind) {
      case TermKind::Rule: {
        const double c_k = static_cast<double>(t.rule.conditions.size());
        for (const Condition& c : t.rule.conditions)
          var_imp[c.variable] += imp / c_k;
        break;
      }
      case TermKind::Linear:
        var_imp[t.linear.variable] += imp;
        break;
      case TermKind::Dummy:
        var_imp[t.dummy_variable] += imp;
        break;
    }
  }

  for (auto& [variable, imp] : var_imp)
    report.variables.push_back({variable, detail::round_to(imp, round_digits)});
  std::stable_sort(report.learners.begin(), report.learners.end(),
                   [](const LearnerImportance& a, const LearnerImportance& b) {
                     return a.importance > b.importance;
                   });
  std::stable_sort(report.variables.begin(), report.variables.end(),
                   [](const VariableImportance& a, const VariableImportance& b) {
                     return a.importance > b.importance;
                   });
  return report;
}

struct PDSurface {
  std::vector<std::string> variables;  // 1 or 2
  // Numeric grid per variable; for unordered factors the values are 0-based
  // level indices with grid_is_level set.
  std::vector<std::vector<double>> grid;
  std::vector<bool> grid_is_level;
  std::vector<double> values;  // row-major over grid points
  std::size_t n_rows_used = 0;
};

namespace detail {

inline std::vector<double> default_pd_grid(const Dataset& data,
                                           std::size_t col, std::size_t cap) {
  const ColumnSchema& sc = data.schema[col];
  if (sc.kind == ColumnKind::UnorderedCategorical) {
    std::vector<bool> seen(sc.levels.size(), false);
    for (std::size_t i = 0; i < data.n_rows(); ++i)
      seen[static_cast<std::size_t>(data.level_index(col, i))] = true;
    std::vector<double> grid;
    for (std::size_t lv = 0; lv < seen.size(); ++lv)
      if (seen[lv]) grid.push_back(static_cast<double>(lv));
    return grid;
  }
  std::vector<double> vals(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    vals[i] = data.numeric_value(col, i);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  if (vals.size() <= cap) return vals;
  std::vector<double> grid;
  for (std::size_t g = 0; g < cap; ++g) {
    const double p = static_cast<double>(g) / static_cast<double>(cap - 1);
    grid.push_back(quantile_type7(vals, p));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

inline void set_column_constant(Dataset& data, std::size_t col, double value,
                                bool is_level) {
  if (is_level) {
    const auto lv = static_cast<std::int32_t>(value);
    std::fill(data.columns[col].cat.begin(), data.columns[col].cat.end(), lv);
  } else if (data.schema[col].kind == ColumnKind::OrderedCategorical) {
    const auto lv = static_cast<std::int32_t>(std::lround(value)) - 1;
    std::fill(data.columns[col].cat.begin(), data.columns[col].cat.end(), lv);
  } else {
    std::fill(data.columns[col].num.begin(), data.columns[col].num.end(), value);
  }
}

}  // namespace detail

/// Link-scale partial dependence of the model on one or two variables: at
/// every grid point the variable columns are overwritten with that point and
/// predictions averaged over all training rows. Default grids take the unique
/// observed values, thinned to 40 quantile-spaced points for high-cardinality
/// continuous variables.
inline PDSurface partial_dependence(
    const EnsembleModel& model, const Dataset& data,
    const std::vector<std::string>& variables,
    const std::vector<std::vector<double>>& explicit_grid = {}) {
  if (variables.empty() || variables.size() > 2)
    throw Error("partial dependence takes 1 or 2 variables");
  Dataset aligned = align_for_model(model, data);
  const std::size_t n = aligned.n_rows();

  PDSurface surf;
  surf.variables = variables;
  surf.n_rows_used = n;
  std::vector<std::size_t> cols;
  for (std::size_t v = 0; v < variables.size(); ++v) {
    const std::size_t col = aligned.column_index(variables[v]);
    if (variables[v] == model.response)
      throw Error("partial dependence variable cannot be the response");
    cols.push_back(col);
    const bool is_level =
        aligned.schema[col].kind == ColumnKind::UnorderedCategorical;
    surf.grid_is_level.push_back(is_level);
    if (v < explicit_grid.size() && !explicit_grid[v].empty()) {
      if (is_level) {
        for (double g : explicit_grid[v])
          if (g < 0.0 ||
              g >= static_cast<double>(aligned.schema[col].levels.size()))
            throw Error("grid level index out of range for '" + variables[v] + "'");
      } else if (aligned.schema[col].kind == ColumnKind::OrderedCategorical) {
        // ordered factors live on 1-based integral level indices
        for (double g : explicit_grid[v])
          if (g != std::floor(g) || g < 1.0 ||
              g > static_cast<double>(aligned.schema[col].levels.size()))
            throw Error("grid value " + format_double(g) +
                        " is not a level index of '" + variables[v] + "'");
      }
      surf.grid.push_back(explicit_grid[v]);
    } else {
      surf.grid.push_back(detail::default_pd_grid(aligned, col, 40));
    }
  }

  const std::size_t g1 = surf.grid[0].size();
  const std::size_t g2 = surf.grid.size() == 2 ? surf.grid[1].size() : 1;
  surf.values.resize(g1 * g2);

  Dataset work = aligned;
  for (std::size_t a = 0; a < g1; ++a) {
    detail::set_column_constant(work, cols[0], surf.grid[0][a],
                                surf.grid_is_level[0]);
    for (std::size_t b = 0; b < g2; ++b) {
      if (surf.grid.size() == 2)
        detail::set_column_constant(work, cols[1], surf.grid[1][b],
                                    surf.grid_is_level[1]);
      const std::vector<double> eta = predict_link_aligned(model, work);
      double m = 0.0;
      for (double e : eta) m += e;
      surf.values[a * g2 + b] = m / static_cast<double>(n);
    }
  }
  return surf;
}

/// H^2 interaction statistic for one variable: the fraction of (centered)
/// prediction variance not captured by the additive split F_j + F_{not j},
/// both partial dependence functions estimated over the data rows.
inline double h_statistic(const EnsembleModel& model, const Dataset& data,
                          const std::string& variable) {
  Dataset aligned = align_for_model(model, data);
  const std::size_t n = aligned.n_rows();
  const std::size_t col = aligned.column_index(variable);
  if (model.n_nonzero_terms() == 0)
    throw Error("model has no non-intercept terms");

  const std::vector<double> f = predict_link_aligned(model, aligned);
  double f_mean = 0.0;
  for (double v : f) f_mean += v;
  f_mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : f) denom += (v - f_mean) * (v - f_mean);
  if (denom <= 0.0) throw Error("variance of predictions is zero");

  // Group rows by their value of the variable; one prediction pass per
  // distinct value v yields both F_j(v) (column mean) and the per-row
  // contributions to F_{not j} (weighted row sums).
  const bool is_level =
      aligned.schema[col].kind == ColumnKind::UnorderedCategorical;
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = is_level
                         ? static_cast<double>(aligned.level_index(col, i))
                         : aligned.numeric_value(col, i);
    groups[v].push_back(i);
  }

  std::vector<double> f_j(n, 0.0);      // F_j evaluated at each row's value
  std::vector<double> f_notj(n, 0.0);   // F_{not j} at each row
  Dataset work = aligned;
  for (const auto& [value, members] : groups) {
    detail::set_column_constant(work, col, value, is_level);
    const std::vector<double> pred = predict_link_aligned(model, work);
    double col_mean = 0.0;
    for (double p : pred) col_mean += p;
    col_mean /= static_cast<double>(n);
    for (std::size_t i : members) f_j[i] = col_mean;
    const double share = static_cast<double>(members.size());
    for (std::size_t i = 0; i < n; ++i) f_notj[i] += share * pred[i];
  }
  for (double& v : f_notj) v /= static_cast<double>(n);

  double mj = 0.0, mnj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mj += f_j[i];
    mnj += f_notj[i];
  }
  mj /= static_cast<double>(n);
  mnj /= static_cast<double>(n);

  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (f[i] - f_mean) - (f_j[i] - mj) - (f_notj[i] - mnj);
    num += d * d;
  }
  return std::max(0.0, num / denom);
}

/// The model's additive part on the link scale: intercept, linear terms,
/// dummies and single-condition rules.
inline std::vector<double> additive_part(const EnsembleModel& model,
                                         const Dataset& aligned) {
  const std::size_t n = aligned.n_rows();
  std::vector<double> out(n, model.intercept);
  for (const ModelTerm& t : model.terms) {
    if (t.coefficient == 0.0) continue;
    if (t.kind == TermKind::Rule && t.rule.conditions.size() > 1) continue;
    const double c = t.coefficient * t.scale;
    for (std::size_t i = 0; i < n; ++i) out[i] += c * t.raw_basis(aligned, i);
  }
  return out;
}

/// Parametric-bootstrap null-interaction datasets: predictor rows resampled
/// with replacement, responses rebuilt as F_additive(x*) plus a permutation
/// of the additive-fit residuals, so any interaction signal is destroyed.
inline std::vector<Dataset> bs_null_datasets(const EnsembleModel& model,
                                             const Dataset& data, int nsamp,
                                             std::uint64_t seed) {
  if (nsamp < 1) throw Error("nsamp must be >= 1");
  if (model.family != Family::Gaussian)
    throw Error("null-interaction datasets require the gaussian family "
                "(the rebuilt response is continuous)");
  const Dataset aligned = align_for_model(model, data, /*require_response=*/true);
  const std::size_t n = aligned.n_rows();
  const std::vector<double> y = aligned.response_values();
  const std::vector<double> fa = additive_part(model, aligned);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - fa[i];
  const std::size_t response_col = aligned.response_index();

  std::vector<Dataset> out;
  out.reserve(static_cast<std::size_t>(nsamp));
  for (int s = 0; s < nsamp; ++s) {
    Rng rng = substream(seed, stream::kNull, static_cast<std::uint64_t>(s + 1));
    std::vector<std::size_t> boot(n);
    for (std::size_t i = 0; i < n; ++i)
      boot[i] = static_cast<std::size_t>(rng.below(n));
    Dataset ds = aligned.subset(boot);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    const std::vector<double> fa_boot = additive_part(model, ds);
    auto& resp = ds.columns[response_col].num;
    for (std::size_t i = 0; i < n; ++i)
      resp[i] = fa_boot[i] + resid[perm[i]];
    out.push_back(std::move(ds));
  }
  return out;
}

struct HRow {
  std::string variable;
  double observed = 0.0;
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;
  std::string flag;
};

struct HReport {
  std::vector<HRow> rows;
};

/// Observed H^2 per variable next to the .05/.50/.95 quantiles of the same
/// statistic under the supplied null-interaction models.
inline HReport interact_test(const EnsembleModel& model, const Dataset& data,
                             const std::vector<EnsembleModel>& null_models,
                             const std::vector<std::string>& variables) {
  if (null_models.empty())
    throw Error("interact_test needs at least one null model for quantiles");
  HReport report;
  for (const std::string& var : variables) {
    HRow row;
    row.variable = var;
    row.observed = h_statistic(model, data, var);
    std::vector<double> null_values;
    null_values.reserve(null_models.size());
    for (const EnsembleModel& nm : null_models) {
      // A null refit may select the intercept-only model; with constant
      // predictions there is trivially no interaction.
      if (nm.n_nonzero_terms() == 0) {
        null_values.push_back(0.0);
        continue;
      }
      try {
        null_values.push_back(h_statistic(nm, data, var));
      } catch (const Error&) {
        null_values.push_back(0.0);
      }
    }
    std::sort(null_values.begin(), null_values.end());
    row.q05 = quantile_type7(null_values, 0.05);
    row.q50 = quantile_type7(null_values, 0.50);
    row.q95 = quantile_type7(null_values, 0.95);
    row.flag = row.observed > row.q95 ? "exceeds null" : "not above null";
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace rulepress
