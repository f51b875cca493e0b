#pragma once

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "rulepress/dataset.hpp"
#include "rulepress/rng.hpp"

namespace rulepress {

enum class TreeMode { Cart, Unbiased };

struct SplitSpec {
  std::size_t column = 0;
  bool level_split = false;               // unordered-categorical split
  double cut = 0.0;                       // x <= cut goes left
  std::vector<std::int32_t> left_levels;  // sorted level indices going left
};

struct TreeNode {
  int id = 0;
  int depth = 0;
  double prediction = 0.0;  // weighted mean of the training response here
  std::size_t n_node = 0;
  double weight_node = 0.0;
  std::optional<SplitSpec> split;
  std::unique_ptr<TreeNode> left, right;

  bool is_leaf() const { return !split.has_value(); }
};

struct TreeConfig {
  int maxdepth = 3;                   // kUnlimited for unrestricted depth
  int mtry = kAllVariables;           // candidate variables per split
  TreeMode mode = TreeMode::Unbiased;
  double alpha = 0.05;                // unbiased-mode stopping level
  int minsplit = 20;
  int minbucket = 7;
  bool ordinal_as_continuous = true;

  static constexpr int kUnlimited = std::numeric_limits<int>::max();
  static constexpr int kAllVariables = std::numeric_limits<int>::max();

  void validate() const {
    if (maxdepth < 1) throw Error("maxdepth must be >= 1");
    if (mtry < 1) throw Error("mtry must be >= 1");
    if (minbucket < 1) throw Error("minbucket must be >= 1");
    if (minsplit < 2 * minbucket)
      throw Error("minsplit must be >= 2*minbucket");
    if (!(alpha > 0.0) || alpha > 1.0) throw Error("alpha must be in (0, 1]");
  }
};

namespace detail {

struct CutResult {
  double gain = 0.0;  // weighted SSE reduction; <= 0 means no admissible cut
  double cut = 0.0;
  std::vector<std::int32_t> left_levels;
};

// Best threshold cut for a numeric candidate: sort by value, scan boundaries
// between distinct values. y is pre-centered at the node mean so a constant
// response yields exactly zero gain.
inline CutResult best_numeric_cut(const std::vector<double>& vals,
                                  const std::vector<double>& yc,
                                  const std::vector<double>& w,
                                  int minbucket) {
  const std::size_t n = vals.size();
  std::vector<std::size_t> ord(n);
  for (std::size_t i = 0; i < n; ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    return vals[a] < vals[b];
  });

  double sw_tot = 0.0, swy_tot = 0.0, swy2_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw_tot += w[i];
    swy_tot += w[i] * yc[i];
    swy2_tot += w[i] * yc[i] * yc[i];
  }
  const double sse_tot =
      sw_tot > 0.0 ? swy2_tot - swy_tot * swy_tot / sw_tot : 0.0;

  CutResult best;
  double sw = 0.0, swy = 0.0, swy2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t a = ord[i];
    sw += w[a];
    swy += w[a] * yc[a];
    swy2 += w[a] * yc[a] * yc[a];
    if (vals[ord[i + 1]] == vals[a]) continue;  // ties stay together
    const std::size_t n_left = i + 1;
    if (n_left < static_cast<std::size_t>(minbucket) ||
        n - n_left < static_cast<std::size_t>(minbucket))
      continue;
    const double swr = sw_tot - sw, swyr = swy_tot - swy,
                 swy2r = swy2_tot - swy2;
    const double sse_l = sw > 0.0 ? swy2 - swy * swy / sw : 0.0;
    const double sse_r = swr > 0.0 ? swy2r - swyr * swyr / swr : 0.0;
    const double gain = sse_tot - sse_l - sse_r;
    if (gain > best.gain) {
      best.gain = gain;
      best.cut = vals[a];  // largest observed value in the left group
    }
  }
  return best;
}

// Best binary partition of an unordered factor: order observed levels by
// weighted mean response, scan contiguous prefixes (exact for squared error).
inline CutResult best_level_cut(const std::vector<std::int32_t>& lev,
                                const std::vector<double>& yc,
                                const std::vector<double>& w,
                                std::size_t n_levels, int minbucket) {
  struct Group {
    std::int32_t level;
    double sw = 0.0, swy = 0.0, swy2 = 0.0;
    std::size_t count = 0;
  };
  std::vector<Group> groups(n_levels);
  for (std::size_t g = 0; g < n_levels; ++g)
    groups[g].level = static_cast<std::int32_t>(g);
  for (std::size_t i = 0; i < lev.size(); ++i) {
    Group& g = groups[static_cast<std::size_t>(lev[i])];
    g.sw += w[i];
    g.swy += w[i] * yc[i];
    g.swy2 += w[i] * yc[i] * yc[i];
    g.count += 1;
  }
  groups.erase(std::remove_if(groups.begin(), groups.end(),
                              [](const Group& g) { return g.count == 0; }),
               groups.end());
  if (groups.size() < 2) return {};
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) {
                     const double ma = a.sw > 0 ? a.swy / a.sw : 0.0;
                     const double mb = b.sw > 0 ? b.swy / b.sw : 0.0;
                     return ma < mb;
                   });

  double sw_tot = 0.0, swy_tot = 0.0, swy2_tot = 0.0;
  std::size_t n_tot = 0;
  for (const Group& g : groups) {
    sw_tot += g.sw;
    swy_tot += g.swy;
    swy2_tot += g.swy2;
    n_tot += g.count;
  }
  const double sse_tot =
      sw_tot > 0.0 ? swy2_tot - swy_tot * swy_tot / sw_tot : 0.0;

  CutResult best;
  double sw = 0.0, swy = 0.0, swy2 = 0.0;
  std::size_t n_left = 0;
  for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
    sw += groups[g].sw;
    swy += groups[g].swy;
    swy2 += groups[g].swy2;
    n_left += groups[g].count;
    if (n_left < static_cast<std::size_t>(minbucket) ||
        n_tot - n_left < static_cast<std::size_t>(minbucket))
      continue;
    const double swr = sw_tot - sw, swyr = swy_tot - swy,
                 swy2r = swy2_tot - swy2;
    const double sse_l = sw > 0.0 ? swy2 - swy * swy / sw : 0.0;
    const double sse_r = swr > 0.0 ? swy2r - swyr * swyr / swr : 0.0;
    const double gain = sse_tot - sse_l - sse_r;
    if (gain > best.gain) {
      best.gain = gain;
      best.left_levels.clear();
      for (std::size_t h = 0; h <= g; ++h)
        best.left_levels.push_back(groups[h].level);
      std::sort(best.left_levels.begin(), best.left_levels.end());
    }
  }
  return best;
}

// p-value of the Pearson-correlation t statistic between a numeric candidate
// and the node response (weighted moments, unweighted degrees of freedom).
inline double correlation_pvalue(const std::vector<double>& x,
                                 const std::vector<double>& y,
                                 const std::vector<double>& w) {
  const std::size_t n = x.size();
  if (n < 3) return 1.0;
  double sw = 0.0;
  for (double wi : w) sw += wi;
  if (sw <= 0.0) return 1.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += w[i] * x[i];
    my += w[i] * y[i];
  }
  mx /= sw;
  my /= sw;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += w[i] * dx * dx;
    syy += w[i] * dy * dy;
    sxy += w[i] * dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 1.0;
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  const double t = std::abs(r) * std::sqrt(df / (1.0 - r2));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

// One-way ANOVA F-test p-value for an unordered factor candidate.
inline double anova_pvalue(const std::vector<std::int32_t>& lev,
                           const std::vector<double>& y,
                           const std::vector<double>& w,
                           std::size_t n_levels) {
  const std::size_t n = lev.size();
  std::vector<double> gw(n_levels, 0.0), gwy(n_levels, 0.0);
  std::vector<std::size_t> gc(n_levels, 0);
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(lev[i]);
    gw[g] += w[i];
    gwy[g] += w[i] * y[i];
    gc[g] += 1;
    sw += w[i];
    swy += w[i] * y[i];
  }
  if (sw <= 0.0) return 1.0;
  const double mu = swy / sw;
  std::size_t observed = 0;
  double ssb = 0.0;
  for (std::size_t g = 0; g < n_levels; ++g) {
    if (gc[g] == 0 || gw[g] <= 0.0) continue;
    ++observed;
    const double mg = gwy[g] / gw[g];
    ssb += gw[g] * (mg - mu) * (mg - mu);
  }
  if (observed < 2) return 1.0;
  double ssw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(lev[i]);
    const double mg = gwy[g] / gw[g];
    ssw += w[i] * (y[i] - mg) * (y[i] - mg);
  }
  const double df1 = static_cast<double>(observed - 1);
  const double df2 = static_cast<double>(n) - static_cast<double>(observed);
  if (df2 <= 0.0) return 1.0;
  if (ssw <= 0.0) return ssb > 0.0 ? 0.0 : 1.0;
  const double f = (ssb / df1) / (ssw / df2);
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace detail

/// Picks the split for one node, or nothing if the stopping criterion fires
/// or no cut leaves both children with at least minbucket rows.
///
/// cart: the (variable, cut) pair maximizing weighted SSE reduction.
/// unbiased: smallest Bonferroni-adjusted association p-value picks the
/// variable first; the SSE-best cut within it follows. Ties break toward the
/// lowest column index.
inline std::optional<SplitSpec> select_split(
    const Dataset& data, const std::vector<std::size_t>& rows,
    const std::vector<std::size_t>& positions,
    const std::vector<std::size_t>& candidate_columns,
    const std::vector<double>& y, const std::vector<double>& w,
    const TreeConfig& config, Rng& rng) {
  if (positions.size() < static_cast<std::size_t>(config.minsplit))
    return std::nullopt;

  std::vector<std::size_t> candidates = candidate_columns;
  if (config.mtry != TreeConfig::kAllVariables &&
      static_cast<std::size_t>(config.mtry) < candidates.size()) {
    for (int d = 0; d < config.mtry; ++d) {
      const std::size_t pick =
          d + static_cast<std::size_t>(rng.below(candidates.size() - d));
      std::swap(candidates[d], candidates[pick]);
    }
    candidates.resize(static_cast<std::size_t>(config.mtry));
    std::sort(candidates.begin(), candidates.end());
  }
  if (candidates.empty()) return std::nullopt;

  const std::size_t m = positions.size();
  std::vector<double> yn(m), wn(m);
  for (std::size_t i = 0; i < m; ++i) {
    yn[i] = y[positions[i]];
    wn[i] = w[positions[i]];
  }
  // Center the response at the node mean for numerically exact zero gains.
  const double mu = weighted_mean(yn, wn);
  std::vector<double> yc(m);
  for (std::size_t i = 0; i < m; ++i) yc[i] = yn[i] - mu;

  auto numeric_values = [&](std::size_t col) {
    std::vector<double> vals(m);
    for (std::size_t i = 0; i < m; ++i)
      vals[i] = data.numeric_value(col, rows[positions[i]]);
    return vals;
  };
  auto level_values = [&](std::size_t col) {
    std::vector<std::int32_t> lev(m);
    for (std::size_t i = 0; i < m; ++i)
      lev[i] = data.level_index(col, rows[positions[i]]);
    return lev;
  };

  auto cut_for = [&](std::size_t col) -> detail::CutResult {
    const auto& sc = data.schema[col];
    if (sc.kind == ColumnKind::UnorderedCategorical)
      return detail::best_level_cut(level_values(col), yc, wn,
                                    sc.levels.size(), config.minbucket);
    return detail::best_numeric_cut(numeric_values(col), yc, wn,
                                    config.minbucket);
  };

  std::size_t chosen = 0;
  bool have_chosen = false;
  detail::CutResult chosen_cut;

  if (config.mode == TreeMode::Cart) {
    double best_gain = 0.0;
    for (std::size_t col : candidates) {
      detail::CutResult c = cut_for(col);
      if (c.gain > best_gain) {
        best_gain = c.gain;
        chosen = col;
        chosen_cut = std::move(c);
        have_chosen = true;
      }
    }
    if (!have_chosen) return std::nullopt;
  } else {
    double best_p = std::numeric_limits<double>::infinity();
    for (std::size_t col : candidates) {
      const auto& sc = data.schema[col];
      double p;
      if (sc.kind == ColumnKind::UnorderedCategorical ||
          (sc.kind == ColumnKind::OrderedCategorical &&
           !config.ordinal_as_continuous)) {
        p = detail::anova_pvalue(level_values(col), yc, wn, sc.levels.size());
      } else {
        p = detail::correlation_pvalue(numeric_values(col), yc, wn);
      }
      if (p < best_p) {
        best_p = p;
        chosen = col;
        have_chosen = true;
      }
    }
    if (!have_chosen) return std::nullopt;
    const double p_adj =
        std::min(1.0, best_p * static_cast<double>(candidates.size()));
    if (p_adj > config.alpha) return std::nullopt;
    chosen_cut = cut_for(chosen);
    if (chosen_cut.gain <= 0.0) return std::nullopt;
  }

  SplitSpec spec;
  spec.column = chosen;
  if (data.schema[chosen].kind == ColumnKind::UnorderedCategorical) {
    spec.level_split = true;
    spec.left_levels = std::move(chosen_cut.left_levels);
  } else {
    spec.cut = chosen_cut.cut;
  }
  return spec;
}

namespace detail {

inline bool goes_left(const Dataset& data, std::size_t row,
                      const SplitSpec& split) {
  if (split.level_split) {
    const std::int32_t lv = data.level_index(split.column, row);
    return std::binary_search(split.left_levels.begin(),
                              split.left_levels.end(), lv);
  }
  return data.numeric_value(split.column, row) <= split.cut;
}

inline void grow_node(TreeNode& node, const Dataset& data,
                      const std::vector<std::size_t>& rows,
                      const std::vector<std::size_t>& positions,
                      const std::vector<std::size_t>& candidate_columns,
                      const std::vector<double>& y,
                      const std::vector<double>& w, const TreeConfig& config,
                      Rng& rng, int& next_id) {
  double sw = 0.0, swy = 0.0;
  for (std::size_t p : positions) {
    sw += w[p];
    swy += w[p] * y[p];
  }
  node.prediction = sw > 0.0 ? swy / sw : 0.0;
  node.n_node = positions.size();
  node.weight_node = sw;

  if (config.maxdepth != TreeConfig::kUnlimited &&
      node.depth >= config.maxdepth)
    return;
  auto split = select_split(data, rows, positions, candidate_columns, y, w,
                            config, rng);
  if (!split) return;
  node.split = std::move(split);

  std::vector<std::size_t> left_pos, right_pos;
  for (std::size_t p : positions)
    (goes_left(data, rows[p], *node.split) ? left_pos : right_pos).push_back(p);
  // select_split guarantees admissibility; a degenerate partition would be a bug.
  if (left_pos.empty() || right_pos.empty()) {
    node.split.reset();
    return;
  }

  node.left = std::make_unique<TreeNode>();
  node.left->id = next_id++;
  node.left->depth = node.depth + 1;
  node.right = std::make_unique<TreeNode>();
  node.right->id = next_id++;
  node.right->depth = node.depth + 1;
  grow_node(*node.left, data, rows, left_pos, candidate_columns, y, w, config,
            rng, next_id);
  grow_node(*node.right, data, rows, right_pos, candidate_columns, y, w,
            config, rng, next_id);
}

}  // namespace detail

/// Grows a depth-limited regression tree on the rows of `data` listed in
/// `rows`; y and w run parallel to `rows`. A constant response yields a
/// leaf-only tree.
inline std::unique_ptr<TreeNode> grow_tree(const Dataset& data,
                                           const std::vector<std::size_t>& rows,
                                           const std::vector<double>& y,
                                           const std::vector<double>& w,
                                           const TreeConfig& config, Rng& rng) {
  config.validate();
  if (y.size() != rows.size() || w.size() != rows.size())
    throw Error("grow_tree: y/weights length must match the row view");
  if (rows.empty()) throw Error("grow_tree: empty row view");
  for (double v : y)
    if (!std::isfinite(v)) throw Error("grow_tree: non-finite response value");

  const std::vector<std::size_t> candidates = data.predictor_indices();
  std::vector<std::size_t> positions(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) positions[i] = i;

  auto root = std::make_unique<TreeNode>();
  root->id = 1;
  root->depth = 0;
  int next_id = 2;
  detail::grow_node(*root, data, rows, positions, candidates, y, w, config,
                    rng, next_id);
  return root;
}

/// Prediction of the unique leaf whose path conditions the row satisfies.
inline double predict_tree(const TreeNode& tree, const Dataset& data,
                           std::size_t row) {
  const TreeNode* node = &tree;
  while (!node->is_leaf())
    node = detail::goes_left(data, row, *node->split) ? node->left.get()
                                                      : node->right.get();
  return node->prediction;
}

}  // namespace rulepress
