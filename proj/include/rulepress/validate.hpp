#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rulepress/fit.hpp"
#include "rulepress/parallel.hpp"

namespace rulepress {

struct CVMetric {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  bool has_se = false;
};

struct CVReport {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of_row;
  std::vector<double> predictions;  // out-of-fold, response scale
  std::vector<CVMetric> metrics;
};

/// Probability that a random positive outscores a random negative, ties
/// counted one half (midrank formula).
inline double auc(const std::vector<double>& scores,
                  const std::vector<double>& labels) {
  if (scores.size() != labels.size()) throw Error("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) throw Error("auc: labels must be 0/1");
    if (l == 1.0) ++n_pos;
  }
  if (n_pos == 0 || n_pos == n)
    throw Error("auc requires both classes present");

  std::vector<std::size_t> ord(n);
  for (std::size_t i = 0; i < n; ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Midranks over tie groups.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[ord[j + 1]] == scores[ord[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t)
      if (labels[ord[t]] == 1.0) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n - n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

/// Friedman's first synthetic regression benchmark:
/// y = 10 sin(pi x1 x2) + 20 (x3 - .5)^2 + 10 x4 + 5 x5 + N(0, noise_sd^2),
/// predictors uniform on [0,1].
inline Dataset gen_friedman1(std::size_t n, std::size_t p, double noise_sd,
                             Rng& rng) {
  if (p < 5) throw Error("gen_friedman1 requires p >= 5");
  if (n < 1) throw Error("gen_friedman1 requires n >= 1");
  Dataset ds;
  ds.schema.resize(p + 1);
  ds.columns.resize(p + 1);
  for (std::size_t j = 0; j < p; ++j) {
    ds.schema[j].name = "x" + std::to_string(j + 1);
    ds.schema[j].kind = ColumnKind::Continuous;
    ds.columns[j].num.resize(n);
  }
  ds.schema[p].name = "y";
  ds.schema[p].kind = ColumnKind::Continuous;
  ds.columns[p].num.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      ds.columns[j].num[i] = rng.uniform01();
    const double x1 = ds.columns[0].num[i], x2 = ds.columns[1].num[i],
                 x3 = ds.columns[2].num[i], x4 = ds.columns[3].num[i],
                 x5 = ds.columns[4].num[i];
    double y = 10.0 * std::sin(3.14159265358979323846 * x1 * x2) +
               20.0 * (x3 - 0.5) * (x3 - 0.5) + 10.0 * x4 + 5.0 * x5;
    if (noise_sd > 0.0) y += noise_sd * rng.normal();
    ds.columns[p].num[i] = y;
  }
  ds.weights.assign(n, 1.0);
  ds.response = "y";
  ds.validate();
  return ds;
}

/// Full k-fold cross-validation of the entire pipeline: rule generation,
/// design, penalized CV fit and lambda selection are rerun on every training
/// part; held-out predictions are pooled.
inline CVReport cross_validate(const Dataset& data, const FitSpec& spec, int k,
                               std::uint64_t seed) {
  const std::size_t n = data.n_rows();
  Rng fold_rng = substream(seed, stream::kFolds, 0x6f757465ULL);
  const FoldAssignment folds =
      split_folds(data, k, spec.family == Family::Binomial, fold_rng);

  CVReport report;
  report.k = k;
  report.seed = seed;
  report.fold_of_row = folds.fold_of_row;
  report.predictions.assign(n, 0.0);

  std::vector<std::vector<std::size_t>> test_rows(static_cast<std::size_t>(k));
  std::vector<std::vector<double>> test_preds(static_cast<std::size_t>(k));

  parallel_for(static_cast<std::size_t>(k), spec.threads, [&](std::size_t fi) {
    const int f = static_cast<int>(fi) + 1;
    const std::vector<std::size_t> train = folds.rows_not_in_fold(f);
    const std::vector<std::size_t> test = folds.rows_in_fold(f);
    FitSpec fold_spec = spec;
    fold_spec.seed = derive_seed(seed, stream::kCvFit, static_cast<std::uint64_t>(f));
    fold_spec.threads = 1;  // outer folds already parallelize
    const EnsembleModel model = fit(data.subset(train), fold_spec);
    const Dataset test_data = data.subset(test);
    test_rows[fi] = test;
    test_preds[fi] = predict(model, test_data, PredictScale::Response);
  });

  for (std::size_t fi = 0; fi < static_cast<std::size_t>(k); ++fi)
    for (std::size_t t = 0; t < test_rows[fi].size(); ++t)
      report.predictions[test_rows[fi][t]] = test_preds[fi][t];

  const std::vector<double> y = data.response_values();
  const std::vector<double>& w = data.weights;

  auto fold_metric = [&](auto&& loss) {
    std::vector<double> per_fold(static_cast<std::size_t>(k));
    for (int f = 1; f <= k; ++f) {
      double s = 0.0, sw = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (folds.fold_of_row[i] != f) continue;
        s += w[i] * loss(y[i], report.predictions[i]);
        sw += w[i];
      }
      per_fold[static_cast<std::size_t>(f - 1)] = sw > 0.0 ? s / sw : 0.0;
    }
    double m = 0.0;
    for (double v : per_fold) m += v;
    m /= k;
    double ss = 0.0;
    for (double v : per_fold) ss += (v - m) * (v - m);
    const double se = std::sqrt(ss / (k - 1)) / std::sqrt(static_cast<double>(k));
    return std::make_pair(m, se);
  };

  switch (spec.family) {
    case Family::Gaussian: {
      auto [mse, mse_se] = fold_metric(
          [](double yi, double pi) { return (yi - pi) * (yi - pi); });
      auto [mae, mae_se] =
          fold_metric([](double yi, double pi) { return std::abs(yi - pi); });
      report.metrics.push_back({"MSE", mse, mse_se, true});
      report.metrics.push_back({"MAE", mae, mae_se, true});
      break;
    }
    case Family::Binomial: {
      auto [dev, dev_se] = fold_metric([](double yi, double pi) {
        const double p = std::clamp(pi, 1e-10, 1.0 - 1e-10);
        return -2.0 * (yi * std::log(p) + (1.0 - yi) * std::log(1.0 - p));
      });
      auto [mcr, mcr_se] = fold_metric([](double yi, double pi) {
        return (pi > 0.5 ? 1.0 : 0.0) == yi ? 0.0 : 1.0;
      });
      report.metrics.push_back({"deviance", dev, dev_se, true});
      report.metrics.push_back({"misclassification", mcr, mcr_se, true});
      report.metrics.push_back({"AUC", auc(report.predictions, y), 0.0, false});
      break;
    }
    case Family::Poisson: {
      auto [dev, dev_se] = fold_metric([](double yi, double pi) {
        const double mu = std::max(pi, 1e-10);
        double t = -(yi - mu);
        if (yi > 0.0) t += yi * std::log(yi / mu);
        return 2.0 * t;
      });
      report.metrics.push_back({"deviance", dev, dev_se, true});
      break;
    }
  }
  return report;
}

}  // namespace rulepress
