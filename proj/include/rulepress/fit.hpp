#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "rulepress/design.hpp"
#include "rulepress/ensemble.hpp"
#include "rulepress/penreg.hpp"
#include "rulepress/rulegen.hpp"

namespace rulepress {

/// Every user-facing fitting knob, mirroring the CLI flag surface.
struct FitSpec {
  Family family = Family::Gaussian;
  LearnerType type = LearnerType::Both;
  double sampfrac = 0.5;
  bool identity_sampler = false;  // every tree sees all training rows
  MaxDepthSpec maxdepth = MaxDepthSpec::fixed_depth(3);
  double learnrate = 0.01;
  int mtry = TreeConfig::kAllVariables;
  int ntrees = 500;
  double winsfrac = 0.025;
  bool normalize = true;
  bool standardize = false;
  bool ordinal_as_continuous = true;
  int nfolds = 10;
  double alpha_mix = 1.0;  // elastic-net mixing (1 = lasso)
  PenaltyCriterion penalty = PenaltyCriterion::lambda_1se();
  std::vector<double> user_lambdas;
  int nlambda = 100;
  TreeMode tree_mode = TreeMode::Unbiased;
  double tree_alpha = 0.05;
  int minsplit = 20;
  int minbucket = 7;
  bool removeduplicates = true;
  bool removecomplements = true;
  Measure measure = Measure::Deviance;
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = RULEPRESS_THREADS or 1

  void validate() const {
    if (!(sampfrac > 0.0) || sampfrac > 1.0)
      throw Error("sampfrac must be in (0, 1]");
    if (learnrate < 0.0) throw Error("learnrate must be >= 0");
    if (ntrees < 1) throw Error("ntrees must be >= 1");
    if (!(winsfrac >= 0.0) || winsfrac >= 0.5)
      throw Error("winsfrac must be in [0, 0.5)");
    if (nfolds < 2) throw Error("nfolds must be >= 2");
    if (!(alpha_mix >= 0.0) || alpha_mix > 1.0)
      throw Error("alpha-mix must be in [0, 1]");
    if (nlambda < 2) throw Error("nlambda must be >= 2");
    tree_config().validate();
  }

  TreeConfig tree_config() const {
    TreeConfig tc;
    tc.maxdepth = maxdepth.kind == MaxDepthSpec::Kind::Fixed
                      ? maxdepth.fixed
                      : TreeConfig::kUnlimited;  // resolved per tree
    tc.mtry = mtry;
    tc.mode = tree_mode;
    tc.alpha = tree_alpha;
    tc.minsplit = minsplit;
    tc.minbucket = minbucket;
    tc.ordinal_as_continuous = ordinal_as_continuous;
    return tc;
  }

  RuleGenConfig rulegen_config() const {
    RuleGenConfig rg;
    rg.family = family;
    rg.ntrees = ntrees;
    rg.sampfrac = sampfrac;
    rg.identity_sampler = identity_sampler;
    rg.learnrate = learnrate;
    rg.maxdepth = maxdepth;
    rg.tree = tree_config();
    rg.tree.maxdepth = 3;  // placeholder; grow_iteration sets the real value
    rg.removeduplicates = removeduplicates;
    rg.removecomplements = removecomplements;
    rg.threads = threads;
    rg.seed = seed;
    return rg;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["family"] = to_string(family);
    j["type"] = to_string(type);
    j["sampfrac"] = sampfrac;
    j["identity_sampler"] = identity_sampler;
    switch (maxdepth.kind) {
      case MaxDepthSpec::Kind::Fixed:
        j["maxdepth"] = maxdepth.fixed;
        break;
      case MaxDepthSpec::Kind::PerTree:
        j["maxdepth"] = maxdepth.per_tree;
        break;
      case MaxDepthSpec::Kind::Sampled:
        j["maxdepth"] = "sampler";
        j["maxdepth_mean_nodes"] = maxdepth.sampler_mean_nodes;
        break;
    }
    j["learnrate"] = learnrate;
    j["mtry"] = mtry == TreeConfig::kAllVariables ? -1 : mtry;
    j["ntrees"] = ntrees;
    j["winsfrac"] = winsfrac;
    j["normalize"] = normalize;
    j["standardize"] = standardize;
    j["ordinal"] = ordinal_as_continuous;
    j["nfolds"] = nfolds;
    j["alpha_mix"] = alpha_mix;
    j["penalty"] = penalty.describe();
    if (!user_lambdas.empty()) j["lambda"] = user_lambdas;
    j["nlambda"] = nlambda;
    j["tree_mode"] = tree_mode == TreeMode::Cart ? "cart" : "unbiased";
    j["alpha"] = tree_alpha;
    j["minsplit"] = minsplit;
    j["minbucket"] = minbucket;
    j["removeduplicates"] = removeduplicates;
    j["removecomplements"] = removecomplements;
    j["measure"] = to_string(measure);
    j["seed"] = seed;
    return j;
  }

  static FitSpec from_json(const nlohmann::ordered_json& j) {
    FitSpec s;
    s.family = family_from_string(j.at("family").get<std::string>());
    s.type = learner_type_from_string(j.at("type").get<std::string>());
    s.sampfrac = j.at("sampfrac").get<double>();
    s.identity_sampler = j.at("identity_sampler").get<bool>();
    const auto& md = j.at("maxdepth");
    if (md.is_number_integer()) {
      s.maxdepth = MaxDepthSpec::fixed_depth(md.get<int>());
    } else if (md.is_array()) {
      s.maxdepth.kind = MaxDepthSpec::Kind::PerTree;
      s.maxdepth.per_tree = md.get<std::vector<int>>();
    } else {
      s.maxdepth =
          MaxDepthSpec::sampled(j.at("maxdepth_mean_nodes").get<double>());
    }
    s.learnrate = j.at("learnrate").get<double>();
    const int mtry = j.at("mtry").get<int>();
    s.mtry = mtry < 0 ? TreeConfig::kAllVariables : mtry;
    s.ntrees = j.at("ntrees").get<int>();
    s.winsfrac = j.at("winsfrac").get<double>();
    s.normalize = j.at("normalize").get<bool>();
    s.standardize = j.at("standardize").get<bool>();
    s.ordinal_as_continuous = j.at("ordinal").get<bool>();
    s.nfolds = j.at("nfolds").get<int>();
    s.alpha_mix = j.at("alpha_mix").get<double>();
    s.penalty = PenaltyCriterion::parse(j.at("penalty").get<std::string>());
    if (j.contains("lambda"))
      s.user_lambdas = j.at("lambda").get<std::vector<double>>();
    s.nlambda = j.at("nlambda").get<int>();
    s.tree_mode = j.at("tree_mode").get<std::string>() == "cart"
                      ? TreeMode::Cart
                      : TreeMode::Unbiased;
    s.tree_alpha = j.at("alpha").get<double>();
    s.minsplit = j.at("minsplit").get<int>();
    s.minbucket = j.at("minbucket").get<int>();
    s.removeduplicates = j.at("removeduplicates").get<bool>();
    s.removecomplements = j.at("removecomplements").get<bool>();
    s.measure = measure_from_string(j.at("measure").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  }
};

/// Preset flag bundles. Explicit flags are applied on top by the CLI, so a
/// preset plus overrides equals the fully spelled-out flag set.
inline FitSpec apply_preset(FitSpec spec, const std::string& preset,
                            std::size_t n_rows, std::size_t n_predictors) {
  if (preset == "default") return spec;
  if (preset == "bagging" || preset == "randomforest") {
    spec.sampfrac = 1.0;
    spec.maxdepth = MaxDepthSpec::fixed_depth(TreeConfig::kUnlimited);
    spec.learnrate = 0.0;
    spec.tree_alpha = 1.0;  // no test-based stopping
    if (preset == "randomforest")
      spec.mtry = static_cast<int>(
          std::ceil(std::sqrt(static_cast<double>(n_predictors))));
    return spec;
  }
  if (preset == "rulefit") {
    const double neff = static_cast<double>(n_rows);
    spec.tree_mode = TreeMode::Cart;
    spec.maxdepth = MaxDepthSpec::sampled();
    spec.sampfrac = std::min(1.0, (11.0 * std::sqrt(neff) + 1.0) / neff);
    const int nf = static_cast<int>(
        std::lround(std::min(20.0, std::max(0.0, 5200.0 / neff - 2.0))));
    spec.nfolds = std::max(2, nf);
    spec.penalty = PenaltyCriterion::lambda_min();
    return spec;
  }
  if (preset == "singletree") {
    spec.ntrees = 1;
    spec.type = LearnerType::Rules;
    spec.identity_sampler = true;
    return spec;
  }
  throw Error("unknown preset '" + preset +
              "' (default, bagging, randomforest, rulefit, singletree)");
}

/// The whole two-stage pipeline: rule generation, design construction,
/// cross-validated path fit, lambda selection, model assembly.
inline EnsembleModel fit(const Dataset& data, const FitSpec& spec) {
  spec.validate();
  if (data.response.empty()) throw Error("fit requires a response column");
  const std::vector<double> y = data.response_values();
  const std::vector<double>& w = data.weights;

  std::vector<Rule> rules;
  if (spec.type != LearnerType::Linear)
    rules = generate_initial_ensemble(data, spec.rulegen_config());

  DesignMatrix design = build_design_matrix(data, rules, spec.type,
                                            spec.winsfrac, spec.normalize,
                                            spec.standardize);
  if (design.columns.empty())
    throw Error("no usable base learners (all columns constant or no rules "
                "were generated)");

  // The solver owns the column values; the design keeps descriptors/metadata.
  std::vector<std::vector<double>> X;
  X.reserve(design.columns.size());
  for (DesignColumn& col : design.columns) X.push_back(std::move(col.values));

  std::vector<double> lambdas;
  if (!spec.user_lambdas.empty()) {
    lambdas = spec.user_lambdas;
    std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    if (lambdas.size() < 2)
      throw Error("a user lambda grid needs at least two distinct values");
    if (lambdas.back() < 0.0) throw Error("lambda values must be >= 0");
  } else {
    lambdas = lambda_sequence(X, y, w, spec.family, spec.alpha_mix,
                              spec.nlambda);
    if (spec.penalty.kind == PenaltyCriterion::Kind::Numeric) {
      // Splice the requested value into the grid so it is selectable.
      const double v = spec.penalty.value;
      bool present = false;
      for (double l : lambdas)
        if (std::abs(l - v) <= 1e-9 * std::max(1.0, std::abs(l))) present = true;
      if (!present) {
        lambdas.push_back(v);
        std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());
      }
    }
  }

  Rng fold_rng = substream(spec.seed, stream::kFolds);
  const FoldAssignment folds = split_folds(
      data, spec.nfolds, spec.family == Family::Binomial, fold_rng);

  const CVResult cv = cv_path(X, y, w, spec.family, spec.alpha_mix, folds,
                              spec.measure, lambdas, spec.nlambda, spec.threads);
  const LambdaPath path =
      fit_path(X, y, w, spec.family, spec.alpha_mix, lambdas);

  EnsembleModel model =
      assemble_model(design, path, cv, spec.penalty, spec.family, data.schema,
                     data.response, spec.seed);
  model.config_echo = spec.to_json();
  return model;
}

}  // namespace rulepress
