// rulepress: fit, inspect and validate prediction rule ensembles from the
// command line. Subcommands mirror the library pipeline: fit writes a model
// JSON; print/predict/importance/pd/interact read one back; cv reruns the
// whole pipeline under k-fold cross-validation; friedman emits a synthetic
// benchmark dataset.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rulepress/rulepress.hpp"

namespace rp = rulepress;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<rp::ColumnSchema> load_schema_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rp::Error("cannot open schema file '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw rp::Error("schema file '" + path + "' parse error at byte " +
                    std::to_string(e.byte));
  }
  return rp::detail::schema_from_json(j);
}

// Flag values as parsed, plus the CLI11 option handles needed to tell which
// were set explicitly (presets only fill in the rest).
struct FitOptions {
  std::string data_path, response, weights_col, schema_path, preset = "default";
  std::string family = "gaussian", type = "both", maxdepth = "3";
  std::string mtry = "inf", penalty = "lambda.1se", tree_mode = "unbiased";
  std::string measure = "deviance", lambda_list;
  double sampfrac = 0.5, learnrate = 0.01, winsfrac = 0.025, alpha_mix = 1.0;
  double alpha = 0.05;
  int ntrees = 500, nfolds = 10, nlambda = 100, minsplit = 20, minbucket = 7;
  bool normalize = true, standardize = false, ordinal = true;
  bool removeduplicates = true, removecomplements = true;
  std::uint64_t seed = 42;
  int threads = 0;

  std::map<std::string, CLI::Option*> opts;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--data", o.data_path, "training CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--response", o.response, "response column name")->required();
  cmd->add_option("--weights", o.weights_col, "case-weight column name");
  cmd->add_option("--schema", o.schema_path, "schema sidecar JSON")
      ->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset,
                  "default, bagging, randomforest, rulefit or singletree");
  o.opts["family"] = cmd->add_option("--family", o.family,
                                     "gaussian, binomial or poisson");
  o.opts["type"] = cmd->add_option("--type", o.type, "rules, linear or both");
  o.opts["sampfrac"] = cmd->add_option("--sampfrac", o.sampfrac,
                                       "subsample fraction; 1 = bootstrap");
  o.opts["maxdepth"] = cmd->add_option(
      "--maxdepth", o.maxdepth, "integer, comma list, 'inf' or 'sampler'");
  o.opts["learnrate"] = cmd->add_option("--learnrate", o.learnrate,
                                        "boosting learning rate");
  o.opts["mtry"] = cmd->add_option("--mtry", o.mtry,
                                   "candidate variables per split, or 'inf'");
  o.opts["ntrees"] = cmd->add_option("--ntrees", o.ntrees, "number of trees");
  o.opts["winsfrac"] = cmd->add_option("--winsfrac", o.winsfrac,
                                       "winsorizing quantile, 0 disables");
  o.opts["normalize"] = cmd->add_flag("--normalize,!--no-normalize",
                                      o.normalize,
                                      "scale linear terms to sd 0.4");
  o.opts["standardize"] = cmd->add_flag("--standardize,!--no-standardize",
                                        o.standardize,
                                        "scale all columns to unit variance");
  o.opts["ordinal"] = cmd->add_flag("--ordinal,!--no-ordinal", o.ordinal,
                                    "treat ordered factors as continuous");
  o.opts["nfolds"] = cmd->add_option("--nfolds", o.nfolds,
                                     "cross-validation folds for lambda");
  o.opts["alpha-mix"] = cmd->add_option("--alpha-mix", o.alpha_mix,
                                        "elastic-net mixing (1 = lasso)");
  o.opts["penalty"] = cmd->add_option(
      "--penalty", o.penalty, "lambda.1se, lambda.min or a numeric value");
  o.opts["lambda"] = cmd->add_option("--lambda", o.lambda_list,
                                     "comma-separated user lambda grid");
  o.opts["nlambda"] = cmd->add_option("--nlambda", o.nlambda,
                                      "lambda grid length");
  o.opts["tree-mode"] = cmd->add_option("--tree-mode", o.tree_mode,
                                        "cart or unbiased");
  o.opts["alpha"] = cmd->add_option("--alpha", o.alpha,
                                    "unbiased-mode stopping level");
  o.opts["minsplit"] = cmd->add_option("--minsplit", o.minsplit,
                                       "minimum rows to attempt a split");
  o.opts["minbucket"] = cmd->add_option("--minbucket", o.minbucket,
                                        "minimum rows per child");
  o.opts["removeduplicates"] =
      cmd->add_flag("--removeduplicates,!--keep-duplicates",
                    o.removeduplicates, "drop duplicate rules");
  o.opts["removecomplements"] =
      cmd->add_flag("--removecomplements,!--keep-complements",
                    o.removecomplements, "drop complement rules");
  o.opts["measure"] = cmd->add_option("--measure", o.measure,
                                      "deviance, mse, mae or class");
  cmd->add_option("--seed", o.seed, "master random seed");
  cmd->add_option("--threads", o.threads,
                  "worker cap (0 = RULEPRESS_THREADS or 1)");
}

rp::MaxDepthSpec parse_maxdepth(const std::string& s) {
  if (s == "inf")
    return rp::MaxDepthSpec::fixed_depth(rp::TreeConfig::kUnlimited);
  if (s == "sampler") return rp::MaxDepthSpec::sampled();
  if (s.find(',') != std::string::npos) {
    rp::MaxDepthSpec spec;
    spec.kind = rp::MaxDepthSpec::Kind::PerTree;
    for (const std::string& part : split(s, ','))
      spec.per_tree.push_back(std::stoi(trim(part)));
    return spec;
  }
  return rp::MaxDepthSpec::fixed_depth(std::stoi(s));
}

rp::Dataset load_data(const FitOptions& o) {
  std::vector<rp::ColumnSchema> hint;
  if (!o.schema_path.empty()) hint = load_schema_sidecar(o.schema_path);
  return rp::load_csv(o.data_path, hint, o.response, o.weights_col);
}

rp::FitSpec build_fitspec(const FitOptions& o, const rp::Dataset& data) {
  rp::FitSpec spec;
  spec.seed = o.seed;
  spec.threads = o.threads;
  spec = rp::apply_preset(spec, o.preset, data.n_rows(),
                          data.predictor_indices().size());

  auto set = [&](const char* name) {
    auto it = o.opts.find(name);
    return it != o.opts.end() && it->second->count() > 0;
  };
  if (set("family")) spec.family = rp::family_from_string(o.family);
  if (set("type")) spec.type = rp::learner_type_from_string(o.type);
  if (set("sampfrac")) {
    spec.sampfrac = o.sampfrac;
    spec.identity_sampler = false;
  }
  if (set("maxdepth")) spec.maxdepth = parse_maxdepth(o.maxdepth);
  if (set("learnrate")) spec.learnrate = o.learnrate;
  if (set("mtry"))
    spec.mtry = o.mtry == "inf" ? rp::TreeConfig::kAllVariables
                                : std::stoi(o.mtry);
  if (set("ntrees")) spec.ntrees = o.ntrees;
  if (set("winsfrac")) spec.winsfrac = o.winsfrac;
  if (set("normalize")) spec.normalize = o.normalize;
  if (set("standardize")) spec.standardize = o.standardize;
  if (set("ordinal")) spec.ordinal_as_continuous = o.ordinal;
  if (set("nfolds")) spec.nfolds = o.nfolds;
  if (set("alpha-mix")) spec.alpha_mix = o.alpha_mix;
  if (set("penalty")) spec.penalty = rp::PenaltyCriterion::parse(o.penalty);
  if (set("lambda"))
    for (const std::string& part : split(o.lambda_list, ','))
      spec.user_lambdas.push_back(std::stod(trim(part)));
  if (set("nlambda")) spec.nlambda = o.nlambda;
  if (set("tree-mode"))
    spec.tree_mode =
        o.tree_mode == "cart" ? rp::TreeMode::Cart : rp::TreeMode::Unbiased;
  if (set("alpha")) spec.tree_alpha = o.alpha;
  if (set("minsplit")) spec.minsplit = o.minsplit;
  if (set("minbucket")) spec.minbucket = o.minbucket;
  if (set("removeduplicates")) spec.removeduplicates = o.removeduplicates;
  if (set("removecomplements")) spec.removecomplements = o.removecomplements;
  if (set("measure")) spec.measure = rp::measure_from_string(o.measure);
  return spec;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rp::Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw rp::Error("write to '" + path + "' failed");
  std::cout << "wrote " << path << "\n";
}

std::string csv_field(const std::string& s) { return rp::detail::csv_quote(s); }

// Subregion expressions: conjunctions like "n4 > 15 & open4 <= 13 & x3 = a"
// or "x3 in {a,b}". Produces an evaluable Rule over the model schema.
rp::Rule parse_subregion(const std::string& expr,
                         const std::vector<rp::ColumnSchema>& schema) {
  rp::Rule rule;
  auto column_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t j = 0; j < schema.size(); ++j)
      if (schema[j].name == name) return j;
    throw rp::Error("subregion references unknown column '" + name + "'");
  };
  auto level_of = [&](std::size_t col, const std::string& name) {
    const auto& levels = schema[col].levels;
    auto it = std::find(levels.begin(), levels.end(), name);
    if (it == levels.end())
      throw rp::Error("subregion level '" + name + "' not in column '" +
                      schema[col].name + "'");
    return static_cast<std::int32_t>(it - levels.begin());
  };

  for (const std::string& raw : split(expr, '&')) {
    const std::string clause = trim(raw);
    if (clause.empty()) throw rp::Error("empty subregion clause");
    rp::Condition c;
    std::size_t pos;
    if ((pos = clause.find("<=")) != std::string::npos) {
      c.op = rp::Condition::Op::LessEq;
      c.variable = trim(clause.substr(0, pos));
      c.cut = std::stod(trim(clause.substr(pos + 2)));
    } else if ((pos = clause.find('>')) != std::string::npos) {
      c.op = rp::Condition::Op::Greater;
      c.variable = trim(clause.substr(0, pos));
      c.cut = std::stod(trim(clause.substr(pos + 1)));
    } else if ((pos = clause.find(" in ")) != std::string::npos) {
      c.op = rp::Condition::Op::In;
      c.variable = trim(clause.substr(0, pos));
      std::string set = trim(clause.substr(pos + 4));
      if (set.size() < 2 || set.front() != '{' || set.back() != '}')
        throw rp::Error("subregion level set must look like {a,b}");
      c.column = column_of(c.variable);
      for (const std::string& lv : split(set.substr(1, set.size() - 2), ','))
        c.levels.push_back(level_of(c.column, trim(lv)));
      std::sort(c.levels.begin(), c.levels.end());
    } else if ((pos = clause.find('=')) != std::string::npos) {
      c.op = rp::Condition::Op::In;
      c.variable = trim(clause.substr(0, pos));
      c.column = column_of(c.variable);
      c.levels.push_back(level_of(c.column, trim(clause.substr(pos + 1))));
    } else {
      throw rp::Error("cannot parse subregion clause '" + clause + "'");
    }
    c.column = column_of(c.variable);
    rule.conditions.push_back(std::move(c));
  }
  rule.validate();
  return rule;
}

std::string importance_csv(const rp::ImportanceReport& report) {
  std::ostringstream out;
  out << "row_type,name,description,coefficient,sd,importance\n";
  for (const auto& l : report.learners)
    out << "learner," << csv_field(l.name) << "," << csv_field(l.description)
        << "," << rp::format_double(l.coefficient) << ","
        << rp::format_double(l.sd) << "," << rp::format_double(l.importance)
        << "\n";
  for (const auto& v : report.variables)
    out << "variable," << csv_field(v.variable) << ",,,,"
        << rp::format_double(v.importance) << "\n";
  return out.str();
}

nlohmann::ordered_json importance_json(const rp::ImportanceReport& report) {
  nlohmann::ordered_json j;
  j["standardized"] = report.standardized;
  j["n_rows_used"] = report.n_rows_used;
  j["learners"] = nlohmann::ordered_json::array();
  for (const auto& l : report.learners)
    j["learners"].push_back({{"name", l.name},
                             {"description", l.description},
                             {"coefficient", l.coefficient},
                             {"sd", l.sd},
                             {"importance", l.importance}});
  j["variables"] = nlohmann::ordered_json::array();
  for (const auto& v : report.variables)
    j["variables"].push_back(
        {{"variable", v.variable}, {"importance", v.importance}});
  return j;
}

std::string grid_value_text(const rp::PDSurface& surf,
                            const std::vector<rp::ColumnSchema>& schema,
                            const std::string& var, std::size_t v,
                            double value) {
  if (!surf.grid_is_level[v]) return rp::format_double(value);
  for (const auto& sc : schema)
    if (sc.name == var)
      return sc.levels[static_cast<std::size_t>(value)];
  return rp::format_double(value);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"prediction rule ensembles: fit, interpret, validate"};
  app.require_subcommand(1);

  // ---- fit ----
  FitOptions fit_opts;
  std::string fit_out = "model.json";
  CLI::App* cmd_fit = app.add_subcommand("fit", "fit a rule ensemble");
  add_fit_options(cmd_fit, fit_opts);
  cmd_fit->add_option("--out", fit_out, "model output path");

  // ---- print ----
  std::string print_model;
  bool print_all = false;
  CLI::App* cmd_print = app.add_subcommand("print", "print a fitted model");
  cmd_print->add_option("--model", print_model, "model JSON")->required()
      ->check(CLI::ExistingFile);
  cmd_print->add_flag("--all", print_all, "include zero-coefficient terms");

  // ---- predict ----
  std::string pr_model, pr_data, pr_out = "predictions.csv", pr_scale = "response";
  CLI::App* cmd_predict = app.add_subcommand("predict", "predict new data");
  cmd_predict->add_option("--model", pr_model)->required()->check(CLI::ExistingFile);
  cmd_predict->add_option("--data", pr_data)->required()->check(CLI::ExistingFile);
  cmd_predict->add_option("--out", pr_out, "predictions CSV path");
  cmd_predict->add_option("--scale", pr_scale, "link, response or class");

  // ---- importance ----
  std::string imp_model, imp_data, imp_out = "importance.csv", imp_json_path,
      imp_subregion;
  bool imp_standardize = false;
  int imp_round = -1;
  CLI::App* cmd_imp = app.add_subcommand("importance",
                                         "base learner and variable importances");
  cmd_imp->add_option("--model", imp_model)->required()->check(CLI::ExistingFile);
  cmd_imp->add_option("--data", imp_data)->required()->check(CLI::ExistingFile);
  cmd_imp->add_option("--out", imp_out, "importance CSV path");
  cmd_imp->add_option("--json", imp_json_path, "also write a JSON report");
  cmd_imp->add_flag("--standardize", imp_standardize,
                    "divide importances by sd(y)");
  cmd_imp->add_option("--round", imp_round, "round outputs to this many digits");
  cmd_imp->add_option("--subregion", imp_subregion,
                      "local importances over rows matching e.g. \"n4 > 15\"");

  // ---- pd ----
  std::string pd_model, pd_data, pd_vars, pd_out = "pd.csv", pd_grid,
      pd_json_path;
  CLI::App* cmd_pd = app.add_subcommand("pd", "partial dependence grid data");
  cmd_pd->add_option("--model", pd_model)->required()->check(CLI::ExistingFile);
  cmd_pd->add_option("--data", pd_data)->required()->check(CLI::ExistingFile);
  cmd_pd->add_option("--vars", pd_vars, "one or two variables, comma-separated")
      ->required();
  cmd_pd->add_option("--grid", pd_grid,
                     "explicit grid values for a single variable");
  cmd_pd->add_option("--out", pd_out, "grid CSV path");
  cmd_pd->add_option("--json", pd_json_path, "also write a JSON report");

  // ---- interact ----
  std::string in_model, in_data, in_vars, in_out = "interact.csv", in_json_path;
  int in_nsamp = 10;
  std::uint64_t in_seed = 43;
  int in_threads = 0;
  CLI::App* cmd_int = app.add_subcommand(
      "interact", "H^2 interaction statistics against bootstrap null models");
  cmd_int->add_option("--model", in_model)->required()->check(CLI::ExistingFile);
  cmd_int->add_option("--data", in_data)->required()->check(CLI::ExistingFile);
  cmd_int->add_option("--vars", in_vars, "variables, comma-separated")->required();
  cmd_int->add_option("--nsamp", in_nsamp, "number of null-interaction models");
  cmd_int->add_option("--seed", in_seed, "seed for null dataset generation");
  cmd_int->add_option("--threads", in_threads, "worker cap for null refits");
  cmd_int->add_option("--out", in_out, "report CSV path");
  cmd_int->add_option("--json", in_json_path, "also write a JSON report");

  // ---- cv ----
  std::string cv_model, cv_data;
  int cv_k = 10, cv_threads = 0;
  std::uint64_t cv_seed = 44;
  std::string cv_out_json = "cv_report.json", cv_out_csv = "cv_predictions.csv";
  CLI::App* cmd_cv = app.add_subcommand(
      "cv", "full k-fold cross-validation of a fitted model's pipeline");
  cmd_cv->add_option("--model", cv_model, "model JSON whose settings to rerun")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_cv->add_option("--data", cv_data, "training CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_cv->add_option("--folds", cv_k, "outer fold count");
  cmd_cv->add_option("--seed", cv_seed, "seed for the outer fold split");
  cmd_cv->add_option("--threads", cv_threads, "worker cap for fold refits");
  cmd_cv->add_option("--out-report", cv_out_json, "metrics JSON path");
  cmd_cv->add_option("--out-predictions", cv_out_csv,
                     "out-of-fold predictions CSV path");

  // ---- friedman ----
  std::size_t fr_n = 500, fr_p = 10;
  double fr_noise = 1.0;
  std::uint64_t fr_seed = 1;
  std::string fr_out = "friedman1.csv";
  CLI::App* cmd_fr = app.add_subcommand("friedman",
                                        "generate a friedman1 benchmark CSV");
  cmd_fr->add_option("--n", fr_n, "rows");
  cmd_fr->add_option("--p", fr_p, "predictors (>= 5)");
  cmd_fr->add_option("--noise-sd", fr_noise, "noise standard deviation");
  cmd_fr->add_option("--seed", fr_seed, "seed");
  cmd_fr->add_option("--out", fr_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (cmd_fit->parsed()) {
    const rp::Dataset data = load_data(fit_opts);
    const rp::FitSpec spec = build_fitspec(fit_opts, data);
    const rp::EnsembleModel model = rp::fit(data, spec);
    std::cout << rp::format_table(model);
    rp::save_model(model, fit_out);
    std::cout << "wrote " << fit_out << "\n";
    return 0;
  }

  if (cmd_print->parsed()) {
    const rp::EnsembleModel model = rp::load_model(print_model);
    std::cout << rp::format_table(model, !print_all);
    return 0;
  }

  if (cmd_predict->parsed()) {
    const rp::EnsembleModel model = rp::load_model(pr_model);
    const rp::Dataset data = rp::load_csv(pr_data, model.schema, "");
    const rp::PredictScale scale = rp::predict_scale_from_string(pr_scale);
    std::ostringstream out;
    if (scale == rp::PredictScale::Class) {
      const auto resp = rp::predict(model, data, rp::PredictScale::Response);
      out << "row_id,prediction,class\n";
      for (std::size_t i = 0; i < resp.size(); ++i)
        out << (i + 1) << "," << rp::format_double(resp[i]) << ","
            << csv_field(rp::class_label(model, resp[i] > 0.5 ? 1.0 : 0.0))
            << "\n";
    } else {
      const auto pred = rp::predict(model, data, scale);
      out << "row_id,prediction\n";
      for (std::size_t i = 0; i < pred.size(); ++i)
        out << (i + 1) << "," << rp::format_double(pred[i]) << "\n";
    }
    write_file(pr_out, out.str());
    return 0;
  }

  if (cmd_imp->parsed()) {
    const rp::EnsembleModel model = rp::load_model(imp_model);
    const rp::Dataset data = rp::load_csv(imp_data, model.schema, "");
    rp::RowPredicate pred = nullptr;
    rp::Rule sub;
    if (!imp_subregion.empty()) {
      sub = parse_subregion(imp_subregion, model.schema);
      pred = [&sub](const rp::Dataset& d, std::size_t i) {
        return sub.evaluate(d, i);
      };
    }
    std::optional<int> digits;
    if (imp_round >= 0) digits = imp_round;
    const rp::ImportanceReport report =
        rp::importance(model, data, imp_standardize, pred, digits);
    write_file(imp_out, importance_csv(report));
    if (!imp_json_path.empty())
      write_file(imp_json_path, importance_json(report).dump(2) + "\n");
    return 0;
  }

  if (cmd_pd->parsed()) {
    const rp::EnsembleModel model = rp::load_model(pd_model);
    const rp::Dataset data = rp::load_csv(pd_data, model.schema, "");
    std::vector<std::string> vars;
    for (const std::string& v : split(pd_vars, ',')) vars.push_back(trim(v));
    std::vector<std::vector<double>> explicit_grid;
    if (!pd_grid.empty()) {
      if (vars.size() != 1)
        throw rp::Error("--grid is only supported for a single variable");
      explicit_grid.emplace_back();
      const std::size_t col = rp::align_to_schema(model.schema, model.response,
                                                  data)
                                  .column_index(vars[0]);
      const bool is_level = model.schema[col].kind ==
                            rp::ColumnKind::UnorderedCategorical;
      for (const std::string& g : split(pd_grid, ',')) {
        const std::string val = trim(g);
        if (is_level) {
          const auto& levels = model.schema[col].levels;
          auto it = std::find(levels.begin(), levels.end(), val);
          if (it == levels.end())
            throw rp::Error("grid level '" + val + "' not in column '" +
                            vars[0] + "'");
          explicit_grid[0].push_back(
              static_cast<double>(it - levels.begin()));
        } else {
          explicit_grid[0].push_back(std::stod(val));
        }
      }
    }
    const rp::PDSurface surf =
        rp::partial_dependence(model, data, vars, explicit_grid);
    std::ostringstream out;
    for (const std::string& v : vars) out << csv_field(v) << ",";
    out << "pd\n";
    const std::size_t g2 = surf.grid.size() == 2 ? surf.grid[1].size() : 1;
    for (std::size_t a = 0; a < surf.grid[0].size(); ++a) {
      for (std::size_t b = 0; b < g2; ++b) {
        out << csv_field(grid_value_text(surf, model.schema, vars[0], 0,
                                         surf.grid[0][a]));
        if (surf.grid.size() == 2)
          out << ","
              << csv_field(grid_value_text(surf, model.schema, vars[1], 1,
                                           surf.grid[1][b]));
        out << "," << rp::format_double(surf.values[a * g2 + b]) << "\n";
      }
    }
    write_file(pd_out, out.str());
    if (!pd_json_path.empty()) {
      nlohmann::ordered_json j;
      j["variables"] = surf.variables;
      j["n_rows_used"] = surf.n_rows_used;
      j["grid"] = nlohmann::ordered_json::array();
      for (std::size_t v = 0; v < surf.grid.size(); ++v) {
        nlohmann::ordered_json axis = nlohmann::ordered_json::array();
        for (double g : surf.grid[v])
          if (surf.grid_is_level[v])
            axis.push_back(grid_value_text(surf, model.schema, vars[v], v, g));
          else
            axis.push_back(g);
        j["grid"].push_back(std::move(axis));
      }
      j["values"] = surf.values;
      write_file(pd_json_path, j.dump(2) + "\n");
    }
    return 0;
  }

  if (cmd_int->parsed()) {
    const rp::EnsembleModel model = rp::load_model(in_model);
    const rp::Dataset data = rp::load_csv(in_data, model.schema, model.response);
    if (model.config_echo.is_null())
      throw rp::Error("model file lacks the fit configuration needed to "
                      "refit null models");
    const rp::FitSpec spec = rp::FitSpec::from_json(model.config_echo);
    std::vector<std::string> vars;
    for (const std::string& v : split(in_vars, ',')) vars.push_back(trim(v));

    const std::vector<rp::Dataset> null_data =
        rp::bs_null_datasets(model, data, in_nsamp, in_seed);
    std::vector<rp::EnsembleModel> null_models(null_data.size());
    rp::parallel_for(null_data.size(), in_threads, [&](std::size_t s) {
      rp::FitSpec null_spec = spec;
      null_spec.seed = rp::derive_seed(in_seed, rp::stream::kNullFit,
                                       static_cast<std::uint64_t>(s + 1));
      null_spec.threads = 1;
      null_models[s] = rp::fit(null_data[s], null_spec);
    });

    const rp::HReport report =
        rp::interact_test(model, data, null_models, vars);
    std::ostringstream out;
    out << "variable,observed,q05,q50,q95,flag\n";
    for (const auto& r : report.rows)
      out << csv_field(r.variable) << "," << rp::format_double(r.observed)
          << "," << rp::format_double(r.q05) << "," << rp::format_double(r.q50)
          << "," << rp::format_double(r.q95) << "," << csv_field(r.flag)
          << "\n";
    write_file(in_out, out.str());
    if (!in_json_path.empty()) {
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const auto& r : report.rows)
        j.push_back({{"variable", r.variable},
                     {"observed", r.observed},
                     {"q05", r.q05},
                     {"q50", r.q50},
                     {"q95", r.q95},
                     {"flag", r.flag}});
      write_file(in_json_path, j.dump(2) + "\n");
    }
    return 0;
  }

  if (cmd_cv->parsed()) {
    const rp::EnsembleModel model = rp::load_model(cv_model);
    if (model.config_echo.is_null())
      throw rp::Error("model file lacks the fit configuration needed to "
                      "rerun the pipeline");
    rp::FitSpec spec = rp::FitSpec::from_json(model.config_echo);
    spec.threads = cv_threads;
    const rp::Dataset data = rp::load_csv(cv_data, model.schema, model.response);
    const rp::CVReport report = rp::cross_validate(data, spec, cv_k, cv_seed);

    nlohmann::ordered_json j;
    j["k"] = report.k;
    j["seed"] = report.seed;
    j["metrics"] = nlohmann::ordered_json::array();
    for (const auto& m : report.metrics) {
      nlohmann::ordered_json mj{{"name", m.name}, {"value", m.value}};
      if (m.has_se) mj["se"] = m.se;
      j["metrics"].push_back(std::move(mj));
      std::cout << m.name << " = " << rp::format_double(m.value);
      if (m.has_se) std::cout << " (se " << rp::format_double(m.se) << ")";
      std::cout << "\n";
    }
    write_file(cv_out_json, j.dump(2) + "\n");

    const std::vector<double> y = data.response_values();
    std::ostringstream out;
    out << "row_id,fold,y,prediction\n";
    for (std::size_t i = 0; i < report.predictions.size(); ++i)
      out << (i + 1) << "," << report.fold_of_row[i] << ","
          << rp::format_double(y[i]) << ","
          << rp::format_double(report.predictions[i]) << "\n";
    write_file(cv_out_csv, out.str());
    return 0;
  }

  if (cmd_fr->parsed()) {
    rp::Rng rng(fr_seed);
    const rp::Dataset ds = rp::gen_friedman1(fr_n, fr_p, fr_noise, rng);
    rp::save_csv(ds, fr_out);
    std::cout << "wrote " << fr_out << "\n";
    return 0;
  }

  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "rulepress: " << e.what() << "\n";
    return 1;
  }
}
