#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "rulepress/design.hpp"
#include "rulepress/penreg.hpp"

namespace rulepress {

enum class PredictScale { Link, Response, Class };

inline PredictScale predict_scale_from_string(const std::string& s) {
  if (s == "link") return PredictScale::Link;
  if (s == "response") return PredictScale::Response;
  if (s == "class") return PredictScale::Class;
  throw Error("unknown prediction scale '" + s + "' (link, response, class)");
}

/// One base learner of the final model. `coefficient` applies to the scaled
/// design column, i.e. the link-scale contribution is
/// coefficient * scale * raw_basis(x).
struct ModelTerm {
  TermKind kind = TermKind::Rule;
  std::string name;
  double coefficient = 0.0;
  double scale = 1.0;
  double sd_raw = 0.0;
  double support = 0.0;

  Rule rule;
  LinearTermSpec linear;
  std::string dummy_variable;
  std::size_t dummy_column = 0;
  std::int32_t dummy_level = 0;

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

  // Slope on the raw (unscaled) basis; what the printed table shows.
  double effective_coefficient() const { return coefficient * scale; }
};

struct EnsembleModel {
  int format_version = 1;
  Family family = Family::Gaussian;
  std::string response;
  std::vector<ColumnSchema> schema;  // training schema
  double intercept = 0.0;
  std::vector<ModelTerm> terms;  // zero-coefficient terms retained, flagged by value
  double lambda = 0.0;
  PenaltyCriterion criterion;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config_echo;  // fit settings, echoed verbatim

  std::vector<double> path_lambdas;  // path summary
  std::vector<int> path_nonzero;
  CVResult cv;
  std::vector<DroppedColumn> dropped;

  int n_nonzero_terms() const {
    int n = 0;
    for (const auto& t : terms)
      if (t.coefficient != 0.0) ++n;
    return n;
  }
};

/// Binds design metadata, the fitted path and the CV result into the final
/// model at the selected lambda.
inline EnsembleModel assemble_model(const DesignMatrix& design,
                                    const LambdaPath& path, const CVResult& cv,
                                    const PenaltyCriterion& criterion,
                                    Family family,
                                    std::vector<ColumnSchema> schema,
                                    std::string response,
                                    std::uint64_t seed = 0) {
  const double lambda = select_lambda(cv, criterion);
  std::size_t l = path.lambdas.size();
  for (std::size_t i = 0; i < path.lambdas.size(); ++i)
    if (path.lambdas[i] == lambda) { l = i; break; }
  if (l == path.lambdas.size())
    throw Error("selected lambda is not on the fitted path");

  EnsembleModel model;
  model.family = family;
  model.schema = std::move(schema);
  model.response = std::move(response);
  model.intercept = path.intercepts[l];
  model.lambda = lambda;
  model.criterion = criterion;
  model.seed = seed;
  model.path_lambdas = path.lambdas;
  model.path_nonzero = path.nonzero;
  model.cv = cv;
  model.dropped = design.dropped;

  if (design.columns.size() != path.coefficients[l].size())
    throw Error("design/path column count mismatch");
  model.terms.reserve(design.columns.size());
  for (std::size_t j = 0; j < design.columns.size(); ++j) {
    const DesignColumn& col = design.columns[j];
    ModelTerm t;
    t.kind = col.kind;
    t.name = col.name;
    t.coefficient = path.coefficients[l][j];
    t.scale = col.scale;
    t.sd_raw = col.sd_raw;
    t.support = col.support;
    t.rule = col.rule;
    t.linear = col.linear;
    t.dummy_variable = col.dummy_variable;
    t.dummy_column = col.dummy_column;
    t.dummy_level = col.dummy_level;
    model.terms.push_back(std::move(t));
  }
  return model;
}

/// Aligns arbitrary data onto the model's training schema.
inline Dataset align_for_model(const EnsembleModel& model, const Dataset& data,
                               bool require_response = false) {
  return align_to_schema(model.schema, model.response, data, require_response);
}

/// Link-scale predictions on data already aligned to the training schema.
inline std::vector<double> predict_link_aligned(const EnsembleModel& model,
                                                const Dataset& data) {
  const std::size_t n = data.n_rows();
  std::vector<double> eta(n, model.intercept);
  for (const ModelTerm& t : model.terms) {
    if (t.coefficient == 0.0) continue;
    const double c = t.coefficient * t.scale;
    for (std::size_t i = 0; i < n; ++i) eta[i] += c * t.raw_basis(data, i);
  }
  return eta;
}

inline double inverse_link(Family family, double eta) {
  switch (family) {
    case Family::Gaussian: return eta;
    case Family::Binomial: return 1.0 / (1.0 + std::exp(-eta));
    case Family::Poisson: return std::exp(std::clamp(eta, -30.0, 30.0));
  }
  return eta;
}

/// Predictions on the requested scale. class applies the 0.5 threshold to the
/// binomial response scale, ties going to the negative label.
inline std::vector<double> predict(const EnsembleModel& model,
                                   const Dataset& data,
                                   PredictScale scale = PredictScale::Response) {
  if (scale == PredictScale::Class && model.family != Family::Binomial)
    throw Error("class predictions require the binomial family");
  const Dataset aligned = align_for_model(model, data);
  std::vector<double> out = predict_link_aligned(model, aligned);
  if (scale == PredictScale::Link) return out;
  for (double& v : out) v = inverse_link(model.family, v);
  if (scale == PredictScale::Class)
    for (double& v : out) v = v > 0.5 ? 1.0 : 0.0;
  return out;
}

/// Label text for a class prediction (level name for factor responses).
inline std::string class_label(const EnsembleModel& model, double cls) {
  const auto it = std::find_if(
      model.schema.begin(), model.schema.end(),
      [&](const ColumnSchema& sc) { return sc.name == model.response; });
  if (it != model.schema.end() &&
      it->kind == ColumnKind::UnorderedCategorical && it->levels.size() == 2)
    return it->levels[cls == 1.0 ? 1 : 0];
  return cls == 1.0 ? "1" : "0";
}

namespace detail {

inline std::string describe_condition(const Condition& c,
                                      const std::vector<ColumnSchema>& schema) {
  const ColumnSchema& sc = schema[c.column];
  switch (c.op) {
    case Condition::Op::LessEq:
    case Condition::Op::Greater: {
      std::string rel = c.op == Condition::Op::LessEq ? " <= " : " > ";
      if (sc.kind == ColumnKind::OrderedCategorical) {
        // Threshold sits on a 1-based level index; show the level name.
        auto idx = static_cast<std::size_t>(std::floor(c.cut));
        if (idx >= 1 && idx <= sc.levels.size())
          return c.variable + rel + sc.levels[idx - 1];
      }
      return c.variable + rel + format_double(c.cut);
    }
    case Condition::Op::In: {
      std::string out = c.variable + " ∈ {";
      for (std::size_t i = 0; i < c.levels.size(); ++i) {
        if (i) out += ",";
        out += sc.levels[static_cast<std::size_t>(c.levels[i])];
      }
      return out + "}";
    }
  }
  return "?";
}

}  // namespace detail

inline std::string describe_rule(const Rule& rule,
                                 const std::vector<ColumnSchema>& schema) {
  std::string out;
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    if (i) out += " & ";
    out += detail::describe_condition(rule.conditions[i], schema);
  }
  return out;
}

inline std::string describe_term(const ModelTerm& t,
                                 const std::vector<ColumnSchema>& schema) {
  switch (t.kind) {
    case TermKind::Rule:
      return describe_rule(t.rule, schema);
    case TermKind::Linear:
      if (t.linear.winsorized())
        return format_double(t.linear.lower) + " <= " + t.linear.variable +
               " <= " + format_double(t.linear.upper);
      return t.linear.variable;
    case TermKind::Dummy:
      return t.dummy_variable + " = " +
             schema[t.dummy_column].levels[static_cast<std::size_t>(t.dummy_level)];
  }
  return "?";
}

/// The printed model summary: selection header, then one row per base learner
/// sorted by absolute coefficient, descriptions spelling out rule conditions
/// and winsorizing intervals.
inline std::string format_table(const EnsembleModel& model,
                                bool hide_zero = true) {
  char buf[128];
  std::string out;
  switch (model.criterion.kind) {
    case PenaltyCriterion::Kind::Lambda1se:
      out += "Final ensemble with cv error within 1se of minimum:\n";
      break;
    case PenaltyCriterion::Kind::LambdaMin:
      out += "Final ensemble with minimum cv error:\n";
      break;
    case PenaltyCriterion::Kind::Numeric:
      out += "Final ensemble at user-specified lambda:\n";
      break;
  }
  std::snprintf(buf, sizeof(buf), "  lambda = %.5g\n", model.lambda);
  out += buf;
  std::snprintf(buf, sizeof(buf), "  number of terms = %d\n",
                model.n_nonzero_terms());
  out += buf;
  for (std::size_t l = 0; l < model.cv.lambdas.size(); ++l) {
    if (model.cv.lambdas[l] == model.lambda) {
      std::snprintf(buf, sizeof(buf), "  mean cv error (se) = %.7g (%.7g)\n",
                    model.cv.mean_loss[l], model.cv.se[l]);
      out += buf;
      break;
    }
  }
  out += "\n  cv error type : " +
         measure_label(model.cv.measure, model.family) + "\n\n";

  struct Row {
    std::string name, coef, desc;
  };
  std::vector<Row> rows;
  std::snprintf(buf, sizeof(buf), "%.8f", model.intercept);
  rows.push_back({"(Intercept)", buf, "1"});

  std::vector<const ModelTerm*> sorted;
  for (const auto& t : model.terms) {
    if (hide_zero && t.coefficient == 0.0) continue;
    sorted.push_back(&t);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ModelTerm* a, const ModelTerm* b) {
                     return std::abs(a->effective_coefficient()) >
                            std::abs(b->effective_coefficient());
                   });
  for (const ModelTerm* t : sorted) {
    std::snprintf(buf, sizeof(buf), "%.8f", t->effective_coefficient());
    rows.push_back({t->name, buf, describe_term(*t, model.schema)});
  }

  std::size_t w1 = 4, w2 = 11, w3 = 11;
  for (const Row& r : rows) {
    w1 = std::max(w1, r.name.size());
    w2 = std::max(w2, r.coef.size());
    w3 = std::max(w3, r.desc.size());
  }
  auto pad = [](const std::string& s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  out += "  " + pad("rule", w1) + "  " + pad("coefficient", w2) + "  " +
         pad("description", w3) + "\n";
  for (const Row& r : rows)
    out += "  " + pad(r.name, w1) + "  " + pad(r.coef, w2) + "  " +
           pad(r.desc, w3) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Serialization. JSON with shortest round-trip decimal numbers, so a
// save/load cycle preserves every numeric field exactly.
// ---------------------------------------------------------------------------

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json schema_to_json(const std::vector<ColumnSchema>& schema) {
  ordered_json arr = ordered_json::array();
  for (const auto& sc : schema) {
    ordered_json o;
    o["name"] = sc.name;
    o["kind"] = to_string(sc.kind);
    if (sc.kind != ColumnKind::Continuous) o["levels"] = sc.levels;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline std::vector<ColumnSchema> schema_from_json(const ordered_json& arr) {
  std::vector<ColumnSchema> schema;
  for (const auto& o : arr) {
    ColumnSchema sc;
    sc.name = o.at("name").get<std::string>();
    const std::string kind = o.at("kind").get<std::string>();
    if (kind == "continuous") sc.kind = ColumnKind::Continuous;
    else if (kind == "ordered-categorical") sc.kind = ColumnKind::OrderedCategorical;
    else if (kind == "unordered-categorical") sc.kind = ColumnKind::UnorderedCategorical;
    else throw Error("unknown column kind '" + kind + "'");
    if (sc.kind != ColumnKind::Continuous)
      sc.levels = o.at("levels").get<std::vector<std::string>>();
    sc.validate();
    schema.push_back(std::move(sc));
  }
  return schema;
}

inline ordered_json condition_to_json(const Condition& c,
                                      const std::vector<ColumnSchema>& schema) {
  ordered_json o;
  o["variable"] = c.variable;
  switch (c.op) {
    case Condition::Op::LessEq:
      o["op"] = "<=";
      o["cut"] = c.cut;
      break;
    case Condition::Op::Greater:
      o["op"] = ">";
      o["cut"] = c.cut;
      break;
    case Condition::Op::In: {
      o["op"] = "in";
      ordered_json levels = ordered_json::array();
      for (std::int32_t lv : c.levels)
        levels.push_back(schema[c.column].levels[static_cast<std::size_t>(lv)]);
      o["levels"] = std::move(levels);
      break;
    }
  }
  return o;
}

inline Condition condition_from_json(const ordered_json& o,
                                     const std::vector<ColumnSchema>& schema) {
  Condition c;
  c.variable = o.at("variable").get<std::string>();
  int col = -1;
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (schema[j].name == c.variable) { col = static_cast<int>(j); break; }
  if (col < 0) throw Error("condition references unknown column '" + c.variable + "'");
  c.column = static_cast<std::size_t>(col);
  const std::string op = o.at("op").get<std::string>();
  if (op == "<=") {
    c.op = Condition::Op::LessEq;
    c.cut = o.at("cut").get<double>();
  } else if (op == ">") {
    c.op = Condition::Op::Greater;
    c.cut = o.at("cut").get<double>();
  } else if (op == "in") {
    c.op = Condition::Op::In;
    for (const auto& name : o.at("levels")) {
      const auto& levels = schema[c.column].levels;
      auto it = std::find(levels.begin(), levels.end(), name.get<std::string>());
      if (it == levels.end())
        throw Error("condition level '" + name.get<std::string>() +
                    "' not in schema for column '" + c.variable + "'");
      c.levels.push_back(static_cast<std::int32_t>(it - levels.begin()));
    }
    std::sort(c.levels.begin(), c.levels.end());
  } else {
    throw Error("unknown condition op '" + op + "'");
  }
  return c;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const EnsembleModel& model) {
  using detail::ordered_json;
  ordered_json j;
  j["format_version"] = model.format_version;
  j["family"] = to_string(model.family);
  j["response"] = model.response;
  j["schema"] = detail::schema_to_json(model.schema);
  j["intercept"] = model.intercept;
  j["lambda"] = model.lambda;
  j["criterion"] = model.criterion.describe();
  j["seed"] = model.seed;
  if (!model.config_echo.is_null()) j["config"] = model.config_echo;

  ordered_json terms = ordered_json::array();
  for (const ModelTerm& t : model.terms) {
    ordered_json o;
    o["kind"] = to_string(t.kind);
    o["name"] = t.name;
    o["coefficient"] = t.coefficient;
    o["scale"] = t.scale;
    o["sd"] = t.sd_raw;
    switch (t.kind) {
      case TermKind::Rule: {
        o["support"] = t.support;
        ordered_json conds = ordered_json::array();
        for (const Condition& c : t.rule.conditions)
          conds.push_back(detail::condition_to_json(c, model.schema));
        o["conditions"] = std::move(conds);
        o["origin"] = {{"tree", t.rule.tree_index}, {"node", t.rule.node_id}};
        o["sequence"] = t.rule.sequence;
        break;
      }
      case TermKind::Linear:
        o["variable"] = t.linear.variable;
        if (t.linear.winsorized()) {
          o["lower"] = t.linear.lower;
          o["upper"] = t.linear.upper;
        }
        break;
      case TermKind::Dummy:
        o["variable"] = t.dummy_variable;
        o["level"] =
            model.schema[t.dummy_column].levels[static_cast<std::size_t>(t.dummy_level)];
        o["support"] = t.support;
        break;
    }
    terms.push_back(std::move(o));
  }
  j["terms"] = std::move(terms);

  ordered_json dropped = ordered_json::array();
  for (const auto& d : model.dropped)
    dropped.push_back({{"name", d.name}, {"reason", d.reason}});
  j["dropped"] = std::move(dropped);

  j["path"] = {{"lambdas", model.path_lambdas}, {"nonzero", model.path_nonzero}};
  j["cv"] = {{"lambdas", model.cv.lambdas},
             {"mean_loss", model.cv.mean_loss},
             {"se", model.cv.se},
             {"lambda_min", model.cv.lambda_min},
             {"lambda_1se", model.cv.lambda_1se},
             {"measure", to_string(model.cv.measure)},
             {"family", to_string(model.cv.family)}};
  return j;
}

inline EnsembleModel model_from_json(const nlohmann::ordered_json& j) {
  EnsembleModel model;
  if (!j.contains("format_version"))
    throw Error("model file missing format_version");
  model.format_version = j.at("format_version").get<int>();
  if (model.format_version != 1)
    throw Error("unsupported model format version " +
                std::to_string(model.format_version) + " (expected 1)");
  model.family = family_from_string(j.at("family").get<std::string>());
  model.response = j.at("response").get<std::string>();
  model.schema = detail::schema_from_json(j.at("schema"));
  model.intercept = j.at("intercept").get<double>();
  model.lambda = j.at("lambda").get<double>();
  model.criterion = PenaltyCriterion::parse(j.at("criterion").get<std::string>());
  model.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("config")) model.config_echo = j.at("config");

  auto find_column = [&](const std::string& name) {
    for (std::size_t c = 0; c < model.schema.size(); ++c)
      if (model.schema[c].name == name) return c;
    throw Error("term references unknown column '" + name + "'");
  };

  for (const auto& o : j.at("terms")) {
    ModelTerm t;
    const std::string kind = o.at("kind").get<std::string>();
    t.name = o.at("name").get<std::string>();
    t.coefficient = o.at("coefficient").get<double>();
    t.scale = o.at("scale").get<double>();
    t.sd_raw = o.at("sd").get<double>();
    if (kind == "rule") {
      t.kind = TermKind::Rule;
      t.support = o.at("support").get<double>();
      for (const auto& c : o.at("conditions"))
        t.rule.conditions.push_back(detail::condition_from_json(c, model.schema));
      t.rule.tree_index = o.at("origin").at("tree").get<int>();
      t.rule.node_id = o.at("origin").at("node").get<int>();
      t.rule.sequence = o.at("sequence").get<int>();
      t.rule.validate();
    } else if (kind == "linear") {
      t.kind = TermKind::Linear;
      t.linear.variable = o.at("variable").get<std::string>();
      t.linear.column = find_column(t.linear.variable);
      t.linear.lower = o.contains("lower") ? o.at("lower").get<double>() : -kInf;
      t.linear.upper = o.contains("upper") ? o.at("upper").get<double>() : kInf;
      t.linear.scale = t.scale;
    } else if (kind == "dummy") {
      t.kind = TermKind::Dummy;
      t.dummy_variable = o.at("variable").get<std::string>();
      t.dummy_column = find_column(t.dummy_variable);
      t.support = o.at("support").get<double>();
      const std::string level = o.at("level").get<std::string>();
      const auto& levels = model.schema[t.dummy_column].levels;
      auto it = std::find(levels.begin(), levels.end(), level);
      if (it == levels.end())
        throw Error("dummy level '" + level + "' not in schema");
      t.dummy_level = static_cast<std::int32_t>(it - levels.begin());
    } else {
      throw Error("unknown term kind '" + kind + "'");
    }
    model.terms.push_back(std::move(t));
  }

  for (const auto& d : j.at("dropped"))
    model.dropped.push_back({d.at("name").get<std::string>(),
                             d.at("reason").get<std::string>()});
  model.path_lambdas = j.at("path").at("lambdas").get<std::vector<double>>();
  model.path_nonzero = j.at("path").at("nonzero").get<std::vector<int>>();
  const auto& cv = j.at("cv");
  model.cv.lambdas = cv.at("lambdas").get<std::vector<double>>();
  model.cv.mean_loss = cv.at("mean_loss").get<std::vector<double>>();
  model.cv.se = cv.at("se").get<std::vector<double>>();
  model.cv.lambda_min = cv.at("lambda_min").get<double>();
  model.cv.lambda_1se = cv.at("lambda_1se").get<double>();
  model.cv.measure = measure_from_string(cv.at("measure").get<std::string>());
  model.cv.family = family_from_string(cv.at("family").get<std::string>());
  return model;
}

inline void save_model(const EnsembleModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error("write to '" + path + "' failed");
}

inline EnsembleModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("model file '" + path + "' parse error at byte " +
                std::to_string(e.byte) + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error("model file '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace rulepress
