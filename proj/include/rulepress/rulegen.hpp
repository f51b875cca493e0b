#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "rulepress/dataset.hpp"
#include "rulepress/parallel.hpp"
#include "rulepress/rng.hpp"
#include "rulepress/tree.hpp"

namespace rulepress {

struct Condition {
  enum class Op { LessEq, Greater, In };
  std::string variable;
  std::size_t column = 0;  // index into the training schema
  Op op = Op::LessEq;
  double cut = 0.0;
  std::vector<std::int32_t> levels;  // sorted level indices, Op::In only

  bool holds(const Dataset& data, std::size_t row) const {
    switch (op) {
      case Op::LessEq: return data.numeric_value(column, row) <= cut;
      case Op::Greater: return data.numeric_value(column, row) > cut;
      case Op::In:
        return std::binary_search(levels.begin(), levels.end(),
                                  data.level_index(column, row));
    }
    return false;
  }
};

/// A conjunction of split conditions; 1 iff all conditions hold.
struct Rule {
  std::vector<Condition> conditions;
  int tree_index = 0;  // origin: 1-based boosting iteration
  int node_id = 0;     // origin: node id within that tree
  int sequence = 0;    // 1-based extraction order; names the rule ("ruleN")

  bool evaluate(const Dataset& data, std::size_t row) const {
    for (const Condition& c : conditions)
      if (!c.holds(data, row)) return false;
    return true;
  }

  void validate() const {
    if (conditions.empty()) throw Error("rule with no conditions");
    for (const Condition& c : conditions) {
      if (c.variable.empty()) throw Error("rule condition without a variable");
      if (c.op == Condition::Op::In && c.levels.empty())
        throw Error("rule condition on '" + c.variable +
                    "' has an empty level set");
    }
  }
};

struct BoostState {
  std::vector<double> eta;
  double nu = 0.01;
  Family family = Family::Gaussian;
};

/// Starting value of the linear predictor, broadcast over rows.
inline double init_eta(Family family, const std::vector<double>& y,
                       const std::vector<double>& w) {
  switch (family) {
    case Family::Gaussian:
      return 0.0;
    case Family::Binomial: {
      bool has0 = false, has1 = false;
      for (double v : y) {
        if (v == 0.0) has0 = true;
        else if (v == 1.0) has1 = true;
        else throw Error("binomial response must be coded 0/1");
      }
      if (!has0 || !has1)
        throw Error("binomial response has a single class; both classes required");
      const double p = weighted_mean(y, w);
      return std::log(p / (1.0 - p));
    }
    case Family::Poisson: {
      for (double v : y) {
        if (v < 0.0 || std::floor(v) != v)
          throw Error("poisson response must be nonnegative integers");
      }
      const double lambda = weighted_mean(y, w);
      if (lambda <= 0.0) throw Error("poisson response mean is zero");
      return std::log(lambda);
    }
  }
  throw Error("unreachable family");
}

/// Gradient-derived working target the next tree is fit to.
inline std::vector<double> pseudo_response(Family family,
                                           const std::vector<double>& y,
                                           const std::vector<double>& eta) {
  std::vector<double> out(y.size());
  switch (family) {
    case Family::Gaussian:
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - eta[i];
      break;
    case Family::Binomial:
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-eta[i]));
        out[i] = (y[i] - p) / std::sqrt(p * (1.0 - p));
      }
      break;
    case Family::Poisson:
      for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = y[i] - std::exp(eta[i]);
      break;
  }
  return out;
}

/// eta <- eta + nu * f_m(x) on every training row, not only the sampled ones.
inline void update_eta(BoostState& state, const TreeNode& tree,
                       const Dataset& data) {
  for (std::size_t i = 0; i < state.eta.size(); ++i)
    state.eta[i] += state.nu * predict_tree(tree, data, i);
}

/// Random maximum depth mirroring the original RuleFit tree-size scheme:
/// terminal-node count t = 2 + floor(Exp(mean = avg_nodes - 2)), converted to
/// the depth that can hold t leaves. Averages out near depth two.
inline int sample_maxdepth(Rng& rng, double avg_terminal_nodes = 4.0) {
  if (!(avg_terminal_nodes >= 2.0))
    throw Error("average terminal node count must be >= 2");
  const double gamma = rng.exponential(avg_terminal_nodes - 2.0);
  const double t = 2.0 + std::floor(gamma);
  const int depth =
      static_cast<int>(std::ceil(std::log2(std::max(2.0, t))));
  return std::max(1, depth);
}

/// One rule per non-root node: the conjunction of path conditions from the
/// root. Left children take <=(or "in left level set"), right children the
/// complement; complements of level sets are taken within the full schema
/// level list so the condition stays evaluable on any schema-conforming row.
inline std::vector<Rule> extract_rules(const TreeNode& tree,
                                       const Dataset& data,
                                       int tree_index = 0) {
  std::vector<Rule> out;
  std::vector<Condition> path;

  auto condition_for = [&](const SplitSpec& split, bool left) {
    Condition c;
    c.column = split.column;
    c.variable = data.schema[split.column].name;
    if (split.level_split) {
      c.op = Condition::Op::In;
      if (left) {
        c.levels = split.left_levels;
      } else {
        const auto n_levels =
            static_cast<std::int32_t>(data.schema[split.column].levels.size());
        for (std::int32_t lv = 0; lv < n_levels; ++lv)
          if (!std::binary_search(split.left_levels.begin(),
                                  split.left_levels.end(), lv))
            c.levels.push_back(lv);
      }
    } else {
      c.op = left ? Condition::Op::LessEq : Condition::Op::Greater;
      c.cut = split.cut;
    }
    return c;
  };

  // Emission order: left child rule, left subtree, right child rule, right
  // subtree. This reproduces the usual printed rule listing.
  auto walk = [&](auto&& self, const TreeNode& node) -> void {
    if (node.is_leaf()) return;
    for (bool left : {true, false}) {
      const TreeNode& child = left ? *node.left : *node.right;
      path.push_back(condition_for(*node.split, left));
      Rule r;
      r.conditions = path;
      r.tree_index = tree_index;
      r.node_id = child.id;
      out.push_back(std::move(r));
      self(self, child);
      path.pop_back();
    }
  };
  walk(walk, tree);
  return out;
}

namespace detail {

// Training 0/1 vector of a rule packed into 64-bit words.
inline std::vector<std::uint64_t> rule_bits(const Rule& rule,
                                            const Dataset& data) {
  const std::size_t n = data.n_rows();
  std::vector<std::uint64_t> bits((n + 63) / 64, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (rule.evaluate(data, i)) bits[i / 64] |= (1ULL << (i % 64));
  return bits;
}

inline std::vector<std::uint64_t> complement_bits(
    std::vector<std::uint64_t> bits, std::size_t n) {
  for (auto& wd : bits) wd = ~wd;
  if (n % 64) bits.back() &= (1ULL << (n % 64)) - 1;
  return bits;
}

struct BitsHash {
  std::size_t operator()(const std::vector<std::uint64_t>& v) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t w : v) h = mix_seed(h ^ w);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/// Scans rules in order and drops any whose training 0/1 vector duplicates an
/// earlier kept rule's vector, or equals its complement. Earlier rules win.
inline std::vector<Rule> prune_redundant(const std::vector<Rule>& rules,
                                         const Dataset& data,
                                         bool removeduplicates,
                                         bool removecomplements) {
  if (!removeduplicates && !removecomplements) return rules;
  const std::size_t n = data.n_rows();
  std::unordered_set<std::vector<std::uint64_t>, detail::BitsHash> kept;
  std::vector<Rule> out;
  out.reserve(rules.size());
  for (const Rule& r : rules) {
    auto bits = detail::rule_bits(r, data);
    if (removeduplicates && kept.count(bits)) continue;
    if (removecomplements && kept.count(detail::complement_bits(bits, n)))
      continue;
    kept.insert(std::move(bits));
    out.push_back(r);
  }
  return out;
}

struct MaxDepthSpec {
  enum class Kind { Fixed, PerTree, Sampled };
  Kind kind = Kind::Fixed;
  int fixed = 3;
  std::vector<int> per_tree;
  double sampler_mean_nodes = 4.0;

  static MaxDepthSpec fixed_depth(int d) {
    MaxDepthSpec s;
    s.kind = Kind::Fixed;
    s.fixed = d;
    return s;
  }
  static MaxDepthSpec sampled(double mean_nodes = 4.0) {
    MaxDepthSpec s;
    s.kind = Kind::Sampled;
    s.sampler_mean_nodes = mean_nodes;
    return s;
  }
};

struct RuleGenConfig {
  Family family = Family::Gaussian;
  int ntrees = 500;
  double sampfrac = 0.5;
  bool identity_sampler = false;  // use all training rows for every tree
  double learnrate = 0.01;
  MaxDepthSpec maxdepth;
  TreeConfig tree;
  bool removeduplicates = true;
  bool removecomplements = true;
  int threads = 1;
  std::uint64_t seed = 42;
};

namespace detail {

// Per-tree substream protocol: one generator seeded from (seed, kTrees, b)
// drives, in order, the depth draw (when sampled), the subsample and the
// in-tree draws. Results are independent of tree execution order.
inline std::unique_ptr<TreeNode> grow_iteration(
    const Dataset& data, const RuleGenConfig& config,
    const std::vector<double>& y_full, const std::vector<double>& eta, int b,
    std::vector<std::size_t>* sample_out = nullptr) {
  Rng rng = substream(config.seed, stream::kTrees,
                      static_cast<std::uint64_t>(b));
  TreeConfig tc = config.tree;
  switch (config.maxdepth.kind) {
    case MaxDepthSpec::Kind::Fixed:
      tc.maxdepth = config.maxdepth.fixed;
      break;
    case MaxDepthSpec::Kind::PerTree:
      tc.maxdepth = config.maxdepth.per_tree.at(static_cast<std::size_t>(b - 1));
      break;
    case MaxDepthSpec::Kind::Sampled:
      tc.maxdepth = sample_maxdepth(rng, config.maxdepth.sampler_mean_nodes);
      break;
  }

  const std::size_t n = data.n_rows();
  std::vector<std::size_t> idx;
  if (config.identity_sampler) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  } else {
    idx = subsample(n, config.sampfrac, data.weights, rng);
  }

  std::vector<double> eta_sub(idx.size()), y_sub(idx.size()), w_sub(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    eta_sub[i] = eta[idx[i]];
    y_sub[i] = y_full[idx[i]];
    w_sub[i] = data.weights[idx[i]];
  }
  const std::vector<double> ytil =
      pseudo_response(config.family, y_sub, eta_sub);
  auto tree = grow_tree(data, idx, ytil, w_sub, tc, rng);
  if (sample_out) *sample_out = std::move(idx);
  return tree;
}

}  // namespace detail

/// The B-iteration sampling/boosting loop: subsample, fit a tree to the
/// current pseudo response, harvest its nodes as rules, shrink eta by the
/// learning rate, then drop duplicate/complement rules over the full list.
inline std::vector<Rule> generate_initial_ensemble(const Dataset& data,
                                                   const RuleGenConfig& config) {
  if (config.ntrees < 1) throw Error("ntrees must be >= 1");
  if (config.maxdepth.kind == MaxDepthSpec::Kind::PerTree &&
      config.maxdepth.per_tree.size() !=
          static_cast<std::size_t>(config.ntrees))
    throw Error("per-tree maxdepth list must have length ntrees");
  config.tree.validate();

  const std::vector<double> y = data.response_values();
  const double eta0 = init_eta(config.family, y, data.weights);

  std::vector<std::vector<Rule>> per_tree(
      static_cast<std::size_t>(config.ntrees));

  if (config.learnrate == 0.0) {
    // Every iteration sees eta = eta0, so trees are independent (bagging).
    const std::vector<double> eta(data.n_rows(), eta0);
    parallel_for(static_cast<std::size_t>(config.ntrees), config.threads,
                 [&](std::size_t t) {
                   const int b = static_cast<int>(t) + 1;
                   auto tree = detail::grow_iteration(data, config, y, eta, b);
                   per_tree[t] = extract_rules(*tree, data, b);
                 });
  } else {
    BoostState state;
    state.family = config.family;
    state.nu = config.learnrate;
    state.eta.assign(data.n_rows(), eta0);
    for (int b = 1; b <= config.ntrees; ++b) {
      auto tree = detail::grow_iteration(data, config, y, state.eta, b);
      per_tree[static_cast<std::size_t>(b - 1)] =
          extract_rules(*tree, data, b);
      update_eta(state, *tree, data);
    }
  }

  std::vector<Rule> all;
  for (auto& v : per_tree)
    for (Rule& r : v) all.push_back(std::move(r));
  for (std::size_t k = 0; k < all.size(); ++k)
    all[k].sequence = static_cast<int>(k) + 1;

  return prune_redundant(all, data, config.removeduplicates,
                         config.removecomplements);
}

}  // namespace rulepress
