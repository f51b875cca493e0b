#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"

using namespace rulepress;

namespace {

std::string rule_text(const Rule& r, const std::vector<ColumnSchema>& schema) {
  return describe_rule(r, schema);
}

Dataset small_gaussian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return gen_friedman1(n, 5, 1.0, rng);
}

}  // namespace

TEST_CASE("init_eta per family") {
  std::vector<double> w(4, 1.0);
  REQUIRE(init_eta(Family::Gaussian, {1, 2, 3, 4}, w) == 0.0);
  REQUIRE(init_eta(Family::Binomial, {0, 1, 0, 1}, w) == 0.0);  // log(1)
  REQUIRE(init_eta(Family::Poisson, {1, 2, 3, 2}, w) ==
          Catch::Approx(std::log(2.0)).margin(1e-12));
  REQUIRE_THROWS_WITH(init_eta(Family::Binomial, {1, 1, 1, 1}, w),
                      Catch::Matchers::ContainsSubstring("single class"));
  REQUIRE_THROWS(init_eta(Family::Poisson, {0, 0, 0, 0}, w));
  REQUIRE_THROWS(init_eta(Family::Binomial, {0, 2, 1, 1}, w));
}

TEST_CASE("pseudo_response formulas") {
  // binomial, y=1, eta=0: (1-.5)/sqrt(.25) = 1
  REQUIRE(pseudo_response(Family::Binomial, {1}, {0})[0] ==
          Catch::Approx(1.0).margin(1e-12));
  // binomial, y=0, eta=log 4 (p=.8): -.8/sqrt(.16) = -2
  REQUIRE(pseudo_response(Family::Binomial, {0}, {std::log(4.0)})[0] ==
          Catch::Approx(-2.0).margin(1e-12));
  // gaussian with eta=0 returns y itself
  auto g = pseudo_response(Family::Gaussian, {3.5, -1.0}, {0.0, 0.0});
  REQUIRE(g == std::vector<double>{3.5, -1.0});
  // poisson: y - exp(eta)
  REQUIRE(pseudo_response(Family::Poisson, {3}, {std::log(2.0)})[0] ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("update_eta adds the shrunken tree prediction everywhere") {
  std::vector<double> x{1, 2, 3}, y{0, 0, 0};
  Dataset ds = testutil::make_numeric_dataset({"x", "y"}, {x, y}, "y");
  TreeNode leaf;
  leaf.prediction = 5.0;

  BoostState state;
  state.eta.assign(3, 1.0);
  state.nu = 0.0;
  update_eta(state, leaf, ds);
  REQUIRE(state.eta == std::vector<double>{1, 1, 1});

  state.nu = 0.01;
  update_eta(state, leaf, ds);
  for (double e : state.eta) REQUIRE(e == Catch::Approx(1.05).margin(1e-15));

  BoostState twice;
  twice.eta.assign(3, 0.0);
  twice.nu = 1.0;
  TreeNode c;
  c.prediction = 2.5;
  update_eta(twice, c, ds);
  update_eta(twice, c, ds);
  for (double e : twice.eta) REQUIRE(e == Catch::Approx(5.0).margin(1e-15));
}

TEST_CASE("sample_maxdepth maps terminal-node draws to depths") {
  // Replay the exponential draw to know t, then check the depth mapping.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng replay(seed);
    const double gamma = replay.exponential(2.0);
    const double t = 2.0 + std::floor(gamma);
    const int want = std::max(
        1, static_cast<int>(std::ceil(std::log2(std::max(2.0, t)))));
    Rng rng(seed);
    REQUIRE(sample_maxdepth(rng) == want);
    if (t == 2.0) REQUIRE(want == 1);
    if (t == 5.0) REQUIRE(want == 3);
  }
}

TEST_CASE("sample_maxdepth averages near depth two") {
  Rng rng(7);
  double total = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) total += sample_maxdepth(rng);
  const double mean = total / n;
  REQUIRE(mean > 1.8);
  REQUIRE(mean < 2.2);
}

TEST_CASE("extract_rules reproduces the worked six-rule listing") {
  testutil::ExampleTree ex;
  auto rules = extract_rules(*ex.tree, ex.data, 1);
  REQUIRE(rules.size() == 6);
  REQUIRE(rule_text(rules[0], ex.schema) == "x4 <= 82.7");
  REQUIRE(rule_text(rules[1], ex.schema) == "x4 <= 82.7 & x3 ∈ {a,c}");
  REQUIRE(rule_text(rules[2], ex.schema) == "x4 <= 82.7 & x3 ∈ {b,d,e}");
  REQUIRE(rule_text(rules[3], ex.schema) == "x4 > 82.7");
  REQUIRE(rule_text(rules[4], ex.schema) == "x4 > 82.7 & x5 <= seldom");
  REQUIRE(rule_text(rules[5], ex.schema) == "x4 > 82.7 & x5 > seldom");
}

TEST_CASE("extract_rules on a depth-1 tree yields the split and complement") {
  TreeNode root;
  root.split = SplitSpec{0, false, 1.5, {}};
  root.left = std::make_unique<TreeNode>();
  root.right = std::make_unique<TreeNode>();
  std::vector<double> x{1, 2}, y{0, 1};
  Dataset ds = testutil::make_numeric_dataset({"x", "y"}, {x, y}, "y");
  auto rules = extract_rules(root, ds);
  REQUIRE(rules.size() == 2);
  REQUIRE(rules[0].conditions[0].op == Condition::Op::LessEq);
  REQUIRE(rules[1].conditions[0].op == Condition::Op::Greater);

  TreeNode leaf;
  REQUIRE(extract_rules(leaf, ds).empty());
}

TEST_CASE("prune_redundant drops the complement of the first rule") {
  testutil::ExampleTree ex;
  auto rules = extract_rules(*ex.tree, ex.data, 1);
  for (std::size_t k = 0; k < rules.size(); ++k)
    rules[k].sequence = static_cast<int>(k) + 1;
  auto kept = prune_redundant(rules, ex.data, true, true);
  REQUIRE(kept.size() == 5);
  for (const Rule& r : kept) REQUIRE(rule_text(r, ex.schema) != "x4 > 82.7");
}

TEST_CASE("prune_redundant drops support duplicates and honors flags") {
  std::vector<double> x{1, 2, 3, 4}, y{0, 0, 1, 1};
  Dataset ds = testutil::make_numeric_dataset({"x", "y"}, {x, y}, "y");
  Rule a;  // x <= 2
  a.conditions = {{.variable = "x", .column = 0, .op = Condition::Op::LessEq, .cut = 2.0}};
  Rule b;  // x <= 2.5 — different syntax, identical support
  b.conditions = {{.variable = "x", .column = 0, .op = Condition::Op::LessEq, .cut = 2.5}};
  Rule c;  // x > 2 — complement of a
  c.conditions = {{.variable = "x", .column = 0, .op = Condition::Op::Greater, .cut = 2.0}};
  auto kept = prune_redundant({a, b, c}, ds, true, true);
  REQUIRE(kept.size() == 1);
  REQUIRE(kept[0].conditions[0].cut == 2.0);

  auto untouched = prune_redundant({a, b, c}, ds, false, false);
  REQUIRE(untouched.size() == 3);

  auto dup_only = prune_redundant({a, b, c}, ds, true, false);
  REQUIRE(dup_only.size() == 2);  // complement kept
}

TEST_CASE("single tree yields at most one rule after complement pruning") {
  Rng rng(5);
  const std::size_t n = 80;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform01();
    y[i] = 4.0 * (x[i] > 0.5) + 0.2 * rng.normal();
  }
  Dataset ds = testutil::make_numeric_dataset({"x", "y"}, {x, y}, "y");
  RuleGenConfig cfg;
  cfg.ntrees = 1;
  cfg.maxdepth = MaxDepthSpec::fixed_depth(1);
  cfg.identity_sampler = true;
  cfg.learnrate = 0.0;
  cfg.tree.minsplit = 10;
  cfg.tree.minbucket = 5;
  auto rules = generate_initial_ensemble(ds, cfg);
  REQUIRE(rules.size() <= 1);
}

TEST_CASE("zero learning rate reduces to bagging, tree by tree") {
  Dataset ds = small_gaussian(120, 3);
  RuleGenConfig cfg;
  cfg.ntrees = 6;
  cfg.learnrate = 0.0;
  cfg.seed = 99;
  cfg.tree.minsplit = 10;
  cfg.tree.minbucket = 5;
  auto rules = generate_initial_ensemble(ds, cfg);

  // Standalone replication of iteration b via the same substream protocol;
  // compare against the pre-prune extraction (pruning off).
  const std::vector<double> y = ds.response_values();
  RuleGenConfig noprune = cfg;
  noprune.removeduplicates = false;
  noprune.removecomplements = false;
  auto all_rules = generate_initial_ensemble(ds, noprune);

  std::size_t cursor = 0;
  for (int b = 1; b <= cfg.ntrees; ++b) {
    Rng rng = substream(cfg.seed, stream::kTrees, static_cast<std::uint64_t>(b));
    auto idx = subsample(ds.n_rows(), cfg.sampfrac, ds.weights, rng);
    std::vector<double> ysub(idx.size()), wsub(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ysub[i] = y[idx[i]];
      wsub[i] = ds.weights[idx[i]];
    }
    TreeConfig tc = cfg.tree;
    tc.maxdepth = 3;
    auto tree = grow_tree(ds, idx, ysub, wsub, tc, rng);
    auto standalone = extract_rules(*tree, ds, b);
    REQUIRE(cursor + standalone.size() <= all_rules.size());
    for (std::size_t k = 0; k < standalone.size(); ++k) {
      const Rule& got = all_rules[cursor + k];
      const Rule& want = standalone[k];
      REQUIRE(got.conditions.size() == want.conditions.size());
      for (std::size_t ci = 0; ci < want.conditions.size(); ++ci) {
        REQUIRE(got.conditions[ci].variable == want.conditions[ci].variable);
        REQUIRE(got.conditions[ci].op == want.conditions[ci].op);
        REQUIRE(got.conditions[ci].cut == want.conditions[ci].cut);
        REQUIRE(got.conditions[ci].levels == want.conditions[ci].levels);
      }
    }
    cursor += standalone.size();
  }
  REQUIRE(cursor == all_rules.size());
  REQUIRE_FALSE(rules.empty());
}

TEST_CASE("rule generation is independent of thread count when bagging") {
  Dataset ds = small_gaussian(100, 4);
  RuleGenConfig cfg;
  cfg.ntrees = 8;
  cfg.learnrate = 0.0;
  cfg.seed = 7;
  cfg.tree.minsplit = 10;
  cfg.tree.minbucket = 5;
  cfg.threads = 1;
  auto seq = generate_initial_ensemble(ds, cfg);
  cfg.threads = 4;
  auto par = generate_initial_ensemble(ds, cfg);
  REQUIRE(seq.size() == par.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    REQUIRE(seq[k].sequence == par[k].sequence);
    REQUIRE(describe_rule(seq[k], ds.schema) ==
            describe_rule(par[k], ds.schema));
  }
}

TEST_CASE("rule condition counts respect the tree depth used") {
  Dataset ds = small_gaussian(150, 6);
  RuleGenConfig cfg;
  cfg.ntrees = 30;
  cfg.maxdepth = MaxDepthSpec::fixed_depth(3);
  cfg.seed = 11;
  auto rules = generate_initial_ensemble(ds, cfg);
  REQUIRE_FALSE(rules.empty());
  for (const Rule& r : rules) {
    REQUIRE(r.conditions.size() >= 1);
    REQUIRE(r.conditions.size() <= 3);
  }
}

TEST_CASE("post-prune rules are pairwise distinct and complement-free") {
  Dataset ds = small_gaussian(90, 8);
  RuleGenConfig cfg;
  cfg.ntrees = 25;
  cfg.seed = 13;
  cfg.tree.minsplit = 10;
  cfg.tree.minbucket = 5;
  auto rules = generate_initial_ensemble(ds, cfg);
  const std::size_t n = ds.n_rows();
  std::vector<std::vector<int>> vectors;
  for (const Rule& r : rules) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = r.evaluate(ds, i) ? 1 : 0;
    vectors.push_back(std::move(v));
  }
  for (std::size_t a = 0; a < vectors.size(); ++a)
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      bool dup = true, comp = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (vectors[a][i] != vectors[b][i]) dup = false;
        if (vectors[a][i] != 1 - vectors[b][i]) comp = false;
      }
      REQUIRE_FALSE(dup);
      REQUIRE_FALSE(comp);
    }
}

TEST_CASE("gaussian boosting telescopes exactly") {
  Dataset ds = small_gaussian(100, 10);
  const std::vector<double> y = ds.response_values();
  const std::size_t n = ds.n_rows();
  const double nu = 0.1;

  BoostState state;
  state.family = Family::Gaussian;
  state.nu = nu;
  state.eta.assign(n, 0.0);
  std::vector<double> f_sum(n, 0.0);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;

  TreeConfig tc;
  tc.minsplit = 10;
  tc.minbucket = 5;
  tc.mode = TreeMode::Cart;
  for (int b = 1; b <= 5; ++b) {
    auto ytil = pseudo_response(Family::Gaussian, y, state.eta);
    Rng rng(static_cast<std::uint64_t>(b));
    auto tree = grow_tree(ds, rows, ytil, ds.weights, tc, rng);
    for (std::size_t i = 0; i < n; ++i)
      f_sum[i] += predict_tree(*tree, ds, i);
    update_eta(state, *tree, ds);
  }
  auto resid = pseudo_response(Family::Gaussian, y, state.eta);
  for (std::size_t i = 0; i < n; ++i) {
    REQUIRE(state.eta[i] == Catch::Approx(nu * f_sum[i]).margin(1e-12));
    REQUIRE(resid[i] == Catch::Approx(y[i] - state.eta[i]).margin(1e-12));
  }
}
