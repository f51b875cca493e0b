#pragma once

// Shared fixtures for the test suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "rulepress/rulepress.hpp"

namespace testutil {

using namespace rulepress;

inline Dataset make_numeric_dataset(
    const std::vector<std::string>& names,
    const std::vector<std::vector<double>>& columns,
    const std::string& response) {
  Dataset ds;
  ds.schema.resize(names.size());
  ds.columns.resize(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    ds.schema[j].name = names[j];
    ds.schema[j].kind = ColumnKind::Continuous;
    ds.columns[j].num = columns[j];
  }
  ds.weights.assign(columns[0].size(), 1.0);
  ds.response = response;
  ds.validate();
  return ds;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() /
            ("rulepress_test_" + std::to_string(::getpid()) + "_" + name))
               .string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// The worked example tree: a continuous split at the root, an unordered
// factor split on the left, an ordered factor split on the right.
struct ExampleTree {
  std::vector<ColumnSchema> schema;
  Dataset data;
  std::unique_ptr<TreeNode> tree;

  ExampleTree() {
    ColumnSchema x4{"x4", ColumnKind::Continuous, {}};
    ColumnSchema x3{"x3", ColumnKind::UnorderedCategorical,
                    {"a", "b", "c", "d", "e"}};
    ColumnSchema x5{"x5", ColumnKind::OrderedCategorical,
                    {"never", "seldom", "sometimes", "often"}};
    ColumnSchema y{"y", ColumnKind::Continuous, {}};
    schema = {x4, x3, x5, y};

    data.schema = schema;
    data.columns.resize(4);
    data.columns[0].num = {80, 80, 90, 90, 80, 90};
    data.columns[1].cat = {0, 1, 0, 0, 2, 3};           // a b a a c d
    data.columns[2].cat = {0, 3, 0, 3, 1, 2};           // never often never often seldom sometimes
    data.columns[3].num = {1, 2, 3, 4, 5, 6};
    data.weights.assign(6, 1.0);
    data.response = "y";
    data.validate();

    tree = std::make_unique<TreeNode>();
    tree->id = 1;
    tree->depth = 0;
    tree->split = SplitSpec{0, false, 82.7, {}};

    auto left = std::make_unique<TreeNode>();
    left->id = 2;
    left->depth = 1;
    left->split = SplitSpec{1, true, 0.0, {0, 2}};  // x3 in {a, c}
    left->left = std::make_unique<TreeNode>();
    left->left->id = 3;
    left->left->depth = 2;
    left->left->prediction = 1.0;
    left->right = std::make_unique<TreeNode>();
    left->right->id = 4;
    left->right->depth = 2;
    left->right->prediction = 2.0;

    auto right = std::make_unique<TreeNode>();
    right->id = 5;
    right->depth = 1;
    right->split = SplitSpec{2, false, 2.0, {}};  // x5 <= seldom (level 2 of 4)
    right->left = std::make_unique<TreeNode>();
    right->left->id = 6;
    right->left->depth = 2;
    right->left->prediction = 3.0;
    right->right = std::make_unique<TreeNode>();
    right->right->id = 7;
    right->right->depth = 2;
    right->right->prediction = 4.0;

    tree->left = std::move(left);
    tree->right = std::move(right);
  }
};

}  // namespace testutil
