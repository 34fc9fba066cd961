/*
 * Copyright 2026 The roomcast Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace roomcast::gbm {
namespace {

using roomcast::testing::make_matrix;
using roomcast::testing::stump;

struct Fixture {
  FeatureMatrix x;
  std::vector<std::vector<double>> rows;
};

Fixture random_fixture(Rng& rng, std::size_t n, std::size_t p, bool coarse) {
  Fixture f;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(p);
    for (auto& v : r) v = coarse ? static_cast<double>(rng.index(5)) : rng.uniform() * 10.0;
    y[i] = 20.0 + 3.0 * std::sin(r[0]) + (p > 1 ? r[1] * 0.5 : 0.0) + rng.normal();
    f.rows.push_back(r);
  }
  f.x = make_matrix(names, f.rows, y);
  return f;
}

/// Compares a library tree with the reference one node by node.
void expect_same_tree(const Tree& t, int k, const oracle::RefTree& ref, int rk) {
  const auto& a = t.nodes()[k];
  const auto& b = ref.nodes[rk];
  ASSERT_EQ(a.is_leaf(), b.leaf);
  if (a.is_leaf()) {
    EXPECT_NEAR(a.weight, b.weight, 1e-10);
    return;
  }
  ASSERT_EQ(a.feature, b.feature);
  EXPECT_NEAR(a.threshold, b.threshold, 1e-10);
  expect_same_tree(t, a.left, ref, b.left);
  expect_same_tree(t, a.right, ref, b.right);
}

TEST(Train, MatchesExhaustiveSearchOnRandomFixtures) {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + rng.index(26), p = 1 + rng.index(3);
    const int depth = 1 + static_cast<int>(rng.index(2));
    const double lambda = trial % 3 == 0 ? 0.0 : 1.0;
    const double gamma = trial % 4 == 0 ? 0.5 : 0.0;
    const auto f = random_fixture(rng, n, p, trial % 2 == 1);
    const auto model = train(f.x, {depth, 1, gamma, lambda, 1.0});
    const double base = model.base_score();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = base - f.x.target[i];
    const auto ref = oracle::exhaustive_tree(f.rows, g, depth, lambda, gamma);
    SCOPED_TRACE("trial " + std::to_string(trial));
    expect_same_tree(model.trees().front(), 0, ref, 0);
    for (const auto& r : f.rows) EXPECT_NEAR(model.predict(r), base + ref.predict(r), 1e-10);
  }
}

TEST(Train, TwentyRowTwoFeatureDepthTwo) {
  Rng rng(20);
  const auto f = random_fixture(rng, 20, 2, false);
  const auto model = train(f.x, {2, 1, 0.0, 1.0, 1.0});
  std::vector<double> g(20);
  for (std::size_t i = 0; i < 20; ++i) g[i] = model.base_score() - f.x.target[i];
  expect_same_tree(model.trees().front(), 0, oracle::exhaustive_tree(f.rows, g, 2, 1.0, 0.0), 0);
  EXPECT_EQ(model.trees().front().depth(), 2);
}

TEST(Train, EmptyEnsemblePredictsBase) {
  const auto x = make_matrix({"a"}, {{1}, {2}, {3}}, {10, 20, 30});
  const auto m = train(x, {3, 0, 0.0, 1.0, 0.3});
  EXPECT_EQ(m.predict(std::vector<double>{7.0}), 20.0);
  EXPECT_TRUE(m.trees().empty());
}

TEST(Train, ConstantTargetGivesZeroLeaves) {
  const auto x = make_matrix({"a", "b"}, {{1, 5}, {2, 4}, {3, 3}, {4, 2}}, {22, 22, 22, 22});
  const auto m = train(x, {3, 5, 0.0, 1.0, 0.3});
  for (const auto& t : m.trees()) {
    for (const auto& n : t.nodes()) {
      if (n.is_leaf()) {
        EXPECT_EQ(n.weight, 0.0);
      }
    }
  }
  EXPECT_EQ(m.predict(std::vector<double>{9, 9}), 22.0);
}

TEST(Train, LargeGammaDegeneratesToBase) {
  Rng rng(21);
  const auto f = random_fixture(rng, 30, 3, false);
  const auto m = train(f.x, {4, 10, 1e9, 1.0, 0.3});
  for (const auto& t : m.trees()) EXPECT_EQ(t.nodes().size(), 1u);
  for (const auto& r : f.rows) EXPECT_NEAR(m.predict(r), m.base_score(), 1e-12);
}

TEST(Train, TargetShiftMovesEveryPredictionByTheShift) {
  Rng rng(22);
  auto f = random_fixture(rng, 60, 3, false);
  const auto a = train(f.x, {3, 15, 0.05, 1.0, 0.3});
  for (auto& v : f.x.target) v += 7.0;
  const auto b = train(f.x, {3, 15, 0.05, 1.0, 0.3});
  for (const auto& r : f.rows) EXPECT_NEAR(b.predict(r), a.predict(r) + 7.0, 1e-9);
}

TEST(Train, LossNonIncreasingAndInputChecks) {
  Rng rng(23);
  const auto f = random_fixture(rng, 200, 3, false);
  TrainingTrace trace;
  train(f.x, {4, 50, 0.0, 1.0, 0.3}, &trace);
  ASSERT_EQ(trace.train_mse.size(), 51u);
  for (std::size_t r = 1; r < trace.train_mse.size(); ++r) EXPECT_LE(trace.train_mse[r], trace.train_mse[r - 1]);
  EXPECT_THROW(train(f.x, {0, 1, 0.0, 1.0, 0.3}), ConfigError);
  EXPECT_THROW(train(f.x, {1, 1, 0.0, 1.0, 0.0}), ConfigError);
  auto bad = f.x;
  bad.values[3] = NAN;
  EXPECT_THROW(train(bad, Hyperparams{}), NumericError);
}

TEST(Predict, HandRoutedStump) {
  const Ensemble m({"x"}, 20.0, 0.5, 1.0, 0.0, {stump(0, 5.0, -1.0, 1.0)});
  EXPECT_EQ(m.predict(std::vector<double>{4.0}), 19.5);
  EXPECT_EQ(m.predict(std::vector<double>{6.0}), 20.5);
  EXPECT_EQ(m.predict(std::vector<double>{5.0}), 20.5);  // ties go right
  EXPECT_THROW(m.predict(std::vector<double>{1.0, 2.0}), ConfigError);
}

TEST(Predict, UnusedFeaturesDoNotMatterAndCallsArePure) {
  const Ensemble m({"x", "unused"}, 20.0, 0.5, 1.0, 0.0, {stump(0, 5.0, -1.0, 1.0)});
  EXPECT_EQ(m.predict(std::vector<double>{4.0, -1e9}), m.predict(std::vector<double>{4.0, 1e9}));
  Rng rng(24);
  const auto f = random_fixture(rng, 100, 3, false);
  const auto trained = train(f.x, Hyperparams{});
  for (const auto& r : f.rows) EXPECT_EQ(trained.predict(r), trained.predict(r));
}

TEST(Importance, ZeroStumpAndDominantFeature) {
  const Ensemble none({"a", "b"}, 1.0, 1.0, 0.0, 0.0, {Tree{}});
  EXPECT_EQ(feature_importance_gain(none), (std::map<std::string, double>{{"a", 0.0}, {"b", 0.0}}));
  auto s = stump(1, 0.5, -1, 1);
  auto nodes = s.nodes();
  nodes[0].gain = 3.0;
  const Ensemble one({"a", "b", "c"}, 0.0, 1.0, 0.0, 0.0, {Tree(nodes)});
  const auto imp = feature_importance_gain(one);
  EXPECT_EQ(imp.at("b"), 1.0);
  EXPECT_EQ(imp.at("a"), 0.0);
  EXPECT_EQ(imp.at("c"), 0.0);
}

TEST(Importance, MvartDominatesWhenTargetFollowsIt) {
  Rng rng(25);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 500; ++i) {
    const double mvart = 20 + 5 * rng.uniform();
    rows.push_back({static_cast<double>(rng.index(24)), 15 + 10 * rng.uniform(), mvart});
    y.push_back(mvart + 0.05 * rng.normal());
  }
  const auto m = train(make_matrix({"Hour", "OutTemp", "MVART"}, rows, y), Hyperparams{});
  const auto imp = feature_importance_gain(m);
  EXPECT_GT(imp.at("MVART"), imp.at("Hour"));
  EXPECT_GT(imp.at("MVART"), imp.at("OutTemp"));
}

TEST(Grid, DefaultRangesHaveSixtyFourDistinctRows) {
  EXPECT_EQ(GridRanges{}.combinations().size(), 64u);
  GridRanges dup;
  dup.max_depth = {2, 2};
  dup.n_trees = {3, 3};
  dup.gamma = {0.0, 0.0};
  EXPECT_EQ(dup.combinations().size(), 1u);
}

TEST(Grid, SingleCombinationAndTieBreaking) {
  Rng rng(26);
  const auto f = random_fixture(rng, 80, 2, false);
  GridRanges one;
  one.max_depth = {2};
  one.n_trees = {5};
  one.gamma = {0.0};
  const auto r = grid_search(f.x, f.x, one);
  EXPECT_EQ(r.best, (Hyperparams{2, 5, 0.0, 1.0, 0.3}));
  ASSERT_EQ(r.table.size(), 1u);
  // Equal scores: fewer trees, then shallower trees win.
  GridRanges tie;
  tie.max_depth = {4, 2};
  tie.n_trees = {9, 3};
  tie.gamma = {0.0};
  const auto t = grid_search(f.x, tie, [](const Ensemble&) { return stats::metrics(std::vector<double>{1.0}, std::vector<double>{2.0}); });
  EXPECT_EQ(t.best.n_trees, 3);
  EXPECT_EQ(t.best.max_depth, 2);
  EXPECT_EQ(t.table.size(), 4u);
  GridRanges empty;
  empty.gamma.clear();
  EXPECT_THROW(grid_search(f.x, f.x, empty), ConfigError);
}

}  // namespace
}  // namespace roomcast::gbm
