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

namespace roomcast::explain {
namespace {

using roomcast::testing::make_matrix;
using roomcast::testing::stump;

/// y = intercept + coef . x
struct LinearBox {
  std::vector<std::string> names;
  std::vector<double> coef;
  double intercept = 0.0;
  double predict(std::span<const double> row) const {
    double y = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) y += coef[j] * row[j];
    return y;
  }
  const std::vector<std::string>& feature_names() const { return names; }
};

FeatureMatrix random_matrix(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& r : rows)
    for (auto& v : r) v = rng.normal() * 3.0 + 10.0;
  return make_matrix(names, rows);
}

/// Additive ensemble: 20 + stump(x0 at 10: -2/+3) + stump(x1 at 9: 1/-1).
gbm::Ensemble additive_model(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return gbm::Ensemble(names, 20.0, 1.0, 0.0, 0.0, {stump(0, 10.0, -2.0, 3.0), stump(1, 9.0, 1.0, -1.0)});
}

const gbm::Ensemble& trained_synthetic() {
  static const gbm::Ensemble m = [] {
    const auto& r = roomcast::testing::seed42_ranges();
    const auto x = build_design_matrix(roomcast::testing::seed42_table(), EngineeringConfig{}, FeatureSelection::all());
    return gbm::train(forecast::rows_in(x, r.train_begin, r.train_end), gbm::Hyperparams{});
  }();
  return m;
}

const FeatureMatrix& synthetic_train_x() {
  static const FeatureMatrix x = [] {
    const auto& r = roomcast::testing::seed42_ranges();
    const auto m = build_design_matrix(roomcast::testing::seed42_table(), EngineeringConfig{}, FeatureSelection::all());
    return forecast::rows_in(m, r.train_begin, r.train_end);
  }();
  return x;
}

TEST(PermutationImportance, UnusedFeatureIsExactlyZero) {
  auto x = random_matrix(200, 3, 1);
  const auto m = additive_model(3);
  x.target = predict_all(m, x);
  const auto imp = permutation_importance(m, x, x.target);
  EXPECT_EQ(imp.at("x2"), 0.0);
  EXPECT_GT(imp.at("x0"), 0.0);
  EXPECT_EQ(permutation_importance(m, x, x.target), imp);
}

TEST(PermutationImportance, ShuffleIsSeedDeterministic) {
  auto x = random_matrix(200, 3, 2);
  const auto m = additive_model(3);
  x.target = predict_all(m, x);
  ImportanceOptions opt;
  opt.strategy = PermutationStrategy::kShuffle;
  opt.metric = ImportanceMetric::kMse;
  const auto a = permutation_importance(m, x, x.target, opt);
  EXPECT_EQ(a, permutation_importance(m, x, x.target, opt));
  EXPECT_GT(a.at("x0"), 0.0);
  EXPECT_EQ(a.at("x2"), 0.0);
}

TEST(Pdp, IgnoredFeatureIsFlatAndAdditiveEffectRecovered) {
  const auto x = random_matrix(150, 3, 3);
  const auto m = additive_model(3);
  const auto flat = pdp(m, x, "x2");
  const auto [lo, hi] = std::minmax_element(flat.mean_response.begin(), flat.mean_response.end());
  EXPECT_EQ(*hi - *lo, 0.0);
  const auto c = pdp(m, x, "x0", {25});
  ASSERT_EQ(c.grid.size(), 25u);
  const auto g = [](double v) { return v < 10.0 ? -2.0 : 3.0; };
  const double offset = c.mean_response[0] - g(c.grid[0]);
  for (std::size_t k = 0; k < c.grid.size(); ++k) EXPECT_NEAR(c.mean_response[k] - g(c.grid[k]), offset, 1e-12);
  EXPECT_THROW(pdp(m, x, "x0", {1}), ConfigError);
  EXPECT_THROW(pdp(m, x, "nope"), ConfigError);
}

TEST(Pdp, CategoricalLevelsAndDegenerateColumn) {
  auto x = make_matrix({"x0", "x1", "x2"}, {{1, 5, 2}, {3, 5, 2}, {3, 5, 2}, {7, 5, 2}});
  const auto m = additive_model(3);
  EXPECT_EQ(pdp(m, x, "x0", {20, true}).grid, (std::vector<double>{1, 3, 7}));
  const auto d = pdp(m, x, "x1");
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.grid.size(), 1u);
}

TEST(Pdp, MvartCurveRisesOnTheSyntheticModel) {
  PdpOptions opt;
  opt.max_rows = 3000;
  const auto c = pdp(trained_synthetic(), synthetic_train_x(), "MVART", opt);
  for (std::size_t k = 1; k < c.grid.size(); ++k) EXPECT_GE(c.mean_response[k], c.mean_response[k - 1] - 0.1) << k;
  EXPECT_GT(c.mean_response.back() - c.mean_response.front(), 5.0);
}

TEST(RidgeSurrogate, RecoversALinearBlackBoxExactly) {
  const auto x = random_matrix(100, 4, 4);
  const LinearBox box{x.feature_names, {0.5, -1.25, 3.0, 0.0}, 21.0};
  const auto s = fit_surrogate_ridge(box, x, 0.0);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(s.coefficients[j], box.coef[j], 1e-8 * std::max(1.0, std::abs(box.coef[j])));
  EXPECT_NEAR(s.intercept, 21.0, 1e-8 * 21.0);
  EXPECT_GE(s.fidelity_r2, 1.0 - 1e-10);
}

TEST(RidgeSurrogate, HeavyPenaltyFlattensToTheMean) {
  const auto x = random_matrix(50, 2, 5);
  const LinearBox box{x.feature_names, {2.0, -1.0}, 5.0};
  const auto s = fit_surrogate_ridge(box, x, 1e9);
  const auto yhat = predict_all(box, x);
  const double mean = std::accumulate(yhat.begin(), yhat.end(), 0.0) / 50.0;
  for (double c : s.coefficients) EXPECT_LT(std::abs(c), 1e-6);
  EXPECT_NEAR(s.standardized_intercept, mean, 1e-12);
  EXPECT_NEAR(s.predict(x.row(0)), mean, 1e-5);
}

TEST(RidgeSurrogate, FiveRowFixtureMatchesGaussianElimination) {
  const auto x = make_matrix({"x0", "x1"}, {{1, 2}, {2, 1}, {3, 5}, {4, 3}, {6, 4}});
  const auto m = additive_model(2);
  const auto s = fit_surrogate_ridge(m, x, 1.0);
  // Independent derivation: standardize with population sd, solve
  // (Z'Z + I) b = Z'(y - mean y), then map back to original units.
  const auto y = predict_all(m, x);
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / 5.0;
  std::vector<double> mu(2, 0.0), sd(2, 0.0);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < 5; ++i) mu[j] += x.at(i, j) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) sd[j] += (x.at(i, j) - mu[j]) * (x.at(i, j) - mu[j]) / 5.0;
    sd[j] = std::sqrt(sd[j]);
  }
  std::vector<std::vector<double>> a(2, std::vector<double>(2, 0.0));
  std::vector<double> rhs(2, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    const double z[2] = {(x.at(i, 0) - mu[0]) / sd[0], (x.at(i, 1) - mu[1]) / sd[1]};
    for (std::size_t j = 0; j < 2; ++j) {
      rhs[j] += z[j] * (y[i] - ym);
      for (std::size_t k = 0; k < 2; ++k) a[j][k] += z[j] * z[k];
    }
  }
  a[0][0] += 1.0;
  a[1][1] += 1.0;
  const auto beta = oracle::gauss_solve(a, rhs);
  double intercept = ym;
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(s.standardized_coefficients[j], beta[j], 1e-12);
    EXPECT_NEAR(s.coefficients[j], beta[j] / sd[j], 1e-12);
    intercept -= beta[j] / sd[j] * mu[j];
  }
  EXPECT_NEAR(s.intercept, intercept, 1e-12);
}

TEST(TreeSurrogate, StumpIsReproducedAndConstantStaysARoot) {
  const auto x = random_matrix(120, 3, 6);
  const gbm::Ensemble box(x.feature_names, 22.0, 1.0, 0.0, 0.0, {stump(1, 10.0, -1.5, 2.5)});
  const auto s = fit_surrogate_tree(box, x, 1);
  EXPECT_EQ(s.fidelity_r2, 1.0);
  EXPECT_EQ(s.tree().root().feature, 1);
  EXPECT_EQ(s.importance.at("x1"), 1.0);
  const gbm::Ensemble flat(x.feature_names, 22.0, 1.0, 0.0, 0.0, {});
  const auto c = fit_surrogate_tree(flat, x, 4);
  EXPECT_EQ(c.tree().nodes().size(), 1u);
  EXPECT_THROW(fit_surrogate_tree(box, x, 0), ConfigError);
}

TEST(TreeSurrogate, SyntheticModelLeansOnMvart) {
  const auto x = synthetic_train_x().slice(0, 20000);
  const auto s = fit_surrogate_tree(trained_synthetic(), x, 6);
  const auto best = std::max_element(s.importance.begin(), s.importance.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(best->first, "MVART");
  EXPECT_GT(best->second, 0.5);
}

TEST(Lime, NullModelGetsNoAttribution) {
  const auto x = random_matrix(300, 4, 7);
  const gbm::Ensemble zero(x.feature_names, 21.0, 1.0, 0.0, 0.0, {});
  const auto e = lime_explain(zero, x.row(3), x);
  for (double c : e.attribution.contributions) EXPECT_NEAR(c, 0.0, 1e-9);
  EXPECT_GE(e.local_r2, 0.0);
  EXPECT_LE(e.local_r2, 1.0);
  ASSERT_TRUE(e.attribution.local_r2);
  EXPECT_EQ(e.labels.size(), 4u);
}

TEST(Lime, DeterministicForASeed) {
  const auto x = random_matrix(300, 4, 8);
  const auto m = additive_model(4);
  LimeOptions opt;
  opt.n_samples = 800;
  const auto a = lime_explain(m, x.row(0), x, opt);
  const auto b = lime_explain(m, x.row(0), x, opt);
  EXPECT_EQ(a.attribution.contributions, b.attribution.contributions);
  EXPECT_EQ(a.local_r2, b.local_r2);
  opt.n_samples = 10;
  EXPECT_THROW(lime_explain(m, x.row(0), x, opt), ConfigError);
}

TEST(Lime, StumpFeatureDominatesWithOppositeSigns) {
  const auto x = random_matrix(400, 4, 9);
  const gbm::Ensemble box(x.feature_names, 20.0, 1.0, 0.0, 0.0, {stump(2, 10.0, -3.0, 3.0)});
  std::vector<double> low(x.row(0).begin(), x.row(0).end()), high = low;
  low[2] = 4.0;
  high[2] = 16.0;
  const auto a = lime_explain(box, low, x), b = lime_explain(box, high, x);
  const auto dominant = [](const Attribution& at) {
    std::size_t k = 0;
    for (std::size_t j = 1; j < at.contributions.size(); ++j)
      if (std::abs(at.contributions[j]) > std::abs(at.contributions[k])) k = j;
    return k;
  };
  EXPECT_EQ(dominant(a.attribution), 2u);
  EXPECT_EQ(dominant(b.attribution), 2u);
  EXPECT_LT(a.attribution.contributions[2] * b.attribution.contributions[2], 0.0);
}

TEST(Shap, BaseValueAdditiveEffectsAndDummy) {
  const auto m = additive_model(4);
  const std::vector<double> bg{9.0, 10.0, 0.0, 0.0}, inst{12.0, 5.0, 3.0, -7.0};
  const auto a = shap_exact(m, inst, bg);
  EXPECT_EQ(a.base_value, m.predict(bg));
  EXPECT_EQ(a.prediction, m.predict(inst));
  EXPECT_NEAR(a.contribution("x0"), 3.0 - (-2.0), 1e-12);
  EXPECT_NEAR(a.contribution("x1"), 1.0 - (-1.0), 1e-12);
  EXPECT_EQ(a.contribution("x2"), 0.0);
  EXPECT_EQ(a.contribution("x3"), 0.0);
  EXPECT_LT(std::abs(a.efficiency_gap()), 1e-12);
}

TEST(Shap, MatchesPermutationOracleOnATrainedModel) {
  Rng rng(10);
  auto x = random_matrix(300, 5, 11);
  for (std::size_t i = 0; i < x.rows(); ++i)
    x.target[i] = x.at(i, 0) * x.at(i, 1) * 0.1 + std::sin(x.at(i, 2)) + (x.at(i, 3) > 10 ? 2 : 0) + rng.normal() * 0.1;
  const auto m = gbm::train(x, {4, 30, 0.0, 1.0, 0.3});
  const auto bg = x.column_means();
  for (std::size_t i : {0u, 17u, 123u}) {
    const auto inst = std::vector<double>(x.row(i).begin(), x.row(i).end());
    const auto a = shap_exact(m, inst, bg);
    const auto ref = oracle::permutation_shapley([&](const std::vector<double>& r) { return m.predict(r); }, inst, bg);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a.contributions[j], ref[j], 1e-10) << "row " << i << " feature " << j;
    EXPECT_LT(std::abs(a.efficiency_gap()), 1e-9);
  }
}

TEST(Shap, SymmetricFeaturesShareCredit) {
  const gbm::Ensemble m({"a", "b", "c"}, 0.0, 1.0, 0.0, 0.0,
                        {gbm::Tree({roomcast::testing::branch(0, 1.0, 1, 2), roomcast::testing::leaf(0.0),
                                    roomcast::testing::branch(1, 1.0, 3, 4), roomcast::testing::leaf(0.0),
                                    roomcast::testing::leaf(5.0)})});
  const auto a = shap_exact(m, std::vector<double>{2, 2, 2}, std::vector<double>{0, 0, 0});
  EXPECT_NEAR(a.contributions[0], a.contributions[1], 1e-12);
  EXPECT_NEAR(a.contributions[0], 2.5, 1e-12);
  EXPECT_EQ(a.contributions[2], 0.0);
}

TEST(Shap, RefusesTooManyFeatures) {
  const auto m = additive_model(kMaxExactShapleyFeatures + 1);
  const std::vector<double> v(kMaxExactShapleyFeatures + 1, 0.0);
  EXPECT_THROW(shap_exact(m, v, v), ConfigError);
}

TEST(CasePair, FirstAccurateWithAMatchingDeviatedTruth) {
  forecast::ForecastRun run;
  run.y_true = {24.0, 25.0, 25.0, 24.0, 25.0};
  run.y_pred = {26.5, 25.005, 24.0, 24.5, 27.5};
  run.timestamps.resize(5);
  run.anchor_id.assign(5, 0);
  run.rows = {0, 1, 2, 3, 4};
  const auto p = select_case_pair(run, 0.01, 2.0);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->accurate, 1u);
  EXPECT_EQ(p->deviated, 4u);
  EXPECT_FALSE(select_case_pair(run, 0.001, 2.0));
}

}  // namespace
}  // namespace roomcast::explain
