#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "swarmxai/evaluation.hpp"

using namespace swarmxai;

namespace {

// feature 0 separates the classes, feature 1 is seeded noise
Dataset informative_and_noise(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  Labels y;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (ClassId c : {0, 1}) {
      rows.push_back({c * 10.0 + rng.uniform(), rng.uniform(0.0, 10.0)});
      y.push_back(c);
    }
  }
  return fixtures::make(rows, y);
}

}  // namespace

TEST(Auc, FlatAndTrapezoid) {
  EXPECT_EQ(keep_absolute_auc(std::vector<double>{1.0, 1.0, 1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(keep_absolute_auc(std::vector<double>{0.5, 1.0}), 0.75);
  EXPECT_DOUBLE_EQ(keep_absolute_auc(std::vector<double>{0.8}), 0.8);
  EXPECT_THROW(keep_absolute_auc(std::vector<double>{}), Error);
}

TEST(KeepAbsolute, InformativeFirstWins) {
  const auto ds = informative_and_noise(20, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto good = keep_absolute(ds, ModelKind::decision_tree, {}, {"good", {0, 1}}, 5, Metric::accuracy, seed);
    const auto bad = keep_absolute(ds, ModelKind::decision_tree, {}, {"bad", {1, 0}}, 5, Metric::accuracy, seed);
    EXPECT_GE(good.auc, bad.auc) << seed;
    EXPECT_EQ(good.scores.size(), 2u);
    EXPECT_NEAR(good.auc, keep_absolute_auc(good.scores), 1e-12);
  }
}

TEST(KeepAbsolute, FullFeatureSetIndependentOfOrdering) {
  const auto ds = fixtures::iris();
  const auto a = keep_absolute(ds, ModelKind::knn, {}, random_ordering(4, 1), 5, Metric::accuracy, 3);
  const auto b = keep_absolute(ds, ModelKind::knn, {}, random_ordering(4, 2), 5, Metric::accuracy, 3);
  EXPECT_EQ(a.scores.back(), b.scores.back());
}

TEST(KeepAbsolute, ThreadsDoNotChangeScores) {
  const auto ds = fixtures::iris();
  const auto a = keep_absolute(ds, ModelKind::decision_tree, {}, anova_f_ordering(ds), 5, Metric::macro_f1, 3, 1);
  const auto b = keep_absolute(ds, ModelKind::decision_tree, {}, anova_f_ordering(ds), 5, Metric::macro_f1, 3, 4);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(KeepAbsolute, Rejections) {
  const auto ds = fixtures::iris();
  EXPECT_THROW(keep_absolute(ds, ModelKind::knn, {}, {"x", {0, 1, 2}}, 5, Metric::accuracy, 0), Error);
  EXPECT_THROW(keep_absolute(ds, ModelKind::knn, {}, {"x", {0, 1, 2, 2}}, 5, Metric::accuracy, 0), Error);
  EXPECT_THROW(keep_absolute(ds, ModelKind::knn, {}, {"x", {0, 1, 2, 3}}, 51, Metric::accuracy, 0), Error);
}

TEST(Anova, HandComputedFixture) {
  // feature 0: class 0 {0,1,-1,0}, class 1 {10,11,9,10}; feature 1 identical spread per class
  const auto ds = fixtures::make({{0, 1}, {1, 3}, {-1, 2}, {0, 2}, {10, 1}, {11, 3}, {9, 2}, {10, 2}},
                                 {0, 0, 0, 0, 1, 1, 1, 1});
  const auto f = anova_f_scores(ds);
  // SSB = 8 * 25 = 200 (df 1), SSW = 2 + 2 = 4 (df 6) -> F = 200 / (4 / 6) = 300
  EXPECT_NEAR(f[0], 300.0, 1e-9);
  EXPECT_NEAR(f[1], 0.0, 1e-12);
  EXPECT_EQ(anova_f_ordering(ds).order, (std::vector<std::size_t>{0, 1}));
}

TEST(Anova, ConventionsForDegenerateFeatures) {
  const auto ds = fixtures::make({{5, 0, 1}, {5, 0, 2}, {5, 1, 3}, {5, 1, 1}}, {0, 0, 1, 1});
  const auto f = anova_f_scores(ds);
  EXPECT_EQ(f[0], 0.0);
  EXPECT_TRUE(std::isinf(f[1]));
  EXPECT_EQ(anova_f_ordering(ds).order.front(), 1u);
  EXPECT_EQ(anova_f_ordering(ds).order.back(), 0u);
}

TEST(Anova, SeparatedGaussiansRankFirst) {
  Rng rng(5);
  std::vector<std::vector<double>> rows;
  Labels y;
  for (int i = 0; i < 20; ++i) {
    const ClassId c = i % 2;
    rows.push_back({rng.uniform(), c * 10.0 + rng.uniform() - 0.5});
    y.push_back(c);
  }
  EXPECT_EQ(anova_f_ordering(fixtures::make(rows, y)).order, (std::vector<std::size_t>{1, 0}));
}

TEST(RandomOrdering, DeterministicAndUniform) {
  EXPECT_EQ(random_ordering(1, 3).order, (std::vector<std::size_t>{0}));
  EXPECT_EQ(random_ordering(6, 3).order, random_ordering(6, 3).order);
  std::vector<int> first(4, 0);
  for (std::uint64_t s = 0; s < 10000; ++s) ++first[random_ordering(4, s).order[0]];
  for (int n : first) EXPECT_NEAR(n / 10000.0, 0.25, 0.02);
}

TEST(Ranking, SimpleAndTies) {
  auto t = ranking_table({"d"}, {"a", "b", "c"}, {{0.9, 0.8, 0.7}});
  EXPECT_EQ(t.ranks[0], (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(t.mean_rank, (std::vector<double>{1, 2, 3}));
  t = ranking_table({"d"}, {"a", "b", "c"}, {{0.9, 0.9, 0.7}});
  EXPECT_EQ(t.ranks[0], (std::vector<double>{1.5, 1.5, 3}));
  RankOptions min;
  min.ties = TieRule::min;
  t = ranking_table({"d"}, {"a", "b", "c"}, {{0.9, 0.9, 0.7}}, min);
  EXPECT_EQ(t.ranks[0], (std::vector<double>{1, 1, 3}));
  EXPECT_THROW(ranking_table({"d", "e"}, {"a", "b"}, {{0.9, 0.8}, {0.1}}), Error);
}

TEST(Ranking, RankSumsPerDataset) {
  const auto t = ranking_table({"d1", "d2"}, {"a", "b", "c", "d"}, {{0.5, 0.5, 0.5, 0.1}, {0.3, 0.2, 0.2, 0.9}});
  for (const auto& row : t.ranks) EXPECT_DOUBLE_EQ(std::accumulate(row.begin(), row.end(), 0.0), 10.0);
}

TEST(Ranking, PublishedAucTableReproducesPublishedRanks) {
  // per-dataset AUCs (rows: datasets) for eight methods, and the ranks reported alongside them
  const std::vector<std::string> datasets{"Vertebral", "Indian Liver", "Heart", "Wine", "Breast Cancer", "Iris"};
  const std::vector<std::string> methods{"SWARM", "Kernel SHAP", "Tree SHAP", "LIME", "PI", "ANOVA", "MI", "RFE"};
  const std::vector<std::vector<double>> auc{
      {0.8071, 0.8047, 0.8056, 0.8074, 0.8080, 0.7849, 0.7933, 0.7960},
      {0.6687, 0.6672, 0.6692, 0.6658, 0.6636, 0.6632, 0.6603, 0.6585},
      {0.8172, 0.8108, 0.8194, 0.8197, 0.8209, 0.7940, 0.7922, 0.7795},
      {0.9413, 0.9393, 0.9338, 0.9253, 0.9333, 0.9187, 0.9239, 0.9246},
      {0.9639, 0.9628, 0.9650, 0.9645, 0.9637, 0.9510, 0.9505, 0.9617},
      {0.9615, 0.9615, 0.9615, 0.9615, 0.9615, 0.9615, 0.9615, 0.9560}};
  const std::vector<std::vector<double>> published{
      {3, 5, 4, 2, 1, 8, 7, 6}, {2, 3, 1, 4, 5, 6, 7, 8}, {4, 5, 3, 2, 1, 6, 7, 8},
      {1, 2, 3, 5, 4, 8, 7, 6}, {3, 5, 1, 2, 4, 7, 8, 6}, {1, 1, 1, 1, 1, 1, 1, 8}};
  RankOptions min;
  min.ties = TieRule::min;
  const auto t = ranking_table(datasets, methods, auc, min);
  EXPECT_EQ(t.ranks, published);
}

TEST(Ordering, SwarmGlobalAveragesImportance) {
  ClassExplanation a{0, 0, {}};
  ClassExplanation b{1, 0, {}};
  for (std::size_t f = 0; f < 3; ++f) {
    FeatureExplanation fx;
    fx.feature_index = f;
    fx.importance = f == 2 ? 1.0 : 0.0;
    a.features.push_back(fx);
    fx.importance = f == 1 ? 3.0 : 0.0;
    b.features.push_back(fx);
  }
  const std::vector<ClassExplanation> both{a, b};
  EXPECT_EQ(swarm_global_ordering(both).order, (std::vector<std::size_t>{1, 2, 0}));
  const std::vector<ClassExplanation> one{a};
  EXPECT_EQ(swarm_global_ordering(one).order, (std::vector<std::size_t>{2, 0, 1}));
  for (auto& fx : a.features) fx.importance = 0.0;
  const std::vector<ClassExplanation> zero{a};
  EXPECT_EQ(swarm_global_ordering(zero).order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Ordering, JsonRoundTrip) {
  const FeatureOrdering o{"lime", {2, 0, 1}};
  const auto path = (std::filesystem::temp_directory_path() / "swarmxai_ordering.json").string();
  std::ofstream(path) << to_json(o).dump();
  const auto back = load_ordering(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.method_name, "lime");
  EXPECT_EQ(back.order, o.order);
  EXPECT_THROW(ordering_from_json(nlohmann::json{{"order", {0}}}), Error);
}

TEST(Sweep, SinglePointMatchesDirectCall) {
  const auto ds = fixtures::iris();
  SweepSettings s;
  s.base.iterations = 5;
  SweepGrid grid;
  grid.iterations = {5};
  const auto points = parameter_sweep(ds, ModelKind::decision_tree, {}, grid, s, 11);
  ASSERT_EQ(points.size(), 1u);
  const auto direct = swarm_keep_absolute(ds, ModelKind::decision_tree, {}, s.base, s, derive_seed(11, 0));
  EXPECT_EQ(points[0].aucs, (std::vector<double>{direct.auc}));
}

TEST(Sweep, RepeatsBracketMean) {
  const auto ds = fixtures::iris();
  SweepSettings s;
  s.repeats = 5;
  SweepGrid grid;
  grid.iterations = {5};
  grid.n_particles = {4, 6};
  const auto points = parameter_sweep(ds, ModelKind::decision_tree, {}, grid, s, 2);
  ASSERT_EQ(points.size(), 2u);
  for (const auto& p : points) {
    EXPECT_EQ(p.aucs.size(), 5u);
    EXPECT_LE(p.min, p.mean);
    EXPECT_LE(p.mean, p.max);
  }
  EXPECT_THROW(parameter_sweep(ds, ModelKind::decision_tree, {}, SweepGrid{{}, {1}, {{-1, 1}}}, s, 2), Error);
}
