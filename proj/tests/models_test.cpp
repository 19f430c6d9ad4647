#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "swarmxai/remote_model.hpp"

using namespace swarmxai;

namespace {

Dataset blobs(std::uint64_t seed, std::size_t per_class) {
  Rng rng(seed);
  auto gauss = [&] {
    // Box-Muller
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  std::vector<std::vector<double>> rows;
  Labels y;
  for (std::size_t i = 0; i < per_class; ++i) {
    rows.push_back({gauss(), gauss()});
    y.push_back(0);
    rows.push_back({10 + gauss(), 10 + gauss()});
    y.push_back(1);
  }
  return fixtures::make(rows, y);
}

}  // namespace

TEST(Knn, OneNearestMemorisesTraining) {
  const auto ds = fixtures::iris();
  const auto model = train(ModelKind::knn, ds, {{"k", 1}}, 0);
  // Iris has duplicate rows with different labels only if identical features; check rows that are unique
  const auto y = model->predict(ds.features);
  std::size_t agree = 0;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) agree += y[r] == ds.labels[r];
  EXPECT_GE(agree, ds.n_rows() - 1);
}

TEST(Knn, NearestOfTwo) {
  const auto ds = fixtures::make({{0}, {10}}, {0, 1});
  const auto model = train(ModelKind::knn, ds, {{"k", 1}}, 0);
  EXPECT_EQ(model->predict(Matrix::from_rows({{1}})), (Labels{0}));
  EXPECT_EQ(model->predict(Matrix::from_rows({{9}})), (Labels{1}));
}

TEST(Knn, VoteTieGoesToLowerClass) {
  const auto ds = fixtures::make({{0}, {2}}, {1, 0});
  const auto model = train(ModelKind::knn, ds, {{"k", 2}}, 0);
  EXPECT_EQ(model->predict(Matrix::from_rows({{1}})), (Labels{0}));
}

TEST(Tree, DepthOneSeparatesLinearData) {
  const auto ds = fixtures::make({{1}, {2}, {3}, {7}, {8}, {9}}, {0, 0, 0, 1, 1, 1});
  const auto model = train(ModelKind::decision_tree, ds, {{"max_depth", 1}}, 0);
  EXPECT_EQ(score(Metric::accuracy, ds.labels, model->predict(ds.features)), 1.0);
}

TEST(GaussianNb, SeparatedBlobs) {
  const auto tr = blobs(1, 50);
  const auto te = blobs(2, 50);
  const auto model = train(ModelKind::gaussian_nb, tr, {}, 0);
  EXPECT_GE(score(Metric::accuracy, te.labels, model->predict(te.features)), 0.99);
}

TEST(Models, EmptyMatrixGivesEmptyLabels) {
  const auto ds = fixtures::iris();
  for (auto kind : {ModelKind::knn, ModelKind::gaussian_nb, ModelKind::decision_tree}) {
    const auto model = train(kind, ds, {}, 0);
    EXPECT_TRUE(model->predict(Matrix(0, 4)).empty());
    EXPECT_THROW(model->predict(Matrix(2, 3)), ModelError);
  }
}

TEST(Models, PredictIsPure) {
  const auto ds = fixtures::iris();
  for (auto kind : {ModelKind::knn, ModelKind::gaussian_nb, ModelKind::decision_tree}) {
    const auto model = train(kind, ds, {}, 0);
    EXPECT_EQ(model->predict(ds.features), model->predict(ds.features));
  }
}

TEST(Models, TrainRejections) {
  const auto ds = fixtures::iris();
  EXPECT_THROW(train(ModelKind::knn, ds, {{"depth", 2}}, 0), Error);
  EXPECT_THROW(train(ModelKind::remote, ds, {}, 0), Error);
  EXPECT_EQ(parse_model_kind("nb"), ModelKind::gaussian_nb);
  EXPECT_EQ(parse_model_kind("tree"), ModelKind::decision_tree);
  EXPECT_THROW(parse_model_kind("xgboost"), Error);
}

TEST(Score, Accuracy) {
  const Labels y{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  Labels yh = y;
  EXPECT_DOUBLE_EQ(score(Metric::accuracy, y, yh), 1.0);
  yh[0] = 1;
  yh[1] = 1;
  yh[5] = 0;
  yh[6] = 0;
  EXPECT_DOUBLE_EQ(score(Metric::accuracy, y, yh), 0.6);
}

TEST(Score, MacroF1) {
  EXPECT_DOUBLE_EQ(score(Metric::macro_f1, Labels{0, 1}, Labels{1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(score(Metric::macro_f1, Labels{0, 1, 2}, Labels{0, 1, 2}), 1.0);
  // class 0: P=1/2 R=1 F=2/3, class 1: P=1 R=1/2 F=2/3
  EXPECT_NEAR(score(Metric::macro_f1, Labels{0, 1, 1}, Labels{0, 0, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(score(Metric::accuracy, Labels{0}, Labels{0, 1}), Error);
  EXPECT_THROW(score(Metric::accuracy, Labels{}, Labels{}), Error);
}

TEST(Remote, ConstantWorker) {
  auto m = RemoteModel::spawn({SWARMXAI_WORKER, "constant", "3", "4", "0"}, std::chrono::seconds(10));
  EXPECT_EQ(m->n_classes(), 3u);
  EXPECT_EQ(m->n_features(), 4u);
  EXPECT_EQ(m->predict(Matrix(5, 4)), Labels(5, 0));
  EXPECT_EQ(m->predict(Matrix(2, 4)), Labels(2, 0));
}

TEST(Remote, BadLengthNamesCounts) {
  auto m = RemoteModel::spawn({SWARMXAI_WORKER, "bad-length", "3", "4"}, std::chrono::seconds(10));
  try {
    m->predict(Matrix(5, 4));
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 5 labels, got 4"), std::string::npos) << e.what();
  }
}

TEST(Remote, OutOfRangeLabelRejected) {
  auto m = RemoteModel::spawn({SWARMXAI_WORKER, "constant", "3", "4", "7"}, std::chrono::seconds(10));
  EXPECT_THROW(m->predict(Matrix(1, 4)), ProtocolError);
}

TEST(Remote, TimeoutAndExit) {
  auto silent = RemoteModel::spawn({SWARMXAI_WORKER, "silent", "3", "4"}, std::chrono::milliseconds(300));
  EXPECT_THROW(silent->predict(Matrix(1, 4)), ProtocolError);
  auto gone = RemoteModel::spawn({SWARMXAI_WORKER, "exit", "3", "4"}, std::chrono::seconds(5));
  EXPECT_THROW(gone->predict(Matrix(1, 4)), ProtocolError);
}

TEST(Remote, MissingExecutable) {
  EXPECT_THROW(RemoteModel::spawn({"/nonexistent/worker"}, std::chrono::seconds(1)), ModelError);
}

TEST(Remote, MatchesBuiltInModel) {
  const auto ds = fixtures::iris();
  auto remote = RemoteModel::spawn({SWARMXAI_WORKER, "model", fixtures::data_path("iris.csv"), "tree"},
                                   std::chrono::seconds(10));
  const auto local = train(ModelKind::decision_tree, ds, {}, 0);
  EXPECT_EQ(remote->predict(ds.features), local->predict(ds.features));
}
