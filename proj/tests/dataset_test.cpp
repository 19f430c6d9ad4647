#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace swarmxai;

TEST(ParseCsv, ThreeRowsTwoClasses) {
  std::istringstream in("x,y,label\n1,2,a\n3,4,a\n5,6,b\n");
  const auto ds = parse_csv(in);
  EXPECT_EQ(ds.n_rows(), 3u);
  EXPECT_EQ(ds.n_features(), 2u);
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.labels, (Labels{0, 0, 1}));
  EXPECT_DOUBLE_EQ(ds.features(2, 1), 6.0);
}

TEST(ParseCsv, NamedLabelColumnAnywhere) {
  std::istringstream in("label,x\nb,1\na,2\n");
  const auto ds = parse_csv(in, "label");
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"x"}));
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(ds.labels, (Labels{0, 1}));
}

TEST(ParseCsv, QuotedFields) {
  std::istringstream in("\"a,b\",label\n1,\"x y\"\n2,z\n");
  const auto ds = parse_csv(in);
  EXPECT_EQ(ds.feature_names.front(), "a,b");
  EXPECT_EQ(ds.class_names.front(), "x y");
}

TEST(ParseCsv, NonNumericCellNamesRowAndColumn) {
  std::istringstream in("x,y,label\n1,2,a\n3,abc,b\n");
  try {
    parse_csv(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
  }
}

TEST(ParseCsv, Rejections) {
  std::istringstream one_class("x,label\n1,a\n2,a\n");
  EXPECT_THROW(parse_csv(one_class), DataError);
  std::istringstream dup("x,x,label\n1,2,a\n2,3,b\n");
  EXPECT_THROW(parse_csv(dup), DataError);
  std::istringstream missing("x,label\n1,a\n2,b\n");
  EXPECT_THROW(parse_csv(missing, "nope"), DataError);
  std::istringstream ragged("x,y,label\n1,a\n2,3,b\n");
  EXPECT_THROW(parse_csv(ragged), DataError);
}

TEST(ParseCsv, RoundTripThroughWriter) {
  const auto ds = fixtures::make({{0.1, 1e-300}, {-2.5, 3}, {7, 8}}, {0, 1, 1});
  std::ostringstream out;
  write_csv(out, ds);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_csv(in), ds);
}

TEST(Iris, LoadsWithExpectedShape) {
  const auto ds = fixtures::iris();
  EXPECT_EQ(ds.n_rows(), 150u);
  EXPECT_EQ(ds.n_features(), 4u);
  EXPECT_EQ(ds.n_classes(), 3u);
  EXPECT_NE(std::find(ds.feature_names.begin(), ds.feature_names.end(), "petal width (cm)"), ds.feature_names.end());
}

TEST(Split, TenPerClassGivesThreeTestRows) {
  std::vector<std::vector<double>> rows;
  Labels y;
  for (int i = 0; i < 30; ++i) {
    rows.push_back({static_cast<double>(i)});
    y.push_back(i % 3);
  }
  const auto ds = fixtures::make(rows, y);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const auto s = stratified_split(ds, 0.3, seed);
    EXPECT_EQ(s.test.class_counts(), (std::vector<std::size_t>{3, 3, 3}));
    EXPECT_EQ(s.train.class_counts(), (std::vector<std::size_t>{7, 7, 7}));
  }
}

TEST(Split, IrisSeventyThirty) {
  const auto s = stratified_split(fixtures::iris(), 0.3, 5);
  EXPECT_EQ(s.test.n_rows(), 45u);
  EXPECT_EQ(s.test.class_counts(), (std::vector<std::size_t>{15, 15, 15}));
}

TEST(Split, DeterministicAndDisjoint) {
  const auto ds = fixtures::iris();
  const auto a = stratified_split(ds, 0.3, 11);
  const auto b = stratified_split(ds, 0.3, 11);
  const auto c = stratified_split(ds, 0.3, 12);
  EXPECT_EQ(a.test_rows, b.test_rows);
  EXPECT_NE(a.test_rows, c.test_rows);
  std::vector<std::size_t> all = a.train_rows;
  all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(150);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(all, expect);
}

TEST(Split, Rejections) {
  const auto ds = fixtures::make({{1}, {2}, {3}}, {0, 0, 1});
  EXPECT_THROW(stratified_split(ds, 0.3, 0), DataError);  // class 1 has one row
  const auto ok = fixtures::make({{1}, {2}, {3}, {4}}, {0, 0, 1, 1});
  EXPECT_THROW(stratified_split(ok, 0.0, 0), Error);
  EXPECT_THROW(stratified_split(ok, 1.0, 0), Error);
}

TEST(Folds, BalancedPerClass) {
  const auto ds = fixtures::iris();
  const auto folds = stratified_folds(ds, 5, 3);
  for (std::size_t f = 0; f < 5; ++f) {
    std::vector<std::size_t> per_class(3, 0);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      if (folds[r] == f) ++per_class[static_cast<std::size_t>(ds.labels[r])];
    }
    EXPECT_EQ(per_class, (std::vector<std::size_t>{10, 10, 10}));
  }
  EXPECT_THROW(stratified_folds(fixtures::make({{1}, {2}, {3}, {4}}, {0, 0, 1, 1}), 3, 0), DataError);
}

TEST(Shift, ZeroColumnShiftedByEpsilon) {
  const auto ds = fixtures::make({{0, 4}, {2, 5}, {5, 6}}, {0, 1, 1});
  const auto [shifted, report] = shift_zero_features(ds, 1.0);
  EXPECT_EQ(report.shifted_features, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(shifted.features(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(shifted.features(1, 0), 3.0);
  EXPECT_DOUBLE_EQ(shifted.features(2, 0), 6.0);
  EXPECT_DOUBLE_EQ(shifted.features(0, 1), 4.0);
  EXPECT_EQ(apply_shift(ds, report), shifted);
}

TEST(Shift, NoZerosIsNoOp) {
  const auto ds = fixtures::iris();
  const auto [shifted, report] = shift_zero_features(ds, 1.0);
  EXPECT_TRUE(report.shifted_features.empty());
  EXPECT_EQ(shifted, ds);
}

TEST(Shift, TwoZeroColumns) {
  const auto ds = fixtures::make({{0, 0, 1}, {1, 2, 3}}, {0, 1});
  EXPECT_EQ(shift_zero_features(ds, 1.0).second.shifted_features, (std::vector<std::size_t>{0, 1}));
}

TEST(Histogram, ConstantValuesOneBin) {
  const auto ds = fixtures::make({{1}, {1}, {1}, {1}}, {0, 0, 1, 1});
  const auto h = histogram(ds, 0, std::nullopt, 4);
  EXPECT_EQ(std::count(h.counts.begin(), h.counts.end(), 4u), 1);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 4u);
}

TEST(Histogram, TwoBins) {
  const auto ds = fixtures::make({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
  const auto h = histogram(ds, 0, std::nullopt, 2);
  EXPECT_EQ(h.bin_edges, (std::vector<double>{0, 1.5, 3}));
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2}));
}

TEST(Histogram, IrisPerClassCountsSumToClassSize) {
  const auto ds = fixtures::iris();
  for (ClassId c = 0; c < 3; ++c) {
    const auto h = histogram(ds, 3, c, 20);
    std::size_t expected = 0;
    for (ClassId y : ds.labels) expected += y == c;
    EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), expected);
    EXPECT_EQ(h.bin_edges.size(), 21u);
  }
}
