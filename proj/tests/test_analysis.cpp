#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fluidity/analysis.hpp"
#include "oracles.hpp"

using namespace fluidity;

namespace {

std::vector<RatingCategory> cats(std::initializer_list<int> v) {
  std::vector<RatingCategory> out;
  for (int x : v) out.emplace_back(x);
  return out;
}

std::vector<int> ints(const std::vector<RatingCategory>& v) {
  std::vector<int> out;
  for (auto c : v) out.push_back(c.value());
  return out;
}

}  // namespace

TEST(Pearson, Examples) {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> lin{3, 5, 7, 9};
  std::vector<double> neg{-1, -2, -3, -4};
  std::vector<double> y{1, 3, 2, 4};
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-12);
  EXPECT_NEAR(pearson(x, y), 0.8, 1e-12);
}

TEST(Pearson, Errors) {
  std::vector<double> x{1, 2, 3};
  std::vector<double> flat{2, 2, 2};
  std::vector<double> shorter{1, 2};
  EXPECT_THROW(pearson(x, flat), UndefinedCorrelation);
  EXPECT_FALSE(try_pearson(x, flat).has_value());
  EXPECT_THROW(pearson(x, shorter), ValidationError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
}

TEST(Pearson, PropertiesAndOracle) {
  std::mt19937 rng(31);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(12), y(12);
    for (int i = 0; i < 12; ++i) {
      x[i] = g(rng);
      y[i] = 0.5 * x[i] + g(rng);
    }
    const double r = pearson(x, y);
    EXPECT_NEAR(r, oracle::pearson(x, y), 1e-12);
    EXPECT_NEAR(pearson(y, x), r, 1e-12);
    std::vector<double> ax(x), ny(y);
    for (auto& v : ax) v = 3.0 * v + 7.0;
    for (auto& v : ny) v = -v;
    EXPECT_NEAR(pearson(ax, y), r, 1e-12);
    EXPECT_NEAR(pearson(x, ny), -r, 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(F1, Examples) {
  auto gold = cats({1, 1, 2, 2});
  EXPECT_DOUBLE_EQ(f1_scores(gold, gold).macro, 1.0);
  EXPECT_DOUBLE_EQ(f1_scores(cats({2, 2, 1, 1}), gold).macro, 0.0);
  auto r = f1_scores(cats({1, 2, 2, 2}), gold);
  EXPECT_NEAR(r.per_class.at(1).f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class.at(2).f1, 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(r.macro, (2.0 / 3.0 + 0.8) / 2.0, 1e-12);
  EXPECT_NEAR(r.macro, 0.7333, 1e-4);
  EXPECT_NEAR(r.micro, 0.75, 1e-12);
}

TEST(F1, Errors) {
  EXPECT_THROW(f1_scores(cats({1}), cats({1, 2})), ValidationError);
  EXPECT_THROW(f1_scores(cats({}), cats({})), ValidationError);
}

TEST(F1, ExhaustiveOracleOnSmallInstances) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    const int n = std::uniform_int_distribution<int>(1, 30)(rng);
    std::uniform_int_distribution<int> label(1, k);
    std::vector<RatingCategory> p, g;
    for (int i = 0; i < n; ++i) {
      p.emplace_back(label(rng));
      g.emplace_back(label(rng));
    }
    auto got = f1_scores(p, g);
    auto want = oracle::f1(ints(p), ints(g));
    ASSERT_EQ(got.per_class.size(), want.per_class.size());
    for (auto& [c, f] : want.per_class) EXPECT_NEAR(got.per_class.at(c).f1, f, 1e-12);
    EXPECT_NEAR(got.macro, want.macro, 1e-12);
    double mean = 0;
    for (auto& [c, s] : got.per_class) mean += s.f1;
    EXPECT_NEAR(got.macro, mean / got.per_class.size(), 1e-12);

    // Joint permutation leaves everything unchanged.
    std::vector<std::size_t> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<RatingCategory> pp, gg;
    for (auto i : order) {
      pp.push_back(p[i]);
      gg.push_back(g[i]);
    }
    EXPECT_NEAR(f1_scores(pp, gg).macro, got.macro, 1e-12);
  }
}

TEST(Histogram, Examples) {
  auto all_pos = category_histogram(cats({1, 3, 3}), std::vector<int>{1, 1, 1});
  for (const auto& row : all_pos) {
    EXPECT_EQ(row.positive_fraction, 1.0);
    EXPECT_EQ(row.negative_fraction, 0.0);
  }
  auto h = category_histogram(cats({1, 1, 4, 4}), std::vector<int>{0, 0, 1, 1});
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].category, 1);
  EXPECT_EQ(h[0].positive_fraction, 0.0);
  EXPECT_EQ(h[0].negative_fraction, 1.0);
  EXPECT_EQ(h[1].category, 4);
  EXPECT_EQ(h[1].positive_fraction, 1.0);
  EXPECT_TRUE(category_histogram(cats({}), std::vector<int>{}).empty());
  EXPECT_TRUE(category_histogram(cats({}), std::vector<int>{}, 5).empty());
}

TEST(Histogram, EmptyCategoriesWithScale) {
  auto h = category_histogram(cats({1, 1, 4, 4}), std::vector<int>{0, 0, 1, 1}, 5);
  ASSERT_EQ(h.size(), 5u);
  EXPECT_EQ(h[1].count, 0u);
  EXPECT_FALSE(h[1].positive_fraction.has_value());
  EXPECT_FALSE(h[4].negative_fraction.has_value());
}

TEST(Histogram, FractionsSumToOne) {
  std::mt19937 rng(4);
  std::vector<RatingCategory> c;
  std::vector<int> l;
  for (int i = 0; i < 333; ++i) {
    c.emplace_back(1 + static_cast<int>(rng() % 5));
    l.push_back(static_cast<int>(rng() % 2));
  }
  for (const auto& row : category_histogram(c, l, 5)) {
    ASSERT_GT(row.count, 0u);
    EXPECT_NEAR(*row.positive_fraction + *row.negative_fraction, 1.0, 1e-12);
  }
}

TEST(Histogram, Errors) {
  EXPECT_THROW(category_histogram(cats({1}), std::vector<int>{}), ValidationError);
  EXPECT_THROW(category_histogram(cats({1}), std::vector<int>{2}), ValidationError);
}

TEST(Comparison, Examples) {
  auto c = comparison_report(0.52, 0.46);
  EXPECT_NEAR(c.absolute_delta, 0.06, 1e-12);
  EXPECT_NEAR(*c.relative_delta, 0.06 / 0.46, 1e-12);
  EXPECT_FALSE(c.no_change);
  auto same = comparison_report(0.31, 0.31);
  EXPECT_TRUE(same.no_change);
  EXPECT_DOUBLE_EQ(same.absolute_delta, 0.0);
  for (double x : {0.0, 0.25, 1.0}) EXPECT_DOUBLE_EQ(comparison_report(x, x).absolute_delta, 0.0);
  EXPECT_FALSE(comparison_report(0.3, 0.0).relative_delta.has_value());
  EXPECT_THROW(comparison_report(1.2, 0.3), ValidationError);
}

TEST(Report, RenderingsCarryTheSameNumbers) {
  EvaluationReport r;
  r.kind = DatasetKind::single_turn;
  r.evaluated = 4;
  r.correlations = {{"nsp_prob", 0.25}, {"short_safe", std::nullopt}};
  r.combined = f1_scores(cats({1, 2, 2, 2}), cats({1, 1, 2, 2}));
  r.baseline = f1_scores(cats({1, 1, 1, 1}), cats({1, 1, 2, 2}));
  r.baseline_thresholds = {0.5};
  r.comparison = comparison_report(r.combined.macro, r.baseline->macro);
  r.histogram = category_histogram(cats({1, 1, 2, 2}), std::vector<int>{0, 1, 1, 1}, 3);
  r.importance = {{"nsp_prob", 1.5}};

  const auto md = render_markdown(r);
  EXPECT_NE(md.find("| short_safe | n/a |"), std::string::npos);
  EXPECT_NE(md.find("0.7333"), std::string::npos);
  EXPECT_NE(md.find("improvement"), std::string::npos);

  const auto j = to_json(r);
  EXPECT_EQ(j["format"], "fluidity-report");
  EXPECT_TRUE(j["feature_correlations"]["short_safe"].is_null());
  EXPECT_NEAR(j["comparison"]["absolute_delta"].get<double>(), r.comparison->absolute_delta, 1e-15);
  EXPECT_EQ(j["nsp_histogram"].size(), 3u);

  const auto csv = histogram_csv(r.histogram);
  EXPECT_EQ(csv,
            "category,positive_fraction,negative_fraction,count\n"
            "1,0.5,0.5,2\n"
            "2,1.0,0.0,2\n"
            "3,,,0\n");
}
