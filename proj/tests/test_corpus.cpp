#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "fluidity/corpus.hpp"
#include "fluidity/error.hpp"

using namespace fluidity;

namespace {

const std::string kFixtures = FLUIDITY_FIXTURES;

std::vector<SingleTurnInstance> parse_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_single_turn(in, "test.csv");
}

std::string error_of(const std::string& csv) {
  try {
    parse_csv(csv);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(SingleTurn, TableFixtureMeans) {
  auto rows = load_single_turn(kFixtures + "/four_rows.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].statement, "ahahah i have got easily the most loyal pig ever");
  EXPECT_EQ(rows[0].response, "That's nice, hah.");
  EXPECT_EQ(rows[0].ratings, (std::array<int, 5>{4, 3, 3, 2, 5}));
  EXPECT_NEAR(rows[0].mean_rating, 3.4, 1e-9);
  EXPECT_NEAR(rows[1].mean_rating, 3.8, 1e-9);
  EXPECT_NEAR(rows[2].mean_rating, 1.8, 1e-9);
  EXPECT_NEAR(rows[3].mean_rating, 3.2, 1e-9);
  for (const auto& r : rows) {
    const double m = std::accumulate(r.ratings.begin(), r.ratings.end(), 0.0) / 5.0;
    EXPECT_LE(std::abs(r.mean_rating - m), 1e-9);
  }
  EXPECT_EQ(rows[0].id, "1");
  EXPECT_EQ(rows[3].id, "4");
}

TEST(SingleTurn, MeanColumnOptional) {
  auto rows = parse_csv("Statement,Response,AMT1,AMT2,AMT3,AMT4,AMT5\na,b,1,2,3,4,5\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].mean_rating, 3.0);
}

TEST(SingleTurn, QuotedFieldsAndCrlf) {
  auto rows = parse_csv(
      "\xEF\xBB\xBFstatement,RESPONSE,amt1,amt2,amt3,amt4,amt5,Mean,Id,Reference\r\n"
      "\"say \"\"hi\"\"\",\"a,b\nc\",1,1,1,1,2,1.2,x7,gold\r\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].statement, "say \"hi\"");
  EXPECT_EQ(rows[0].response, "a,b\nc");
  EXPECT_EQ(rows[0].id, "x7");
  EXPECT_EQ(rows[0].reference, std::optional<std::string>("gold"));
}

TEST(SingleTurn, MissingColumnIsNamed) {
  EXPECT_NE(error_of("Statement,Response,AMT1,AMT2,AMT3,AMT5,Mean\na,b,1,2,3,4,3\n").find("AMT4"),
            std::string::npos);
  EXPECT_THROW(load_single_turn(kFixtures + "/missing_column.csv"), ValidationError);
}

TEST(SingleTurn, RatingOutOfRangeCitesRow) {
  try {
    load_single_turn(kFixtures + "/bad_rating.csv");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(error_of("Statement,Response,AMT1,AMT2,AMT3,AMT4,AMT5\na,b,0,2,3,4,5\n").empty());
  EXPECT_FALSE(error_of("Statement,Response,AMT1,AMT2,AMT3,AMT4,AMT5\na,b,2.5,2,3,4,5\n").empty());
}

TEST(SingleTurn, MeanMismatch) {
  EXPECT_FALSE(error_of("Statement,Response,AMT1,AMT2,AMT3,AMT4,AMT5,Mean\na,b,1,2,3,4,5,3.2\n").empty());
  EXPECT_TRUE(error_of("Statement,Response,AMT1,AMT2,AMT3,AMT4,AMT5,Mean\na,b,1,2,3,4,5,3.04\n").empty());
}

TEST(SingleTurn, MissingFileIsValidationError) {
  EXPECT_THROW(load_single_turn(kFixtures + "/no_such_file.csv"), ValidationError);
}

TEST(MultiTurn, LoadsInOrder) {
  auto convs = load_multi_turn(kFixtures + "/multi.jsonl");
  ASSERT_EQ(convs.size(), 3u);
  EXPECT_EQ(convs[0].id, "c1");
  EXPECT_EQ(convs[1].id, "c2");
  EXPECT_EQ(convs[2].id, "c3");
  ASSERT_EQ(convs[0].turns.size(), 6u);
  EXPECT_EQ(convs[0].score, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(convs[0].turns[i].index, i);
    EXPECT_EQ(convs[0].turns[i].speaker, i % 2 == 0 ? Speaker::human : Speaker::agent);
  }
}

TEST(MultiTurn, ScoreBounds) {
  EXPECT_THROW(load_multi_turn(kFixtures + "/multi_bad_score.jsonl"), ValidationError);
  std::istringstream five(R"({"id":"a","score":5,"turns":[{"speaker":"agent","text":"x"}]})");
  EXPECT_THROW(parse_multi_turn(five), ValidationError);
  std::istringstream frac(R"({"id":"a","score":2.5,"turns":[{"speaker":"agent","text":"x"}]})");
  EXPECT_THROW(parse_multi_turn(frac), ValidationError);
}

TEST(MultiTurn, EmptyTurnsAndBadSpeaker) {
  std::istringstream empty(R"({"id":"a","score":2,"turns":[]})");
  EXPECT_THROW(parse_multi_turn(empty), ValidationError);
  std::istringstream speaker(R"({"id":"a","score":2,"turns":[{"speaker":"bot","text":"x"}]})");
  EXPECT_THROW(parse_multi_turn(speaker), ValidationError);
  std::istringstream broken("{not json\n");
  EXPECT_THROW(parse_multi_turn(broken), ValidationError);
}

TEST(Binning, Examples) {
  EXPECT_EQ(bin_rating(2.3, 5).value(), 2);
  EXPECT_EQ(bin_rating(1.0, 5).value(), 1);
  EXPECT_EQ(bin_rating(3.4, 5).value(), 3);
  EXPECT_EQ(bin_rating(5.0, 5).value(), 5);
  EXPECT_THROW(bin_rating(0.9, 5), std::domain_error);
  EXPECT_THROW(bin_rating(5.1, 5), std::domain_error);
  EXPECT_THROW(bin_rating(4.5, 4), std::domain_error);
}

TEST(Binning, MonotoneAndIdempotent) {
  int last = 1;
  for (int i = 100; i <= 500; ++i) {
    const int v = bin_rating(i / 100.0, 5).value();
    EXPECT_GE(v, last);
    EXPECT_EQ(v, static_cast<int>(std::floor(i / 100.0)));
    last = v;
  }
  for (int k = 1; k <= 4; ++k) EXPECT_EQ(bin_rating(k, 4).value(), k);
}

TEST(Targets, SingleAndMulti) {
  auto rows = load_single_turn(kFixtures + "/four_rows.csv");
  EXPECT_EQ(target_category(rows[0]).value(), 3);
  EXPECT_EQ(target_category(rows[2]).value(), 1);
  auto convs = load_multi_turn(kFixtures + "/multi.jsonl");
  EXPECT_EQ(target_category(convs[1]).value(), 1);
}

TEST(Dataset, RoundTripBothKinds) {
  Dataset single{DatasetKind::single_turn, load_single_turn(kFixtures + "/four_rows.csv"), {}};
  single.single_turn[1].reference = "a gold answer";
  Dataset multi{DatasetKind::multi_turn, {}, load_multi_turn(kFixtures + "/multi.jsonl")};
  multi.multi_turn[0].turns[1].reference = "gold turn";
  for (const Dataset& d : {single, multi}) {
    std::stringstream buf;
    write_dataset(buf, d);
    Dataset back = read_dataset(buf);
    EXPECT_EQ(back, d);
  }
}

TEST(Dataset, RejectsForeignHeader) {
  std::istringstream in(R"({"format":"something-else"})");
  EXPECT_THROW(read_dataset(in), ValidationError);
}

TEST(Split, TenInstances) {
  std::vector<RatingCategory> cats;
  for (int i = 0; i < 10; ++i) cats.emplace_back(1 + i % 2);
  auto a = split_indices(cats, 0.2, 7);
  auto b = split_indices(cats, 0.2, 7);
  EXPECT_EQ(a.train.size(), 8u);
  EXPECT_EQ(a.test.size(), 2u);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, BadArguments) {
  std::vector<RatingCategory> cats(10, RatingCategory(1));
  EXPECT_THROW(split_indices(cats, 0.0, 1), ValidationError);
  EXPECT_THROW(split_indices(cats, 1.0, 1), ValidationError);
  std::vector<RatingCategory> one(1, RatingCategory(1));
  EXPECT_THROW(split_indices(one, 0.5, 1), ValidationError);
}

TEST(Split, StratifiedShares) {
  std::vector<RatingCategory> cats;
  for (int i = 0; i < 100; ++i) cats.emplace_back(1 + i % 4);
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    auto s = split_indices(cats, 0.25, seed);
    EXPECT_TRUE(s.stratified);
    std::map<int, int> test_per_cat, total_per_cat;
    for (auto i : s.test) test_per_cat[cats[i].value()]++;
    for (auto c : cats) total_per_cat[c.value()]++;
    for (auto& [c, total] : total_per_cat) EXPECT_LE(std::abs(test_per_cat[c] - 0.25 * total), 1.0);
  }
}

TEST(Split, PartitionProperty) {
  std::vector<RatingCategory> cats;
  for (int i = 0; i < 37; ++i) cats.emplace_back(1 + (i * 7) % 5);
  cats.emplace_back(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = split_indices(cats, 0.3, seed);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), cats.size());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  }
}

TEST(Split, SingletonCategoryFallsBackToUnstratified) {
  std::vector<RatingCategory> cats{RatingCategory(3), RatingCategory(3), RatingCategory(1), RatingCategory(3)};
  auto s = split_indices(cats, 0.5, 4);
  EXPECT_FALSE(s.stratified);
  EXPECT_EQ(s.train.size() + s.test.size(), 4u);
}

TEST(Split, GenericTemplate) {
  std::vector<int> items{1, 2, 3, 4, 5, 6, 7, 8};
  auto s = split<int>(items, 0.25, 3, [](int v) { return RatingCategory(1 + v % 2); });
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.test.size(), 2u);
}
