#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fluidity/analysis.hpp"
#include "fluidity/bleu.hpp"
#include "fluidity/error.hpp"
#include "oracles.hpp"

using namespace fluidity;

namespace {

std::vector<std::string> refs(std::initializer_list<const char*> r) { return {r.begin(), r.end()}; }

std::vector<oracle::Words> split_all(const std::vector<std::string>& xs) {
  std::vector<oracle::Words> out;
  for (const auto& x : xs) out.push_back(oracle::split(x));
  return out;
}

}  // namespace

TEST(ModifiedPrecision, ClippingExample) {
  auto m = modified_precision("the the the the the the the", refs({"the cat is on the mat"}), 1);
  EXPECT_EQ(m, (NgramMatch{2, 7}));
}

TEST(ModifiedPrecision, IdentityAndDisjoint) {
  auto same = modified_precision("a quick brown fox", refs({"a quick brown fox"}), 2);
  EXPECT_EQ(same, (NgramMatch{3, 3}));
  auto none = modified_precision("x y z", refs({"a b c"}), 1);
  EXPECT_EQ(none, (NgramMatch{0, 3}));
}

TEST(ModifiedPrecision, Errors) {
  EXPECT_THROW(modified_precision("a", std::vector<std::string>{}, 1), ValidationError);
  EXPECT_THROW(modified_precision("a", refs({"a"}), 0), std::domain_error);
}

TEST(ModifiedPrecision, AddingReferenceNeverLowersClipping) {
  std::mt19937 rng(17);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 200; ++i) {
    const auto cand = oracle::random_sentence(rng, vocab, 1, 8);
    std::vector<std::string> r{oracle::random_sentence(rng, vocab, 1, 8)};
    for (int n = 1; n <= 3; ++n) {
      const auto before = modified_precision(cand, r, n).clipped;
      auto more = r;
      more.push_back(oracle::random_sentence(rng, vocab, 1, 8));
      EXPECT_GE(modified_precision(cand, more, n).clipped, before);
    }
  }
}

TEST(BrevityPenalty, Examples) {
  EXPECT_DOUBLE_EQ(brevity_penalty(10, 10), 1.0);
  EXPECT_DOUBLE_EQ(brevity_penalty(0, 5), 0.0);
  EXPECT_NEAR(brevity_penalty(5, 10), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(brevity_penalty(5, 10), 0.367879, 1e-6);
  EXPECT_DOUBLE_EQ(brevity_penalty(12, 10), 1.0);
}

TEST(Bleu, IdentityAndZero) {
  BleuConfig cfg;
  EXPECT_DOUBLE_EQ(bleu("the cat sat on the mat", "the cat sat on the mat", cfg), 1.0);
  EXPECT_DOUBLE_EQ(bleu("dogs run", "the cat sat on the mat", cfg), 0.0);
  EXPECT_DOUBLE_EQ(bleu("hi", "hi", cfg), 1.0);  // shorter than max_n
  EXPECT_DOUBLE_EQ(bleu("", "hi", cfg), 0.0);
}

TEST(Bleu, SelfScoreIsOneForAnyNonEmptyText) {
  std::mt19937 rng(23);
  const std::vector<std::string> vocab{"x", "y", "Z", "?", "w"};
  for (int i = 0; i < 100; ++i) {
    const auto s = oracle::random_sentence(rng, vocab, 1, 9);
    EXPECT_DOUBLE_EQ(bleu(s, s, BleuConfig{}), 1.0) << s;
  }
}

TEST(Bleu, MatchesBruteForceOracle) {
  std::mt19937 rng(1234);
  const std::vector<std::string> vocab{"the", "cat", "The", "mat", "on", "is", "a", "dog", "sat", "red"};
  std::uniform_int_distribution<int> nrefs(1, 3), maxn(1, 4);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto cand = oracle::random_sentence(rng, vocab, 1, 12);
    std::vector<std::string> r;
    for (int k = nrefs(rng); k > 0; --k) r.push_back(oracle::random_sentence(rng, vocab, 1, 12));
    const int n = trial < 150 ? 4 : maxn(rng);
    const double smooth = trial % 3 == 0 ? 0.0 : 0.5 * (trial % 3);
    BleuConfig cfg = BleuConfig::uniform(n, smooth > 0 ? BleuSmoothing{BleuSmoothing::Kind::add_k, smooth}
                                                       : BleuSmoothing{});
    const double got = bleu(cand, r, cfg);
    const double want = oracle::bleu(oracle::split(cand), split_all(r), cfg.weights, smooth);
    ASSERT_NEAR(got, want, 1e-9) << cand;
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
    ++compared;
  }
  EXPECT_GE(compared, 20);
}

TEST(Bleu, CustomWeights) {
  BleuConfig cfg;
  cfg.weights = {0.7, 0.3, 0.0, 0.0};
  const std::string cand = "the cat the mat sat";
  const auto r = refs({"the cat sat on the mat"});
  EXPECT_NEAR(bleu(cand, r, cfg), oracle::bleu(oracle::split(cand), split_all(r), cfg.weights), 1e-12);
}

TEST(Bleu, ReferenceOrderDoesNotMatter) {
  std::mt19937 rng(77);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  for (int i = 0; i < 100; ++i) {
    const auto cand = oracle::random_sentence(rng, vocab, 1, 7);
    std::vector<std::string> r;
    for (int k = 0; k < 3; ++k) r.push_back(oracle::random_sentence(rng, vocab, 1, 9));
    const double base = bleu(cand, r, BleuConfig::uniform(2));
    std::sort(r.begin(), r.end());
    do {
      EXPECT_DOUBLE_EQ(bleu(cand, r, BleuConfig::uniform(2)), base);
    } while (std::next_permutation(r.begin(), r.end()));
  }
}

TEST(Bleu, ClosestReferenceLengthPrefersShorterOnTie) {
  // Candidate of 4 tokens, references of 3 and 5 tokens: the 3-token one wins
  // the tie so no brevity penalty applies.
  BleuConfig cfg = BleuConfig::uniform(1);
  EXPECT_DOUBLE_EQ(bleu("a b c d", refs({"a b c d e", "a b c"}), cfg), 1.0);
}

TEST(BleuConfig, Validation) {
  BleuConfig bad;
  bad.weights = {0.5, 0.5};
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = BleuConfig{};
  bad.weights = {0.5, 0.5, 0.5, -0.5};
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = BleuConfig{};
  bad.weights = {0.3, 0.3, 0.3, 0.3};
  EXPECT_THROW(bleu("a", "a", bad), ValidationError);
  EXPECT_THROW(BleuConfig::uniform(0), ValidationError);
  EXPECT_NO_THROW(BleuConfig::uniform(3).validate());
}

TEST(Smoothing, Parse) {
  EXPECT_EQ(BleuSmoothing::parse("none").kind, BleuSmoothing::Kind::none);
  auto s = BleuSmoothing::parse("add-k:0.5");
  EXPECT_EQ(s.kind, BleuSmoothing::Kind::add_k);
  EXPECT_DOUBLE_EQ(s.k, 0.5);
  EXPECT_EQ(BleuSmoothing::parse(s.to_string()).k, 0.5);
  EXPECT_THROW(BleuSmoothing::parse("add-k:0"), ValidationError);
  EXPECT_THROW(BleuSmoothing::parse("add-k:abc"), ValidationError);
  EXPECT_THROW(BleuSmoothing::parse("chen"), ValidationError);
  EXPECT_GT(bleu("dogs run", "the cat", BleuConfig::uniform(2, BleuSmoothing::parse("add-k:1"))), 0.0);
}

TEST(Classify, Bins) {
  const std::vector<double> t{0.2, 0.4, 0.6};
  EXPECT_EQ(classify_bleu_score(0.0, t).value(), 1);
  EXPECT_EQ(classify_bleu_score(1.0, t).value(), 4);
  EXPECT_EQ(classify_bleu_score(0.4, t).value(), 3);
  EXPECT_EQ(bleu_baseline_classify("a b c", "a b c", t).value(), 4);
  EXPECT_EQ(bleu_baseline_classify("a b c", "x y z", t).value(), 1);
}

TEST(Classify, BadThresholds) {
  EXPECT_THROW(classify_bleu_score(0.5, std::vector<double>{0.4, 0.2}), ValidationError);
  EXPECT_THROW(classify_bleu_score(0.5, std::vector<double>{0.2, 0.2}), ValidationError);
  EXPECT_THROW(classify_bleu_score(0.5, std::vector<double>{0.0, 0.2}), ValidationError);
  EXPECT_THROW(classify_bleu_score(0.5, std::vector<double>{0.2, 1.0}), ValidationError);
}

TEST(FitThresholds, SeparableSetGetsPerfectF1) {
  std::mt19937 rng(5);
  std::vector<double> scores;
  std::vector<RatingCategory> gold;
  // Category c occupies BLEU band [0.2(c-1)+0.02, 0.2c-0.02].
  for (int i = 0; i < 400; ++i) {
    const int c = 1 + i % 5;
    std::uniform_real_distribution<double> band(0.2 * (c - 1) + 0.02, 0.2 * c - 0.02);
    scores.push_back(band(rng));
    gold.emplace_back(c);
  }
  auto t = fit_bleu_thresholds(scores, gold, 5);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  std::vector<RatingCategory> pred;
  for (double s : scores) pred.push_back(classify_bleu_score(s, t));
  EXPECT_DOUBLE_EQ(f1_scores(pred, gold).macro, 1.0);
}

TEST(FitThresholds, UnevenBandsAndSkew) {
  std::vector<double> scores;
  std::vector<RatingCategory> gold;
  for (int i = 0; i < 90; ++i) {
    scores.push_back(0.001 * i);
    gold.emplace_back(1);
  }
  for (int i = 0; i < 5; ++i) {
    scores.push_back(0.5 + 0.01 * i);
    gold.emplace_back(2);
  }
  for (int i = 0; i < 5; ++i) {
    scores.push_back(0.93 + 0.01 * i);
    gold.emplace_back(3);
  }
  auto t = fit_bleu_thresholds(scores, gold, 3);
  std::vector<RatingCategory> pred;
  for (double s : scores) pred.push_back(classify_bleu_score(s, t));
  EXPECT_DOUBLE_EQ(f1_scores(pred, gold).macro, 1.0);
}

TEST(FitThresholds, Errors) {
  std::vector<double> s{0.1};
  std::vector<RatingCategory> g{RatingCategory(1), RatingCategory(2)};
  EXPECT_THROW(fit_bleu_thresholds(s, g, 2), ValidationError);
  EXPECT_THROW(fit_bleu_thresholds({}, {}, 2), ValidationError);
}
