#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluidity/corpus.hpp"
#include "fluidity/textproc.hpp"
#include "json.hpp"

namespace fluidity {

struct BleuSmoothing {
  enum class Kind { none, add_k };
  Kind kind = Kind::none;
  double k = 1.0;

  // "none" or "add-k:K" (also "add_k:K").
  static BleuSmoothing parse(std::string_view text);
  std::string to_string() const;
};

// Sentence-level BLEU settings. Defaults: BLEU-4, uniform weights, no
// smoothing.
struct BleuConfig {
  int max_n = 4;
  std::vector<double> weights{0.25, 0.25, 0.25, 0.25};
  BleuSmoothing smoothing;

  static BleuConfig uniform(int max_n, BleuSmoothing smoothing = {});

  // weights.size() == max_n, each >= 0, sum 1 within 1e-9; add-k needs k > 0.
  void validate() const;
  nlohmann::json to_json() const;
};

struct NgramMatch {
  std::size_t clipped = 0;
  std::size_t total = 0;

  bool operator==(const NgramMatch&) const = default;
};

// Candidate n-gram counts clipped by the largest count of that n-gram in any
// single reference. Case-sensitive. Throws ValidationError on an empty
// reference list and std::domain_error when n < 1.
NgramMatch modified_precision(std::span<const Token> candidate,
                              std::span<const std::vector<Token>> references, int n);
NgramMatch modified_precision(std::string_view candidate, std::span<const std::string> references, int n);

// 1 when candidate_len >= reference_len, exp(1 - r/c) otherwise, 0 for an
// empty candidate.
double brevity_penalty(std::size_t candidate_len, std::size_t reference_len);

// BP * exp(sum_n w_n log p_n). The reference length is the one closest to
// the candidate (shorter wins ties). Orders longer than the candidate carry
// no n-grams; they are dropped and the remaining weights renormalised, so a
// short sentence scored against itself still gets 1.
double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig& config);
double bleu(std::string_view candidate, std::string_view reference, const BleuConfig& config);

// 1 + number of thresholds <= score. Thresholds must be strictly ascending
// inside (0,1); otherwise ValidationError.
RatingCategory classify_bleu_score(double score, std::span<const double> thresholds);

RatingCategory bleu_baseline_classify(std::string_view candidate, std::string_view reference,
                                      std::span<const double> thresholds, const BleuConfig& config = {});

// Fits `num_categories - 1` ascending thresholds on the 0.01 grid that
// maximise macro-F1 of classify_bleu_score against `gold`. Coordinate ascent
// from several deterministic starts.
std::vector<double> fit_bleu_thresholds(std::span<const double> scores, std::span<const RatingCategory> gold,
                                        int num_categories);

}  // namespace fluidity
