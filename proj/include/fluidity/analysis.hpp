#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fluidity/corpus.hpp"
#include "fluidity/error.hpp"
#include "json.hpp"

namespace fluidity {

// Raised when either series has zero variance. Reports print "n/a".
class UndefinedCorrelation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Product-moment correlation. Needs equal lengths >= 2.
double pearson(std::span<const double> x, std::span<const double> y);

// pearson() with undefined correlations mapped to nullopt.
std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;  // predicted count
};

struct F1Report {
  std::map<int, ClassScores> per_class;  // classes present in gold
  double macro = 0.0;                    // unweighted mean of per_class f1
  double micro = 0.0;                    // equals accuracy for single-label data
};

F1Report f1_scores(std::span<const RatingCategory> predicted, std::span<const RatingCategory> gold);

struct HistogramRow {
  int category = 0;
  std::size_t count = 0;
  std::optional<double> positive_fraction;  // absent when count == 0
  std::optional<double> negative_fraction;
};

// Share of positive/negative NSP labels per rating category, ascending.
// With `scale_max` every category 1..scale_max gets a row (empty ones with
// absent fractions) unless the input itself is empty.
std::vector<HistogramRow> category_histogram(std::span<const RatingCategory> categories,
                                             std::span<const int> nsp_labels,
                                             std::optional<int> scale_max = std::nullopt);

inline constexpr double kNoChangeBand = 0.005;

struct Comparison {
  double combined = 0.0;
  double baseline = 0.0;
  double absolute_delta = 0.0;
  std::optional<double> relative_delta;  // absent when baseline == 0
  bool no_change = false;                // |absolute_delta| < 0.005
};

Comparison comparison_report(double combined_f1, double baseline_f1);

struct FeatureCorrelation {
  std::string feature;
  std::optional<double> r;
};

struct EvaluationReport {
  DatasetKind kind = DatasetKind::single_turn;
  std::size_t evaluated = 0;
  std::string evaluation_set;  // e.g. "held-out (20 of 100)"
  std::vector<FeatureCorrelation> correlations;
  F1Report combined;
  std::optional<F1Report> baseline;
  std::vector<double> baseline_thresholds;
  std::optional<Comparison> comparison;
  std::vector<HistogramRow> histogram;
  std::vector<std::pair<std::string, double>> importance;
  nlohmann::json config = nlohmann::json::object();
};

std::string render_markdown(const EvaluationReport& report);
nlohmann::json to_json(const EvaluationReport& report);
std::string histogram_csv(std::span<const HistogramRow> rows);

}  // namespace fluidity
