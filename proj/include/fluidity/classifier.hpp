#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fluidity/corpus.hpp"
#include "fluidity/features.hpp"
#include "json.hpp"

namespace fluidity {

enum class ClassWeighting { none, balanced };

struct TrainConfig {
  double c = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  ClassWeighting class_weighting = ClassWeighting::balanced;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Dense design matrix with named columns.
struct LabeledData {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<RatingCategory> targets;
  std::vector<std::string> ids;  // optional; used in diagnostics

  static LabeledData from_vectors(std::span<const FeatureVector> vectors, std::span<const RatingCategory> targets);
  static LabeledData from_records(std::span<const FeatureRecord> records, std::span<const std::string> names);
  LabeledData duplicated() const;
};

struct FeatureStats {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
  bool excluded = false;  // zero variance
};

// Per-column standardisation with population standard deviation. Columns
// whose stddev is zero (relative to their magnitude) are excluded.
class StandardScaler {
 public:
  StandardScaler() = default;
  explicit StandardScaler(std::vector<FeatureStats> stats) : stats_(std::move(stats)) {}

  // Needs at least 2 rows.
  static StandardScaler fit(std::span<const std::string> names, std::span<const std::vector<double>> rows);

  // Full-width raw row -> scaled values of the retained columns.
  std::vector<double> transform(std::span<const double> row) const;
  // Scaled retained values -> raw retained values.
  std::vector<double> inverse_transform(std::span<const double> scaled) const;

  std::vector<std::string> retained_names() const;
  std::vector<std::string> excluded_names() const;
  const std::vector<FeatureStats>& stats() const { return stats_; }

 private:
  std::vector<FeatureStats> stats_;
};

StandardScaler fit_scaler(std::span<const FeatureVector> vectors);

// One-vs-rest linear SVM over standardised features.
struct TrainedModel {
  std::vector<int> classes;                  // ascending
  std::vector<std::string> feature_names;    // retained features, weight order
  std::vector<std::string> dropped_features; // zero variance in training data
  std::vector<std::vector<double>> weights;  // [class][feature]
  std::vector<double> biases;
  std::vector<FeatureStats> scaler;          // retained features only
  TrainConfig config;
  std::string training_data_hash;

  // Diagnostics, per class.
  std::vector<std::vector<double>> objective_history;  // best-so-far per epoch
  std::vector<int> epochs_run;
  double training_accuracy = 0.0;
};

// L2-regularised hinge objective of one binary problem:
//   0.5 |w|^2 + C * sum_i s_i max(0, 1 - y_i (w.x_i + b))
// with s_i the class weight of example i. `scaled_rows` are already
// standardised; `labels` are +1/-1.
double hinge_objective(std::span<const double> w, double b, std::span<const std::vector<double>> scaled_rows,
                       std::span<const int> labels, std::span<const double> sample_weights, double c);

// Per-example weights of one binary problem: balanced gives n/(2 n_pos) to
// positives and n/(2 n_neg) to negatives.
std::vector<double> sample_weights(std::span<const int> labels, ClassWeighting weighting);

// Full-batch subgradient descent with step 1/sqrt(t) per binary problem,
// keeping the best iterate. Deterministic: the same data and config give a
// bit-identical model.
TrainedModel train(const LabeledData& data, const TrainConfig& config = {});

// w.x + b per class after scaling. `row` is aligned with model.feature_names.
std::vector<double> decision_values(const TrainedModel& model, std::span<const double> row);

// Argmax of the decision values; exact ties go to the lower class label.
RatingCategory predict(const TrainedModel& model, std::span<const double> row);
// Throws ValidationError naming the first model feature missing from `features`.
RatingCategory predict(const TrainedModel& model, const NamedFeatures& features);
RatingCategory predict(const TrainedModel& model, const FeatureVector& vector);

// Model features ranked by mean |weight| across classes (weights live in
// standardised space). Equal magnitudes keep model feature order.
std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& model);

inline constexpr std::string_view kModelFormat = "fluidity-model";

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

// SHA-256 over names, rows and targets in a fixed textual encoding.
std::string training_data_hash(const LabeledData& data);

}  // namespace fluidity
