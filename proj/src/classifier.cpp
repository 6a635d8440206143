#include "fluidity/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "fluidity/error.hpp"
#include "fluidity/hashing.hpp"

namespace fluidity {

using nlohmann::json;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool zero_variance(const FeatureStats& s) { return !(s.stddev > 1e-12 * std::max(1.0, std::abs(s.mean))); }

struct BinaryFit {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> history;
  int epochs = 0;
};

BinaryFit fit_binary(std::span<const std::vector<double>> x, std::span<const int> y, std::span<const double> s,
                     const TrainConfig& config) {
  const std::size_t n = x.size();
  const std::size_t d = n > 0 ? x.front().size() : 0;

  double weight_total = 0.0;
  for (double si : s) weight_total += si;
  const double scale = config.c * weight_total;  // objective / scale is an average-hinge form

  // Classic D/G step for subgradient descent on the averaged objective: the
  // optimum lies within 1/sqrt(lambda) = sqrt(scale) of the origin and the
  // hinge subgradient is bounded by the largest augmented row norm.
  double max_norm_sq = 1.0;
  for (const auto& row : x) max_norm_sq = std::max(max_norm_sq, dot(row, row) + 1.0);
  const double step0 = std::sqrt(scale) / std::sqrt(max_norm_sq);

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  BinaryFit best{w, b, {}, 0};
  double best_objective = hinge_objective(w, b, x, y, s, config.c);

  std::vector<double> grad(d);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::copy(w.begin(), w.end(), grad.begin());
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double margin = y[i] * (dot(w, x[i]) + b);
      if (margin < 1.0) {
        const double coef = config.c * s[i] * y[i];
        for (std::size_t j = 0; j < d; ++j) grad[j] -= coef * x[i][j];
        grad_b -= coef;
      }
    }
    double norm_sq = grad_b * grad_b;
    for (double g : grad) norm_sq += g * g;
    const double grad_norm = std::sqrt(norm_sq) / scale;
    if (grad_norm <= config.tolerance) {
      best.epochs = epoch - 1;
      break;
    }

    const double step = step0 / std::sqrt(static_cast<double>(epoch)) / scale;
    for (std::size_t j = 0; j < d; ++j) w[j] -= step * grad[j];
    b -= step * grad_b;

    const double objective = hinge_objective(w, b, x, y, s, config.c);
    if (!std::isfinite(objective)) throw ValidationError("training diverged (non-finite objective)");
    if (objective < best_objective) {
      best_objective = objective;
      best.w = w;
      best.b = b;
    }
    best.history.push_back(best_objective);
    best.epochs = epoch;
  }
  return best;
}

void check_row_finite(const LabeledData& data, std::size_t i) {
  for (std::size_t j = 0; j < data.rows[i].size(); ++j) {
    if (!std::isfinite(data.rows[i][j])) {
      const std::string id = i < data.ids.size() ? data.ids[i] : std::to_string(i);
      throw ValidationError("instance " + id + ": feature '" + data.feature_names[j] + "' is not finite");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("regularisation C must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(tolerance >= 0.0)) throw ValidationError("tolerance must be >= 0");
}

json TrainConfig::to_json() const {
  return {{"c", c},
          {"epochs", epochs},
          {"seed", seed},
          {"tolerance", tolerance},
          {"class_weighting", class_weighting == ClassWeighting::balanced ? "balanced" : "none"}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig cfg;
  cfg.c = j.at("c").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.tolerance = j.at("tolerance").get<double>();
  const auto weighting = j.at("class_weighting").get<std::string>();
  if (weighting == "balanced") {
    cfg.class_weighting = ClassWeighting::balanced;
  } else if (weighting == "none") {
    cfg.class_weighting = ClassWeighting::none;
  } else {
    throw ValidationError("unknown class weighting '" + weighting + "'");
  }
  return cfg;
}

LabeledData LabeledData::from_vectors(std::span<const FeatureVector> vectors, std::span<const RatingCategory> targets) {
  if (vectors.size() != targets.size()) throw ValidationError("vectors and targets differ in length");
  LabeledData d;
  const auto canonical = fluidity::feature_names();
  d.feature_names.assign(canonical.begin(), canonical.end());
  for (const auto& v : vectors) d.rows.push_back(to_values(v));
  d.targets.assign(targets.begin(), targets.end());
  return d;
}

LabeledData LabeledData::from_records(std::span<const FeatureRecord> records, std::span<const std::string> names) {
  LabeledData d;
  d.feature_names.assign(names.begin(), names.end());
  for (const auto& r : records) {
    std::vector<double> row;
    row.reserve(names.size());
    for (const auto& name : names) {
      auto it = r.features.find(name);
      if (it == r.features.end()) throw ValidationError("instance " + r.id + ": missing feature '" + name + "'");
      row.push_back(it->second);
    }
    d.rows.push_back(std::move(row));
    d.targets.emplace_back(r.target);
    d.ids.push_back(r.id);
  }
  return d;
}

LabeledData LabeledData::duplicated() const {
  LabeledData d = *this;
  d.rows.insert(d.rows.end(), rows.begin(), rows.end());
  d.targets.insert(d.targets.end(), targets.begin(), targets.end());
  d.ids.insert(d.ids.end(), ids.begin(), ids.end());
  return d;
}

StandardScaler StandardScaler::fit(std::span<const std::string> names, std::span<const std::vector<double>> rows) {
  if (rows.size() < 2) throw ValidationError("scaler needs at least 2 vectors");
  const double n = static_cast<double>(rows.size());
  std::vector<FeatureStats> stats(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.at(j);
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    stats[j] = {names[j], mean, std::sqrt(var / n), false};
    stats[j].excluded = zero_variance(stats[j]);
  }
  return StandardScaler(std::move(stats));
}

std::vector<double> StandardScaler::transform(std::span<const double> row) const {
  if (row.size() != stats_.size()) throw ValidationError("scaler: row width mismatch");
  std::vector<double> out;
  for (std::size_t j = 0; j < stats_.size(); ++j) {
    if (!stats_[j].excluded) out.push_back((row[j] - stats_[j].mean) / stats_[j].stddev);
  }
  return out;
}

std::vector<double> StandardScaler::inverse_transform(std::span<const double> scaled) const {
  std::vector<double> out;
  std::size_t k = 0;
  for (const auto& s : stats_) {
    if (s.excluded) continue;
    if (k >= scaled.size()) throw ValidationError("scaler: row width mismatch");
    out.push_back(scaled[k++] * s.stddev + s.mean);
  }
  if (k != scaled.size()) throw ValidationError("scaler: row width mismatch");
  return out;
}

std::vector<std::string> StandardScaler::retained_names() const {
  std::vector<std::string> out;
  for (const auto& s : stats_) {
    if (!s.excluded) out.push_back(s.name);
  }
  return out;
}

std::vector<std::string> StandardScaler::excluded_names() const {
  std::vector<std::string> out;
  for (const auto& s : stats_) {
    if (s.excluded) out.push_back(s.name);
  }
  return out;
}

StandardScaler fit_scaler(std::span<const FeatureVector> vectors) {
  std::vector<std::vector<double>> rows;
  for (const auto& v : vectors) rows.push_back(to_values(v));
  return StandardScaler::fit(feature_names(), rows);
}

double hinge_objective(std::span<const double> w, double b, std::span<const std::vector<double>> scaled_rows,
                       std::span<const int> labels, std::span<const double> sample_weights, double c) {
  double loss = 0.0;
  for (std::size_t i = 0; i < scaled_rows.size(); ++i) {
    const double margin = labels[i] * (dot(w, scaled_rows[i]) + b);
    if (margin < 1.0) loss += sample_weights[i] * (1.0 - margin);
  }
  return 0.5 * dot(w, w) + c * loss;
}

std::vector<double> sample_weights(std::span<const int> labels, ClassWeighting weighting) {
  std::vector<double> out(labels.size(), 1.0);
  if (weighting == ClassWeighting::none) return out;
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto negatives = static_cast<double>(labels.size()) - positives;
  const double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = labels[i] > 0 ? n / (2.0 * positives) : n / (2.0 * negatives);
  }
  return out;
}

TrainedModel train(const LabeledData& data, const TrainConfig& config) {
  config.validate();
  if (data.rows.size() != data.targets.size()) throw ValidationError("rows and targets differ in length");
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    if (data.rows[i].size() != data.feature_names.size()) throw ValidationError("row width mismatch");
    check_row_finite(data, i);
  }
  std::set<int> class_set;
  for (const auto& t : data.targets) class_set.insert(t.value());
  if (class_set.size() < 2) throw ValidationError("training needs at least 2 classes, found " +
                                                  std::to_string(class_set.size()));

  const StandardScaler scaler = StandardScaler::fit(data.feature_names, data.rows);
  std::vector<std::vector<double>> x;
  x.reserve(data.rows.size());
  for (const auto& r : data.rows) x.push_back(scaler.transform(r));

  TrainedModel model;
  model.classes.assign(class_set.begin(), class_set.end());
  model.feature_names = scaler.retained_names();
  model.dropped_features = scaler.excluded_names();
  for (const auto& s : scaler.stats()) {
    if (!s.excluded) model.scaler.push_back(s);
  }
  model.config = config;
  model.training_data_hash = training_data_hash(data);

  std::vector<int> y(x.size());
  for (int cls : model.classes) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = data.targets[i].value() == cls ? 1 : -1;
    const auto s = sample_weights(y, config.class_weighting);
    BinaryFit fit = fit_binary(x, y, s, config);
    model.weights.push_back(std::move(fit.w));
    model.biases.push_back(fit.b);
    model.objective_history.push_back(std::move(fit.history));
    model.epochs_run.push_back(fit.epochs);
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    std::vector<double> retained;
    for (std::size_t j = 0; j < data.feature_names.size(); ++j) {
      if (!scaler.stats()[j].excluded) retained.push_back(data.rows[i][j]);
    }
    if (predict(model, retained) == data.targets[i]) ++correct;
  }
  model.training_accuracy = static_cast<double>(correct) / static_cast<double>(data.rows.size());
  return model;
}

std::vector<double> decision_values(const TrainedModel& model, std::span<const double> row) {
  if (row.size() != model.feature_names.size()) throw ValidationError("row width does not match model features");
  std::vector<double> z(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) z[j] = (row[j] - model.scaler[j].mean) / model.scaler[j].stddev;
  std::vector<double> out(model.classes.size());
  for (std::size_t c = 0; c < model.classes.size(); ++c) out[c] = dot(model.weights[c], z) + model.biases[c];
  return out;
}

RatingCategory predict(const TrainedModel& model, std::span<const double> row) {
  const auto values = decision_values(model, row);
  std::size_t best = 0;
  for (std::size_t c = 1; c < values.size(); ++c) {
    if (values[c] > values[best]) best = c;
  }
  return RatingCategory(model.classes[best]);
}

RatingCategory predict(const TrainedModel& model, const NamedFeatures& features) {
  std::vector<double> row;
  row.reserve(model.feature_names.size());
  for (const auto& name : model.feature_names) {
    auto it = features.find(name);
    if (it == features.end()) throw ValidationError("missing feature '" + name + "' required by the model");
    row.push_back(it->second);
  }
  return predict(model, row);
}

RatingCategory predict(const TrainedModel& model, const FeatureVector& vector) {
  return predict(model, to_named(vector));
}

std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& model) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    double sum = 0.0;
    for (const auto& w : model.weights) sum += std::abs(w[j]);
    out.emplace_back(model.feature_names[j], model.weights.empty() ? 0.0 : sum / static_cast<double>(model.weights.size()));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

json to_json(const TrainedModel& model) {
  json scaler = json::array();
  for (const auto& s : model.scaler) scaler.push_back({{"name", s.name}, {"mean", s.mean}, {"stddev", s.stddev}});
  json final_objective = json::array();
  for (const auto& h : model.objective_history) final_objective.push_back(h.empty() ? json(nullptr) : json(h.back()));
  return {{"format", kModelFormat},
          {"version", 1},
          {"kernel", "linear"},
          {"multiclass", "one-vs-rest"},
          {"classes", model.classes},
          {"feature_names", model.feature_names},
          {"dropped_features", model.dropped_features},
          {"weights", model.weights},
          {"biases", model.biases},
          {"scaler", std::move(scaler)},
          {"config", model.config.to_json()},
          {"training_data_hash", model.training_data_hash},
          {"training",
           {{"accuracy", model.training_accuracy},
            {"epochs_run", model.epochs_run},
            {"final_objective", std::move(final_objective)},
            {"objective_history", model.objective_history}}}};
}

TrainedModel model_from_json(const json& j) {
  try {
    if (j.value("format", "") != kModelFormat) throw ValidationError("not a model file");
    if (j.at("version").get<int>() != 1) throw ValidationError("unsupported model version");
    TrainedModel m;
    m.classes = j.at("classes").get<std::vector<int>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.dropped_features = j.at("dropped_features").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<double>>();
    for (const auto& s : j.at("scaler")) {
      m.scaler.push_back({s.at("name").get<std::string>(), s.at("mean").get<double>(), s.at("stddev").get<double>(), false});
    }
    m.config = TrainConfig::from_json(j.at("config"));
    m.training_data_hash = j.at("training_data_hash").get<std::string>();
    const json& t = j.at("training");
    m.training_accuracy = t.at("accuracy").get<double>();
    m.epochs_run = t.at("epochs_run").get<std::vector<int>>();
    m.objective_history = t.at("objective_history").get<std::vector<std::vector<double>>>();

    const std::size_t d = m.feature_names.size();
    if (m.weights.size() != m.classes.size() || m.biases.size() != m.classes.size() || m.scaler.size() != d) {
      throw ValidationError("model file is internally inconsistent");
    }
    for (const auto& w : m.weights) {
      if (w.size() != d) throw ValidationError("model weight vector has wrong dimensionality");
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (m.scaler[k].name != m.feature_names[k] || !(m.scaler[k].stddev > 0.0)) {
        throw ValidationError("model scaler does not match its feature names");
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

std::string training_data_hash(const LabeledData& data) {
  std::string buf;
  for (const auto& name : data.feature_names) {
    buf += name;
    buf += '\x1f';
  }
  buf += '\n';
  char num[40];
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    buf += std::to_string(data.targets[i].value());
    for (double v : data.rows[i]) {
      std::snprintf(num, sizeof num, ",%.17g", v);
      buf += num;
    }
    buf += '\n';
  }
  return sha256_hex(buf);
}

}  // namespace fluidity
