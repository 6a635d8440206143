#include "fluidity/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace fluidity {

using nlohmann::json;

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: series differ in length");
  if (x.size() < 2) throw ValidationError("pearson: need at least 2 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedCorrelation("pearson: zero variance");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y) {
  try {
    return pearson(x, y);
  } catch (const UndefinedCorrelation&) {
    return std::nullopt;
  }
}

F1Report f1_scores(std::span<const RatingCategory> predicted, std::span<const RatingCategory> gold) {
  if (predicted.size() != gold.size()) throw ValidationError("f1_scores: predicted and gold differ in length");
  if (gold.empty()) throw ValidationError("f1_scores: empty input");

  F1Report report;
  std::size_t correct = 0;
  for (const auto& g : gold) report.per_class[g.value()].support++;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) ++correct;
    if (auto it = report.per_class.find(predicted[i].value()); it != report.per_class.end()) {
      it->second.predicted++;
    }
  }
  std::map<int, std::size_t> true_positive;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) ++true_positive[gold[i].value()];
  }
  double sum = 0.0;
  for (auto& [label, s] : report.per_class) {
    const double tp = static_cast<double>(true_positive[label]);
    s.precision = s.predicted > 0 ? tp / static_cast<double>(s.predicted) : 0.0;
    s.recall = tp / static_cast<double>(s.support);
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    sum += s.f1;
  }
  report.macro = sum / static_cast<double>(report.per_class.size());
  report.micro = static_cast<double>(correct) / static_cast<double>(gold.size());
  return report;
}

std::vector<HistogramRow> category_histogram(std::span<const RatingCategory> categories,
                                             std::span<const int> nsp_labels, std::optional<int> scale_max) {
  if (categories.size() != nsp_labels.size()) {
    throw ValidationError("category_histogram: categories and labels differ in length");
  }
  std::vector<HistogramRow> rows;
  if (categories.empty()) return rows;

  std::map<int, std::pair<std::size_t, std::size_t>> tally;  // category -> (count, positives)
  if (scale_max) {
    for (int c = 1; c <= *scale_max; ++c) tally[c];
  }
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (nsp_labels[i] != 0 && nsp_labels[i] != 1) throw ValidationError("category_histogram: labels must be 0 or 1");
    auto& [count, positives] = tally[categories[i].value()];
    ++count;
    positives += static_cast<std::size_t>(nsp_labels[i]);
  }
  for (const auto& [cat, t] : tally) {
    HistogramRow row;
    row.category = cat;
    row.count = t.first;
    if (t.first > 0) {
      row.positive_fraction = static_cast<double>(t.second) / static_cast<double>(t.first);
      row.negative_fraction = static_cast<double>(t.first - t.second) / static_cast<double>(t.first);
    }
    rows.push_back(row);
  }
  return rows;
}

Comparison comparison_report(double combined_f1, double baseline_f1) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(combined_f1) || !in_unit(baseline_f1)) throw ValidationError("comparison: F1 values must lie in [0,1]");
  Comparison c;
  c.combined = combined_f1;
  c.baseline = baseline_f1;
  c.absolute_delta = combined_f1 - baseline_f1;
  if (baseline_f1 > 0.0) c.relative_delta = c.absolute_delta / baseline_f1;
  c.no_change = std::abs(c.absolute_delta) < kNoChangeBand;
  return c;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json f1_json(const F1Report& r) {
  json per_class = json::object();
  for (const auto& [label, s] : r.per_class) {
    per_class[std::to_string(label)] = {{"precision", s.precision},
                                        {"recall", s.recall},
                                        {"f1", s.f1},
                                        {"support", s.support},
                                        {"predicted", s.predicted}};
  }
  return {{"macro_f1", r.macro}, {"micro_f1", r.micro}, {"per_class", std::move(per_class)}};
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string signed_fixed(double v, int digits = 4) { return (v >= 0 ? "+" : "") + fixed(v, digits); }

std::string optional_fixed(const std::optional<double>& v) { return v ? fixed(*v) : "n/a"; }

void f1_table(std::ostringstream& md, const F1Report& r) {
  md << "| class | precision | recall | F1 | support | predicted |\n";
  md << "|---|---|---|---|---|---|\n";
  for (const auto& [label, s] : r.per_class) {
    md << "| " << label << " | " << fixed(s.precision) << " | " << fixed(s.recall) << " | " << fixed(s.f1)
       << " | " << s.support << " | " << s.predicted << " |\n";
  }
  md << "\nmacro-F1 " << fixed(r.macro) << ", micro-F1 " << fixed(r.micro) << "\n\n";
}

}  // namespace

json to_json(const EvaluationReport& report) {
  json j;
  j["format"] = "fluidity-report";
  j["version"] = 1;
  j["dataset_kind"] = to_string(report.kind);
  j["evaluated"] = report.evaluated;
  j["evaluation_set"] = report.evaluation_set;
  json corr = json::object();
  for (const auto& c : report.correlations) corr[c.feature] = optional_number(c.r);
  j["feature_correlations"] = std::move(corr);
  j["combined"] = f1_json(report.combined);
  if (report.baseline) {
    j["bleu_baseline"] = f1_json(*report.baseline);
    j["bleu_baseline"]["thresholds"] = report.baseline_thresholds;
  }
  if (report.comparison) {
    const auto& c = *report.comparison;
    j["comparison"] = {{"combined_macro_f1", c.combined},
                       {"baseline_macro_f1", c.baseline},
                       {"absolute_delta", c.absolute_delta},
                       {"relative_delta", optional_number(c.relative_delta)},
                       {"no_change", c.no_change}};
  }
  json hist = json::array();
  for (const auto& row : report.histogram) {
    hist.push_back({{"category", row.category},
                    {"count", row.count},
                    {"positive_fraction", optional_number(row.positive_fraction)},
                    {"negative_fraction", optional_number(row.negative_fraction)}});
  }
  j["nsp_histogram"] = std::move(hist);
  json imp = json::array();
  for (const auto& [name, mag] : report.importance) imp.push_back({{"feature", name}, {"magnitude", mag}});
  j["feature_importance"] = std::move(imp);
  j["config"] = report.config;
  return j;
}

std::string render_markdown(const EvaluationReport& report) {
  std::ostringstream md;
  md << "# Dialogue fluidity evaluation\n\n";
  md << "- dataset kind: " << to_string(report.kind) << "\n";
  md << "- evaluated instances: " << report.evaluated << "\n";
  if (!report.evaluation_set.empty()) md << "- evaluation set: " << report.evaluation_set << "\n";
  md << "\n## Configuration\n\n```json\n" << report.config.dump(2) << "\n```\n\n";

  md << "## Feature correlation with human ratings (Pearson r)\n\n";
  md << "| feature | r |\n|---|---|\n";
  for (const auto& c : report.correlations) md << "| " << c.feature << " | " << optional_fixed(c.r) << " |\n";
  md << "\n";

  md << "## Combined classifier\n\n";
  f1_table(md, report.combined);

  if (report.baseline) {
    md << "## BLEU threshold baseline\n\n";
    md << "thresholds:";
    for (double t : report.baseline_thresholds) md << " " << fixed(t, 2);
    md << "\n\n";
    f1_table(md, *report.baseline);
  }
  if (report.comparison) {
    const auto& c = *report.comparison;
    md << "## Combined vs BLEU baseline\n\n";
    md << "| combined macro-F1 | baseline macro-F1 | absolute delta | relative delta | verdict |\n";
    md << "|---|---|---|---|---|\n";
    md << "| " << fixed(c.combined) << " | " << fixed(c.baseline) << " | " << signed_fixed(c.absolute_delta)
       << " | " << (c.relative_delta ? signed_fixed(*c.relative_delta * 100.0, 2) + "%" : std::string("n/a"))
       << " | " << (c.no_change ? "no change" : (c.absolute_delta > 0 ? "improvement" : "regression"))
       << " |\n\n";
  }

  md << "## NSP predictions per rating category\n\n";
  md << "| category | count | positive | negative |\n|---|---|---|---|\n";
  for (const auto& row : report.histogram) {
    md << "| " << row.category << " | " << row.count << " | " << optional_fixed(row.positive_fraction) << " | "
       << optional_fixed(row.negative_fraction) << " |\n";
  }
  md << "\n";

  if (!report.importance.empty()) {
    md << "## Feature importance (mean |scaled weight|)\n\n| rank | feature | magnitude |\n|---|---|---|\n";
    for (std::size_t i = 0; i < report.importance.size(); ++i) {
      md << "| " << i + 1 << " | " << report.importance[i].first << " | " << fixed(report.importance[i].second)
         << " |\n";
    }
    md << "\n";
  }
  return md.str();
}

std::string histogram_csv(std::span<const HistogramRow> rows) {
  std::ostringstream os;
  os << "category,positive_fraction,negative_fraction,count\n";
  for (const auto& row : rows) {
    os << row.category << ',';
    if (row.positive_fraction) os << json(*row.positive_fraction).dump();
    os << ',';
    if (row.negative_fraction) os << json(*row.negative_fraction).dump();
    os << ',' << row.count << '\n';
  }
  return os.str();
}

}  // namespace fluidity
