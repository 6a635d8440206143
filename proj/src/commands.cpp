#include "fluidity/commands.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fluidity/analysis.hpp"
#include "fluidity/error.hpp"
#include "fluidity/features.hpp"
#include "fluidity/hashing.hpp"
#include "fluidity/manifest.hpp"
#include "fluidity/nsp.hpp"
#include "fluidity/version.hpp"

namespace fluidity {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class Body>
int guarded(std::ostream& err, std::string_view command, Body&& body) {
  try {
    body();
    return static_cast<int>(ExitCode::ok);
  } catch (const Error& e) {
    err << command << ": error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    err << command << ": error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::validation);
  }
}

RunManifest start_manifest(std::string command, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.seed = seed;
  m.tool_version = std::string(tool_version());
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& output) {
  m.finished_at = utc_timestamp();
  write_manifest(m, output);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

std::string manifest_ref(const fs::path& output) { return manifest_path_for(output).filename().string(); }

std::string distribution(const std::vector<RatingCategory>& cats) {
  std::map<int, std::size_t> counts;
  for (const auto& c : cats) counts[c.value()]++;
  std::ostringstream os;
  bool first = true;
  for (const auto& [cat, n] : counts) {
    os << (first ? "" : ", ") << cat << ": " << n;
    first = false;
  }
  return os.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "md") return ReportFormat::md;
  if (text == "json") return ReportFormat::json;
  if (text == "csv") return ReportFormat::csv;
  throw ValidationError("unknown report format '" + std::string(text) + "' (expected md, json or csv)");
}

fs::path report_path(const fs::path& prefix, ReportFormat format) {
  switch (format) {
    case ReportFormat::md:
      return prefix.string() + ".md";
    case ReportFormat::json:
      return prefix.string() + ".json";
    case ReportFormat::csv:
      return prefix.string() + ".histogram.csv";
  }
  return prefix;
}

int run_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "ingest", [&] {
    RunManifest manifest = start_manifest("ingest", 0);
    manifest.config = {{"kind", to_string(options.kind)}, {"input", options.input.string()}};

    Dataset ds;
    ds.kind = options.kind;
    if (options.kind == DatasetKind::single_turn) {
      ds.single_turn = load_single_turn(options.input);
    } else {
      ds.multi_turn = load_multi_turn(options.input);
    }
    const std::string input_hash = sha256_file(options.input);
    manifest.input_hashes[options.input.string()] = input_hash;

    {
      auto file = open_output(options.output);
      write_dataset(file, ds, {{"source_sha256", input_hash}, {"manifest", manifest_ref(options.output)}});
    }
    finish_manifest(manifest, options.output);

    out << "ingested " << ds.size() << " " << (ds.kind == DatasetKind::single_turn ? "instances" : "conversations")
        << " (" << to_string(ds.kind) << "-turn)\n";
    out << "category distribution: " << distribution(ds.categories()) << '\n';
  });
}

int run_features(const FeaturesOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "features", [&] {
    RunManifest manifest = start_manifest("features", options.seed);

    const Dataset ds = read_dataset(options.dataset);
    const NspBackendConfig nsp_config = parse_nsp_option(options.nsp, options.nsp_threshold);
    const auto backend = make_nsp_backend(nsp_config);

    ExtractOptions extract;
    extract.features.length_threshold = options.length_threshold;
    extract.features.casefold = options.casefold;
    extract.bleu = BleuConfig::uniform(options.bleu_max_n, BleuSmoothing::parse(options.bleu_smoothing));
    extract.workers = options.workers;
    extract.progress = [&err](std::size_t done, std::size_t total) {
      err << "features: " << done << "/" << total << '\n';
    };

    const json config = {{"features", extract.features.to_json()},
                         {"nsp", {{"backend", backend->describe()}, {"threshold", nsp_config.threshold}}},
                         {"bleu", extract.bleu->to_json()}};
    manifest.config = config;
    manifest.config["workers"] = options.workers;
    manifest.input_hashes[options.dataset.string()] = sha256_file(options.dataset);
    if (nsp_config.kind == NspBackendKind::file) {
      manifest.input_hashes[nsp_config.location] = sha256_file(nsp_config.location);
    }

    const auto records = extract_all(ds, *backend, extract);
    {
      auto file = open_output(options.output);
      write_feature_file(file, ds.kind, records,
                         {{"config", config},
                          {"dataset_sha256", manifest.input_hashes[options.dataset.string()]},
                          {"manifest", manifest_ref(options.output)}});
    }
    finish_manifest(manifest, options.output);
    out << "wrote " << records.size() << " feature records to " << options.output.string() << '\n';
  });
}

int run_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "train", [&] {
    RunManifest manifest = start_manifest("train", options.train.seed);
    const FeatureTable table = read_feature_file(options.features);
    manifest.input_hashes[options.features.string()] = sha256_file(options.features);

    const LabeledData all = LabeledData::from_records(table.records, table.feature_names);
    LabeledData train_set = all;
    json split = {{"test_fraction", options.test_fraction}, {"seed", options.train.seed}};
    if (options.test_fraction > 0.0) {
      const SplitIndices idx = split_indices(all.targets, options.test_fraction, options.train.seed);
      train_set.rows.clear();
      train_set.targets.clear();
      train_set.ids.clear();
      for (std::size_t i : idx.train) {
        train_set.rows.push_back(all.rows[i]);
        train_set.targets.push_back(all.targets[i]);
        train_set.ids.push_back(all.ids[i]);
      }
      std::vector<std::string> test_ids;
      for (std::size_t i : idx.test) test_ids.push_back(all.ids[i]);
      split["stratified"] = idx.stratified;
      split["train_count"] = idx.train.size();
      split["test_ids"] = test_ids;
    } else {
      split["train_count"] = all.rows.size();
      split["test_ids"] = json::array();
    }

    const TrainedModel model = train(train_set, options.train);
    json doc = to_json(model);
    doc["dataset_kind"] = to_string(table.kind);
    doc["split"] = split;
    doc["features_header"] = table.header.value("config", json::object());
    doc["manifest"] = manifest_ref(options.model_output);

    manifest.config = {{"train", options.train.to_json()}, {"test_fraction", options.test_fraction}};
    write_text(options.model_output, doc.dump(2) + "\n");
    finish_manifest(manifest, options.model_output);

    out << "trained " << model.classes.size() << "-class one-vs-rest linear SVM on " << train_set.rows.size()
        << " instances\n";
    out << "training accuracy: " << model.training_accuracy << '\n';
    if (!model.dropped_features.empty()) {
      out << "dropped zero-variance features:";
      for (const auto& f : model.dropped_features) out << ' ' << f;
      out << '\n';
    }
  });
}

int run_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "evaluate", [&] {
    RunManifest manifest = start_manifest("evaluate", 0);
    json model_doc;
    {
      std::ifstream in(options.model, std::ios::binary);
      if (!in) throw ValidationError("cannot open " + options.model.string());
      try {
        model_doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ValidationError(options.model.string() + ": invalid JSON: " + e.what());
      }
    }
    const TrainedModel model = model_from_json(model_doc);
    const FeatureTable table = read_feature_file(options.features);
    manifest.input_hashes[options.model.string()] = sha256_file(options.model);
    manifest.input_hashes[options.features.string()] = sha256_file(options.features);
    manifest.seed = model.config.seed;

    const std::unordered_set<std::string> available(table.feature_names.begin(), table.feature_names.end());
    for (const auto& name : model.feature_names) {
      if (!available.contains(name)) {
        throw ValidationError("feature mismatch: model expects '" + name + "', absent from " +
                              options.features.string());
      }
    }

    // Evaluation set: the model's held-out ids, unless told otherwise.
    std::vector<std::string> test_ids;
    if (!options.all_records && model_doc.contains("split")) {
      test_ids = model_doc["split"].value("test_ids", std::vector<std::string>{});
    }
    std::vector<const FeatureRecord*> eval, fit;
    std::string eval_label;
    if (test_ids.empty()) {
      for (const auto& r : table.records) {
        eval.push_back(&r);
        fit.push_back(&r);
      }
      eval_label = "all records (" + std::to_string(eval.size()) + ")";
    } else {
      std::unordered_map<std::string, const FeatureRecord*> by_id;
      for (const auto& r : table.records) by_id.emplace(r.id, &r);
      std::unordered_set<std::string> held_out(test_ids.begin(), test_ids.end());
      for (const auto& id : test_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
          throw DataDependencyError("held-out instance " + id + " not found in " + options.features.string());
        }
        eval.push_back(it->second);
      }
      for (const auto& r : table.records) {
        if (!held_out.contains(r.id)) fit.push_back(&r);
      }
      eval_label = "held-out (" + std::to_string(eval.size()) + " of " + std::to_string(table.records.size()) + ")";
    }
    if (eval.empty()) throw ValidationError("nothing to evaluate in " + options.features.string());

    EvaluationReport report;
    report.kind = table.kind;
    report.evaluated = eval.size();
    report.evaluation_set = eval_label;

    std::vector<RatingCategory> gold, predicted;
    std::vector<double> ratings;
    for (const FeatureRecord* r : eval) {
      gold.emplace_back(r->target);
      predicted.push_back(predict(model, r->features));
      ratings.push_back(r->rating);
    }
    report.combined = f1_scores(predicted, gold);

    for (const auto& name : table.feature_names) {
      std::vector<double> column;
      for (const FeatureRecord* r : eval) column.push_back(r->features.at(name));
      std::optional<double> r;
      if (column.size() >= 2) r = try_pearson(column, ratings);
      report.correlations.push_back({name, r});
    }

    if (available.contains("nsp_label")) {
      std::vector<int> labels;
      for (const FeatureRecord* r : eval) labels.push_back(static_cast<int>(r->features.at("nsp_label")));
      report.histogram = category_histogram(gold, labels, scale_max(table.kind));
    }
    report.importance = feature_importance(model);

    json baseline_config = nullptr;
    if (options.bleu_baseline) {
      std::vector<double> fit_scores;
      std::vector<RatingCategory> fit_gold;
      for (const FeatureRecord* r : fit) {
        if (!r->bleu) throw DataDependencyError("record " + r->id + " has no bleu score; rerun features");
        fit_scores.push_back(*r->bleu);
        fit_gold.emplace_back(r->target);
      }
      report.baseline_thresholds = fit_bleu_thresholds(fit_scores, fit_gold, scale_max(table.kind));
      std::vector<RatingCategory> baseline_pred;
      for (const FeatureRecord* r : eval) {
        if (!r->bleu) throw DataDependencyError("record " + r->id + " has no bleu score; rerun features");
        baseline_pred.push_back(classify_bleu_score(*r->bleu, report.baseline_thresholds));
      }
      report.baseline = f1_scores(baseline_pred, gold);
      report.comparison = comparison_report(report.combined.macro, report.baseline->macro);
      baseline_config = {{"rule", "category = 1 + #thresholds <= bleu"},
                         {"fit", "macro-F1 grid search, step 0.01"},
                         {"fitted_on", test_ids.empty() ? "evaluation records (in-sample)" : "training records"},
                         {"thresholds", report.baseline_thresholds}};
    }

    report.config = {{"classifier", model_doc.value("config", json::object())},
                     {"kernel", "linear"},
                     {"multiclass", "one-vs-rest"},
                     {"averaging", "macro over gold classes (micro also reported)"},
                     {"target", table.kind == DatasetKind::single_turn
                                    ? "floor of mean crowd rating, categories 1-5"
                                    : "dialogue score, categories 1-4"},
                     {"features", table.header.value("config", json::object())},
                     {"dropped_features", model.dropped_features},
                     {"training_data_hash", model.training_data_hash},
                     {"bleu_baseline", baseline_config},
                     {"manifest", manifest_ref(options.report_prefix.string() + ".report")}};
    manifest.config = {{"bleu_baseline", options.bleu_baseline}, {"all_records", options.all_records}};

    for (ReportFormat f : options.formats) {
      const fs::path path = report_path(options.report_prefix, f);
      switch (f) {
        case ReportFormat::md:
          write_text(path, render_markdown(report));
          break;
        case ReportFormat::json:
          write_text(path, to_json(report).dump(2) + "\n");
          break;
        case ReportFormat::csv:
          write_text(path, histogram_csv(report.histogram));
          break;
      }
      out << "wrote " << path.string() << '\n';
    }
    finish_manifest(manifest, options.report_prefix.string() + ".report");

    out << "combined macro-F1: " << report.combined.macro << '\n';
    if (report.comparison) {
      out << "BLEU baseline macro-F1: " << report.comparison->baseline << " (delta " << report.comparison->absolute_delta
          << ")\n";
    }
  });
}

}  // namespace fluidity
