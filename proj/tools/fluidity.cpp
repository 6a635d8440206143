// fluidity: ingest -> features -> train -> evaluate.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fluidity/commands.hpp"
#include "fluidity/error.hpp"
#include "fluidity/version.hpp"

using namespace fluidity;

int main(int argc, char** argv) {
  CLI::App app{"Dialogue fluidity metric toolkit"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  std::string kind = "single";

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a raw corpus and write the normalised dataset");
  ingest_cmd->add_option("input", ingest.input, "Single-turn CSV or multi-turn JSONL")->required();
  ingest_cmd->add_option("-o,--output", ingest.output, "Normalised dataset file")->required();
  ingest_cmd->add_option("--kind", kind, "Dataset kind")->check(CLI::IsMember({"single", "multi"}));

  FeaturesOptions features;
  std::string smoothing = "none";
  auto* features_cmd = app.add_subcommand("features", "Score NSP and extract attribute features");
  features_cmd->add_option("dataset", features.dataset, "Normalised dataset file")->required();
  features_cmd->add_option("-o,--output", features.output, "Feature file")->required();
  features_cmd->add_option("--nsp", features.nsp, "stub | file:PATH | remote:URL")->capture_default_str();
  features_cmd->add_option("--nsp-threshold", features.nsp_threshold, "NSP decision threshold")
      ->capture_default_str();
  features_cmd->add_option("--length-threshold", features.length_threshold, "Short-answer token limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  features_cmd->add_option("--bleu-max-n", features.bleu_max_n, "BLEU n-gram order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  features_cmd->add_option("--bleu-smoothing", smoothing, "none | add-k:K")->capture_default_str();
  features_cmd->add_option("--workers", features.workers, "Worker threads (0 = logical cores)")
      ->capture_default_str();
  features_cmd->add_flag("!--no-casefold", features.casefold, "Keep case when comparing n-grams");
  features_cmd->add_option("--seed", features.seed, "Recorded in the manifest")->capture_default_str();

  TrainOptions train;
  std::string weighting = "balanced";
  auto* train_cmd = app.add_subcommand("train", "Train the one-vs-rest linear SVM");
  train_cmd->add_option("features", train.features, "Feature file")->required();
  train_cmd->add_option("-o,--output", train.model_output, "Model file")->required();
  train_cmd->add_option("--seed", train.train.seed, "Split seed")->capture_default_str();
  train_cmd->add_option("--test-fraction", train.test_fraction, "Held-out share (0 = train on all)")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  train_cmd->add_option("--c", train.train.c, "Regularisation C")->capture_default_str();
  train_cmd->add_option("--epochs", train.train.epochs, "Subgradient epochs")->capture_default_str();
  train_cmd->add_option("--tolerance", train.train.tolerance, "Stop when the subgradient norm falls below")
      ->capture_default_str();
  train_cmd->add_option("--class-weighting", weighting, "balanced | none")
      ->check(CLI::IsMember({"balanced", "none"}))
      ->capture_default_str();

  EvaluateOptions evaluate;
  std::vector<std::string> formats;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model and write reports");
  evaluate_cmd->add_option("model", evaluate.model, "Model file")->required();
  evaluate_cmd->add_option("features", evaluate.features, "Feature file")->required();
  evaluate_cmd->add_option("-o,--report", evaluate.report_prefix, "Report path prefix")->required();
  evaluate_cmd->add_option("--format", formats, "md, json, csv (repeatable; default all)")
      ->check(CLI::IsMember({"md", "json", "csv"}));
  evaluate_cmd->add_flag("--bleu-baseline", evaluate.bleu_baseline, "Compare against BLEU thresholds");
  evaluate_cmd->add_flag("--all", evaluate.all_records, "Evaluate every record, ignoring the held-out split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::validation);
  }

  try {
    if (*ingest_cmd) {
      ingest.kind = parse_dataset_kind(kind);
      return run_ingest(ingest, std::cout, std::cerr);
    }
    if (*features_cmd) {
      features.bleu_smoothing = smoothing;
      return run_features(features, std::cout, std::cerr);
    }
    if (*train_cmd) {
      train.train.class_weighting = weighting == "none" ? ClassWeighting::none : ClassWeighting::balanced;
      return run_train(train, std::cout, std::cerr);
    }
    if (*evaluate_cmd) {
      if (!formats.empty()) {
        evaluate.formats.clear();
        for (const auto& f : formats) evaluate.formats.insert(parse_report_format(f));
      }
      return run_evaluate(evaluate, std::cout, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  }
  return static_cast<int>(ExitCode::validation);
}
