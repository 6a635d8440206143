#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>

#include "fluidity/bleu.hpp"
#include "fluidity/classifier.hpp"
#include "fluidity/corpus.hpp"

// Pipeline stages behind the `fluidity` CLI. Stages talk through files; each
// run_* returns a process exit code (see ExitCode) and never throws toolkit
// errors. Diagnostics go to `err`, summaries to `out`.
namespace fluidity {

struct IngestOptions {
  std::filesystem::path input;
  DatasetKind kind = DatasetKind::single_turn;
  std::filesystem::path output;
};

struct FeaturesOptions {
  std::filesystem::path dataset;
  std::filesystem::path output;
  std::string nsp = "stub";  // stub | file:PATH | remote:URL
  double nsp_threshold = 0.5;
  std::size_t length_threshold = 5;
  bool casefold = true;
  int bleu_max_n = 4;
  std::string bleu_smoothing = "none";
  unsigned workers = 0;  // 0 = logical cores
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::filesystem::path features;
  std::filesystem::path model_output;
  TrainConfig train;
  double test_fraction = 0.2;  // 0 trains on every record
};

enum class ReportFormat { md, json, csv };

struct EvaluateOptions {
  std::filesystem::path model;
  std::filesystem::path features;
  std::filesystem::path report_prefix;  // writes PREFIX.md, PREFIX.json, PREFIX.histogram.csv
  std::set<ReportFormat> formats{ReportFormat::md, ReportFormat::json, ReportFormat::csv};
  bool bleu_baseline = false;
  bool all_records = false;  // ignore the model's held-out split
};

int run_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err);
int run_features(const FeaturesOptions& options, std::ostream& out, std::ostream& err);
int run_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int run_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);

ReportFormat parse_report_format(std::string_view text);
std::filesystem::path report_path(const std::filesystem::path& prefix, ReportFormat format);

}  // namespace fluidity
