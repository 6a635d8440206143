#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluidity/bleu.hpp"
#include "fluidity/corpus.hpp"
#include "fluidity/nsp.hpp"
#include "fluidity/textproc.hpp"
#include "json.hpp"

namespace fluidity {

enum class RepetitionKind { internal, external, partner };

// Attribute outputs for one instance. Repetition arrays are indexed by
// n-gram order minus one.
struct FeatureVector {
  double nsp_prob = 0.0;
  int nsp_label = 0;
  std::array<double, 3> internal_rep{};
  std::array<double, 3> external_rep{};
  std::array<double, 3> partner_rep{};
  int question_count = 0;
  double question_balance = 0.0;
  int response_length = 0;
  int has_entity = 0;
  int short_safe = 0;

  bool operator==(const FeatureVector&) const = default;
};

using NamedFeatures = std::map<std::string, double>;

// Canonical feature names, in the order used by to_values().
std::span<const std::string> feature_names();
std::vector<double> to_values(const FeatureVector& v);
NamedFeatures to_named(const FeatureVector& v);

struct FeatureConfig {
  std::size_t length_threshold = 5;
  bool casefold = true;
  // Defaults to the bundled capitalisation heuristic when null.
  const EntityTagger* tagger = nullptr;

  nlohmann::json to_json() const;
};

// 1 - distinct/total over the response's n-grams; 0 without n-grams.
// n must be 1, 2 or 3 (std::domain_error otherwise).
double internal_repetition(std::string_view response, int n, bool casefold = true);

// Share of response n-grams (with multiplicity) found in the union of the
// partner utterances' n-gram sets.
double partner_repetition(std::string_view response, std::span<const std::string> partner_utterances, int n,
                          bool casefold = true);

// Same containment measure against the agent's own earlier turns.
double external_repetition(std::string_view response, std::span<const std::string> prior_agent_utterances, int n,
                           bool casefold = true);

double repetition(RepetitionKind kind, std::string_view response, std::span<const std::string> history, int n,
                  bool casefold = true);

struct QuestionBalance {
  std::size_t count = 0;  // questions across agent turns
  double balance = 0.0;   // question-bearing agent turns / agent turns
};

QuestionBalance question_balance(const Conversation& conversation);
// Treats the pair as a two-turn conversation (human statement, agent response).
QuestionBalance question_balance(const SingleTurnInstance& instance);

struct ShortSafe {
  std::size_t length = 0;
  int has_entity = 0;
  int flag = 0;  // short (<= threshold tokens) and entity-free
};

ShortSafe short_safe(std::string_view response, std::size_t length_threshold,
                     const EntityTagger* tagger = nullptr);

// NSP errors are rethrown with the instance id prepended.
FeatureVector extract_features(const SingleTurnInstance& instance, const NspBackend& nsp,
                               const FeatureConfig& config = {});

// Per-agent-turn values averaged over agent turns. Each agent turn is scored
// for NSP against the preceding utterance; partner history is every earlier
// human turn and external history every earlier agent turn.
FeatureVector extract_features(const Conversation& conversation, const NspBackend& nsp,
                               const FeatureConfig& config = {});

// BLEU of the agent response(s) against the instance's reference. Single
// turn: the reference column, else the statement. Multi turn: each agent
// turn against its reference, else the preceding utterance, averaged.
double baseline_bleu(const SingleTurnInstance& instance, const BleuConfig& config);
double baseline_bleu(const Conversation& conversation, const BleuConfig& config);

// One line of a feature file.
struct FeatureRecord {
  std::string id;
  int target = 0;
  double rating = 0.0;  // mean rating (single) or score (multi)
  NamedFeatures features;
  std::optional<double> bleu;

  bool operator==(const FeatureRecord&) const = default;
};

struct ExtractOptions {
  FeatureConfig features;
  std::optional<BleuConfig> bleu;
  unsigned workers = 1;
  // Called with the number of finished instances at every multiple of 100
  // and at the end. May be called from worker threads, never concurrently.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Extracts every instance, in parallel when workers > 1. Output order
// follows the dataset. Backends that are not concurrent are serialised. On
// failure the error of the lowest failing index is rethrown.
std::vector<FeatureRecord> extract_all(const Dataset& dataset, const NspBackend& nsp, const ExtractOptions& options);

inline constexpr std::string_view kFeatureFileFormat = "fluidity-features";

struct FeatureTable {
  DatasetKind kind = DatasetKind::single_turn;
  std::vector<std::string> feature_names;
  nlohmann::json header = nlohmann::json::object();
  std::vector<FeatureRecord> records;
};

// Header record (format, kind, feature names, plus `header_extra`) followed
// by `{"id", "target", "rating", "features", ["bleu"]}` lines.
void write_feature_file(std::ostream& out, DatasetKind kind, std::span<const FeatureRecord> records,
                        const nlohmann::json& header_extra = nlohmann::json::object());
FeatureTable read_feature_file(std::istream& in, std::string_view source = "<input>");
FeatureTable read_feature_file(const std::filesystem::path& path);

}  // namespace fluidity
