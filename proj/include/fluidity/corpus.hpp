#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fluidity {

enum class DatasetKind { single_turn, multi_turn };

// Upper bound of the rating scale: 5 for single-turn, 4 for multi-turn.
int scale_max(DatasetKind kind);
std::string_view to_string(DatasetKind kind);
// Accepts "single"/"multi" and the long forms. Throws ValidationError.
DatasetKind parse_dataset_kind(std::string_view text);

// Integer rating bucket, bounded by the scale of its dataset kind.
class RatingCategory {
 public:
  constexpr explicit RatingCategory(int value) : value_(value) {}
  constexpr int value() const { return value_; }
  auto operator<=>(const RatingCategory&) const = default;

 private:
  int value_;
};

inline constexpr std::size_t kRatersPerPair = 5;

// One statement/response pair rated by five crowd workers.
struct SingleTurnInstance {
  std::string id;
  std::string statement;
  std::string response;
  std::array<int, kRatersPerPair> ratings{};
  double mean_rating = 0.0;
  // Gold response for the BLEU baseline. When absent the statement is used.
  std::optional<std::string> reference;

  bool operator==(const SingleTurnInstance&) const = default;
};

enum class Speaker { human, agent };
std::string_view to_string(Speaker speaker);

struct Utterance {
  Speaker speaker = Speaker::human;
  std::string text;
  std::size_t index = 0;
  // Optional gold turn for the BLEU baseline (agent turns only).
  std::optional<std::string> reference;

  bool operator==(const Utterance&) const = default;
};

// A full dialogue with one overall 1..4 score.
struct Conversation {
  std::string id;
  std::vector<Utterance> turns;
  int score = 1;

  bool operator==(const Conversation&) const = default;
};

// floor(mean) clamped into [1, scale_max]. Throws std::domain_error when
// mean lies outside [1, scale_max].
RatingCategory bin_rating(double mean, int scale_max);

RatingCategory target_category(const SingleTurnInstance& instance);
RatingCategory target_category(const Conversation& conversation);

// Parses the comma-separated single-turn schema
// `Statement,Response,AMT1..AMT5[,Mean]` (optional `Id` and `Reference`
// columns). `source` only labels diagnostics.
std::vector<SingleTurnInstance> parse_single_turn(std::istream& in, std::string_view source = "<input>");
std::vector<SingleTurnInstance> load_single_turn(const std::filesystem::path& path);

// Line-delimited conversation records:
// `{"id": str, "score": int, "turns": [{"speaker": "human"|"agent", "text": str}, ...]}`.
std::vector<Conversation> parse_multi_turn(std::istream& in, std::string_view source = "<input>");
std::vector<Conversation> load_multi_turn(const std::filesystem::path& path);

Conversation conversation_from_json(const nlohmann::json& record, std::string_view where);
nlohmann::json to_json(const Conversation& conversation);
SingleTurnInstance single_turn_from_json(const nlohmann::json& record, std::string_view where);
nlohmann::json to_json(const SingleTurnInstance& instance);

// Normalised form of either dataset shape. Immutable once loaded.
struct Dataset {
  DatasetKind kind = DatasetKind::single_turn;
  std::vector<SingleTurnInstance> single_turn;
  std::vector<Conversation> multi_turn;

  std::size_t size() const {
    return kind == DatasetKind::single_turn ? single_turn.size() : multi_turn.size();
  }
  std::vector<RatingCategory> categories() const;

  bool operator==(const Dataset&) const = default;
};

inline constexpr std::string_view kDatasetFormat = "fluidity-dataset";

// Writes a header record followed by one record per instance. Entries of
// `header_extra` are merged into the header.
void write_dataset(std::ostream& out, const Dataset& dataset,
                   const nlohmann::json& header_extra = nlohmann::json::object());
Dataset read_dataset(std::istream& in, std::string_view source = "<input>");
Dataset read_dataset(const std::filesystem::path& path);

// Disjoint, exhaustive partition by position into the input.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  bool stratified = false;
};

// Deterministic split for a fixed seed. Stratifies by category when every
// category has at least two members; otherwise falls back to an unstratified
// split and logs a warning. Throws ValidationError on bad arguments.
SplitIndices split_indices(std::span<const RatingCategory> categories, double test_fraction,
                           std::uint64_t seed);

template <class T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
  bool stratified = false;
};

template <class T, class CategoryFn>
Split<T> split(std::span<const T> items, double test_fraction, std::uint64_t seed,
               CategoryFn category_of) {
  std::vector<RatingCategory> cats;
  cats.reserve(items.size());
  for (const T& item : items) cats.push_back(category_of(item));
  SplitIndices idx = split_indices(cats, test_fraction, seed);
  Split<T> out;
  out.stratified = idx.stratified;
  for (std::size_t i : idx.train) out.train.push_back(items[i]);
  for (std::size_t i : idx.test) out.test.push_back(items[i]);
  return out;
}

}  // namespace fluidity
