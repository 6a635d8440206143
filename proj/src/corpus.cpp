#include "fluidity/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>

#include "csv.hpp"
#include "fluidity/error.hpp"
#include "rng.hpp"

namespace fluidity {

using nlohmann::json;

namespace {

constexpr double kFileMeanTolerance = 0.05;
constexpr double kMeanTolerance = 1e-9;

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<long> parse_int(std::string_view text) {
  std::string t = trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double mean_of(const std::array<int, kRatersPerPair>& ratings) {
  double sum = 0.0;
  for (int r : ratings) sum += r;
  return sum / static_cast<double>(kRatersPerPair);
}

void check_rating(long value, std::string_view where) {
  if (value < 1 || value > 5) {
    throw ValidationError(std::string(where) + ": rating " + std::to_string(value) +
                          " outside [1,5]");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::string where_line(std::string_view source, std::size_t line) {
  return std::string(source) + " line " + std::to_string(line);
}

}  // namespace

int scale_max(DatasetKind kind) { return kind == DatasetKind::single_turn ? 5 : 4; }

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::single_turn ? "single" : "multi";
}

DatasetKind parse_dataset_kind(std::string_view text) {
  std::string t = lower(text);
  if (t == "single" || t == "single_turn" || t == "single-turn") return DatasetKind::single_turn;
  if (t == "multi" || t == "multi_turn" || t == "multi-turn") return DatasetKind::multi_turn;
  throw ValidationError("unknown dataset kind '" + std::string(text) + "' (expected single or multi)");
}

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::human ? "human" : "agent";
}

RatingCategory bin_rating(double mean, int scale_max) {
  if (!(mean >= 1.0 && mean <= static_cast<double>(scale_max))) {
    throw std::domain_error("rating " + std::to_string(mean) + " outside [1," +
                            std::to_string(scale_max) + "]");
  }
  int value = static_cast<int>(std::floor(mean));
  return RatingCategory(std::clamp(value, 1, scale_max));
}

RatingCategory target_category(const SingleTurnInstance& instance) {
  return bin_rating(instance.mean_rating, scale_max(DatasetKind::single_turn));
}

RatingCategory target_category(const Conversation& conversation) {
  return RatingCategory(conversation.score);
}

std::vector<SingleTurnInstance> parse_single_turn(std::istream& in, std::string_view source) {
  std::vector<csv::Record> records = csv::read_all(in);
  if (records.empty()) throw ValidationError(std::string(source) + ": missing header row");

  std::map<std::string, std::size_t> column;
  const auto& header = records.front().fields;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(lower(trim(header[i])), i);

  auto require = [&](const std::string& name) {
    auto it = column.find(lower(name));
    if (it == column.end()) {
      throw ValidationError(std::string(source) + ": schema error, missing column '" + name + "'");
    }
    return it->second;
  };
  auto optional_column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };

  const std::size_t statement_col = require("Statement");
  const std::size_t response_col = require("Response");
  std::array<std::size_t, kRatersPerPair> rating_cols{};
  for (std::size_t k = 0; k < kRatersPerPair; ++k) rating_cols[k] = require("AMT" + std::to_string(k + 1));
  const auto mean_col = optional_column("mean");
  const auto id_col = optional_column("id");
  const auto reference_col = optional_column("reference");

  std::vector<SingleTurnInstance> out;
  out.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    const std::string where = std::string(source) + " row " + std::to_string(r) + " (line " +
                              std::to_string(records[r].line) + ")";
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    SingleTurnInstance inst;
    inst.statement = fields[statement_col];
    inst.response = fields[response_col];
    for (std::size_t k = 0; k < kRatersPerPair; ++k) {
      auto v = parse_int(fields[rating_cols[k]]);
      if (!v) {
        throw ValidationError(where + ": AMT" + std::to_string(k + 1) + " is not an integer: '" +
                              fields[rating_cols[k]] + "'");
      }
      check_rating(*v, where);
      inst.ratings[k] = static_cast<int>(*v);
    }
    inst.mean_rating = mean_of(inst.ratings);
    if (mean_col && !trim(fields[*mean_col]).empty()) {
      auto stored = parse_double(fields[*mean_col]);
      if (!stored) throw ValidationError(where + ": Mean is not a number: '" + fields[*mean_col] + "'");
      if (std::abs(*stored - inst.mean_rating) > kFileMeanTolerance + 1e-12) {
        throw ValidationError(where + ": Mean " + trim(fields[*mean_col]) +
                              " disagrees with mean of ratings " + std::to_string(inst.mean_rating));
      }
    }
    if (id_col && !trim(fields[*id_col]).empty()) {
      inst.id = trim(fields[*id_col]);
    } else {
      inst.id = std::to_string(r);
    }
    if (reference_col && !fields[*reference_col].empty()) inst.reference = fields[*reference_col];
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<SingleTurnInstance> load_single_turn(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_single_turn(in, path.string());
}

Conversation conversation_from_json(const json& record, std::string_view where) {
  const std::string at(where);
  if (!record.is_object()) throw ValidationError(at + ": record is not an object");
  Conversation conv;
  if (auto it = record.find("id"); it != record.end()) {
    if (!it->is_string()) throw ValidationError(at + ": id must be a string");
    conv.id = it->get<std::string>();
  }
  auto score = record.find("score");
  if (score == record.end() || !score->is_number_integer()) {
    throw ValidationError(at + ": score must be an integer");
  }
  long long s = score->get<long long>();
  if (s < 1 || s > 4) throw ValidationError(at + ": score " + std::to_string(s) + " outside [1,4]");
  conv.score = static_cast<int>(s);

  auto turns = record.find("turns");
  if (turns == record.end() || !turns->is_array()) throw ValidationError(at + ": turns must be an array");
  if (turns->empty()) throw ValidationError(at + ": conversation has no turns");
  for (const json& t : *turns) {
    const std::string turn_at = at + " turn " + std::to_string(conv.turns.size());
    if (!t.is_object()) throw ValidationError(turn_at + ": not an object");
    Utterance u;
    auto speaker = t.find("speaker");
    if (speaker == t.end() || !speaker->is_string()) throw ValidationError(turn_at + ": missing speaker");
    const auto& sp = speaker->get_ref<const std::string&>();
    if (sp == "human") {
      u.speaker = Speaker::human;
    } else if (sp == "agent") {
      u.speaker = Speaker::agent;
    } else {
      throw ValidationError(turn_at + ": unknown speaker '" + sp + "'");
    }
    auto text = t.find("text");
    if (text == t.end() || !text->is_string()) throw ValidationError(turn_at + ": missing text");
    u.text = text->get<std::string>();
    if (auto ref = t.find("reference"); ref != t.end() && !ref->is_null()) {
      if (!ref->is_string()) throw ValidationError(turn_at + ": reference must be a string");
      u.reference = ref->get<std::string>();
    }
    u.index = conv.turns.size();
    conv.turns.push_back(std::move(u));
  }
  return conv;
}

json to_json(const Conversation& conversation) {
  json turns = json::array();
  for (const Utterance& u : conversation.turns) {
    json t = {{"speaker", to_string(u.speaker)}, {"text", u.text}};
    if (u.reference) t["reference"] = *u.reference;
    turns.push_back(std::move(t));
  }
  return {{"id", conversation.id}, {"score", conversation.score}, {"turns", std::move(turns)}};
}

SingleTurnInstance single_turn_from_json(const json& record, std::string_view where) {
  const std::string at(where);
  if (!record.is_object()) throw ValidationError(at + ": record is not an object");
  SingleTurnInstance inst;
  try {
    inst.id = record.at("id").get<std::string>();
    inst.statement = record.at("statement").get<std::string>();
    inst.response = record.at("response").get<std::string>();
    const json& ratings = record.at("ratings");
    if (!ratings.is_array() || ratings.size() != kRatersPerPair) {
      throw ValidationError(at + ": ratings must hold exactly 5 entries");
    }
    for (std::size_t k = 0; k < kRatersPerPair; ++k) {
      if (!ratings[k].is_number_integer()) throw ValidationError(at + ": ratings must be integers");
      long long v = ratings[k].get<long long>();
      check_rating(v, at);
      inst.ratings[k] = static_cast<int>(v);
    }
    if (auto ref = record.find("reference"); ref != record.end() && !ref->is_null()) {
      inst.reference = ref->get<std::string>();
    }
    inst.mean_rating = mean_of(inst.ratings);
    if (auto m = record.find("mean"); m != record.end()) {
      if (std::abs(m->get<double>() - inst.mean_rating) > kMeanTolerance) {
        throw ValidationError(at + ": mean disagrees with ratings");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(at + ": " + e.what());
  }
  return inst;
}

json to_json(const SingleTurnInstance& instance) {
  json j = {{"id", instance.id},
            {"statement", instance.statement},
            {"response", instance.response},
            {"ratings", instance.ratings},
            {"mean", instance.mean_rating}};
  if (instance.reference) j["reference"] = *instance.reference;
  return j;
}

std::vector<Conversation> parse_multi_turn(std::istream& in, std::string_view source) {
  std::vector<Conversation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = where_line(source, lineno);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    Conversation conv = conversation_from_json(record, where);
    if (conv.id.empty()) conv.id = std::to_string(out.size() + 1);
    out.push_back(std::move(conv));
  }
  return out;
}

std::vector<Conversation> load_multi_turn(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_multi_turn(in, path.string());
}

std::vector<RatingCategory> Dataset::categories() const {
  std::vector<RatingCategory> out;
  out.reserve(size());
  if (kind == DatasetKind::single_turn) {
    for (const auto& inst : single_turn) out.push_back(target_category(inst));
  } else {
    for (const auto& conv : multi_turn) out.push_back(target_category(conv));
  }
  return out;
}

void write_dataset(std::ostream& out, const Dataset& dataset, const json& header_extra) {
  json header = {{"format", kDatasetFormat},
                 {"version", 1},
                 {"kind", to_string(dataset.kind)},
                 {"count", dataset.size()}};
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  out << header.dump() << '\n';
  if (dataset.kind == DatasetKind::single_turn) {
    for (const auto& inst : dataset.single_turn) out << to_json(inst).dump() << '\n';
  } else {
    for (const auto& conv : dataset.multi_turn) out << to_json(conv).dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in, std::string_view source) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = where_line(source, lineno);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    if (!have_header) {
      if (!record.is_object() || record.value("format", "") != kDatasetFormat) {
        throw ValidationError(where + ": not a normalised dataset file (missing header record)");
      }
      ds.kind = parse_dataset_kind(record.value("kind", ""));
      have_header = true;
      continue;
    }
    if (ds.kind == DatasetKind::single_turn) {
      ds.single_turn.push_back(single_turn_from_json(record, where));
    } else {
      ds.multi_turn.push_back(conversation_from_json(record, where));
    }
  }
  if (!have_header) throw ValidationError(std::string(source) + ": empty dataset file");
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset(in, path.string());
}

SplitIndices split_indices(std::span<const RatingCategory> categories, double test_fraction,
                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = categories.size();
  if (n < 2) throw ValidationError("need at least 2 instances to split");

  std::map<RatingCategory, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i) strata[categories[i]].push_back(i);
  const bool stratify =
      std::all_of(strata.begin(), strata.end(), [](const auto& kv) { return kv.second.size() >= 2; });
  if (!stratify) {
    std::clog << "warning: some rating category has fewer than 2 members; using an unstratified split\n";
    strata.clear();
    auto& all = strata[RatingCategory(0)];
    for (std::size_t i = 0; i < n; ++i) all.push_back(i);
  }

  SplitRng rng(seed);
  std::vector<char> is_test(n, 0);
  for (auto& [cat, members] : strata) {
    shuffle(members, rng);
    auto k = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * test_fraction));
    k = std::clamp<std::size_t>(k, 1, members.size() - 1);
    for (std::size_t j = 0; j < k; ++j) is_test[members[j]] = 1;
  }

  SplitIndices out;
  out.stratified = stratify;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? out.test : out.train).push_back(i);
  return out;
}

}  // namespace fluidity
