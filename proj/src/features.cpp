#include <algorithm>
#include "fluidity/features.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "fluidity/error.hpp"

namespace fluidity {

using nlohmann::json;

namespace {

const std::vector<std::string>& names_storage() {
  static const std::vector<std::string> names = {
      "nsp_prob",       "nsp_label",      "internal_rep_1", "internal_rep_2",   "internal_rep_3",
      "external_rep_1", "external_rep_2", "external_rep_3", "partner_rep_1",    "partner_rep_2",
      "partner_rep_3",  "question_count", "question_balance", "response_length", "has_entity",
      "short_safe"};
  return names;
}

bool is_integer_feature(std::string_view name) {
  return name == "nsp_label" || name == "question_count" || name == "response_length" || name == "has_entity" ||
         name == "short_safe";
}

void check_order(int n) {
  if (n < 1 || n > 3) throw std::domain_error("repetition n-gram order must be 1, 2 or 3");
}

std::vector<NGram> response_ngrams(std::string_view text, int n, bool casefold) {
  const auto tokens = tokenize(text);
  return ngrams(tokens, static_cast<std::size_t>(n), casefold);
}

double containment(std::string_view response, std::span<const std::string> history, int n, bool casefold) {
  check_order(n);
  const auto grams = response_ngrams(response, n, casefold);
  if (grams.empty()) return 0.0;
  std::set<NGram> seen;
  for (const auto& utt : history) {
    for (auto& g : response_ngrams(utt, n, casefold)) seen.insert(std::move(g));
  }
  std::size_t hits = 0;
  for (const auto& g : grams) hits += seen.contains(g) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(grams.size());
}

const EntityTagger& tagger_or_default(const EntityTagger* tagger) {
  static const HeuristicEntityTagger fallback;
  return tagger ? *tagger : fallback;
}

// Forwards to another backend under a mutex, for backends that are not
// safe to call concurrently.
class SerializedBackend final : public NspBackend {
 public:
  explicit SerializedBackend(const NspBackend& inner) : NspBackend(inner.threshold()), inner_(inner) {}

  NspResult score(std::string_view statement, std::string_view response) const override {
    std::lock_guard lock(mutex_);
    return inner_.score(statement, response);
  }
  std::vector<NspResult> score_batch(std::span<const NspPair> pairs) const override {
    std::lock_guard lock(mutex_);
    return inner_.score_batch(pairs);
  }
  std::string describe() const override { return inner_.describe(); }

 private:
  const NspBackend& inner_;
  mutable std::mutex mutex_;
};

std::string instance_context(const std::string& id) { return "instance " + id + ": "; }

}  // namespace

std::span<const std::string> feature_names() { return names_storage(); }

std::vector<double> to_values(const FeatureVector& v) {
  return {v.nsp_prob,
          static_cast<double>(v.nsp_label),
          v.internal_rep[0],
          v.internal_rep[1],
          v.internal_rep[2],
          v.external_rep[0],
          v.external_rep[1],
          v.external_rep[2],
          v.partner_rep[0],
          v.partner_rep[1],
          v.partner_rep[2],
          static_cast<double>(v.question_count),
          v.question_balance,
          static_cast<double>(v.response_length),
          static_cast<double>(v.has_entity),
          static_cast<double>(v.short_safe)};
}

NamedFeatures to_named(const FeatureVector& v) {
  NamedFeatures out;
  const auto values = to_values(v);
  const auto names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace(names[i], values[i]);
  return out;
}

json FeatureConfig::to_json() const {
  return {{"length_threshold", length_threshold},
          {"casefold_repetition", casefold},
          {"entity_tagger", tagger ? "external" : "capitalisation-heuristic"},
          {"internal_repetition", "1 - distinct/total n-grams"},
          {"partner_external_repetition", "share of response n-grams found in history"},
          {"multi_turn_aggregation", "mean over agent turns"}};
}

double internal_repetition(std::string_view response, int n, bool casefold) {
  check_order(n);
  const auto grams = response_ngrams(response, n, casefold);
  if (grams.empty()) return 0.0;
  const std::set<NGram> distinct(grams.begin(), grams.end());
  return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(grams.size());
}

double partner_repetition(std::string_view response, std::span<const std::string> partner_utterances, int n,
                          bool casefold) {
  return containment(response, partner_utterances, n, casefold);
}

double external_repetition(std::string_view response, std::span<const std::string> prior_agent_utterances, int n,
                           bool casefold) {
  return containment(response, prior_agent_utterances, n, casefold);
}

double repetition(RepetitionKind kind, std::string_view response, std::span<const std::string> history, int n,
                  bool casefold) {
  switch (kind) {
    case RepetitionKind::internal:
      return internal_repetition(response, n, casefold);
    case RepetitionKind::external:
      return external_repetition(response, history, n, casefold);
    case RepetitionKind::partner:
      return partner_repetition(response, history, n, casefold);
  }
  throw std::domain_error("unknown repetition kind");
}

QuestionBalance question_balance(const Conversation& conversation) {
  QuestionBalance qb;
  std::size_t agent_turns = 0;
  std::size_t asking_turns = 0;
  for (const Utterance& u : conversation.turns) {
    if (u.speaker != Speaker::agent) continue;
    ++agent_turns;
    const std::size_t q = count_questions(u.text);
    qb.count += q;
    if (q > 0) ++asking_turns;
  }
  if (agent_turns > 0) qb.balance = static_cast<double>(asking_turns) / static_cast<double>(agent_turns);
  return qb;
}

QuestionBalance question_balance(const SingleTurnInstance& instance) {
  Conversation pair;
  pair.id = instance.id;
  pair.turns = {{Speaker::human, instance.statement, 0, std::nullopt},
                {Speaker::agent, instance.response, 1, std::nullopt}};
  return question_balance(pair);
}

ShortSafe short_safe(std::string_view response, std::size_t length_threshold, const EntityTagger* tagger) {
  if (length_threshold < 1) throw ValidationError("short-safe length threshold must be >= 1");
  const auto tokens = tokenize(response);
  ShortSafe s;
  s.length = tokens.size();
  s.has_entity = tagger_or_default(tagger).has_named_entity(tokens) ? 1 : 0;
  s.flag = (s.length <= length_threshold && s.has_entity == 0) ? 1 : 0;
  return s;
}

FeatureVector extract_features(const SingleTurnInstance& instance, const NspBackend& nsp,
                               const FeatureConfig& config) {
  FeatureVector v;
  NspResult r;
  try {
    r = nsp.score(instance.statement, instance.response);
  } catch (const Error&) {
    rethrow_with_context(instance_context(instance.id));
  }
  v.nsp_prob = r.probability;
  v.nsp_label = r.is_next;

  const std::string statement = instance.statement;
  for (int n = 1; n <= 3; ++n) {
    v.internal_rep[n - 1] = internal_repetition(instance.response, n, config.casefold);
    v.partner_rep[n - 1] =
        partner_repetition(instance.response, std::span<const std::string>(&statement, 1), n, config.casefold);
    v.external_rep[n - 1] = 0.0;
  }
  const QuestionBalance qb = question_balance(instance);
  v.question_count = static_cast<int>(qb.count);
  v.question_balance = qb.balance;
  const ShortSafe ss = short_safe(instance.response, config.length_threshold, config.tagger);
  v.response_length = static_cast<int>(ss.length);
  v.has_entity = ss.has_entity;
  v.short_safe = ss.flag;
  return v;
}

FeatureVector extract_features(const Conversation& conversation, const NspBackend& nsp,
                               const FeatureConfig& config) {
  std::vector<std::size_t> agent_positions;
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    if (conversation.turns[i].speaker == Speaker::agent) agent_positions.push_back(i);
  }
  if (agent_positions.empty()) {
    throw ValidationError(instance_context(conversation.id) + "conversation has no agent turns");
  }

  std::vector<NspPair> pairs;
  pairs.reserve(agent_positions.size());
  for (std::size_t pos : agent_positions) {
    pairs.push_back({pos > 0 ? conversation.turns[pos - 1].text : std::string(), conversation.turns[pos].text});
  }
  std::vector<NspResult> nsp_results;
  try {
    nsp_results = nsp.score_batch(pairs);
  } catch (const Error&) {
    rethrow_with_context(instance_context(conversation.id));
  }

  FeatureVector v;
  const double m = static_cast<double>(agent_positions.size());
  std::vector<std::string> human_history;
  std::vector<std::string> agent_history;
  std::size_t positives = 0;
  std::size_t short_safe_turns = 0;
  std::size_t total_length = 0;
  std::size_t next_agent = 0;
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    const Utterance& u = conversation.turns[i];
    if (u.speaker == Speaker::human) {
      human_history.push_back(u.text);
      continue;
    }
    const NspResult& r = nsp_results[next_agent++];
    v.nsp_prob += r.probability;
    positives += static_cast<std::size_t>(r.is_next);
    for (int n = 1; n <= 3; ++n) {
      v.internal_rep[n - 1] += internal_repetition(u.text, n, config.casefold);
      v.partner_rep[n - 1] += partner_repetition(u.text, human_history, n, config.casefold);
      v.external_rep[n - 1] += external_repetition(u.text, agent_history, n, config.casefold);
    }
    const ShortSafe ss = short_safe(u.text, config.length_threshold, config.tagger);
    total_length += ss.length;
    v.has_entity = std::max(v.has_entity, ss.has_entity);
    short_safe_turns += static_cast<std::size_t>(ss.flag);
    agent_history.push_back(u.text);
  }
  v.nsp_prob /= m;
  v.nsp_label = 2 * positives >= agent_positions.size() ? 1 : 0;
  for (int n = 0; n < 3; ++n) {
    v.internal_rep[n] /= m;
    v.partner_rep[n] /= m;
    v.external_rep[n] /= m;
  }
  const QuestionBalance qb = question_balance(conversation);
  v.question_count = static_cast<int>(qb.count);
  v.question_balance = qb.balance;
  v.response_length = static_cast<int>(std::llround(static_cast<double>(total_length) / m));
  v.short_safe = 2 * short_safe_turns >= agent_positions.size() ? 1 : 0;
  return v;
}

double baseline_bleu(const SingleTurnInstance& instance, const BleuConfig& config) {
  return bleu(instance.response, instance.reference.value_or(instance.statement), config);
}

double baseline_bleu(const Conversation& conversation, const BleuConfig& config) {
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    const Utterance& u = conversation.turns[i];
    if (u.speaker != Speaker::agent) continue;
    std::optional<std::string> ref = u.reference;
    if (!ref && i > 0) ref = conversation.turns[i - 1].text;
    if (!ref || tokenize(*ref).empty()) continue;
    sum += bleu(u.text, *ref, config);
    ++scored;
  }
  return scored > 0 ? sum / static_cast<double>(scored) : 0.0;
}

std::vector<FeatureRecord> extract_all(const Dataset& dataset, const NspBackend& nsp,
                                       const ExtractOptions& options) {
  const std::size_t total = dataset.size();
  std::vector<FeatureRecord> out(total);
  std::vector<std::exception_ptr> errors(total);

  std::optional<SerializedBackend> serialized;
  if (!nsp.concurrent()) serialized.emplace(nsp);
  const NspBackend& backend = serialized ? static_cast<const NspBackend&>(*serialized) : nsp;

  auto extract_one = [&](std::size_t i) {
    FeatureRecord rec;
    if (dataset.kind == DatasetKind::single_turn) {
      const auto& inst = dataset.single_turn[i];
      rec.id = inst.id;
      rec.target = target_category(inst).value();
      rec.rating = inst.mean_rating;
      rec.features = to_named(extract_features(inst, backend, options.features));
      if (options.bleu) rec.bleu = baseline_bleu(inst, *options.bleu);
    } else {
      const auto& conv = dataset.multi_turn[i];
      rec.id = conv.id;
      rec.target = conv.score;
      rec.rating = conv.score;
      rec.features = to_named(extract_features(conv, backend, options.features));
      if (options.bleu) rec.bleu = baseline_bleu(conv, *options.bleu);
    }
    return rec;
  };

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  // Indices are claimed in order, so once one fails every lower index is
  // already claimed; stop handing out new work and the lowest error still wins.
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < total && !failed; i = next.fetch_add(1)) {
      try {
        out[i] = extract_one(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        ++done;
        if (done % 100 == 0 || done == total) options.progress(done, total);
      }
    }
  };

  unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(total, 1)));
  {
    std::vector<std::jthread> threads;
    for (unsigned t = 1; t < workers; ++t) threads.emplace_back(worker);
    worker();
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_feature_file(std::ostream& out, DatasetKind kind, std::span<const FeatureRecord> records,
                        const json& header_extra) {
  std::vector<std::string> names;
  if (!records.empty()) {
    // canonical order first, anything unknown after it
    const auto& first = records.front().features;
    for (auto name : feature_names())
      if (first.count(std::string(name))) names.emplace_back(name);
    for (const auto& [name, value] : first)
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  } else {
    names.assign(feature_names().begin(), feature_names().end());
  }
  json header = {{"format", kFeatureFileFormat}, {"version", 1}, {"kind", to_string(kind)}, {"feature_names", names}};
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  out << header.dump() << '\n';
  for (const FeatureRecord& r : records) {
    json feats = json::object();
    for (const auto& [name, value] : r.features) {
      feats[name] = is_integer_feature(name) ? json(std::llround(value)) : json(value);
    }
    json rec = {{"id", r.id}, {"target", r.target}, {"rating", r.rating}, {"features", std::move(feats)}};
    if (r.bleu) rec["bleu"] = *r.bleu;
    out << rec.dump() << '\n';
  }
}

FeatureTable read_feature_file(std::istream& in, std::string_view source) {
  FeatureTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(source) + " line " + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    try {
      if (!have_header) {
        if (!rec.is_object() || rec.value("format", "") != kFeatureFileFormat) {
          throw ValidationError(where + ": not a feature file (missing header record)");
        }
        table.kind = parse_dataset_kind(rec.at("kind").get<std::string>());
        table.feature_names = rec.at("feature_names").get<std::vector<std::string>>();
        table.header = rec;
        have_header = true;
        continue;
      }
      FeatureRecord r;
      r.id = rec.at("id").get<std::string>();
      r.target = rec.at("target").get<int>();
      r.rating = rec.contains("rating") ? rec["rating"].get<double>() : r.target;
      const json& feats = rec.at("features");
      for (const auto& name : table.feature_names) {
        auto it = feats.find(name);
        if (it == feats.end() || !it->is_number()) {
          throw ValidationError(where + ": record " + r.id + " lacks numeric feature '" + name + "'");
        }
        r.features.emplace(name, it->get<double>());
      }
      if (auto b = rec.find("bleu"); b != rec.end() && !b->is_null()) r.bleu = b->get<double>();
      table.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (!have_header) throw ValidationError(std::string(source) + ": empty feature file");
  return table;
}

FeatureTable read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_feature_file(in, path.string());
}

}  // namespace fluidity
