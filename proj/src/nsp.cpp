#include "fluidity/nsp.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "fluidity/error.hpp"
#include "fluidity/hashing.hpp"
#include "fluidity/nsp_remote.hpp"
#include "json.hpp"

namespace fluidity {

using nlohmann::json;

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("NSP threshold must lie strictly between 0 and 1");
  }
}

void check_probability(double p, const std::string& where) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw ValidationError(where + ": probability " + std::to_string(p) + " outside [0,1]");
  }
}

}  // namespace

NspBackendConfig parse_nsp_option(std::string_view option, double threshold) {
  check_threshold(threshold);
  NspBackendConfig cfg;
  cfg.threshold = threshold;
  if (option == "stub") {
    cfg.kind = NspBackendKind::stub;
  } else if (option.starts_with("file:")) {
    cfg.kind = NspBackendKind::file;
    cfg.location = std::string(option.substr(5));
    if (cfg.location.empty()) throw ValidationError("--nsp file: needs a path");
  } else if (option == "remote" || option.starts_with("remote:")) {
    cfg.kind = NspBackendKind::remote;
    if (option.size() > 7) cfg.location = std::string(option.substr(7));
    if (cfg.location.empty()) {
      if (const char* env = std::getenv("FLUIDITY_NSP_URL"); env && *env) cfg.location = env;
    }
    if (cfg.location.empty()) {
      throw ValidationError("--nsp remote needs a URL (remote:URL or FLUIDITY_NSP_URL)");
    }
  } else {
    throw ValidationError("unknown NSP backend '" + std::string(option) +
                          "' (expected stub, file:PATH or remote:URL)");
  }
  return cfg;
}

std::string canonicalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string pair_key(std::string_view statement, std::string_view response) {
  return sha256_hex(canonicalize_whitespace(statement) + '\n' + canonicalize_whitespace(response));
}

NspBackend::NspBackend(double threshold) : threshold_(threshold) { check_threshold(threshold); }

NspResult NspBackend::make_result(double probability) const {
  return {probability, probability >= threshold_ ? 1 : 0};
}

std::vector<NspResult> NspBackend::score_batch(std::span<const NspPair> pairs) const {
  std::vector<NspResult> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      out.push_back(score(pairs[i].statement, pairs[i].response));
    } catch (const Error&) {
      rethrow_with_context("batch index " + std::to_string(i) + ": ");
    }
  }
  return out;
}

StubNspBackend::StubNspBackend(double probability, double threshold)
    : NspBackend(threshold), probability_(probability) {
  check_probability(probability, "stub backend");
}

NspResult StubNspBackend::score(std::string_view, std::string_view) const {
  return make_result(probability_);
}

std::string StubNspBackend::describe() const {
  return "stub(p=" + json(probability_).dump() + ")";
}

FileNspBackend::FileNspBackend(std::unordered_map<std::string, double> scores, double threshold,
                               std::string origin)
    : NspBackend(threshold), scores_(std::move(scores)), origin_(std::move(origin)) {}

NspResult FileNspBackend::score(std::string_view statement, std::string_view response) const {
  std::string key = pair_key(statement, response);
  auto it = scores_.find(key);
  if (it == scores_.end()) {
    throw DataDependencyError("no precomputed NSP score for pair key " + key + " in " + origin_);
  }
  return make_result(it->second);
}

std::string FileNspBackend::describe() const { return "file(" + origin_ + ")"; }

std::unique_ptr<FileNspBackend> load_score_file(std::istream& in, double threshold, std::string_view source) {
  std::unordered_map<std::string, double> scores;
  std::string line;
  std::size_t lineno = 0;
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
    if (!rec.is_object()) throw ValidationError(where + ": record is not an object");
    if (!rec.contains("key") && rec.contains("format")) continue;

    auto key = rec.find("key");
    auto p = rec.find("p_next");
    if (key == rec.end() || !key->is_string()) throw ValidationError(where + ": missing key");
    if (p == rec.end() || !p->is_number()) throw ValidationError(where + ": missing p_next");
    const std::string k = key->get<std::string>();
    const double prob = p->get<double>();
    check_probability(prob, where);
    if (rec.contains("statement") || rec.contains("response")) {
      auto st = rec.find("statement");
      auto rs = rec.find("response");
      if (st == rec.end() || rs == rec.end() || !st->is_string() || !rs->is_string()) {
        throw ValidationError(where + ": statement and response must both be strings");
      }
      std::string expected = pair_key(st->get<std::string>(), rs->get<std::string>());
      if (expected != k) throw ValidationError(where + ": key does not match its statement/response pair");
    }
    if (!scores.emplace(k, prob).second) throw ValidationError(where + ": duplicate key " + k);
  }
  return std::make_unique<FileNspBackend>(std::move(scores), threshold, std::string(source));
}

std::unique_ptr<FileNspBackend> load_score_file(const std::filesystem::path& path, double threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataDependencyError("cannot open NSP score file " + path.string());
  return load_score_file(in, threshold, path.string());
}

void write_score_file(std::ostream& out, std::span<const ScoreEntry> entries) {
  out << json{{"format", kScoreFileFormat}, {"version", 1}}.dump() << '\n';
  for (const ScoreEntry& e : entries) {
    json rec = {{"key", pair_key(e.statement, e.response)},
                {"statement", e.statement},
                {"response", e.response},
                {"p_next", e.p_next}};
    out << rec.dump() << '\n';
  }
}

std::unique_ptr<NspBackend> make_nsp_backend(const NspBackendConfig& config) {
  switch (config.kind) {
    case NspBackendKind::stub:
      return std::make_unique<StubNspBackend>(0.5, config.threshold);
    case NspBackendKind::file:
      return load_score_file(std::filesystem::path(config.location), config.threshold);
    case NspBackendKind::remote:
      return std::make_unique<RemoteNspBackend>(config);
  }
  throw ValidationError("unknown NSP backend kind");
}

}  // namespace fluidity
