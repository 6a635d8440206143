#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fluidity {

// Probability that the response follows the statement, plus the thresholded
// label.
struct NspResult {
  double probability = 0.0;
  int is_next = 0;

  bool operator==(const NspResult&) const = default;
};

struct NspPair {
  std::string statement;
  std::string response;
};

enum class NspBackendKind { file, remote, stub };

struct NspBackendConfig {
  NspBackendKind kind = NspBackendKind::stub;
  std::string location;  // score file path or service base URL
  double threshold = 0.5;
  std::chrono::milliseconds timeout{10'000};
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{200};
  std::size_t max_batch = 32;
};

// Parses `stub`, `file:PATH` or `remote:URL`. A bare `remote` falls back to
// the FLUIDITY_NSP_URL environment variable. Throws ValidationError.
NspBackendConfig parse_nsp_option(std::string_view option, double threshold = 0.5);

// Collapses whitespace runs to one space and trims both ends.
std::string canonicalize_whitespace(std::string_view text);

// Hex SHA-256 of canonical(statement) + '\n' + canonical(response). Shared
// with the scoring service and its precompute tool; do not change.
std::string pair_key(std::string_view statement, std::string_view response);

class NspBackend {
 public:
  explicit NspBackend(double threshold);
  virtual ~NspBackend() = default;

  NspBackend(const NspBackend&) = delete;
  NspBackend& operator=(const NspBackend&) = delete;

  virtual NspResult score(std::string_view statement, std::string_view response) const = 0;

  // Results are aligned with `pairs`. A failure fails the whole batch and
  // the error message names the failing index.
  virtual std::vector<NspResult> score_batch(std::span<const NspPair> pairs) const;

  // False when callers must serialise score() calls.
  virtual bool concurrent() const { return true; }

  virtual std::string describe() const = 0;

  double threshold() const { return threshold_; }

 protected:
  NspResult make_result(double probability) const;

 private:
  double threshold_;
};

// Fixed-probability backend for runs without a model.
class StubNspBackend final : public NspBackend {
 public:
  explicit StubNspBackend(double probability = 0.5, double threshold = 0.5);

  NspResult score(std::string_view statement, std::string_view response) const override;
  std::string describe() const override;

 private:
  double probability_;
};

// Serves probabilities from a precomputed score file.
class FileNspBackend final : public NspBackend {
 public:
  FileNspBackend(std::unordered_map<std::string, double> scores, double threshold, std::string origin);

  NspResult score(std::string_view statement, std::string_view response) const override;
  std::string describe() const override;
  std::size_t size() const { return scores_.size(); }

 private:
  std::unordered_map<std::string, double> scores_;
  std::string origin_;
};

inline constexpr std::string_view kScoreFileFormat = "fluidity-nsp-scores";

// Reads `{"key", "statement", "response", "p_next"}` lines. A leading record
// carrying "format" and no "key" is treated as a header. Duplicate keys,
// probabilities outside [0,1] and keys that disagree with their pair are
// ValidationErrors.
std::unique_ptr<FileNspBackend> load_score_file(std::istream& in, double threshold = 0.5,
                                                std::string_view source = "<input>");
std::unique_ptr<FileNspBackend> load_score_file(const std::filesystem::path& path, double threshold = 0.5);

struct ScoreEntry {
  std::string statement;
  std::string response;
  double p_next = 0.0;
};

// Writes a header record and one line per entry, keys computed by pair_key.
void write_score_file(std::ostream& out, std::span<const ScoreEntry> entries);

// Builds the backend described by `config` (remote: see nsp_remote.hpp).
std::unique_ptr<NspBackend> make_nsp_backend(const NspBackendConfig& config);

}  // namespace fluidity
