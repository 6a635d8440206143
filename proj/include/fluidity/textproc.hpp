#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace fluidity {

struct Token {
  std::string surface;
  std::size_t position = 0;

  bool operator==(const Token&) const = default;
};

// Contiguous run of 1..3 token surfaces.
struct NGram {
  std::vector<std::string> tokens;

  std::size_t order() const { return tokens.size(); }
  auto operator<=>(const NGram&) const = default;
  bool operator==(const NGram&) const = default;
};

// Splits on whitespace and detaches every ASCII punctuation character as
// its own token. Apostrophes stay inside words ("That's"). Non-ASCII bytes
// are treated as word characters.
std::vector<Token> tokenize(std::string_view text);

// ASCII lowercase copy.
std::string casefold(std::string_view text);

// All contiguous windows of length `n`, in order. Throws std::domain_error
// when n < 1.
std::vector<NGram> ngrams(std::span<const Token> tokens, std::size_t n, bool casefold_tokens);

// Counts runs of '?' that close a span containing at least one
// non-whitespace character. "really?? why?" counts 2.
std::size_t count_questions(std::string_view text);

// Lowercase word list used by the capitalisation heuristic.
class CommonWords {
 public:
  // The list compiled into the library.
  static const CommonWords& bundled();

  // One word per line; blank lines and surrounding whitespace ignored.
  static CommonWords parse(std::string_view text);

  bool contains(std::string_view lowercase_word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Pluggable named-entity detector. The default is a capitalisation
// heuristic; an external tagger can be adapted behind this interface.
class EntityTagger {
 public:
  virtual ~EntityTagger() = default;
  virtual bool has_named_entity(std::span<const Token> tokens) const = 0;
};

// A capitalised alphabetic token that does not open a sentence counts as an
// entity (the pronoun "I" and its contractions excepted). A capitalised
// sentence opener counts only when it is absent from the common-word list.
class HeuristicEntityTagger final : public EntityTagger {
 public:
  HeuristicEntityTagger();
  explicit HeuristicEntityTagger(const CommonWords& words);

  bool has_named_entity(std::span<const Token> tokens) const override;

 private:
  const CommonWords* words_;
};

// Convenience wrapper over the default heuristic with the bundled list.
bool has_named_entity(std::span<const Token> tokens);

}  // namespace fluidity
