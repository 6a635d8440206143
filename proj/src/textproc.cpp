#include "fluidity/textproc.hpp"

#include <cctype>
#include <stdexcept>

namespace fluidity {

namespace detail {
extern const std::string_view kCommonWordsText;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_detached_punct(char c) {
  return c != '\'' && std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }

bool is_alpha_word(std::string_view s) {
  bool any_alpha = false;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      any_alpha = true;
    } else if (c != '\'') {
      return false;
    }
  }
  return any_alpha;
}

bool ends_sentence(std::string_view surface) {
  return surface == "." || surface == "!" || surface == "?";
}

bool is_first_person_pronoun(std::string_view lower) {
  return lower == "i" || lower.starts_with("i'");
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back({std::move(word), out.size()});
      word.clear();
    }
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_detached_punct(c)) {
      flush();
      out.push_back({std::string(1, c), out.size()});
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

std::string casefold(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<NGram> ngrams(std::span<const Token> tokens, std::size_t n, bool casefold_tokens) {
  if (n < 1) throw std::domain_error("n-gram order must be >= 1");
  std::vector<NGram> out;
  if (tokens.size() < n) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    NGram g;
    g.tokens.reserve(n);
    for (std::size_t j = i; j < i + n; ++j) {
      g.tokens.push_back(casefold_tokens ? casefold(tokens[j].surface) : tokens[j].surface);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::size_t count_questions(std::string_view text) {
  std::size_t count = 0;
  bool span_has_content = false;
  bool in_run = false;
  for (char c : text) {
    if (c == '?') {
      if (!in_run && span_has_content) ++count;
      in_run = true;
      span_has_content = false;
    } else {
      in_run = false;
      if (!is_space(c)) span_has_content = true;
    }
  }
  return count;
}

CommonWords CommonWords::parse(std::string_view text) {
  CommonWords words;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    if (!line.empty()) words.words_.insert(casefold(line));
    start = end + 1;
  }
  return words;
}

const CommonWords& CommonWords::bundled() {
  static const CommonWords words = parse(detail::kCommonWordsText);
  return words;
}

bool CommonWords::contains(std::string_view lowercase_word) const {
  return words_.contains(std::string(lowercase_word));
}

HeuristicEntityTagger::HeuristicEntityTagger() : words_(&CommonWords::bundled()) {}

HeuristicEntityTagger::HeuristicEntityTagger(const CommonWords& words) : words_(&words) {}

bool HeuristicEntityTagger::has_named_entity(std::span<const Token> tokens) const {
  bool sentence_start = true;
  for (const Token& tok : tokens) {
    const std::string& s = tok.surface;
    if (is_alpha_word(s) && is_upper(s.front())) {
      std::string lower = casefold(s);
      if (sentence_start) {
        if (!is_first_person_pronoun(lower) && !words_->contains(lower)) return true;
      } else if (!is_first_person_pronoun(lower)) {
        return true;
      }
    }
    sentence_start = ends_sentence(s);
  }
  return false;
}

bool has_named_entity(std::span<const Token> tokens) {
  static const HeuristicEntityTagger tagger;
  return tagger.has_named_entity(tokens);
}

}  // namespace fluidity
