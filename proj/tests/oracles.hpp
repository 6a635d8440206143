#pragma once

// Deliberately naive reference implementations. They share no code with the
// library: words are space-split, n-grams are compared element by element,
// and nothing is hashed or sorted.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Words = std::vector<std::string>;

inline Words split(const std::string& text) {
  Words out;
  std::istringstream is(text);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<Words> grams(const Words& w, std::size_t n) {
  std::vector<Words> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out.emplace_back(w.begin() + i, w.begin() + i + n);
  return out;
}

inline std::size_t occurrences(const std::vector<Words>& pool, const Words& g) {
  std::size_t c = 0;
  for (const auto& p : pool) {
    bool same = p.size() == g.size();
    for (std::size_t k = 0; same && k < g.size(); ++k) same = p[k] == g[k];
    if (same) ++c;
  }
  return c;
}

// ---- BLEU ----------------------------------------------------------------

struct Clip {
  std::size_t clipped = 0, total = 0;
};

inline Clip clip(const Words& cand, const std::vector<Words>& refs, std::size_t n) {
  const auto cg = grams(cand, n);
  Clip c;
  c.total = cg.size();
  // Visit each distinct candidate n-gram once: the first position it occurs.
  for (std::size_t i = 0; i < cg.size(); ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) seen = cg[j] == cg[i];
    if (seen) continue;
    const std::size_t count = occurrences(cg, cg[i]);
    std::size_t ref_max = 0;
    for (const auto& r : refs) ref_max = std::max(ref_max, occurrences(grams(r, n), cg[i]));
    c.clipped += std::min(count, ref_max);
  }
  return c;
}

// Sentence BLEU with uniform-or-given weights, no smoothing unless k > 0.
// Orders longer than the candidate are left out and the remaining weights
// rescaled to sum to one.
inline double bleu(const Words& cand, const std::vector<Words>& refs, const std::vector<double>& weights,
                   double add_k = 0.0) {
  if (cand.empty()) return 0.0;
  const double c = static_cast<double>(cand.size());
  double r = static_cast<double>(refs[0].size());
  for (const auto& ref : refs) {
    const double len = static_cast<double>(ref.size());
    if (std::fabs(len - c) < std::fabs(r - c) || (std::fabs(len - c) == std::fabs(r - c) && len < r)) r = len;
  }
  if (r < 1) r = 1;
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  double used = 0.0;
  for (std::size_t n = 1; n <= weights.size() && n <= cand.size(); ++n) used += weights[n - 1];
  if (used <= 0) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 1; n <= weights.size() && n <= cand.size(); ++n) {
    if (weights[n - 1] == 0.0) continue;
    const Clip m = clip(cand, refs, n);
    const double p = add_k > 0 ? (m.clipped + add_k) / (m.total + add_k)
                               : static_cast<double>(m.clipped) / static_cast<double>(m.total);
    if (p == 0.0) return 0.0;
    acc += weights[n - 1] / used * std::log(p);
  }
  return bp * std::exp(acc);
}

// ---- repetition ------------------------------------------------------------

inline Words fold(Words w, bool casefold) {
  if (casefold)
    for (auto& s : w) s = lower(s);
  return w;
}

inline double internal_rep(const std::string& response, std::size_t n, bool casefold = true) {
  const auto g = grams(fold(split(response), casefold), n);
  if (g.empty()) return 0.0;
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool earlier = false;
    for (std::size_t j = 0; j < i; ++j) earlier = earlier || g[j] == g[i];
    if (!earlier) ++distinct;
  }
  return 1.0 - static_cast<double>(distinct) / static_cast<double>(g.size());
}

inline double containment(const std::string& response, const std::vector<std::string>& history, std::size_t n,
                          bool casefold = true) {
  const auto g = grams(fold(split(response), casefold), n);
  if (g.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& x : g) {
    bool found = false;
    for (const auto& h : history) found = found || occurrences(grams(fold(split(h), casefold), n), x) > 0;
    if (found) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(g.size());
}

// ---- statistics ------------------------------------------------------------

// One-pass raw-moment formula, computed in long double.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

struct F1 {
  std::map<int, double> per_class;
  double macro = 0.0;
};

// Full confusion matrix, then P/R/F1 per gold class.
inline F1 f1(const std::vector<int>& predicted, const std::vector<int>& gold) {
  std::map<int, std::map<int, int>> cm;  // gold -> predicted -> count
  std::vector<int> labels;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    cm[gold[i]][predicted[i]]++;
    if (std::find(labels.begin(), labels.end(), gold[i]) == labels.end()) labels.push_back(gold[i]);
  }
  F1 out;
  for (int c : labels) {
    int tp = cm[c][c];
    int col = 0, row = 0;
    for (auto& [g, preds] : cm) {
      for (auto& [p, k] : preds) {
        if (p == c) col += k;
        if (g == c) row += k;
      }
    }
    const double prec = col ? double(tp) / col : 0.0;
    const double rec = row ? double(tp) / row : 0.0;
    out.per_class[c] = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  double s = 0;
  for (auto& [c, v] : out.per_class) s += v;
  out.macro = s / static_cast<double>(out.per_class.size());
  return out;
}

// ---- random text -----------------------------------------------------------

inline std::string random_sentence(std::mt19937& rng, const std::vector<std::string>& vocab, int min_len,
                                   int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[pick(rng)];
  }
  return s;
}

}  // namespace oracle
