#include "fluidity/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "fluidity/analysis.hpp"
#include "fluidity/error.hpp"

namespace fluidity {

namespace {

using Counts = std::map<NGram, std::size_t>;

Counts count_ngrams(std::span<const Token> tokens, int n) {
  Counts counts;
  for (NGram& g : ngrams(tokens, static_cast<std::size_t>(n), false)) ++counts[std::move(g)];
  return counts;
}

std::size_t closest_reference_length(std::size_t candidate_len, std::span<const std::vector<Token>> refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const std::size_t len = r.size();
    const auto diff = [&](std::size_t l) {
      return l > candidate_len ? l - candidate_len : candidate_len - l;
    };
    if (diff(len) < diff(best) || (diff(len) == diff(best) && len < best)) best = len;
  }
  return best;
}

constexpr int kGridSteps = 100;  // thresholds live on {0.01, ..., 0.99}

}  // namespace

BleuSmoothing BleuSmoothing::parse(std::string_view text) {
  if (text == "none") return {};
  for (std::string_view prefix : {"add-k:", "add_k:"}) {
    if (text.starts_with(prefix)) {
      BleuSmoothing s;
      s.kind = Kind::add_k;
      try {
        std::size_t used = 0;
        std::string rest(text.substr(prefix.size()));
        s.k = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError("bad smoothing constant in '" + std::string(text) + "'");
      }
      if (!(s.k > 0.0)) throw ValidationError("add-k smoothing needs k > 0");
      return s;
    }
  }
  throw ValidationError("unknown BLEU smoothing '" + std::string(text) + "' (expected none or add-k:K)");
}

std::string BleuSmoothing::to_string() const {
  if (kind == Kind::none) return "none";
  return "add-k:" + nlohmann::json(k).dump();
}

BleuConfig BleuConfig::uniform(int max_n, BleuSmoothing smoothing) {
  if (max_n < 1) throw ValidationError("BLEU max_n must be >= 1");
  BleuConfig c;
  c.max_n = max_n;
  c.weights.assign(static_cast<std::size_t>(max_n), 1.0 / max_n);
  c.smoothing = smoothing;
  return c;
}

void BleuConfig::validate() const {
  if (max_n < 1) throw ValidationError("BLEU max_n must be >= 1");
  if (weights.size() != static_cast<std::size_t>(max_n)) {
    throw ValidationError("BLEU weights must have max_n entries");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("BLEU weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("BLEU weights must sum to 1");
  if (smoothing.kind == BleuSmoothing::Kind::add_k && !(smoothing.k > 0.0)) {
    throw ValidationError("add-k smoothing needs k > 0");
  }
}

nlohmann::json BleuConfig::to_json() const {
  return {{"max_n", max_n}, {"weights", weights}, {"smoothing", smoothing.to_string()}, {"tokens", "case-sensitive"}};
}

NgramMatch modified_precision(std::span<const Token> candidate, std::span<const std::vector<Token>> references,
                              int n) {
  if (references.empty()) throw ValidationError("modified precision needs at least one reference");
  if (n < 1) throw std::domain_error("n-gram order must be >= 1");

  Counts cand = count_ngrams(candidate, n);
  Counts max_ref;
  for (const auto& ref : references) {
    for (auto& [g, c] : count_ngrams(ref, n)) {
      auto& slot = max_ref[g];
      slot = std::max(slot, c);
    }
  }
  NgramMatch m;
  for (const auto& [g, c] : cand) {
    m.total += c;
    auto it = max_ref.find(g);
    if (it != max_ref.end()) m.clipped += std::min(c, it->second);
  }
  return m;
}

NgramMatch modified_precision(std::string_view candidate, std::span<const std::string> references, int n) {
  std::vector<std::vector<Token>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(tokenize(r));
  auto cand = tokenize(candidate);
  return modified_precision(cand, refs, n);
}

double brevity_penalty(std::size_t candidate_len, std::size_t reference_len) {
  if (candidate_len == 0) return 0.0;
  if (candidate_len >= reference_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_len) / static_cast<double>(candidate_len));
}

double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig& config) {
  config.validate();
  if (references.empty()) throw ValidationError("BLEU needs at least one reference");

  const std::vector<Token> cand = tokenize(candidate);
  std::vector<std::vector<Token>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(tokenize(r));

  if (cand.empty()) return 0.0;
  const double bp = brevity_penalty(cand.size(), std::max<std::size_t>(1, closest_reference_length(cand.size(), refs)));

  const int effective_n = std::min<int>(config.max_n, static_cast<int>(cand.size()));
  double weight_sum = 0.0;
  for (int n = 1; n <= effective_n; ++n) weight_sum += config.weights[static_cast<std::size_t>(n - 1)];
  if (weight_sum <= 0.0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= effective_n; ++n) {
    const double w = config.weights[static_cast<std::size_t>(n - 1)];
    if (w == 0.0) continue;
    const NgramMatch m = modified_precision(cand, refs, n);
    double p;
    if (config.smoothing.kind == BleuSmoothing::Kind::add_k) {
      p = (static_cast<double>(m.clipped) + config.smoothing.k) /
          (static_cast<double>(m.total) + config.smoothing.k);
    } else {
      p = static_cast<double>(m.clipped) / static_cast<double>(m.total);
    }
    if (p == 0.0) return 0.0;
    log_sum += (w / weight_sum) * std::log(p);
  }
  return std::clamp(bp * std::exp(log_sum), 0.0, 1.0);
}

double bleu(std::string_view candidate, std::string_view reference, const BleuConfig& config) {
  const std::string ref(reference);
  return bleu(candidate, std::span<const std::string>(&ref, 1), config);
}

RatingCategory classify_bleu_score(double score, std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) {
      throw ValidationError("BLEU thresholds must lie strictly inside (0,1)");
    }
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw ValidationError("BLEU thresholds must be strictly ascending");
    }
  }
  const auto below = std::count_if(thresholds.begin(), thresholds.end(), [&](double t) { return t <= score; });
  return RatingCategory(1 + static_cast<int>(below));
}

RatingCategory bleu_baseline_classify(std::string_view candidate, std::string_view reference,
                                      std::span<const double> thresholds, const BleuConfig& config) {
  return classify_bleu_score(bleu(candidate, reference, config), thresholds);
}

std::vector<double> fit_bleu_thresholds(std::span<const double> scores, std::span<const RatingCategory> gold,
                                        int num_categories) {
  if (scores.size() != gold.size()) throw ValidationError("scores and gold labels differ in length");
  if (scores.empty()) throw ValidationError("cannot fit BLEU thresholds on an empty set");
  const int t_count = num_categories - 1;
  if (t_count < 1) return {};
  if (t_count > kGridSteps - 1) throw ValidationError("too many categories for the threshold grid");

  std::vector<RatingCategory> predicted(scores.size(), RatingCategory(1));
  auto evaluate = [&](const std::vector<int>& idx) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      int cat = 1;
      for (int t : idx) {
        if (static_cast<double>(t) / kGridSteps <= scores[i]) ++cat;
      }
      predicted[i] = RatingCategory(cat);
    }
    return f1_scores(predicted, gold).macro;
  };

  // Pushes indices into a strictly ascending sequence inside [1, kGridSteps-1].
  auto normalise = [&](std::vector<int> idx) {
    for (int i = 0; i < t_count; ++i) {
      const int lo = i == 0 ? 1 : idx[i - 1] + 1;
      const int hi = kGridSteps - t_count + i;
      idx[i] = std::clamp(idx[i], lo, hi);
    }
    return idx;
  };

  std::vector<std::vector<int>> starts;
  {
    std::vector<int> even(t_count);
    for (int i = 0; i < t_count; ++i) {
      even[i] = static_cast<int>(std::lround(static_cast<double>(kGridSteps) * (i + 1) / (t_count + 1)));
    }
    starts.push_back(normalise(even));
  }
  {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> below(static_cast<std::size_t>(num_categories) + 1, 0);
    for (const auto& g : gold) {
      const int v = std::clamp(g.value(), 1, num_categories);
      ++below[static_cast<std::size_t>(v)];
    }
    std::vector<int> quant(t_count);
    std::size_t cumulative = 0;
    for (int i = 0; i < t_count; ++i) {
      cumulative += below[static_cast<std::size_t>(i + 1)];
      const std::size_t pos = std::min(cumulative, sorted.size() - 1);
      quant[i] = static_cast<int>(std::ceil(sorted[pos] * kGridSteps - 1e-9));
    }
    starts.push_back(normalise(quant));
  }

  std::vector<int> best_idx;
  double best = -1.0;
  for (std::vector<int> idx : starts) {
    double current = evaluate(idx);
    for (int sweep = 0; sweep < 100; ++sweep) {
      bool improved = false;
      for (int i = 0; i < t_count; ++i) {
        const int lo = i == 0 ? 1 : idx[i - 1] + 1;
        const int hi = i == t_count - 1 ? kGridSteps - 1 : idx[i + 1] - 1;
        int chosen = idx[i];
        for (int cand = lo; cand <= hi; ++cand) {
          if (cand == chosen) continue;
          idx[i] = cand;
          const double f = evaluate(idx);
          if (f > current + 1e-12) {
            current = f;
            chosen = cand;
            improved = true;
          }
        }
        idx[i] = chosen;
      }
      if (!improved) break;
    }
    if (current > best + 1e-12) {
      best = current;
      best_idx = idx;
    }
  }

  std::vector<double> out;
  out.reserve(best_idx.size());
  for (int t : best_idx) out.push_back(static_cast<double>(t) / kGridSteps);
  return out;
}

}  // namespace fluidity
