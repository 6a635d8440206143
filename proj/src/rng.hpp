#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace fluidity {

// mt19937_64's output sequence is fixed by the standard; the distributions
// are not, so bounded draws and shuffles are done by hand to keep splits
// identical across standard libraries.
using SplitRng = std::mt19937_64;

inline std::uint64_t uniform_below(SplitRng& rng, std::uint64_t bound) {
  const std::uint64_t limit = SplitRng::max() - SplitRng::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

template <class T>
void shuffle(std::vector<T>& items, SplitRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace fluidity
