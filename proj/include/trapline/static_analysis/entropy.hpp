#pragma once

#include <array>
#include <cmath>
#include <span>

namespace trapline {

// Shannon entropy in bits per byte, 0 for empty input.
inline double shannon_entropy(std::span<const uint8_t> data) {
  if (data.empty()) return 0.0;
  std::array<uint64_t, 256> histogram{};
  for (uint8_t b : data) histogram[b]++;
  double h = 0.0;
  double n = double(data.size());
  for (uint64_t count : histogram) {
    if (count == 0) continue;
    double p = double(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace trapline
