#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace wbo {

using Engine = std::mt19937_64;

/// Engine for one stream of a master seed. Streams are addressed by a tuple of
/// counters (e.g. channel count and trial block), so any block can be
/// regenerated independently of the others.
inline Engine stream_engine(std::uint64_t master, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

/// Circular-symmetric CN(0, 1) draw.
template <class URBG>
std::complex<double> standard_complex_normal(URBG& gen) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(gen);
  const double im = n(gen);
  return {re, im};
}

}  // namespace wbo
