#include "videograph/sobol.hpp"

#include <bit>
#include <string>

#include "videograph/errors.hpp"

namespace videograph {
namespace {

struct DirectionEntry {
  std::uint32_t polynomial;  // full primitive polynomial, highest bit = degree
  std::array<std::uint32_t, 18> initial;
};

constexpr DirectionEntry kTable[] = {
#include "sobol_directions.inc"
};

}  // namespace

std::size_t SobolSequence::max_dimensions() { return std::size(kTable); }

SobolSequence::SobolSequence(std::size_t dimensions) {
  if (dimensions == 0) throw ConfigError("sobol: dimension count must be at least 1");
  if (dimensions > max_dimensions()) {
    throw ConfigError("sobol: " + std::to_string(dimensions) + " dimensions exceed the direction table (" +
                      std::to_string(max_dimensions()) + ")");
  }
  directions_.resize(dimensions);
  state_.assign(dimensions, 0);
  for (std::size_t d = 0; d < dimensions; ++d) {
    const auto& entry = kTable[d];
    const int degree = std::bit_width(entry.polynomial) - 1;
    auto& v = directions_[d];
    if (degree == 0) {
      for (std::size_t i = 0; i < kBits; ++i) v[i] = std::uint32_t{1} << (kBits - 1 - i);
      continue;
    }
    const auto s = static_cast<std::size_t>(degree);
    std::array<std::uint32_t, kBits> m{};
    for (std::size_t i = 0; i < s && i < kBits; ++i) m[i] = entry.initial[i];
    for (std::size_t i = s; i < kBits; ++i) {
      std::uint32_t value = m[i - s] ^ (m[i - s] << s);
      for (std::size_t k = 1; k < s; ++k) {
        const std::uint32_t a_k = (entry.polynomial >> (s - k)) & 1u;
        if (a_k) value ^= m[i - k] << k;
      }
      m[i] = value;
    }
    for (std::size_t i = 0; i < kBits; ++i) v[i] = m[i] << (kBits - 1 - i);
  }
}

std::vector<double> SobolSequence::next() {
  // Point index_ -> index_+1 flips the direction at the lowest zero bit of index_.
  const auto bit = static_cast<std::size_t>(std::countr_one(index_));
  if (bit >= kBits) throw std::out_of_range("sobol: sequence exhausted");
  std::vector<double> point(state_.size());
  constexpr double kScale = 1.0 / 4294967296.0;
  for (std::size_t d = 0; d < state_.size(); ++d) {
    state_[d] ^= directions_[d][bit];
    point[d] = static_cast<double>(state_[d]) * kScale;
  }
  ++index_;
  return point;
}

}  // namespace videograph
