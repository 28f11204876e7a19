#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace videograph {

/// Gray-code Sobol sequence over [0,1)^d with Joe-Kuo direction numbers.
/// The all-zero first point is skipped, so next() starts at (0.5, ..., 0.5).
class SobolSequence {
 public:
  static constexpr std::size_t kBits = 32;

  explicit SobolSequence(std::size_t dimensions);

  std::vector<double> next();
  std::size_t dimensions() const { return directions_.size(); }
  std::uint64_t index() const { return index_; }

  static std::size_t max_dimensions();

 private:
  std::vector<std::array<std::uint32_t, kBits>> directions_;
  std::vector<std::uint32_t> state_;
  std::uint64_t index_ = 0;
};

}  // namespace videograph
