#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "conex/matrix.hpp"

namespace conex {

// Base-2 low-discrepancy sequence in [0,1)^dims with Joe-Kuo direction
// numbers (up to 128 dimensions), generated in Gray-code order. With a
// scramble seed the direction numbers get a random linear matrix scramble
// and the points a random digital shift.
class SobolSequence {
 public:
  static constexpr int kBits = 32;
  static constexpr std::size_t kMaxDims = 128;

  explicit SobolSequence(std::size_t dims, std::optional<std::uint64_t> scramble_seed = std::nullopt);

  std::size_t dims() const { return dims_; }
  // Next point; the first point of an unscrambled sequence is the origin.
  void next(std::span<double> out);
  DenseMatrix take(std::size_t n);

 private:
  std::size_t dims_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> direction_;  // dims x kBits
  std::vector<std::uint32_t> state_;
};

// L∞ star discrepancy of a 2-D point set, by exhaustive evaluation over
// anchored boxes with corners on the point coordinates.
double star_discrepancy_2d(const DenseMatrix& points);

}  // namespace conex
