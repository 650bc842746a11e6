#include "conex/sobol_sequence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "conex/errors.hpp"
#include "conex/rng.hpp"
#include "sobol_direction_numbers.inc"

namespace conex {

SobolSequence::SobolSequence(std::size_t dims, std::optional<std::uint64_t> scramble_seed)
    : dims_(dims), direction_(dims * kBits, 0), state_(dims, 0) {
  if (dims < 1 || dims > kMaxDims)
    throw ConfigError("Sobol sequence supports 1.." + std::to_string(kMaxDims) + " dimensions, got " +
                      std::to_string(dims));
  for (std::size_t d = 0; d < dims; ++d) {
    std::uint32_t* v = &direction_[d * kBits];
    if (d == 0) {
      for (int j = 0; j < kBits; ++j) v[j] = 1;
    } else {
      const std::uint32_t poly = detail::kSobolTable[d].poly;
      const int deg = std::bit_width(poly) - 1;
      for (int j = 0; j < deg; ++j) v[j] = detail::kSobolTable[d].m[static_cast<std::size_t>(j)];
      for (int j = deg; j < kBits; ++j) {
        std::uint32_t next = v[j - deg];
        std::uint32_t pow2 = 1;
        for (int k = 0; k < deg; ++k) {
          pow2 <<= 1;
          if ((poly >> (deg - 1 - k)) & 1U) next ^= pow2 * v[j - k - 1];
        }
        v[j] = next;
      }
    }
    for (int j = 0; j < kBits; ++j) v[j] <<= (kBits - 1 - j);
  }

  if (scramble_seed) {
    Rng rng(*scramble_seed);
    for (std::size_t d = 0; d < dims; ++d) {
      // Lower-triangular binary matrix with unit diagonal; row i acts on the
      // i most significant input bits.
      std::uint32_t ltm[kBits];
      for (int i = 0; i < kBits; ++i) {
        const std::uint32_t below = i == 0 ? 0U : static_cast<std::uint32_t>(rng.next_u64() >> 32) &
                                                      ~((1U << (kBits - i)) - 1U) & 0xFFFFFFFFU;
        ltm[i] = below | (1U << (kBits - 1 - i));
      }
      std::uint32_t* v = &direction_[d * kBits];
      for (int j = 0; j < kBits; ++j) {
        std::uint32_t out = 0;
        for (int i = 0; i < kBits; ++i)
          if (std::popcount(ltm[i] & v[j]) & 1) out |= 1U << (kBits - 1 - i);
        v[j] = out;
      }
      state_[d] = static_cast<std::uint32_t>(rng.next_u64() >> 32);  // digital shift
    }
  }
}

void SobolSequence::next(std::span<double> out) {
  require(out.size() == dims_, "SobolSequence::next: output size != dims");
  constexpr double kScale = 0x1.0p-32;
  for (std::size_t d = 0; d < dims_; ++d) out[d] = static_cast<double>(state_[d]) * kScale;
  // Gray-code step: flip the direction number at the lowest zero bit of index.
  const int c = std::countr_one(index_);
  if (c >= kBits) throw ConfigError("Sobol sequence exhausted (2^32 points)");
  for (std::size_t d = 0; d < dims_; ++d) state_[d] ^= direction_[d * kBits + static_cast<std::size_t>(c)];
  ++index_;
}

DenseMatrix SobolSequence::take(std::size_t n) {
  DenseMatrix m(n, dims_);
  for (std::size_t i = 0; i < n; ++i) next(m.row(i));
  return m;
}

double star_discrepancy_2d(const DenseMatrix& pts) {
  require(pts.cols() == 2, "star_discrepancy_2d: points must be 2-D");
  const std::size_t n = pts.rows();
  if (n == 0) return 0.0;
  std::vector<double> xs{1.0}, ys{1.0};
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(pts(i, 0));
    ys.push_back(pts(i, 1));
  }
  double worst = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      std::size_t open = 0, closed = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (pts(i, 0) < x && pts(i, 1) < y) ++open;
        if (pts(i, 0) <= x && pts(i, 1) <= y) ++closed;
      }
      const double vol = x * y;
      worst = std::max({worst, vol - static_cast<double>(open) / static_cast<double>(n),
                        static_cast<double>(closed) / static_cast<double>(n) - vol});
    }
  }
  return worst;
}

}  // namespace conex
