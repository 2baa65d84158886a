#pragma once

// Quantized vectors, bit-plane decomposition, and the exact recombination
// arithmetic every backend is measured against.
//
// Conventions (fixed project-wide):
//  - planes are indexed LSB-first: plane j carries bit j of each element
//  - signed values are two's complement in bit_width bits; the top plane's
//    significance weight is -2^(bit_width-1), all other planes are +2^j
//  - accumulation is checked 64-bit; overflow throws instead of wrapping

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

using i64 = std::int64_t;
using u64 = std::uint64_t;

constexpr int kMaxBitWidth = 24;

inline i64 checked_add(i64 a, i64 b) {
  i64 r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("i64 add overflow");
  return r;
}

inline i64 checked_mul(i64 a, i64 b) {
  i64 r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("i64 mul overflow");
  return r;
}

// One extracted bit plane: bits[i] in {0,1}, plus the signed weight this
// plane contributes on recombination.
struct BitPlane {
  std::vector<std::uint8_t> bits;
  int plane_index = 0;
  i64 significance_weight = 1;

  i64 popcount() const {
    i64 c = 0;
    for (auto b : bits) c += b;
    return c;
  }
};

class QuantVector {
 public:
  QuantVector(std::vector<i64> values, int bit_width, bool is_signed);

  std::size_t size() const { return values_.size(); }
  int bit_width() const { return bit_width_; }
  bool is_signed() const { return is_signed_; }
  const std::vector<i64>& values() const { return values_; }

  i64 min_value() const;  // smallest representable value
  i64 max_value() const;  // largest representable value

  // Bit j of every element (two's complement for signed vectors).
  BitPlane bit_plane(int plane_index) const;

  // All planes packed 64 elements per word, for fast AND+popcount paths.
  std::vector<std::vector<u64>> packed_planes() const;

  // Recombination weight of plane j.
  i64 plane_weight(int plane_index) const;
  std::vector<i64> plane_weights() const;

  static QuantVector random(Rng& rng, std::size_t n, int bit_width,
                            bool is_signed);

 private:
  std::vector<i64> values_;
  int bit_width_;
  bool is_signed_;
};

i64 plane_weight(int plane_index, int bit_width, bool is_signed);

// Reference dot product: sum_i in[i]*w[i], checked arithmetic, no
// decomposition. Every backend in this project is judged against it.
i64 dot_oracle(const QuantVector& in, const QuantVector& w);

// Integer partial sums indexed by (input plane j, weight plane k).
// Cells start empty; recombine() refuses grids with holes.
class PartialGrid {
 public:
  PartialGrid(int input_planes, int weight_planes);

  int input_planes() const { return m_; }
  int weight_planes() const { return p_; }

  void set(int j, int k, i64 value);
  i64 at(int j, int k) const;  // throws IncompleteGridError on empty cell
  bool has(int j, int k) const;
  bool complete() const;

 private:
  int index(int j, int k) const;
  int m_, p_;
  std::vector<std::optional<i64>> cells_;
};

// y = sum_{j,k} partial(j,k) * in_weight[j] * w_weight[k], checked.
i64 recombine(const PartialGrid& partials, std::span<const i64> in_weights,
              std::span<const i64> w_weights);

}  // namespace cimsim
