#include "cimsim/core.hpp"

#include <string>

namespace cimsim {

namespace {

void check_bit_width(int bit_width) {
  if (bit_width < 1 || bit_width > kMaxBitWidth) {
    throw RangeError("bit_width must be in [1, " +
                     std::to_string(kMaxBitWidth) + "], got " +
                     std::to_string(bit_width));
  }
}

}  // namespace

QuantVector::QuantVector(std::vector<i64> values, int bit_width,
                         bool is_signed)
    : values_(std::move(values)), bit_width_(bit_width), is_signed_(is_signed) {
  check_bit_width(bit_width_);
  if (values_.empty()) throw ShapeError("QuantVector cannot be empty");
  const i64 lo = min_value();
  const i64 hi = max_value();
  for (i64 v : values_) {
    if (v < lo || v > hi) {
      throw RangeError("value " + std::to_string(v) + " outside [" +
                       std::to_string(lo) + ", " + std::to_string(hi) +
                       "] for " + std::to_string(bit_width_) + "-bit " +
                       (is_signed_ ? "signed" : "unsigned") + " vector");
    }
  }
}

i64 QuantVector::min_value() const {
  return is_signed_ ? -(i64{1} << (bit_width_ - 1)) : 0;
}

i64 QuantVector::max_value() const {
  return is_signed_ ? (i64{1} << (bit_width_ - 1)) - 1
                    : (i64{1} << bit_width_) - 1;
}

i64 plane_weight(int plane_index, int bit_width, bool is_signed) {
  check_bit_width(bit_width);
  if (plane_index < 0 || plane_index >= bit_width) {
    throw RangeError("plane index " + std::to_string(plane_index) +
                     " out of range for " + std::to_string(bit_width) +
                     "-bit vector");
  }
  if (is_signed && plane_index == bit_width - 1) {
    return -(i64{1} << plane_index);
  }
  return i64{1} << plane_index;
}

i64 QuantVector::plane_weight(int plane_index) const {
  return cimsim::plane_weight(plane_index, bit_width_, is_signed_);
}

std::vector<i64> QuantVector::plane_weights() const {
  std::vector<i64> w(bit_width_);
  for (int j = 0; j < bit_width_; j++) w[j] = plane_weight(j);
  return w;
}

BitPlane QuantVector::bit_plane(int plane_index) const {
  const i64 weight = plane_weight(plane_index);  // validates the index
  BitPlane plane;
  plane.plane_index = plane_index;
  plane.significance_weight = weight;
  plane.bits.resize(values_.size());
  const u64 mask = (u64{1} << bit_width_) - 1;
  for (std::size_t i = 0; i < values_.size(); i++) {
    // two's complement encoding; a plain cast does the right thing
    const u64 enc = static_cast<u64>(values_[i]) & mask;
    plane.bits[i] = static_cast<std::uint8_t>((enc >> plane_index) & 1);
  }
  return plane;
}

std::vector<std::vector<u64>> QuantVector::packed_planes() const {
  const std::size_t words = (values_.size() + 63) / 64;
  std::vector<std::vector<u64>> planes(bit_width_,
                                       std::vector<u64>(words, 0));
  const u64 mask = (u64{1} << bit_width_) - 1;
  for (std::size_t i = 0; i < values_.size(); i++) {
    const u64 enc = static_cast<u64>(values_[i]) & mask;
    for (int j = 0; j < bit_width_; j++) {
      if ((enc >> j) & 1) planes[j][i >> 6] |= u64{1} << (i & 63);
    }
  }
  return planes;
}

QuantVector QuantVector::random(Rng& rng, std::size_t n, int bit_width,
                                bool is_signed) {
  check_bit_width(bit_width);
  if (n == 0) throw ShapeError("QuantVector cannot be empty");
  const i64 lo = is_signed ? -(i64{1} << (bit_width - 1)) : 0;
  const u64 span = u64{1} << bit_width;
  std::vector<i64> v(n);
  for (auto& x : v) x = lo + static_cast<i64>(rng.next_below(span));
  return QuantVector(std::move(v), bit_width, is_signed);
}

i64 dot_oracle(const QuantVector& in, const QuantVector& w) {
  if (in.size() != w.size()) {
    throw ShapeError("dot_oracle: length mismatch (" +
                     std::to_string(in.size()) + " vs " +
                     std::to_string(w.size()) + ")");
  }
  i64 acc = 0;
  for (std::size_t i = 0; i < in.size(); i++) {
    acc = checked_add(acc, checked_mul(in.values()[i], w.values()[i]));
  }
  return acc;
}

PartialGrid::PartialGrid(int input_planes, int weight_planes)
    : m_(input_planes), p_(weight_planes) {
  if (m_ < 1 || p_ < 1) throw ShapeError("PartialGrid dimensions must be >= 1");
  cells_.resize(static_cast<std::size_t>(m_) * p_);
}

int PartialGrid::index(int j, int k) const {
  if (j < 0 || j >= m_ || k < 0 || k >= p_) {
    throw RangeError("plane pair (" + std::to_string(j) + ", " +
                     std::to_string(k) + ") outside " + std::to_string(m_) +
                     "x" + std::to_string(p_) + " grid");
  }
  return j * p_ + k;
}

void PartialGrid::set(int j, int k, i64 value) { cells_[index(j, k)] = value; }

bool PartialGrid::has(int j, int k) const {
  return cells_[index(j, k)].has_value();
}

i64 PartialGrid::at(int j, int k) const {
  const auto& cell = cells_[index(j, k)];
  if (!cell) {
    throw IncompleteGridError("plane pair (" + std::to_string(j) + ", " +
                              std::to_string(k) + ") was never set");
  }
  return *cell;
}

bool PartialGrid::complete() const {
  for (const auto& c : cells_) {
    if (!c) return false;
  }
  return true;
}

i64 recombine(const PartialGrid& partials, std::span<const i64> in_weights,
              std::span<const i64> w_weights) {
  if (static_cast<int>(in_weights.size()) != partials.input_planes() ||
      static_cast<int>(w_weights.size()) != partials.weight_planes()) {
    throw ShapeError("recombine: weight count does not match grid");
  }
  i64 acc = 0;
  for (int j = 0; j < partials.input_planes(); j++) {
    for (int k = 0; k < partials.weight_planes(); k++) {
      const i64 term =
          checked_mul(partials.at(j, k), checked_mul(in_weights[j], w_weights[k]));
      acc = checked_add(acc, term);
    }
  }
  return acc;
}

}  // namespace cimsim
