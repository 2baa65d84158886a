#include "cimsim/dcim.hpp"

#include <bit>
#include <cmath>

namespace cimsim {

namespace {

std::size_t ceil_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

DatPreset dat_preset_from_string(const std::string& name) {
  if (name == "exact") return DatPreset::Exact;
  if (name == "mid") return DatPreset::Mid;
  if (name == "aggressive") return DatPreset::Aggressive;
  throw ConfigError("unknown DAT preset '" + name +
                    "' (want exact|mid|aggressive)");
}

std::string to_string(DatPreset preset) {
  switch (preset) {
    case DatPreset::Exact:
      return "exact";
    case DatPreset::Mid:
      return "mid";
    case DatPreset::Aggressive:
      return "aggressive";
  }
  return "exact";
}

AdderTree::AdderTree(std::size_t fan_in) : fan_in_(fan_in) {
  if (fan_in_ == 0) throw ShapeError("adder tree needs at least one input");
  padded_ = ceil_pow2(fan_in_);
  std::size_t depth = std::bit_width(padded_) - 1;
  levels_.resize(depth);
  for (std::size_t level = 0; level < depth; level++) {
    levels_[level].assign(adders(level) * width(level), NodeKind::Exact);
  }
}

AdderTree::AdderTree(std::size_t fan_in, const ApproxProfile& profile)
    : AdderTree(fan_in) {
  if (profile.size() != levels_.size()) {
    throw ShapeError("profile has " + std::to_string(profile.size()) +
                     " levels, tree has " + std::to_string(levels_.size()));
  }
  for (std::size_t level = 0; level < levels_.size(); level++) {
    if (profile[level].size() != levels_[level].size()) {
      throw ShapeError("profile level " + std::to_string(level) + " covers " +
                       std::to_string(profile[level].size()) + " nodes, tree has " +
                       std::to_string(levels_[level].size()));
    }
    levels_[level] = profile[level];
  }
}

AdderTree::AdderTree(std::size_t fan_in, DatPreset preset)
    : AdderTree(fan_in, make_profile(preset, fan_in)) {}

NodeKind AdderTree::node(std::size_t level, std::size_t adder,
                         std::size_t bit) const {
  if (level >= levels_.size() || adder >= adders(level) || bit >= width(level)) {
    throw RangeError("node position out of range");
  }
  return levels_[level][adder * width(level) + bit];
}

bool AdderTree::is_exact() const {
  for (const auto& level : levels_) {
    for (NodeKind kind : level) {
      if (kind != NodeKind::Exact) return false;
    }
  }
  return true;
}

i64 AdderTree::eval(std::span<const std::uint8_t> bits) const {
  if (bits.size() > fan_in_) {
    throw ShapeError("eval got " + std::to_string(bits.size()) +
                     " bits, tree fan-in is " + std::to_string(fan_in_));
  }
  std::vector<u64> vals(padded_, 0);
  for (std::size_t i = 0; i < bits.size(); i++) {
    if (bits[i] > 1) throw RangeError("eval input is not a bit");
    vals[i] = bits[i];
  }
  for (std::size_t level = 0; level < levels_.size(); level++) {
    const std::size_t w = width(level);
    const std::size_t a_count = adders(level);
    const auto& kinds = levels_[level];
    for (std::size_t j = 0; j < a_count; j++) {
      const u64 x = vals[2 * j];
      const u64 y = vals[2 * j + 1];
      u64 out = 0;
      unsigned cin = 0;
      for (std::size_t b = 0; b < w; b++) {
        const unsigned p = (x >> b) & 1;
        const unsigned q = (y >> b) & 1;
        unsigned s = 0, co = 0;
        switch (kinds[j * w + b]) {
          case NodeKind::Exact:
            s = p ^ q ^ cin;
            co = (p & q) | (p & cin) | (q & cin);
            break;
          case NodeKind::OrSum:
            s = p | q;
            co = 0;
            break;
          case NodeKind::AndCarry:
            s = p | q;
            co = p & q;
            break;
        }
        out |= u64{s} << b;
        cin = co;
      }
      out |= u64{cin} << w;
      vals[j] = out;
    }
  }
  return static_cast<i64>(vals[0]);
}

i64 AdderTree::transistor_count(const CostTable& costs) const {
  i64 total = 0;
  for (const auto& level : levels_) {
    for (NodeKind kind : level) total += costs.node_cost(kind);
  }
  return total;
}

ApproxProfile make_profile(DatPreset preset, std::size_t fan_in) {
  AdderTree shape(fan_in);  // sizes only
  ApproxProfile profile(shape.depth());
  for (std::size_t level = 0; level < shape.depth(); level++) {
    profile[level].assign(shape.adders(level) * shape.width(level),
                          NodeKind::Exact);
  }
  if (preset == DatPreset::Exact || shape.depth() < 2) return profile;
  const std::size_t top = shape.depth() - 1;
  for (std::size_t level = 0; level < top; level++) {
    const std::size_t w = shape.width(level);
    for (std::size_t j = 0; j < shape.adders(level); j++) {
      auto* node = &profile[level][j * w];
      const bool even = (j % 2) == 0;
      if (preset == DatPreset::Mid) {
        // Bit 0 has no carry-in, so OrSum errs -1 and AndCarry errs +1,
        // both exactly on input (1,1); alternating cancels the bias.
        node[0] = even ? NodeKind::OrSum : NodeKind::AndCarry;
        // Above an OrSum bit 0 the carry-in is still zero, so an OrSum at
        // bit 1 of an even adder only loses the (rare) both-ones case.
        if (w >= 2 && even) node[1] = NodeKind::OrSum;
      } else {  // Aggressive: everything below the top level
        node[0] = even ? NodeKind::OrSum : NodeKind::AndCarry;
        for (std::size_t b = 1; b < w; b++) node[b] = NodeKind::OrSum;
      }
    }
  }
  return profile;
}

double dat_rmse(const AdderTree& tree, const AdderTree& reference,
                std::size_t trials, u64 seed) {
  if (tree.fan_in() != reference.fan_in()) {
    throw ShapeError("dat_rmse: trees have different fan-in");
  }
  if (trials < 1000) {
    throw RangeError("dat_rmse needs at least 1000 trials for a stable estimate");
  }
  const std::size_t n = tree.fan_in();
  std::vector<std::uint8_t> bits(n);
  double sq_sum = 0.0;
  for (std::size_t trial = 0; trial < trials; trial++) {
    Rng rng(seed, StreamTag::kDatInput, trial);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
    const double err =
        static_cast<double>(tree.eval(bits) - reference.eval(bits));
    sq_sum += err * err;
  }
  return std::sqrt(sq_sum / static_cast<double>(trials)) /
         static_cast<double>(n);
}

i64 dcim_mac(const QuantVector& in, const QuantVector& w) {
  if (in.size() != w.size()) {
    throw ShapeError("dcim_mac: length mismatch (" + std::to_string(in.size()) +
                     " vs " + std::to_string(w.size()) + ")");
  }
  const auto in_planes = in.packed_planes();
  const auto w_planes = w.packed_planes();
  PartialGrid grid(in.bit_width(), w.bit_width());
  for (int j = 0; j < in.bit_width(); j++) {
    for (int k = 0; k < w.bit_width(); k++) {
      i64 partial = 0;
      for (std::size_t word = 0; word < in_planes[j].size(); word++) {
        partial += std::popcount(in_planes[j][word] & w_planes[k][word]);
      }
      grid.set(j, k, partial);
    }
  }
  return recombine(grid, in.plane_weights(), w.plane_weights());
}

ProbMacEstimate prob_mac(std::span<const std::uint8_t> in_bits,
                         std::span<const std::uint8_t> w_bits, ProbMode mode,
                         u64 seed) {
  if (in_bits.size() != w_bits.size()) {
    throw ShapeError("prob_mac: length mismatch");
  }
  if (in_bits.empty()) throw ShapeError("prob_mac: empty vectors");
  i64 c_in = 0, c_w = 0;
  for (std::size_t i = 0; i < in_bits.size(); i++) {
    if (in_bits[i] > 1 || w_bits[i] > 1) {
      throw RangeError("prob_mac inputs must be bits");
    }
    c_in += in_bits[i];
    c_w += w_bits[i];
  }
  const double n = static_cast<double>(in_bits.size());
  ProbMacEstimate result;
  result.mode = mode;
  if (mode == ProbMode::Expected) {
    result.estimate = static_cast<i64>(std::nearbyint(
        static_cast<double>(c_in) * static_cast<double>(c_w) / n));
    return result;
  }
  const double prob =
      (static_cast<double>(c_in) / n) * (static_cast<double>(c_w) / n);
  Rng rng(seed, StreamTag::kProbTrial);
  i64 successes = 0;
  for (std::size_t t = 0; t < in_bits.size(); t++) {
    if (rng.next_unit() < prob) successes++;
  }
  result.estimate = successes;
  result.trials = in_bits.size();
  return result;
}

}  // namespace cimsim
