#pragma once

// Digital CIM: exact and approximate digital adder trees (DAT), the
// bit-plane MAC built on them, and the Bernoulli-sampling MAC estimator.
//
// Tree model: fan_in bits are reduced pairwise, level by level. The adder at
// level L adds two (L+1)-bit operands with a ripple carry, so it owns L+1
// one-bit node positions; the final carry becomes the output MSB. Inputs are
// zero-padded up to a power of two (pad positions still run through the same
// nodes; they cost transistors like everything else but add no signal).
//
// Node kinds:
//   Exact    - full adder: sum = a^b^cin, carry = majority(a,b,cin)
//   OrSum    - single 2-input OR replaces the node: sum = a|b, carry dropped
//   AndCarry - OR + AND pair: sum = a|b, carry = a&b (carry-in dropped)
//
// At bit 0 of any adder the carry-in is structurally zero, so an AndCarry
// node there has an exact carry and overshoots by +1 on input (1,1), while
// an OrSum node undershoots by -1 on (1,1). The `mid` preset alternates the
// two across adders to cancel the bias; see make_profile().

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/core.hpp"

namespace cimsim {

enum class NodeKind : std::uint8_t { Exact, OrSum, AndCarry };

struct CostTable {
  int full_adder = 28;  // transmission-gate mirror adder
  int or_gate = 6;
  int and_gate = 6;

  int node_cost(NodeKind kind) const {
    switch (kind) {
      case NodeKind::Exact:
        return full_adder;
      case NodeKind::OrSum:
        return or_gate;
      case NodeKind::AndCarry:
        return or_gate + and_gate;
    }
    return full_adder;
  }
};

// Substitution map covering every node position exactly once:
// levels[L][adder * width(L) + bit] with width(L) = L+1.
using ApproxProfile = std::vector<std::vector<NodeKind>>;

enum class DatPreset { Exact, Mid, Aggressive };

DatPreset dat_preset_from_string(const std::string& name);
std::string to_string(DatPreset preset);

class AdderTree {
 public:
  // Exact tree over fan_in inputs (fan_in >= 1).
  explicit AdderTree(std::size_t fan_in);
  AdderTree(std::size_t fan_in, const ApproxProfile& profile);
  AdderTree(std::size_t fan_in, DatPreset preset);

  std::size_t fan_in() const { return fan_in_; }
  std::size_t padded_fan_in() const { return padded_; }
  std::size_t depth() const { return levels_.size(); }

  std::size_t adders(std::size_t level) const { return padded_ >> (level + 1); }
  std::size_t width(std::size_t level) const { return level + 1; }
  NodeKind node(std::size_t level, std::size_t adder, std::size_t bit) const;

  // Reduce `bits` (length <= fan_in, each 0/1); shorter inputs are
  // zero-padded. Exact trees return the popcount by construction.
  i64 eval(std::span<const std::uint8_t> bits) const;

  i64 transistor_count(const CostTable& costs = CostTable{}) const;

  bool is_exact() const;

 private:
  std::size_t fan_in_;
  std::size_t padded_;
  std::vector<std::vector<NodeKind>> levels_;
};

// Preset profiles for a given fan-in.
//   Exact      - no substitutions
//   Mid        - bias-cancelling bit-0/bit-1 substitutions, top level exact;
//                roughly half the transistors at a few percent RMSE
//   Aggressive - everything below the top level substituted
ApproxProfile make_profile(DatPreset preset, std::size_t fan_in);

// RMSE of (tree - reference) over `trials` uniform random bit inputs,
// normalized by fan_in (the full scale of a popcount). Both trees see the
// same inputs; the draw depends only on (seed, trial), so nested profiles
// can be compared pairwise. trials >= 1000.
double dat_rmse(const AdderTree& tree, const AdderTree& reference,
                std::size_t trials, u64 seed);

// Exact digital MAC: decompose, AND, reduce each plane pair, recombine.
// The plane-pair reduction of an exact tree is its popcount (the tree tests
// prove the equivalence), so this runs on packed words.
i64 dcim_mac(const QuantVector& in, const QuantVector& w);

// --- probabilistic (Bernoulli) MAC -----------------------------------------

enum class ProbMode { Expected, Sampled };

struct ProbMacEstimate {
  i64 estimate = 0;
  ProbMode mode = ProbMode::Expected;
  std::size_t trials = 0;  // Bernoulli draws taken (n for Sampled, 0 else)
};

// 1-bit x 1-bit dot product estimated from pulse-count statistics only:
// Expected returns round(c_in * c_w / n); Sampled counts successes in n
// Bernoulli trials with p = (c_in/n) * (c_w/n).
ProbMacEstimate prob_mac(std::span<const std::uint8_t> in_bits,
                         std::span<const std::uint8_t> w_bits, ProbMode mode,
                         u64 seed);

}  // namespace cimsim
