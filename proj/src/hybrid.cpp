#include "cimsim/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace cimsim {

DomainAssignment::DomainAssignment(int input_planes, int weight_planes,
                                   Domain fill)
    : m_(input_planes), p_(weight_planes) {
  if (m_ < 1 || m_ > kMaxBitWidth || p_ < 1 || p_ > kMaxBitWidth) {
    throw ShapeError("DomainAssignment dimensions out of range");
  }
  cells_.assign(static_cast<std::size_t>(m_) * p_, fill);
}

DomainAssignment DomainAssignment::straight_split(int input_planes,
                                                  int weight_planes,
                                                  int boundary) {
  DomainAssignment a(input_planes, weight_planes, Domain::Analog);
  if (boundary < 0 || boundary > input_planes + weight_planes - 1) {
    throw RangeError("boundary must be in [0, m+p-1], got " +
                     std::to_string(boundary));
  }
  for (int j = 0; j < input_planes; j++) {
    for (int k = 0; k < weight_planes; k++) {
      if (j + k >= boundary) a.set(j, k, Domain::Digital);
    }
  }
  return a;
}

DomainAssignment DomainAssignment::explicit_map(
    int input_planes, int weight_planes,
    const std::map<std::pair<int, int>, Domain>& pairs) {
  DomainAssignment a(input_planes, weight_planes, Domain::Digital);
  if (pairs.size() != static_cast<std::size_t>(input_planes) * weight_planes) {
    throw ShapeError("explicit map must cover every plane pair exactly once");
  }
  for (const auto& [jk, domain] : pairs) {
    a.set(jk.first, jk.second, domain);  // set() range-checks
  }
  return a;
}

Domain DomainAssignment::at(int j, int k) const {
  if (j < 0 || j >= m_ || k < 0 || k >= p_) {
    throw RangeError("plane pair out of range");
  }
  return cells_[static_cast<std::size_t>(j) * p_ + k];
}

void DomainAssignment::set(int j, int k, Domain d) {
  if (j < 0 || j >= m_ || k < 0 || k >= p_) {
    throw RangeError("plane pair out of range");
  }
  cells_[static_cast<std::size_t>(j) * p_ + k] = d;
}

int DomainAssignment::digital_pairs() const {
  int count = 0;
  for (Domain d : cells_) count += (d == Domain::Digital);
  return count;
}

MacResult hybrid_mac(const QuantVector& in, const QuantVector& w,
                     const DomainAssignment& assignment,
                     const MacroInstance& inst, u64 trial) {
  const AnalogConfig& cfg = inst.config();
  if (cfg.mode != AnalogMode::BitSerial) {
    throw ConfigError("hybrid_mac routes plane pairs; the analog side must be "
                      "bit-serial");
  }
  if (in.size() != w.size() || in.size() != cfg.rows) {
    throw ShapeError("hybrid_mac: vector lengths must equal configured rows");
  }
  if (assignment.input_planes() != in.bit_width() ||
      assignment.weight_planes() != w.bit_width()) {
    throw ShapeError("domain assignment does not match vector bit widths");
  }
  const int m = in.bit_width();
  const int p = w.bit_width();
  MacResult result{0, PartialGrid(m, p)};
  PartialGrid estimates(m, p);
  const auto in_weights = in.plane_weights();
  const auto w_weights = w.plane_weights();
  double ideal_sum = 0;
  for (int j = 0; j < m; j++) {
    const BitPlane in_plane = in.bit_plane(j);
    for (int k = 0; k < p; k++) {
      const BitPlane w_plane = w.bit_plane(k);
      if (assignment.at(j, k) == Domain::Digital) {
        i64 partial = 0;
        for (std::size_t i = 0; i < cfg.rows; i++) {
          partial += in_plane.bits[i] & w_plane.bits[i];
        }
        result.partials.set(j, k, partial);
        estimates.set(j, k, partial);
        ideal_sum += static_cast<double>(partial) *
                     static_cast<double>(in_weights[j]) *
                     static_cast<double>(w_weights[k]);
      } else {
        const Conversion conv =
            acim_bitserial_partial(in_plane, w_plane, inst, trial, j, k);
        result.partials.set(j, k, conv.code);
        estimates.set(j, k, conv.partial_estimate);
        if (!conv.skipped) {
          result.conversions++;
          result.adc_energy += static_cast<u64>(conv.effective_bits);
        }
        if (conv.saturated) result.saturated++;
        ideal_sum += conv.estimate * static_cast<double>(in_weights[j]) *
                     static_cast<double>(w_weights[k]);
      }
    }
  }
  if (cfg.readout == Readout::Ideal) {
    result.value = static_cast<i64>(std::nearbyint(ideal_sum));
  } else {
    result.value = recombine(estimates, in_weights, w_weights);
  }
  return result;
}

SaliencyScore ose_saliency(std::span<const QuantVector> ins,
                           std::span<const QuantVector> ws, int pairs) {
  if (ins.empty() || ins.size() != ws.size()) {
    throw ShapeError("ose_saliency needs matching input/weight channel lists");
  }
  const int m = ins[0].bit_width();
  const int p = ws[0].bit_width();
  for (std::size_t c = 0; c < ins.size(); c++) {
    if (ins[c].size() != ws[c].size()) {
      throw ShapeError("channel " + std::to_string(c) + " length mismatch");
    }
    if (ins[c].bit_width() != m || ins[c].is_signed() != ins[0].is_signed() ||
        ws[c].bit_width() != p || ws[c].is_signed() != ws[0].is_signed()) {
      throw ShapeError("all channels must share bit widths and signedness");
    }
  }
  if (pairs < 1 || pairs > m * p) {
    throw RangeError("pair count must be in [1, m*p], got " +
                     std::to_string(pairs));
  }

  // significance order: j+k descending, ties j descending
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<std::size_t>(m) * p);
  for (int j = 0; j < m; j++) {
    for (int k = 0; k < p; k++) order.emplace_back(j, k);
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first + a.second != b.first + b.second) {
      return a.first + a.second > b.first + b.second;
    }
    return a.first > b.first;
  });
  order.resize(pairs);

  SaliencyScore result;
  result.pairs_evaluated = pairs;
  for (std::size_t c = 0; c < ins.size(); c++) {
    const auto in_weights = ins[c].plane_weights();
    const auto w_weights = ws[c].plane_weights();
    i64 channel_sum = 0;
    for (const auto& [j, k] : order) {
      const BitPlane in_plane = ins[c].bit_plane(j);
      const BitPlane w_plane = ws[c].bit_plane(k);
      i64 partial = 0;
      for (std::size_t i = 0; i < in_plane.bits.size(); i++) {
        partial += in_plane.bits[i] & w_plane.bits[i];
      }
      channel_sum = checked_add(
          channel_sum,
          checked_mul(partial, checked_mul(in_weights[j], w_weights[k])));
    }
    result.score = checked_add(result.score, std::llabs(channel_sum));
  }
  return result;
}

int select_boundary(i64 score, std::span<const i64> thresholds,
                    std::span<const int> ladder) {
  if (ladder.size() != thresholds.size() + 1) {
    throw ShapeError("ladder must have one more entry than thresholds");
  }
  for (std::size_t i = 0; i + 1 < thresholds.size(); i++) {
    if (thresholds[i] >= thresholds[i + 1]) {
      throw ConfigError("thresholds must be strictly ascending");
    }
  }
  std::size_t idx = 0;
  while (idx < thresholds.size() && thresholds[idx] <= score) idx++;
  return ladder[idx];
}

std::vector<i64> calibrate_thresholds(std::span<const i64> scores,
                                      std::span<const double> quantiles) {
  if (scores.empty()) throw ShapeError("calibrate_thresholds needs scores");
  std::vector<i64> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<i64> out;
  out.reserve(quantiles.size());
  for (double q : quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) {
      throw RangeError("quantile must be in [0, 1]");
    }
    const double rank = std::ceil(q * static_cast<double>(sorted.size()));
    const std::size_t idx =
        rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
    out.push_back(sorted[std::min(idx, sorted.size() - 1)]);
  }
  return out;
}

}  // namespace cimsim
