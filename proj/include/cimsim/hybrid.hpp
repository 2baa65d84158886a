#pragma once

// Hybrid digital/analog CIM: each (input plane, weight plane) pair is
// computed in one domain. Digital pairs are exact popcounts; analog pairs go
// through the same bit-serial conversion as acim_mac, with noise keyed by
// (instance seed, trial, j, k) so the same pair sees the same noise no
// matter how the grid is split. Boundary selection (significance threshold,
// explicit maps, saliency scoring, threshold calibration) lives here too.

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "cimsim/acim.hpp"
#include "cimsim/core.hpp"

namespace cimsim {

enum class Domain : std::uint8_t { Digital, Analog };

class DomainAssignment {
 public:
  DomainAssignment(int input_planes, int weight_planes, Domain fill);

  // Digital <=> j + k >= boundary. boundary in [0, m+p-1]: 0 is all-digital,
  // m+p-1 is all-analog.
  static DomainAssignment straight_split(int input_planes, int weight_planes,
                                         int boundary);
  // Explicit per-pair map; every pair must be listed exactly once.
  static DomainAssignment explicit_map(
      int input_planes, int weight_planes,
      const std::map<std::pair<int, int>, Domain>& pairs);

  int input_planes() const { return m_; }
  int weight_planes() const { return p_; }
  Domain at(int j, int k) const;
  void set(int j, int k, Domain d);
  int digital_pairs() const;

 private:
  int m_, p_;
  std::vector<Domain> cells_;
};

// MAC with per-pair domain routing. Digital pairs contribute exact integer
// partials; analog pairs follow the instance's readout.
MacResult hybrid_mac(const QuantVector& in, const QuantVector& w,
                     const DomainAssignment& assignment,
                     const MacroInstance& inst, u64 trial = 0);

// --- boundary selection ------------------------------------------------------

struct SaliencyScore {
  i64 score = 0;
  int pairs_evaluated = 0;
};

// Exact digital preview of the `pairs` highest-significance plane pairs
// (ordered by j+k descending, ties by j descending), weighted by their
// recombination weights, absolute value per channel, summed over channels.
// With pairs == m*p this equals sum_c |dot_oracle(in_c, w_c)|.
SaliencyScore ose_saliency(std::span<const QuantVector> ins,
                           std::span<const QuantVector> ws, int pairs);

// Map a saliency score onto a boundary ladder: returns
// ladder[#thresholds <= score]. thresholds must be strictly ascending and
// ladder one entry longer. A non-ascending ladder (e.g. [8, 4, 0]) gives the
// usual "higher score, larger digital share" behavior.
int select_boundary(i64 score, std::span<const i64> thresholds,
                    std::span<const int> ladder);

// Empirical quantiles of observed scores: sorted ascending, quantile q maps
// to the ceil(q*N)-th order statistic (1-indexed), q = 0 to the minimum.
std::vector<i64> calibrate_thresholds(std::span<const i64> scores,
                                      std::span<const double> quantiles);

}  // namespace cimsim
