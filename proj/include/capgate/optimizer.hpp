#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "capgate/core.hpp"
#include "capgate/metrics.hpp"

namespace capgate {

/// Loss values closer than this to the minimum count as ties, so rounding in
/// the weighted sum cannot flip the smallest-threshold tie-break.
inline constexpr double kLossTieTolerance = 1e-12;

/// Every metric of the loss evaluated at each grid threshold, index-aligned.
struct LossCurve {
  EthicalWeights weights;
  std::vector<double> taus;
  std::vector<double> losses;
  std::vector<double> fnrs;
  std::vector<double> fprs;
  std::vector<double> deltas;
  std::vector<double> intervention_rates;

  std::size_t size() const noexcept { return taus.size(); }
};

/// One descending pass over the pre-sorted scores: O(N + |grid| * groups).
LossCurve loss_curve(const ScoredDataset& dataset, const ThresholdGrid& grid,
                     const EthicalWeights& weights);

/// Same curve under different weights; metrics are reused, only losses change.
LossCurve reweight(LossCurve curve, const EthicalWeights& weights);

struct FreeOptimum {
  double tau = 0.0;
  double loss = 0.0;
  std::size_t index = 0;
};

/// Grid argmin of the loss; ties go to the smallest threshold.
FreeOptimum optimize_free(const LossCurve& curve);

struct CapacityThreshold {
  double tau = 1.0;
  std::size_t index = 0;
  // True when even tau = 1 flags more than C: mass of scores exactly at 1.
  bool infeasible = false;
};

/// Smallest grid value t with mean(score >= t) <= C.
CapacityThreshold capacity_threshold(const ScoredDataset& dataset, const ThresholdGrid& grid,
                                     Capacity capacity);

/// Full deployment rule: tau* = max(tau_free, tau(C)).
ThresholdDecision deploy(const ScoredDataset& calibration, const ThresholdGrid& grid,
                         const EthicalWeights& weights, Capacity capacity);

/// Variant for callers that already hold the calibration curve (sweeps, server).
ThresholdDecision deploy(const LossCurve& curve, const ScoredDataset& calibration,
                         const ThresholdGrid& grid, Capacity capacity);

}  // namespace capgate
