#include "capgate/optimizer.hpp"

#include <algorithm>

namespace capgate {

LossCurve loss_curve(const ScoredDataset& dataset, const ThresholdGrid& grid,
                     const EthicalWeights& weights) {
  weights.validate();
  const std::size_t g_count = grid.size();
  LossCurve c;
  c.weights = weights;
  c.taus.assign(grid.values().begin(), grid.values().end());
  c.losses.resize(g_count);
  c.fnrs.resize(g_count);
  c.fprs.resize(g_count);
  c.deltas.resize(g_count);
  c.intervention_rates.resize(g_count);

  const auto scores = dataset.scores();
  const auto labels = dataset.labels();
  const auto groups = dataset.group_codes();
  const auto order = dataset.order_desc();
  const std::size_t n = dataset.size();
  const std::size_t pos = dataset.positives();
  const std::size_t neg = dataset.negatives();

  std::vector<std::size_t> group_tp(dataset.num_groups(), 0);
  std::size_t tp = 0, fp = 0, p = 0;
  for (std::size_t gi = g_count; gi-- > 0;) {
    const double tau = c.taus[gi];
    for (; p < n && decision_rule(scores[order[p]], tau); ++p) {
      const auto row = order[p];
      if (labels[row] == 1) {
        ++tp;
        ++group_tp[groups[row]];
      } else {
        ++fp;
      }
    }
    const auto rates = rates_from_counts(tp, fp, pos - tp, neg - fp);
    c.fnrs[gi] = rates.fnr;
    c.fprs[gi] = rates.fpr;
    c.intervention_rates[gi] = rates.intervention_rate;
    c.deltas[gi] = tpr_disparity(group_tp, dataset.group_positives());
    c.losses[gi] = combine_loss(weights, c.fnrs[gi], c.fprs[gi], c.deltas[gi]);
  }
  return c;
}

LossCurve reweight(LossCurve curve, const EthicalWeights& weights) {
  weights.validate();
  curve.weights = weights;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    curve.losses[i] = combine_loss(weights, curve.fnrs[i], curve.fprs[i], curve.deltas[i]);
  }
  return curve;
}

FreeOptimum optimize_free(const LossCurve& curve) {
  if (curve.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty loss curve");
  const double best = *std::min_element(curve.losses.begin(), curve.losses.end());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.losses[i] <= best + kLossTieTolerance) return {curve.taus[i], curve.losses[i], i};
  }
  return {curve.taus.back(), curve.losses.back(), curve.size() - 1};  // unreachable
}

CapacityThreshold capacity_threshold(const ScoredDataset& dataset, const ThresholdGrid& grid,
                                     Capacity capacity) {
  const double n = static_cast<double>(dataset.size());
  auto over_capacity = [&](double t) {
    return static_cast<double>(dataset.count_at_or_above(t)) / n > capacity.value();
  };
  const auto values = grid.values();
  // Flagged fraction is non-increasing in t, so the infeasible grid points form a prefix.
  auto it = std::partition_point(values.begin(), values.end(), over_capacity);
  if (it == values.end()) return {1.0, values.size() - 1, true};
  return {*it, static_cast<std::size_t>(it - values.begin()), false};
}

ThresholdDecision deploy(const LossCurve& curve, const ScoredDataset& calibration,
                         const ThresholdGrid& grid, Capacity capacity) {
  if (curve.size() != grid.size()) {
    throw Error(ErrorKind::InvalidArgument, "loss curve does not match the grid");
  }
  const auto free = optimize_free(curve);
  const auto cap = capacity_threshold(calibration, grid, capacity);

  ThresholdDecision d;
  d.tau_free = free.tau;
  d.tau_capacity = cap.tau;
  d.tau_star = std::max(free.tau, cap.tau);
  d.constraint_active = cap.tau > free.tau;
  d.capacity_infeasible = cap.infeasible;
  d.critical_capacity = static_cast<double>(calibration.count_at_or_above(free.tau)) /
                        static_cast<double>(calibration.size());
  d.loss_at_tau_star = curve.losses[d.constraint_active ? cap.index : free.index];
  return d;
}

ThresholdDecision deploy(const ScoredDataset& calibration, const ThresholdGrid& grid,
                         const EthicalWeights& weights, Capacity capacity) {
  return deploy(loss_curve(calibration, grid, weights), calibration, grid, capacity);
}

}  // namespace capgate
