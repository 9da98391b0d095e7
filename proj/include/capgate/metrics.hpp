#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capgate/core.hpp"

namespace capgate {

/// Confusion counts and the rates derived from them. Degenerate denominators
/// resolve to 0: fnr = 0 without positives, fpr = 0 without negatives.
struct ConfusionRates {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double fnr = 0.0;
  double fpr = 0.0;
  double recall = 0.0;
  double intervention_rate = 0.0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

ConfusionRates rates_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

struct GroupTpr {
  std::string group;
  std::optional<double> tpr;  // empty when the group has no positives
};

struct DisparityReport {
  std::vector<GroupTpr> per_group_tpr;
  double delta = 0.0;
  std::vector<std::string> groups_excluded;
};

/// Max pairwise |TPR_g - TPR_h| over groups with at least one positive.
/// Arguments are per-group flagged-positive counts and positive counts.
double tpr_disparity(std::span<const std::size_t> flagged_positives,
                     std::span<const std::size_t> positives);

ConfusionRates confusion(const ScoredDataset& dataset, double tau);
DisparityReport disparity(const ScoredDataset& dataset, double tau);

/// Same metrics for an arbitrary selection (1 = intervene), e.g. randomized policies.
ConfusionRates confusion(const ScoredDataset& dataset, std::span<const std::uint8_t> selected);
DisparityReport disparity(const ScoredDataset& dataset, std::span<const std::uint8_t> selected);

inline double combine_loss(const EthicalWeights& w, double fnr, double fpr, double delta) noexcept {
  return w.alpha * fnr + w.beta * fpr + w.gamma * delta;
}

/// alpha * FNR(tau) + beta * FPR(tau) + gamma * Delta(tau).
double ethical_loss(const ScoredDataset& dataset, double tau, const EthicalWeights& weights);

}  // namespace capgate
