#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capgate/core.hpp"
#include "capgate/metrics.hpp"

namespace capgate {

enum class PerformanceMetric { F1, BalancedAccuracy };

std::string_view to_string(PerformanceMetric m);
PerformanceMetric parse_performance_metric(std::string_view name);

/// Grid threshold maximizing the metric; ties go to the largest threshold.
/// Throws "undefined F1 optimum" when the dataset holds a single class.
double performance_optimal(const ScoredDataset& dataset, const ThresholdGrid& grid,
                           PerformanceMetric metric = PerformanceMetric::F1);

/// Largest grid threshold whose FNR stays within epsilon.
double risk_averse(const ScoredDataset& dataset, const ThresholdGrid& grid, double epsilon = 0.0);

/// Pure capacity enforcement; identical to capacity_threshold.
double inclusion_oriented(const ScoredDataset& dataset, const ThresholdGrid& grid, Capacity capacity);

/// Among grid thresholds <= tau_base, the one minimizing TPR disparity; ties go
/// to the largest (closest to the baseline).
double fairness_aware(const ScoredDataset& dataset, const ThresholdGrid& grid, double tau_base);

/// Single global threshold minimizing the max pairwise gap in group selection
/// rates among capacity-feasible grid points; ties go to the largest.
/// Reference comparator only.
double demographic_parity(const ScoredDataset& dataset, const ThresholdGrid& grid, Capacity capacity);

/// Group-stratified random selection of floor(C * N_g) rows per group.
/// Not a single global threshold: a reference comparator only.
std::vector<std::uint8_t> equalized_odds_randomized(const ScoredDataset& dataset, Capacity capacity,
                                                    std::uint64_t seed);

/// floor(C * N) rows chosen uniformly without replacement.
std::vector<std::uint8_t> random_allocation(const ScoredDataset& dataset, Capacity capacity,
                                            std::uint64_t seed);

/// tau_free with no regard for intervention volume.
double unconstrained(const ScoredDataset& dataset, const ThresholdGrid& grid,
                     const EthicalWeights& weights);

struct PolicyParams {
  double epsilon = 0.0;  // risk_averse FNR tolerance, in [0,1)
  std::uint64_t seed = 42;  // randomized comparators
  PerformanceMetric metric = PerformanceMetric::F1;
};

struct PolicySpec {
  PolicyId id = PolicyId::ProposedFramework;
  PolicyParams params;
};

/// Tolerance on the capacity comparison when flagging feasibility.
inline constexpr double kFeasibilitySlack = 1e-12;

struct PolicyOutcome {
  PolicyId policy = PolicyId::ProposedFramework;
  std::optional<double> tau;  // empty for randomized selections
  ConfusionRates confusion;
  DisparityReport disparity;
  double intervention_rate = 0.0;
  bool feasible = false;
  double loss = 0.0;
  bool capacity_infeasible = false;
};

/// Calibrates the policy on `calibration` and scores it on `evaluation`.
/// Randomized policies draw their selection directly on `evaluation`.
PolicyOutcome evaluate_policy(const PolicySpec& spec, const ScoredDataset& calibration,
                              const ScoredDataset& evaluation, const ThresholdGrid& grid,
                              const EthicalWeights& weights, Capacity capacity);

inline PolicyOutcome evaluate_policy(const PolicySpec& spec, const ScoredDataset& dataset,
                                     const ThresholdGrid& grid, const EthicalWeights& weights,
                                     Capacity capacity) {
  return evaluate_policy(spec, dataset, dataset, grid, weights, capacity);
}

struct PolicyResult {
  PolicyId policy = PolicyId::ProposedFramework;
  std::optional<PolicyOutcome> outcome;
  std::string error;  // set when the policy is undefined on this data
};

/// Every policy in enumeration order with shared params. Policies whose
/// preconditions fail (one-class data, a single group) carry the error instead.
std::vector<PolicyResult> evaluate_all_policies(const PolicyParams& params,
                                                 const ScoredDataset& calibration,
                                                 const ScoredDataset& evaluation,
                                                 const ThresholdGrid& grid,
                                                 const EthicalWeights& weights, Capacity capacity);

}  // namespace capgate
