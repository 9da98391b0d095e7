#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capgate/core.hpp"

namespace capgate {

struct BootstrapSummary {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  double ci_low = 0.0;   // 2.5th percentile
  double ci_high = 0.0;  // 97.5th percentile
  std::size_t n_resamples = 0;
};

/// Metric names produced by bootstrap(), in report order.
inline constexpr const char* kBootstrapMetrics[] = {"recall", "efficiency", "disparity",
                                                    "intervention_rate"};

/// Row-wise resampling at a fixed threshold: n resamples of size N drawn with
/// replacement; recall, efficiency (1 - FPR), TPR disparity and intervention
/// rate per resample, summarized by mean, std and percentile 95% interval.
std::map<std::string, BootstrapSummary> bootstrap(const ScoredDataset& dataset, double tau,
                                                  std::size_t n, std::uint64_t seed);

/// Summary of an already-collected sample (sample std, linear-interpolated percentiles).
BootstrapSummary summarize_sample(std::string metric, std::vector<double> values);

struct WeightGrid {
  std::vector<double> alphas{1.0, 2.0, 3.0};
  std::vector<double> betas{0.5, 1.0, 1.5};
  std::vector<double> gammas{0.5, 1.0, 1.5, 2.0};

  std::size_t cells() const noexcept { return alphas.size() * betas.size() * gammas.size(); }
};

inline constexpr double kDefaultCapacity = 0.25;
inline constexpr std::size_t kDefaultBootstrapResamples = 1000;
inline constexpr std::uint64_t kDefaultSeed = 42;
inline const std::vector<double> kAblationCapacities{0.10, 0.15, 0.20, 0.25, 0.30, 0.40};

/// One scored population already split into calibration (validation) and
/// held-out evaluation (test) slices.
struct SweepInput {
  std::string dataset_id;
  std::string scorer_id;
  ScoredDataset validation;
  ScoredDataset test;
};

struct SweepOptions {
  WeightGrid weights;
  std::vector<double> capacities{kDefaultCapacity};
  std::size_t n_boot = kDefaultBootstrapResamples;  // 0 disables bootstrap
  std::uint64_t seed = kDefaultSeed;
  double grid_step = kDefaultGridStep;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct SweepRecord {
  std::string dataset;
  std::string scorer;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double capacity = 0.0;
  double tau_free = 0.0;
  double tau_capacity = 0.0;
  double tau_star = 0.0;
  bool constraint_active = false;
  double recall = 0.0;
  double fpr = 0.0;
  double disparity = 0.0;
  double intervention_rate = 0.0;
  double loss = 0.0;
  std::map<std::string, BootstrapSummary> bootstrap;  // empty when n_boot = 0
  double critical_capacity = 0.0;
  bool capacity_infeasible = false;
};

/// Per-cell seed: splitmix64 of (master, cell index), independent of execution order.
std::uint64_t cell_seed(std::uint64_t master, std::size_t cell_index);

/// Calibrate on validation, deploy blindly on test, bootstrap the test
/// metrics. Cells ordered by input, capacity, alpha, beta, gamma.
std::vector<SweepRecord> factorial_sweep(std::span<const SweepInput> inputs, const SweepOptions& options);

/// factorial_sweep repeated over `capacities` (options.capacities is ignored).
std::vector<SweepRecord> capacity_ablation(std::span<const SweepInput> inputs, SweepOptions options,
                                           std::span<const double> capacities = kAblationCapacities);

/// Fraction of records whose deployed threshold was set by the capacity bound.
double activation_rate(std::span<const SweepRecord> records);

struct CapacitySummary {
  double capacity = 0.0;
  std::size_t records = 0;
  double mean_recall = 0.0;
  double mean_disparity = 0.0;
  double activation_rate = 0.0;
};

/// Aggregates records by capacity, ascending.
std::vector<CapacitySummary> summarize_by_capacity(std::span<const SweepRecord> records);

}  // namespace capgate
