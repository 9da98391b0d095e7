#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "capgate/core.hpp"

namespace capgate {

// CSV with a mandatory header holding at least score, label and group.
// Extra columns are ignored and reported through `warnings`.
ScoredDataset read_csv(std::istream& in, std::vector<std::string>* warnings = nullptr);
ScoredDataset load_csv(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

void write_csv(std::ostream& out, const ScoredDataset& dataset);
void save_csv(const std::filesystem::path& path, const ScoredDataset& dataset);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

inline constexpr std::array<double, 3> kDefaultSplitFractions{0.5, 0.2, 0.3};
inline constexpr std::uint64_t kDefaultSplitSeed = 42;

struct SplitDataset {
  ScoredDataset train;
  ScoredDataset validation;
  ScoredDataset test;
  std::array<double, 3> fractions;
  std::uint64_t seed;
  // Row indices into the source dataset, ascending, per slice.
  std::array<std::vector<std::uint32_t>, 3> indices;
  std::vector<std::string> warnings;
};

/// Stratifies jointly on (label, group); each stratum is shuffled with `seed`
/// and cut by largest-remainder rounding of the fractions.
SplitDataset stratified_split(const ScoredDataset& dataset,
                              std::array<double, 3> fractions = kDefaultSplitFractions,
                              std::uint64_t seed = kDefaultSplitSeed);

struct SyntheticGroup {
  std::string name;
  std::size_t size = 0;
  double shape_a = 1.0;  // Beta(a, b) score distribution
  double shape_b = 1.0;
};

struct SyntheticSpec {
  std::vector<SyntheticGroup> groups;
  std::uint64_t seed = 42;
};

/// Beta-distributed scores with labels drawn as Bernoulli(score), so the
/// population is calibrated by construction.
ScoredDataset generate_synthetic(const SyntheticSpec& spec);

/// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

struct LogisticFitOptions {
  double learning_rate = 0.1;
  std::size_t iterations = 1000;
  std::size_t batch_size = 0;  // 0 = full batch; otherwise seeded mini-batches
  std::uint64_t seed = 42;
};

struct LogisticModel {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> weights;
  double bias = 0.0;

  std::vector<double> predict(const FeatureMatrix& features) const;
};

/// Per-column standardization (zero mean, unit variance; constant columns keep scale 1).
FeatureMatrix standardize(const FeatureMatrix& features, std::vector<double>* mean = nullptr,
                          std::vector<double>* scale = nullptr);

/// Mean negative log-likelihood and its gradient (weights..., bias) on
/// already-standardized features.
double logistic_objective(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                          std::span<const double> weights, double bias);
std::vector<double> logistic_gradient(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                                      std::span<const double> weights, double bias);

LogisticModel fit_logistic(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                           const LogisticFitOptions& options = {});

/// Fits on (features, labels) and returns in-sample scores in (0,1). Demo plumbing only.
std::vector<double> demo_logistic_scorer(const FeatureMatrix& features,
                                         std::span<const std::uint8_t> labels,
                                         const LogisticFitOptions& options = {});

}  // namespace capgate
