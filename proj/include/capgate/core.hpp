#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace capgate {

enum class ErrorKind {
  InvalidArgument,
  Schema,
  Range,
  Label,
  NotFound,
  Io,
  Runtime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A scored population: one risk score, one binary label and one protected
/// group per instance. Immutable once built; the descending score order is
/// computed at construction so threshold sweeps never re-sort.
class ScoredDataset {
 public:
  ScoredDataset(std::vector<double> scores, std::vector<std::uint8_t> labels,
                const std::vector<std::string>& groups);

  /// Builds from already-encoded group codes into `group_names`.
  ScoredDataset(std::vector<double> scores, std::vector<std::uint8_t> labels,
                std::vector<std::uint32_t> group_codes, std::vector<std::string> group_names);

  std::size_t size() const noexcept { return scores_.size(); }
  std::size_t num_groups() const noexcept { return group_names_->size(); }

  std::span<const double> scores() const noexcept { return scores_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::span<const std::uint32_t> group_codes() const noexcept { return group_codes_; }
  const std::vector<std::string>& group_names() const noexcept { return *group_names_; }
  const std::string& group_of(std::size_t i) const { return (*group_names_)[group_codes_[i]]; }

  /// Row indices ordered by score, highest first (stable on ties).
  std::span<const std::uint32_t> order_desc() const noexcept { return order_desc_; }

  std::size_t positives() const noexcept { return positives_; }
  std::size_t negatives() const noexcept { return size() - positives_; }
  std::span<const std::size_t> group_sizes() const noexcept { return group_sizes_; }
  std::span<const std::size_t> group_positives() const noexcept { return group_positives_; }

  /// Number of rows with score >= tau. O(log N).
  std::size_t count_at_or_above(double tau) const;

  /// Rows `indices` of this dataset, keeping the group vocabulary.
  ScoredDataset subset(std::span<const std::uint32_t> indices) const;

 private:
  void validate_and_index();

  std::vector<double> scores_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::uint32_t> group_codes_;
  std::shared_ptr<const std::vector<std::string>> group_names_;
  std::vector<std::uint32_t> order_desc_;
  std::vector<double> sorted_desc_;
  std::vector<std::size_t> group_sizes_;
  std::vector<std::size_t> group_positives_;
  std::size_t positives_ = 0;
};

struct EthicalWeights {
  double alpha = 1.0;  // safety: weight on FNR
  double beta = 1.0;   // efficiency: weight on FPR
  double gamma = 0.0;  // equity: weight on TPR disparity

  /// Throws InvalidArgument unless all weights are finite and nonnegative.
  void validate() const;
};

/// Maximum allowable intervention fraction, in (0, 1].
class Capacity {
 public:
  explicit Capacity(double c);

  double value() const noexcept { return c_; }

 private:
  double c_;
};

/// Candidate thresholds: strictly ascending, starting at 0 and ending at 1.
class ThresholdGrid {
 public:
  explicit ThresholdGrid(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Index of the exact grid value `tau`, if present.
  std::optional<std::size_t> index_of(double tau) const;

 private:
  std::vector<double> values_;
};

struct ThresholdDecision {
  double tau_free = 0.0;
  double tau_capacity = 0.0;
  double tau_star = 0.0;
  bool constraint_active = false;
  double critical_capacity = 0.0;
  double loss_at_tau_star = 0.0;
  // Set when even tau = 1 flags more than the capacity allows.
  bool capacity_infeasible = false;
};

enum class PolicyId {
  ProposedFramework,
  PerformanceOptimal,
  RiskAverse,
  InclusionOriented,
  FairnessAware,
  DemographicParity,
  EqualizedOdds,
  RandomAllocation,
  Unconstrained,
};

inline constexpr PolicyId kAllPolicies[] = {
    PolicyId::ProposedFramework, PolicyId::PerformanceOptimal, PolicyId::RiskAverse,
    PolicyId::InclusionOriented, PolicyId::FairnessAware,      PolicyId::DemographicParity,
    PolicyId::EqualizedOdds,     PolicyId::RandomAllocation,   PolicyId::Unconstrained,
};

std::string_view to_string(PolicyId id);
/// Throws InvalidArgument("unknown policy id: ...") for names outside the enumeration.
PolicyId parse_policy_id(std::string_view name);

inline constexpr double kDefaultGridStep = 0.001;

/// Sorted union of {0, 1}, every unique score, and the ladder {0, step, 2*step, ..., 1}.
ThresholdGrid default_grid(const ScoredDataset& dataset, double step = kDefaultGridStep);

/// Intervene iff score >= tau (inclusive).
inline constexpr bool decision_rule(double score, double tau) noexcept { return score >= tau; }

}  // namespace capgate
