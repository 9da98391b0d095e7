#include "capgate/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace capgate {

namespace {

std::string row_label(std::size_t i) { return "row " + std::to_string(i + 1); }

}  // namespace

ScoredDataset::ScoredDataset(std::vector<double> scores, std::vector<std::uint8_t> labels,
                             const std::vector<std::string>& groups)
    : scores_(std::move(scores)), labels_(std::move(labels)) {
  if (groups.size() != scores_.size()) {
    throw Error(ErrorKind::InvalidArgument, "scores, labels and groups must share one length");
  }
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> codes;
  group_codes_.reserve(groups.size());
  for (const auto& g : groups) {
    auto [it, inserted] = codes.try_emplace(g, static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(g);
    group_codes_.push_back(it->second);
  }
  group_names_ = std::make_shared<const std::vector<std::string>>(std::move(names));
  validate_and_index();
}

ScoredDataset::ScoredDataset(std::vector<double> scores, std::vector<std::uint8_t> labels,
                             std::vector<std::uint32_t> group_codes,
                             std::vector<std::string> group_names)
    : scores_(std::move(scores)),
      labels_(std::move(labels)),
      group_codes_(std::move(group_codes)),
      group_names_(std::make_shared<const std::vector<std::string>>(std::move(group_names))) {
  for (std::size_t i = 0; i < group_codes_.size(); ++i) {
    if (group_codes_[i] >= group_names_->size()) {
      throw Error(ErrorKind::InvalidArgument, "group code out of range at " + row_label(i));
    }
  }
  validate_and_index();
}

void ScoredDataset::validate_and_index() {
  const std::size_t n = scores_.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty dataset");
  if (labels_.size() != n || group_codes_.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "scores, labels and groups must share one length");
  }
  if (group_names_->empty()) throw Error(ErrorKind::InvalidArgument, "no group values present");

  group_sizes_.assign(group_names_->size(), 0);
  group_positives_.assign(group_names_->size(), 0);
  positives_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores_[i];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorKind::Range, "range error: score outside [0,1] at " + row_label(i));
    }
    if (labels_[i] > 1) throw Error(ErrorKind::Label, "label error: label not in {0,1} at " + row_label(i));
    ++group_sizes_[group_codes_[i]];
    if (labels_[i] == 1) {
      ++positives_;
      ++group_positives_[group_codes_[i]];
    }
  }

  order_desc_.resize(n);
  std::iota(order_desc_.begin(), order_desc_.end(), 0u);
  std::stable_sort(order_desc_.begin(), order_desc_.end(),
                   [this](std::uint32_t a, std::uint32_t b) { return scores_[a] > scores_[b]; });
  sorted_desc_.resize(n);
  for (std::size_t i = 0; i < n; ++i) sorted_desc_[i] = scores_[order_desc_[i]];
}

std::size_t ScoredDataset::count_at_or_above(double tau) const {
  auto it = std::partition_point(sorted_desc_.begin(), sorted_desc_.end(),
                                 [tau](double s) { return decision_rule(s, tau); });
  return static_cast<std::size_t>(it - sorted_desc_.begin());
}

ScoredDataset ScoredDataset::subset(std::span<const std::uint32_t> indices) const {
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  std::vector<std::uint32_t> g;
  s.reserve(indices.size());
  l.reserve(indices.size());
  g.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw Error(ErrorKind::InvalidArgument, "subset index out of range");
    s.push_back(scores_[i]);
    l.push_back(labels_[i]);
    g.push_back(group_codes_[i]);
  }
  return ScoredDataset(std::move(s), std::move(l), std::move(g), *group_names_);
}

void EthicalWeights::validate() const {
  for (double w : {alpha, beta, gamma}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "weights must be finite and nonnegative");
    }
  }
}

Capacity::Capacity(double c) : c_(c) {
  if (!(c > 0.0 && c <= 1.0)) throw Error(ErrorKind::InvalidArgument, "capacity must be in (0,1]");
}

ThresholdGrid::ThresholdGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2 || values_.front() != 0.0 || values_.back() != 1.0) {
    throw Error(ErrorKind::InvalidArgument, "threshold grid must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "threshold grid must be strictly ascending");
    }
  }
}

std::optional<std::size_t> ThresholdGrid::index_of(double tau) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), tau);
  if (it == values_.end() || *it != tau) return std::nullopt;
  return static_cast<std::size_t>(it - values_.begin());
}

namespace {

struct PolicyName {
  PolicyId id;
  std::string_view name;
};

constexpr PolicyName kPolicyNames[] = {
    {PolicyId::ProposedFramework, "proposed_framework"},
    {PolicyId::PerformanceOptimal, "performance_optimal"},
    {PolicyId::RiskAverse, "risk_averse"},
    {PolicyId::InclusionOriented, "inclusion_oriented"},
    {PolicyId::FairnessAware, "fairness_aware"},
    {PolicyId::DemographicParity, "demographic_parity"},
    {PolicyId::EqualizedOdds, "equalized_odds"},
    {PolicyId::RandomAllocation, "random_allocation"},
    {PolicyId::Unconstrained, "unconstrained"},
};

}  // namespace

std::string_view to_string(PolicyId id) {
  for (const auto& p : kPolicyNames) {
    if (p.id == id) return p.name;
  }
  return "unknown";
}

PolicyId parse_policy_id(std::string_view name) {
  for (const auto& p : kPolicyNames) {
    if (p.name == name) return p.id;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown policy id: " + std::string(name));
}

ThresholdGrid default_grid(const ScoredDataset& dataset, double step) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "grid step must be in (0,1]");
  }
  std::vector<double> values;
  // Ladder points as k/m when 1/step is (nearly) an integer, so 0.001 * 601
  // lands on the same double as the literal 0.601.
  const double inv = 1.0 / step;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) < 1e-9 * rounded) {
    const auto m = static_cast<std::uint64_t>(rounded);
    values.reserve(m + 1 + dataset.size());
    for (std::uint64_t k = 0; k <= m; ++k) values.push_back(static_cast<double>(k) / static_cast<double>(m));
  } else {
    for (std::uint64_t k = 0;; ++k) {
      const double v = static_cast<double>(k) * step;
      if (v > 1.0) break;
      values.push_back(v);
    }
    values.push_back(1.0);
  }
  values.insert(values.end(), dataset.scores().begin(), dataset.scores().end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return ThresholdGrid(std::move(values));
}

}  // namespace capgate
