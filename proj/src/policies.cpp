#include "capgate/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "capgate/optimizer.hpp"

namespace capgate {

namespace {

using Wide = unsigned __int128;

// Per-threshold selection counts, overall and per group.
struct GridCounts {
  std::size_t groups = 0;
  std::vector<std::size_t> tp, fp;
  std::vector<std::size_t> group_flagged;  // [grid index * groups + g]

  std::size_t flagged_in_group(std::size_t i, std::size_t g) const { return group_flagged[i * groups + g]; }
};

GridCounts count_on_grid(const ScoredDataset& d, const ThresholdGrid& grid) {
  GridCounts c;
  c.groups = d.num_groups();
  c.tp.resize(grid.size());
  c.fp.resize(grid.size());
  c.group_flagged.assign(grid.size() * c.groups, 0);
  const auto scores = d.scores();
  const auto labels = d.labels();
  const auto codes = d.group_codes();
  const auto order = d.order_desc();
  std::vector<std::size_t> per_group(c.groups, 0);
  std::size_t tp = 0, fp = 0, p = 0;
  for (std::size_t gi = grid.size(); gi-- > 0;) {
    for (; p < d.size() && decision_rule(scores[order[p]], grid[gi]); ++p) {
      const auto row = order[p];
      labels[row] == 1 ? ++tp : ++fp;
      ++per_group[codes[row]];
    }
    c.tp[gi] = tp;
    c.fp[gi] = fp;
    std::copy(per_group.begin(), per_group.end(), c.group_flagged.begin() + gi * c.groups);
  }
  return c;
}

std::size_t exact_selection_count(double c, std::size_t n) {
  auto k = static_cast<std::size_t>(std::floor(c * static_cast<double>(n) * (1.0 + 1e-12)));
  k = std::min(k, n);
  while (k > 0 && static_cast<double>(k) / static_cast<double>(n) > c) --k;
  return k;
}

void pick_uniform(std::vector<std::uint32_t>& pool, std::size_t k, std::mt19937_64& rng,
                  std::vector<std::uint8_t>& mask) {
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    mask[pool[i]] = 1;
  }
}

}  // namespace

std::string_view to_string(PerformanceMetric m) {
  return m == PerformanceMetric::F1 ? "f1" : "balanced_accuracy";
}

PerformanceMetric parse_performance_metric(std::string_view name) {
  if (name == "f1") return PerformanceMetric::F1;
  if (name == "balanced_accuracy") return PerformanceMetric::BalancedAccuracy;
  throw Error(ErrorKind::InvalidArgument, "unknown performance metric: " + std::string(name));
}

double performance_optimal(const ScoredDataset& dataset, const ThresholdGrid& grid,
                           PerformanceMetric metric) {
  const std::size_t pos = dataset.positives();
  const std::size_t neg = dataset.negatives();
  if (pos == 0 || neg == 0) throw Error(ErrorKind::InvalidArgument, "undefined F1 optimum");
  const auto counts = count_on_grid(dataset, grid);

  // Scores as exact fractions num/den, compared by cross-multiplication.
  auto score = [&](std::size_t i) -> std::pair<Wide, Wide> {
    const std::size_t tp = counts.tp[i], fp = counts.fp[i];
    if (metric == PerformanceMetric::F1) return {Wide{2} * tp, Wide{2} * tp + fp + (pos - tp)};
    const std::size_t tn = neg - fp;
    return {Wide{tp} * neg + Wide{tn} * pos, Wide{2} * pos * neg};
  };
  std::size_t best = grid.size() - 1;
  auto [bn, bd] = score(best);
  for (std::size_t i = grid.size() - 1; i-- > 0;) {
    auto [n, d] = score(i);
    if (n * bd > bn * d) {
      best = i;
      bn = n;
      bd = d;
    }
  }
  return grid[best];
}

double risk_averse(const ScoredDataset& dataset, const ThresholdGrid& grid, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be nonnegative");
  const auto curve = loss_curve(dataset, grid, EthicalWeights{});
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (curve.fnrs[i] <= epsilon) return grid[i];
  }
  return grid[0];
}

double inclusion_oriented(const ScoredDataset& dataset, const ThresholdGrid& grid, Capacity capacity) {
  return capacity_threshold(dataset, grid, capacity).tau;
}

double fairness_aware(const ScoredDataset& dataset, const ThresholdGrid& grid, double tau_base) {
  const auto base = grid.index_of(tau_base);
  if (!base) throw Error(ErrorKind::InvalidArgument, "tau_base must be a grid point");
  const auto curve = loss_curve(dataset, grid, EthicalWeights{});
  const auto first = curve.deltas.begin();
  const double best = *std::min_element(first, first + static_cast<std::ptrdiff_t>(*base) + 1);
  for (std::size_t i = *base + 1; i-- > 0;) {
    if (curve.deltas[i] <= best + kLossTieTolerance) return grid[i];
  }
  return grid[0];
}

double demographic_parity(const ScoredDataset& dataset, const ThresholdGrid& grid, Capacity capacity) {
  const auto sizes = dataset.group_sizes();
  if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }) < 2) {
    throw Error(ErrorKind::InvalidArgument, "demographic parity needs at least two groups");
  }
  const auto counts = count_on_grid(dataset, grid);
  const double n = static_cast<double>(dataset.size());

  std::optional<std::size_t> best;
  double best_gap = 0.0;
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (static_cast<double>(counts.tp[i] + counts.fp[i]) / n > capacity.value()) break;
    double lo = 1.0, hi = 0.0;
    for (std::size_t g = 0; g < counts.groups; ++g) {
      if (sizes[g] == 0) continue;
      const double rate = static_cast<double>(counts.flagged_in_group(i, g)) / static_cast<double>(sizes[g]);
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
    }
    const double gap = hi - lo;
    if (!best || gap < best_gap - kLossTieTolerance) {
      best = i;
      best_gap = gap;
    }
  }
  // No feasible grid point: fall back to the strictest threshold.
  return best ? grid[*best] : 1.0;
}

std::vector<std::uint8_t> equalized_odds_randomized(const ScoredDataset& dataset, Capacity capacity,
                                                    std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> members(dataset.num_groups());
  const auto codes = dataset.group_codes();
  for (std::uint32_t i = 0; i < dataset.size(); ++i) members[codes[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> mask(dataset.size(), 0);
  for (auto& pool : members) {
    pick_uniform(pool, exact_selection_count(capacity.value(), pool.size()), rng, mask);
  }
  return mask;
}

std::vector<std::uint8_t> random_allocation(const ScoredDataset& dataset, Capacity capacity,
                                            std::uint64_t seed) {
  std::vector<std::uint32_t> pool(dataset.size());
  std::iota(pool.begin(), pool.end(), 0u);
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> mask(dataset.size(), 0);
  pick_uniform(pool, exact_selection_count(capacity.value(), pool.size()), rng, mask);
  return mask;
}

double unconstrained(const ScoredDataset& dataset, const ThresholdGrid& grid,
                     const EthicalWeights& weights) {
  return optimize_free(loss_curve(dataset, grid, weights)).tau;
}

PolicyOutcome evaluate_policy(const PolicySpec& spec, const ScoredDataset& calibration,
                              const ScoredDataset& evaluation, const ThresholdGrid& grid,
                              const EthicalWeights& weights, Capacity capacity) {
  weights.validate();
  PolicyOutcome out;
  out.policy = spec.id;

  std::optional<std::vector<std::uint8_t>> mask;
  switch (spec.id) {
    case PolicyId::ProposedFramework: {
      const auto d = deploy(calibration, grid, weights, capacity);
      out.tau = d.tau_star;
      out.capacity_infeasible = d.capacity_infeasible;
      break;
    }
    case PolicyId::PerformanceOptimal:
      out.tau = performance_optimal(calibration, grid, spec.params.metric);
      break;
    case PolicyId::RiskAverse:
      out.tau = risk_averse(calibration, grid, spec.params.epsilon);
      break;
    case PolicyId::InclusionOriented: {
      const auto t = capacity_threshold(calibration, grid, capacity);
      out.tau = t.tau;
      out.capacity_infeasible = t.infeasible;
      break;
    }
    case PolicyId::FairnessAware:
      out.tau = fairness_aware(calibration, grid, performance_optimal(calibration, grid, spec.params.metric));
      break;
    case PolicyId::DemographicParity:
      out.tau = demographic_parity(calibration, grid, capacity);
      break;
    case PolicyId::EqualizedOdds:
      mask = equalized_odds_randomized(evaluation, capacity, spec.params.seed);
      break;
    case PolicyId::RandomAllocation:
      mask = random_allocation(evaluation, capacity, spec.params.seed);
      break;
    case PolicyId::Unconstrained:
      out.tau = unconstrained(calibration, grid, weights);
      break;
    default:
      throw Error(ErrorKind::InvalidArgument, "unknown policy id");
  }

  if (mask) {
    out.confusion = confusion(evaluation, *mask);
    out.disparity = disparity(evaluation, *mask);
  } else {
    out.confusion = confusion(evaluation, *out.tau);
    out.disparity = disparity(evaluation, *out.tau);
  }
  out.intervention_rate = out.confusion.intervention_rate;
  out.feasible = out.intervention_rate <= capacity.value() + kFeasibilitySlack;
  out.loss = combine_loss(weights, out.confusion.fnr, out.confusion.fpr, out.disparity.delta);
  return out;
}

std::vector<PolicyResult> evaluate_all_policies(const PolicyParams& params,
                                                const ScoredDataset& calibration,
                                                const ScoredDataset& evaluation,
                                                const ThresholdGrid& grid,
                                                const EthicalWeights& weights, Capacity capacity) {
  std::vector<PolicyResult> out;
  for (auto id : kAllPolicies) {
    PolicyResult r{id, std::nullopt, {}};
    try {
      r.outcome = evaluate_policy(PolicySpec{id, params}, calibration, evaluation, grid, weights, capacity);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidArgument) throw;
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace capgate
