#pragma once

// Independent reference implementations and random instance generators.
// Oracles deliberately avoid the library's sorted sweeps: everything is
// recomputed row by row from the raw arrays.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "capgate/core.hpp"
#include "capgate/data_io.hpp"

namespace capgate::testing {

inline ScoredDataset four_point() {
  return ScoredDataset({0.1, 0.4, 0.6, 0.9}, {0, 0, 1, 1}, std::vector<std::string>{"A", "B", "A", "B"});
}

/// Grid = unique scores plus {0, 1}.
inline ThresholdGrid score_grid(const ScoredDataset& d) {
  std::set<double> s(d.scores().begin(), d.scores().end());
  s.insert(0.0);
  s.insert(1.0);
  return ThresholdGrid(std::vector<double>(s.begin(), s.end()));
}

struct BruteCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline BruteCounts brute_counts(const ScoredDataset& d, double tau) {
  BruteCounts c;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool flag = d.scores()[i] >= tau;
    const bool pos = d.labels()[i] == 1;
    if (flag && pos) ++c.tp;
    else if (flag) ++c.fp;
    else if (pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double brute_fnr(const ScoredDataset& d, double tau) {
  const auto c = brute_counts(d, tau);
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn);
}

inline double brute_fpr(const ScoredDataset& d, double tau) {
  const auto c = brute_counts(d, tau);
  return c.fp + c.tn == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

inline double brute_rate(const ScoredDataset& d, double tau) {
  std::size_t n = 0;
  for (double s : d.scores()) n += s >= tau;
  return static_cast<double>(n) / static_cast<double>(d.size());
}

inline double brute_delta(const ScoredDataset& d, double tau) {
  std::vector<double> tprs;
  for (std::uint32_t g = 0; g < d.num_groups(); ++g) {
    std::size_t pos = 0, hit = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.group_codes()[i] != g || d.labels()[i] != 1) continue;
      ++pos;
      hit += d.scores()[i] >= tau;
    }
    if (pos > 0) tprs.push_back(static_cast<double>(hit) / static_cast<double>(pos));
  }
  if (tprs.size() < 2) return 0.0;
  double hi = -1, lo = 2;
  for (double t : tprs) {
    hi = std::max(hi, t);
    lo = std::min(lo, t);
  }
  return hi - lo;
}

inline double brute_loss(const ScoredDataset& d, double tau, const EthicalWeights& w) {
  return w.alpha * brute_fnr(d, tau) + w.beta * brute_fpr(d, tau) + w.gamma * brute_delta(d, tau);
}

/// Exhaustive scan over every candidate threshold: the minimum loss value.
inline double brute_min_loss(const ScoredDataset& d, const std::vector<double>& taus, const EthicalWeights& w) {
  double best = std::numeric_limits<double>::infinity();
  for (double t : taus) best = std::min(best, brute_loss(d, t, w));
  return best;
}

/// Quantile by linear scan: smallest candidate whose flag rate is at most C.
inline double brute_capacity_tau(const ScoredDataset& d, std::span<const double> taus, double c) {
  for (double t : taus) {
    if (brute_rate(d, t) <= c) return t;
  }
  return 1.0;
}

inline std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

/// Two-group calibrated population with random sizes and Beta shapes.
inline ScoredDataset random_population(std::mt19937_64& rng, std::size_t min_n = 40, std::size_t max_n = 400) {
  std::uniform_int_distribution<std::size_t> size(min_n / 2, max_n / 2);
  std::uniform_real_distribution<double> shape(0.5, 6.0);
  SyntheticSpec spec;
  spec.seed = rng();
  spec.groups = {{"A", size(rng), shape(rng), shape(rng)}, {"B", size(rng), shape(rng), shape(rng)}};
  return generate_synthetic(spec);
}

/// Small instance with coarse scores so ties are common.
inline ScoredDataset random_small(std::mt19937_64& rng, std::size_t max_n = 200) {
  std::uniform_int_distribution<std::size_t> size(1, max_n);
  std::uniform_int_distribution<int> tick(0, 20);
  std::uniform_int_distribution<int> groups(1, 3);
  std::bernoulli_distribution coin(0.5);
  const std::size_t n = size(rng);
  const int g = groups(rng);
  std::uniform_int_distribution<int> group(0, g - 1);
  std::vector<double> scores(n);
  std::vector<std::uint8_t> labels(n);
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = tick(rng) / 20.0;
    labels[i] = coin(rng) ? 1 : 0;
    names[i] = std::string(1, static_cast<char>('A' + group(rng)));
  }
  return ScoredDataset(std::move(scores), std::move(labels), names);
}

inline EthicalWeights random_weights(std::mt19937_64& rng, double hi = 4.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  return {u(rng), u(rng), u(rng)};
}

inline double random_capacity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double c = 0.0;
  while (c == 0.0) c = 1.0 - u(rng);  // (0, 1]
  return c;
}

}  // namespace capgate::testing
