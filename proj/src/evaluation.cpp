#include "capgate/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "capgate/metrics.hpp"
#include "capgate/optimizer.hpp"

namespace capgate {

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count && !failed.load();) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

BootstrapSummary summarize_sample(std::string metric, std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
  BootstrapSummary s;
  s.metric = std::move(metric);
  s.n_resamples = values.size();
  // Shifted by the first value so a constant sample has exactly zero spread.
  const double anchor = values.front();
  double shift = 0.0;
  for (double v : values) shift += v - anchor;
  s.mean = anchor + shift / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  std::sort(values.begin(), values.end());
  s.ci_low = percentile(values, 0.025);
  s.ci_high = percentile(values, 0.975);
  return s;
}

std::map<std::string, BootstrapSummary> bootstrap(const ScoredDataset& dataset, double tau,
                                                  std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "bootstrap needs n >= 1");
  const std::size_t rows = dataset.size();
  const auto scores = dataset.scores();
  const auto labels = dataset.labels();
  const auto codes = dataset.group_codes();
  std::vector<std::uint8_t> flagged(rows);
  for (std::size_t i = 0; i < rows; ++i) flagged[i] = decision_rule(scores[i], tau) ? 1 : 0;

  std::vector<double> recall(n), efficiency(n), disparity_v(n), rate(n);
  std::vector<std::size_t> group_pos(dataset.num_groups()), group_tp(dataset.num_groups());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> draw(0, rows - 1);
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::fill(group_pos.begin(), group_pos.end(), 0);
    std::fill(group_tp.begin(), group_tp.end(), 0);
    for (std::size_t k = 0; k < rows; ++k) {
      const auto i = draw(rng);
      if (labels[i] == 1) {
        ++group_pos[codes[i]];
        if (flagged[i]) {
          ++tp;
          ++group_tp[codes[i]];
        } else {
          ++fn;
        }
      } else {
        flagged[i] ? ++fp : ++tn;
      }
    }
    const auto c = rates_from_counts(tp, fp, fn, tn);
    recall[b] = c.recall;
    efficiency[b] = 1.0 - c.fpr;
    disparity_v[b] = tpr_disparity(group_tp, group_pos);
    rate[b] = c.intervention_rate;
  }

  std::map<std::string, BootstrapSummary> out;
  out["recall"] = summarize_sample("recall", std::move(recall));
  out["efficiency"] = summarize_sample("efficiency", std::move(efficiency));
  out["disparity"] = summarize_sample("disparity", std::move(disparity_v));
  out["intervention_rate"] = summarize_sample("intervention_rate", std::move(rate));
  return out;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t cell_index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(cell_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<SweepRecord> factorial_sweep(std::span<const SweepInput> inputs, const SweepOptions& options) {
  const auto& w = options.weights;
  if (w.alphas.empty() || w.betas.empty() || w.gammas.empty()) {
    throw Error(ErrorKind::InvalidArgument, "weight grids must be non-empty");
  }
  if (options.capacities.empty()) throw Error(ErrorKind::InvalidArgument, "capacity list must be non-empty");
  for (double a : w.alphas) for (double b : w.betas) for (double g : w.gammas) EthicalWeights{a, b, g}.validate();
  std::vector<Capacity> capacities;
  for (double c : options.capacities) capacities.emplace_back(c);

  // Calibration grid and metric curve depend only on the input, not on weights.
  struct Prepared {
    ThresholdGrid grid;
    LossCurve curve;
  };
  std::vector<Prepared> prepared;
  for (const auto& in : inputs) {
    auto grid = default_grid(in.validation, options.grid_step);
    auto curve = loss_curve(in.validation, grid, EthicalWeights{});
    prepared.push_back({std::move(grid), std::move(curve)});
  }

  const std::size_t per_capacity = w.cells();
  const std::size_t per_input = per_capacity * capacities.size();
  std::vector<SweepRecord> records(per_input * inputs.size());

  parallel_for(records.size(), options.threads, [&](std::size_t cell) {
    const std::size_t in_idx = cell / per_input;
    std::size_t rest = cell % per_input;
    const std::size_t c_idx = rest / per_capacity;
    rest %= per_capacity;
    const std::size_t a_idx = rest / (w.betas.size() * w.gammas.size());
    rest %= w.betas.size() * w.gammas.size();
    const std::size_t b_idx = rest / w.gammas.size();
    const std::size_t g_idx = rest % w.gammas.size();

    const auto& in = inputs[in_idx];
    const auto& prep = prepared[in_idx];
    const EthicalWeights weights{w.alphas[a_idx], w.betas[b_idx], w.gammas[g_idx]};
    const auto cap = capacities[c_idx];
    const auto decision = deploy(reweight(prep.curve, weights), in.validation, prep.grid, cap);

    const auto conf = confusion(in.test, decision.tau_star);
    const auto disp = disparity(in.test, decision.tau_star);

    SweepRecord r;
    r.dataset = in.dataset_id;
    r.scorer = in.scorer_id;
    r.alpha = weights.alpha;
    r.beta = weights.beta;
    r.gamma = weights.gamma;
    r.capacity = cap.value();
    r.tau_free = decision.tau_free;
    r.tau_capacity = decision.tau_capacity;
    r.tau_star = decision.tau_star;
    r.constraint_active = decision.constraint_active;
    r.recall = conf.recall;
    r.fpr = conf.fpr;
    r.disparity = disp.delta;
    r.intervention_rate = conf.intervention_rate;
    r.loss = combine_loss(weights, conf.fnr, conf.fpr, disp.delta);
    r.critical_capacity = decision.critical_capacity;
    r.capacity_infeasible = decision.capacity_infeasible;
    if (options.n_boot > 0) {
      r.bootstrap = bootstrap(in.test, decision.tau_star, options.n_boot, cell_seed(options.seed, cell));
    }
    records[cell] = std::move(r);
  });
  return records;
}

std::vector<SweepRecord> capacity_ablation(std::span<const SweepInput> inputs, SweepOptions options,
                                           std::span<const double> capacities) {
  options.capacities.assign(capacities.begin(), capacities.end());
  return factorial_sweep(inputs, options);
}

double activation_rate(std::span<const SweepRecord> records) {
  if (records.empty()) throw Error(ErrorKind::InvalidArgument, "activation rate of an empty record list");
  const auto active = std::count_if(records.begin(), records.end(),
                                    [](const SweepRecord& r) { return r.constraint_active; });
  return static_cast<double>(active) / static_cast<double>(records.size());
}

std::vector<CapacitySummary> summarize_by_capacity(std::span<const SweepRecord> records) {
  std::map<double, std::vector<const SweepRecord*>> by_c;
  for (const auto& r : records) by_c[r.capacity].push_back(&r);
  std::vector<CapacitySummary> out;
  for (const auto& [c, rs] : by_c) {
    CapacitySummary s;
    s.capacity = c;
    s.records = rs.size();
    std::size_t active = 0;
    for (const auto* r : rs) {
      s.mean_recall += r->recall / static_cast<double>(rs.size());
      s.mean_disparity += r->disparity / static_cast<double>(rs.size());
      active += r->constraint_active ? 1 : 0;
    }
    s.activation_rate = static_cast<double>(active) / static_cast<double>(rs.size());
    out.push_back(s);
  }
  return out;
}

}  // namespace capgate
