#include "capgate/metrics.hpp"

#include <algorithm>
#include <limits>

namespace capgate {

namespace {

double ratio_or_zero(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct Tally {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::vector<std::size_t> group_flagged_pos;
};

template <typename Selected>
Tally tally(const ScoredDataset& d, Selected&& selected) {
  Tally t;
  t.group_flagged_pos.assign(d.num_groups(), 0);
  const auto labels = d.labels();
  const auto groups = d.group_codes();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool flag = selected(i);
    if (labels[i] == 1) {
      if (flag) {
        ++t.tp;
        ++t.group_flagged_pos[groups[i]];
      } else {
        ++t.fn;
      }
    } else {
      flag ? ++t.fp : ++t.tn;
    }
  }
  return t;
}

DisparityReport build_report(const ScoredDataset& d, std::span<const std::size_t> flagged_pos) {
  DisparityReport r;
  const auto pos = d.group_positives();
  for (std::size_t g = 0; g < d.num_groups(); ++g) {
    GroupTpr entry{d.group_names()[g], std::nullopt};
    if (pos[g] == 0) {
      r.groups_excluded.push_back(entry.group);
    } else {
      entry.tpr = ratio_or_zero(flagged_pos[g], pos[g]);
    }
    r.per_group_tpr.push_back(std::move(entry));
  }
  r.delta = tpr_disparity(flagged_pos, pos);
  return r;
}

void check_mask(const ScoredDataset& d, std::span<const std::uint8_t> selected) {
  if (selected.size() != d.size()) {
    throw Error(ErrorKind::InvalidArgument, "selection mask length differs from dataset size");
  }
}

}  // namespace

ConfusionRates rates_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  ConfusionRates c{tp, fp, fn, tn};
  c.fnr = ratio_or_zero(fn, tp + fn);
  c.fpr = ratio_or_zero(fp, fp + tn);
  c.recall = (tp + fn) == 0 ? 1.0 : 1.0 - c.fnr;
  c.intervention_rate = ratio_or_zero(tp + fp, tp + fp + fn + tn);
  return c;
}

double tpr_disparity(std::span<const std::size_t> flagged_positives,
                     std::span<const std::size_t> positives) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t included = 0;
  for (std::size_t g = 0; g < positives.size(); ++g) {
    if (positives[g] == 0) continue;
    const double tpr = ratio_or_zero(flagged_positives[g], positives[g]);
    lo = std::min(lo, tpr);
    hi = std::max(hi, tpr);
    ++included;
  }
  return included < 2 ? 0.0 : hi - lo;
}

ConfusionRates confusion(const ScoredDataset& dataset, double tau) {
  auto scores = dataset.scores();
  auto t = tally(dataset, [&](std::size_t i) { return decision_rule(scores[i], tau); });
  return rates_from_counts(t.tp, t.fp, t.fn, t.tn);
}

ConfusionRates confusion(const ScoredDataset& dataset, std::span<const std::uint8_t> selected) {
  check_mask(dataset, selected);
  auto t = tally(dataset, [&](std::size_t i) { return selected[i] != 0; });
  return rates_from_counts(t.tp, t.fp, t.fn, t.tn);
}

DisparityReport disparity(const ScoredDataset& dataset, double tau) {
  auto scores = dataset.scores();
  auto t = tally(dataset, [&](std::size_t i) { return decision_rule(scores[i], tau); });
  return build_report(dataset, t.group_flagged_pos);
}

DisparityReport disparity(const ScoredDataset& dataset, std::span<const std::uint8_t> selected) {
  check_mask(dataset, selected);
  auto t = tally(dataset, [&](std::size_t i) { return selected[i] != 0; });
  return build_report(dataset, t.group_flagged_pos);
}

double ethical_loss(const ScoredDataset& dataset, double tau, const EthicalWeights& weights) {
  weights.validate();
  const auto c = confusion(dataset, tau);
  const auto d = disparity(dataset, tau);
  return combine_loss(weights, c.fnr, c.fpr, d.delta);
}

}  // namespace capgate
