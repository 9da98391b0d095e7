#include "doctest.h"

#include <random>

#include "capgate/metrics.hpp"
#include "support.hpp"

using namespace capgate;
namespace t = capgate::testing;

TEST_SUITE("metrics") {

TEST_CASE("confusion on a two-point set") {
  const ScoredDataset d({0.2, 0.8}, {0, 1}, std::vector<std::string>{"A", "A"});
  const auto c = confusion(d, 0.5);
  CHECK(c.tp == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.tn == 1);
  CHECK(c.fnr == 0.0);
  CHECK(c.fpr == 0.0);

  const auto high = confusion(d, 0.9);
  CHECK(high.fnr == 1.0);
  CHECK(high.fpr == 0.0);
  CHECK(high.intervention_rate == 0.0);
}

TEST_CASE("confusion matches row-by-row counting") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = t::random_small(rng, 20);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double tau = trial == 0 ? 0.5 : u(rng);
    const auto c = confusion(d, tau);
    const auto o = t::brute_counts(d, tau);
    CHECK(c.tp == o.tp);
    CHECK(c.fp == o.fp);
    CHECK(c.fn == o.fn);
    CHECK(c.tn == o.tn);
    CHECK(c.total() == d.size());
    CHECK(c.fnr == t::brute_fnr(d, tau));
    CHECK(c.fpr == t::brute_fpr(d, tau));
    CHECK(c.intervention_rate == t::brute_rate(d, tau));
    if (d.positives() > 0) CHECK(c.recall == 1.0 - c.fnr);
  }
}

TEST_CASE("degenerate denominators resolve to zero") {
  const ScoredDataset neg({0.3, 0.7}, {0, 0}, std::vector<std::string>{"A", "A"});
  CHECK(confusion(neg, 0.5).fnr == 0.0);
  const ScoredDataset pos({0.3, 0.7}, {1, 1}, std::vector<std::string>{"A", "A"});
  CHECK(confusion(pos, 0.5).fpr == 0.0);
}

TEST_CASE("disparity on a hand-countable set") {
  const ScoredDataset d({0.9, 0.2, 0.8, 0.7}, {1, 1, 1, 0}, std::vector<std::string>{"A", "A", "B", "B"});
  const auto r = disparity(d, 0.5);
  REQUIRE(r.per_group_tpr.size() == 2);
  CHECK(r.per_group_tpr[0].group == "A");
  CHECK(*r.per_group_tpr[0].tpr == 0.5);
  CHECK(*r.per_group_tpr[1].tpr == 1.0);
  CHECK(r.delta == 0.5);
  CHECK(r.groups_excluded.empty());
  CHECK(disparity(d, 0.0).delta == 0.0);
}

TEST_CASE("disparity excludes groups without positives") {
  const ScoredDataset d({0.9, 0.2, 0.8}, {1, 0, 0}, std::vector<std::string>{"A", "A", "B"});
  const auto r = disparity(d, 0.5);
  CHECK(r.delta == 0.0);
  REQUIRE(r.groups_excluded.size() == 1);
  CHECK(r.groups_excluded[0] == "B");
  CHECK_FALSE(r.per_group_tpr[1].tpr.has_value());

  const ScoredDataset single({0.9, 0.2}, {1, 1}, std::vector<std::string>{"A", "A"});
  CHECK(disparity(single, 0.5).delta == 0.0);
}

TEST_CASE("disparity matches the pairwise oracle with three groups") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = t::random_small(rng, 60);
    const double tau = u(rng);
    CHECK(disparity(d, tau).delta == doctest::Approx(t::brute_delta(d, tau)).epsilon(1e-15));
  }
}

TEST_CASE("ethical loss on the four-point set") {
  const ScoredDataset d({0.1, 0.4, 0.6, 0.9}, {0, 0, 1, 1}, std::vector<std::string>(4, "A"));
  const EthicalWeights w{1, 1, 0};
  CHECK(ethical_loss(d, 0.6, w) == 0.0);
  CHECK(ethical_loss(d, 0.0, w) == 1.0);
  CHECK(ethical_loss(d, 0.37, EthicalWeights{0, 0, 0}) == 0.0);
}

TEST_CASE("rates are monotone and the loss is bounded") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = t::random_small(rng);
    const auto w = t::random_weights(rng);
    double prev_fnr = -1, prev_fpr = 2, prev_rate = 2;
    for (int k = 0; k <= 40; ++k) {
      const double tau = k / 40.0;
      const auto c = confusion(d, tau);
      CHECK(c.fnr >= prev_fnr);
      CHECK(c.fpr <= prev_fpr);
      CHECK(c.intervention_rate <= prev_rate);
      prev_fnr = c.fnr;
      prev_fpr = c.fpr;
      prev_rate = c.intervention_rate;
      const double l = ethical_loss(d, tau, w);
      CHECK(l >= 0.0);
      CHECK(l <= w.alpha + w.beta + w.gamma + 1e-12);
      const EthicalWeights no_equity{w.alpha, w.beta, 0.0};
      CHECK(ethical_loss(d, tau, no_equity) == w.alpha * c.fnr + w.beta * c.fpr);
    }
  }
}

TEST_CASE("mask metrics agree with threshold metrics") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = t::random_small(rng);
    const double tau = (trial % 21) / 20.0;
    std::vector<std::uint8_t> mask(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) mask[i] = d.scores()[i] >= tau;
    const auto a = confusion(d, tau);
    const auto b = confusion(d, mask);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.intervention_rate == b.intervention_rate);
    CHECK(disparity(d, tau).delta == disparity(d, mask).delta);
  }
  const auto d = t::four_point();
  CHECK_THROWS_AS(confusion(d, std::vector<std::uint8_t>{1, 0}), Error);
}

TEST_CASE("rates from counts") {
  const auto r = rates_from_counts(3, 1, 1, 5);
  CHECK(r.fnr == 0.25);
  CHECK(r.fpr == 1.0 / 6.0);
  CHECK(r.recall == 0.75);
  CHECK(r.intervention_rate == 0.4);
}

}
