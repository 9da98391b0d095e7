#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "capgate/core.hpp"
#include "support.hpp"

using namespace capgate;
using capgate::testing::as_vector;

TEST_SUITE("core") {

TEST_CASE("decision rule is inclusive at the threshold") {
  CHECK(decision_rule(0.7, 0.5));
  CHECK(decision_rule(0.5, 0.5));
  CHECK_FALSE(decision_rule(0.49, 0.5));
  static_assert(decision_rule(1.0, 1.0));
}

TEST_CASE("decision rule is monotone in the score") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng), b = u(rng), t = u(rng);
    if (a < b) std::swap(a, b);
    CHECK(decision_rule(a, t) >= decision_rule(b, t));
  }
}

TEST_CASE("default grid unrolls small cases") {
  const ScoredDataset d({0.2, 0.4}, {0, 1}, std::vector<std::string>{"A", "A"});
  CHECK(as_vector(default_grid(d, 0.5).values()) == std::vector<double>{0, 0.2, 0.4, 0.5, 1});

  const ScoredDataset one({0.5}, {1}, std::vector<std::string>{"A"});
  CHECK(as_vector(default_grid(one, 1.0).values()) == std::vector<double>{0, 0.5, 1});
}

TEST_CASE("default grid size matches a set-union count") {
  const ScoredDataset off({0.1234, 0.3333, 0.9876}, {0, 1, 1}, std::vector<std::string>{"A", "B", "A"});
  CHECK(default_grid(off).size() == 1004);

  // Ladder points are k/1000, so decimal scores with three places coincide.
  const ScoredDataset on({0.1, 0.3, 0.9}, {0, 1, 1}, std::vector<std::string>{"A", "B", "A"});
  CHECK(default_grid(on).size() == 1001);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(30);
    for (auto& s : scores) s = std::round(u(rng) * 4000.0) / 4000.0;
    const ScoredDataset d(scores, std::vector<std::uint8_t>(scores.size(), 0),
                          std::vector<std::string>(scores.size(), "A"));
    std::set<double> oracle;
    for (int k = 0; k <= 1000; ++k) oracle.insert(k / 1000.0);
    oracle.insert(scores.begin(), scores.end());
    const auto g = default_grid(d);
    CHECK(g.size() == oracle.size());
    CHECK(as_vector(g.values()) == std::vector<double>(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("default grid contains every unique score") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = capgate::testing::random_population(rng);
    const auto g = default_grid(d);
    for (double s : d.scores()) CHECK(g.index_of(s).has_value());
    CHECK(g[0] == 0.0);
    CHECK(g[g.size() - 1] == 1.0);
  }
}

TEST_CASE("default grid rejects bad steps") {
  const auto d = capgate::testing::four_point();
  CHECK_THROWS_AS(default_grid(d, 0.0), Error);
  CHECK_THROWS_AS(default_grid(d, 1.5), Error);
}

TEST_CASE("threshold grid invariants") {
  CHECK_NOTHROW(ThresholdGrid({0.0, 1.0}));
  CHECK_THROWS_AS(ThresholdGrid({0.1, 1.0}), Error);
  CHECK_THROWS_AS(ThresholdGrid({0.0, 0.9}), Error);
  CHECK_THROWS_AS(ThresholdGrid({0.0, 0.5, 0.5, 1.0}), Error);
  CHECK_THROWS_AS(ThresholdGrid({0.0, 0.6, 0.5, 1.0}), Error);
}

TEST_CASE("scored dataset validation") {
  using V = std::vector<std::string>;
  CHECK_THROWS_WITH_AS(ScoredDataset({}, {}, V{}), "empty dataset", Error);
  CHECK_THROWS_AS(ScoredDataset({1.3}, {1}, V{"A"}), Error);
  CHECK_THROWS_AS(ScoredDataset({-0.1}, {1}, V{"A"}), Error);
  CHECK_THROWS_AS(ScoredDataset({std::nan("")}, {1}, V{"A"}), Error);
  CHECK_THROWS_AS(ScoredDataset({0.5}, {2}, V{"A"}), Error);
  CHECK_THROWS_AS(ScoredDataset({0.5, 0.6}, {1}, V{"A", "B"}), Error);
  try {
    ScoredDataset({0.2, 1.3}, {0, 1}, V{"A", "A"});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Range);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("scored dataset indexes groups and counts") {
  const auto d = capgate::testing::four_point();
  CHECK(d.size() == 4);
  CHECK(d.num_groups() == 2);
  CHECK(d.positives() == 2);
  CHECK(d.negatives() == 2);
  CHECK(d.group_of(1) == "B");
  CHECK(d.count_at_or_above(0.6) == 2);
  CHECK(d.count_at_or_above(0.61) == 1);
  CHECK(d.count_at_or_above(0.0) == 4);
  CHECK(d.count_at_or_above(1.0) == 0);
  const auto order = d.order_desc();
  CHECK(std::vector<std::uint32_t>(order.begin(), order.end()) == std::vector<std::uint32_t>{3, 2, 1, 0});
  const std::uint32_t idx[] = {0, 2};
  const auto sub = d.subset(idx);
  CHECK(sub.size() == 2);
  CHECK(sub.num_groups() == 2);
  CHECK(sub.group_sizes()[1] == 0);
}

TEST_CASE("weights and capacity validation") {
  CHECK_NOTHROW((EthicalWeights{0, 0, 0}.validate()));
  CHECK_THROWS_AS((EthicalWeights{-1, 0, 0}.validate()), Error);
  CHECK_THROWS_AS((EthicalWeights{1, INFINITY, 0}.validate()), Error);
  CHECK_THROWS_WITH(Capacity(0.0), "capacity must be in (0,1]");
  CHECK_THROWS_AS(Capacity(1.0001), Error);
  CHECK(Capacity(1.0).value() == 1.0);
}

TEST_CASE("policy ids round-trip") {
  for (auto id : kAllPolicies) CHECK(parse_policy_id(to_string(id)) == id);
  CHECK(std::size(kAllPolicies) == 9);
  CHECK_THROWS_WITH(parse_policy_id("oracle"), "unknown policy id: oracle");
}

}
