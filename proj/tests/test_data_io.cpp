#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "capgate/data_io.hpp"
#include "support.hpp"

using namespace capgate;
namespace t = capgate::testing;

namespace {

ScoredDataset parse(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return read_csv(in, warnings);
}

ErrorKind kind_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Runtime;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("capgate_test_" + name);
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("csv parses the minimal file") {
  const auto d = parse("score,label,group\n0.7,1,A\n0.2,0,B");
  CHECK(d.size() == 2);
  CHECK(d.scores()[0] == 0.7);
  CHECK(d.labels()[1] == 0);
  CHECK(d.group_of(1) == "B");
}

TEST_CASE("csv errors carry their kind and row") {
  CHECK(kind_of("score,label\n0.5,1\n") == ErrorKind::Schema);
  CHECK(kind_of("score,label,group\n1.3,1,A\n") == ErrorKind::Range);
  CHECK(kind_of("score,label,group\n0.3,2,A\n") == ErrorKind::Label);
  CHECK(kind_of("score,label,group\nabc,1,A\n") == ErrorKind::Range);
  CHECK(kind_of("") == ErrorKind::Schema);
  CHECK_THROWS_WITH(parse("score,label,group\n1.3,1,A\n"), doctest::Contains("row 1"));
  CHECK_THROWS_WITH(parse("score,label,group\n0.2,0,A\n0.3,yes,A\n"), doctest::Contains("label error"));
  CHECK_THROWS_WITH(parse("score,label\n0.5,1\n"), doctest::Contains("schema error"));
}

TEST_CASE("csv tolerates column order, CRLF, quotes and extra columns") {
  std::vector<std::string> warnings;
  const auto d = parse("\xEF\xBB\xBFid,group,label,score\r\n1,\"x, y\",1,0.25\r\n2,z,0,1\r\n", &warnings);
  CHECK(d.size() == 2);
  CHECK(d.group_of(0) == "x, y");
  CHECK(d.scores()[1] == 1.0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("missing file is not found") {
  try {
    load_csv("/nonexistent/capgate.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotFound);
    CHECK(std::string(e.what()).find("file not found") != std::string::npos);
  }
}

TEST_CASE("10k rows round-trip through save and load") {
  const auto d = generate_synthetic({{{"A", 5000, 2, 5}, {"B", 5000, 1.5, 1.5}}, 60});
  const auto path = temp_path("roundtrip.csv");
  save_csv(path, d);
  const auto back = load_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.scores()[i] == d.scores()[i]);
    CHECK(back.labels()[i] == d.labels()[i]);
    CHECK(back.group_of(i) == d.group_of(i));
  }
}

TEST_CASE("format double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.601) == "0.601");
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("balanced 100 rows split 50/20/30 exactly") {
  // Two strata of 50, each divisible by the fractions.
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  std::vector<std::string> g;
  for (int i = 0; i < 100; ++i) {
    s.push_back(i / 100.0);
    l.push_back(i % 2);
    g.push_back("A");
  }
  const ScoredDataset d(s, l, g);
  const auto sp = stratified_split(d);
  CHECK(sp.train.size() == 50);
  CHECK(sp.validation.size() == 20);
  CHECK(sp.test.size() == 30);
  CHECK(sp.seed == 42);
  CHECK(sp.warnings.empty());
}

TEST_CASE("per-stratum rounding drifts by at most one row per stratum") {
  // Four strata of 25: each rounds 12.5/5/7.5 on its own.
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  std::vector<std::string> g;
  for (int i = 0; i < 100; ++i) {
    s.push_back(i / 100.0);
    l.push_back(i % 2);
    g.push_back(i % 4 < 2 ? "A" : "B");
  }
  const auto sp = stratified_split(ScoredDataset(s, l, g));
  CHECK(sp.train.size() + sp.validation.size() + sp.test.size() == 100);
  CHECK(sp.validation.size() == 20);
  CHECK(std::abs(static_cast<int>(sp.train.size()) - 50) <= 4);
  CHECK(std::abs(static_cast<int>(sp.test.size()) - 30) <= 4);
}

TEST_CASE("split is a deterministic stratified partition") {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = t::random_small(rng, 400);
    if (d.size() < 50) continue;
    const auto a = stratified_split(d, kDefaultSplitFractions, trial);
    const auto b = stratified_split(d, kDefaultSplitFractions, trial);
    CHECK(a.indices == b.indices);

    std::multiset<std::uint32_t> all;
    for (const auto& idx : a.indices) all.insert(idx.begin(), idx.end());
    CHECK(all.size() == d.size());
    CHECK(std::set<std::uint32_t>(all.begin(), all.end()).size() == d.size());

    // Per (label, group) stratum: each slice within one row of its target.
    std::map<std::pair<int, std::uint32_t>, std::array<std::size_t, 3>> counts;
    for (int slice = 0; slice < 3; ++slice) {
      for (auto i : a.indices[slice]) ++counts[{d.labels()[i], d.group_codes()[i]}][slice];
    }
    for (const auto& [key, c] : counts) {
      const double total = static_cast<double>(c[0] + c[1] + c[2]);
      for (int slice = 0; slice < 3; ++slice) {
        CHECK(std::abs(static_cast<double>(c[slice]) - kDefaultSplitFractions[slice] * total) < 1.0 + 1e-9);
      }
    }
    CHECK(a.validation.size() == a.indices[1].size());
    for (std::size_t k = 0; k < a.test.size(); ++k) {
      CHECK(a.test.scores()[k] == d.scores()[a.indices[2][k]]);
    }
  }
}

TEST_CASE("tiny strata land in train with a warning") {
  const ScoredDataset d({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99},
                        {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, std::vector<std::string>(11, "A"));
  const auto sp = stratified_split(d);
  CHECK_FALSE(sp.warnings.empty());
  CHECK(sp.train.positives() == 1);
}

TEST_CASE("split validates fractions") {
  const auto d = t::four_point();
  CHECK_THROWS_AS(stratified_split(d, {0.5, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(stratified_split(d, {1.0, 0.0, 0.0}), Error);
}

TEST_CASE("synthetic base rates follow the Beta mean") {
  const auto uniform = generate_synthetic({{{"A", 10000, 1, 1}}, 63});
  const double se = std::sqrt(0.25 / 10000);
  CHECK(std::abs(static_cast<double>(uniform.positives()) / 10000 - 0.5) < 3 * se);

  const auto skewed = generate_synthetic({{{"A", 10000, 2, 8}}, 64});
  const double se2 = std::sqrt(0.2 * 0.8 / 10000);
  CHECK(std::abs(static_cast<double>(skewed.positives()) / 10000 - 0.2) < 3 * se2);

  const auto one = generate_synthetic({{{"A", 1, 2, 2}}, 65});
  CHECK(one.size() == 1);

  CHECK_THROWS_AS(generate_synthetic({{{"A", 0, 2, 2}}, 1}), Error);
  CHECK_THROWS_AS(generate_synthetic({{{"A", 5, 0, 2}}, 1}), Error);
}

TEST_CASE("synthetic populations are calibrated per decile") {
  const auto d = generate_synthetic({{{"A", 10000, 2, 3}, {"B", 10000, 1, 1}}, 66});
  std::array<double, 10> sum_score{}, sum_label{};
  std::array<std::size_t, 10> n{};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(d.scores()[i] * 10));
    sum_score[bin] += d.scores()[i];
    sum_label[bin] += d.labels()[i];
    ++n[bin];
  }
  for (int b = 0; b < 10; ++b) {
    if (n[b] < 30) continue;
    const double p = sum_score[b] / n[b];
    const double se = std::sqrt(p * (1 - p) / n[b]);
    CHECK(std::abs(sum_label[b] / n[b] - p) <= 3 * se + 1e-12);
  }
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const SyntheticSpec spec{{{"A", 100, 2, 2}, {"B", 50, 3, 1}}, 67};
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(std::equal(a.scores().begin(), a.scores().end(), b.scores().begin()));
  CHECK(std::equal(a.labels().begin(), a.labels().end(), b.labels().begin()));
}

TEST_CASE("logistic gradient matches central differences") {
  std::mt19937_64 rng(68);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMatrix x{15, 3, {}};
    std::vector<std::uint8_t> y(x.rows);
    for (std::size_t i = 0; i < x.rows * x.cols; ++i) x.values.push_back(z(rng));
    for (auto& v : y) v = z(rng) > 0;
    std::vector<double> w{z(rng), z(rng), z(rng)};
    const double bias = z(rng);
    const auto g = logistic_gradient(x, y, w, bias);
    REQUIRE(g.size() == 4);
    const double h = 1e-6;
    for (std::size_t k = 0; k < 4; ++k) {
      auto wp = w, wm = w;
      double bp = bias, bm = bias;
      if (k < 3) {
        wp[k] += h;
        wm[k] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (logistic_objective(x, y, wp, bp) - logistic_objective(x, y, wm, bm)) / (2 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
    }
  }
}

TEST_CASE("logistic scorer separates a separable toy set") {
  FeatureMatrix x{200, 2, {}};
  std::vector<std::uint8_t> y;
  std::mt19937_64 rng(69);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double a = u(rng), b = u(rng);
    x.values.push_back(a * 5 + 10);
    x.values.push_back(b * 0.01);
    y.push_back(a + b > 0);
  }
  const auto s = demo_logistic_scorer(x, y);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    CHECK(s[i] > 0.0);
    CHECK(s[i] < 1.0);
    correct += (s[i] >= 0.5) == (y[i] == 1);
  }
  CHECK(static_cast<double>(correct) / x.rows >= 0.95);

  LogisticFitOptions none;
  none.iterations = 0;
  for (double v : demo_logistic_scorer(x, y, none)) CHECK(v == 0.5);

  LogisticFitOptions mini;
  mini.batch_size = 16;
  CHECK(demo_logistic_scorer(x, y, mini) == demo_logistic_scorer(x, y, mini));
}

TEST_CASE("logistic scorer rejects non-finite features") {
  FeatureMatrix x{2, 1, {1.0, NAN}};
  const std::vector<std::uint8_t> y{0, 1};
  CHECK_THROWS_AS(demo_logistic_scorer(x, y), Error);
}

TEST_CASE("standardize gives zero mean and unit variance") {
  FeatureMatrix x{4, 2, {1, 5, 2, 5, 3, 5, 4, 5}};
  std::vector<double> mean, scale;
  const auto s = standardize(x, &mean, &scale);
  CHECK(mean[0] == 2.5);
  CHECK(scale[1] == 1.0);
  double m = 0, v = 0;
  for (std::size_t i = 0; i < 4; ++i) m += s.row(i)[0];
  for (std::size_t i = 0; i < 4; ++i) v += s.row(i)[0] * s.row(i)[0];
  CHECK(m == doctest::Approx(0.0));
  CHECK(v / 4 == doctest::Approx(1.0));
}

}
