#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "puda/evaluation.hpp"
#include "references.hpp"
#include "support.hpp"

using namespace puda;
using namespace puda::testing;

namespace {

Aggregate tight(double mean) { return {mean, 0.001, 10}; }

RunResult run(const std::string& method, double c, std::uint64_t seed, double acc) {
  return {method, "toy", c, seed, acc, acc, 100, "success"};
}

}  // namespace

TEST(Metrics, Accuracy) {
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 0, 1}, std::vector<int>{1, 1, 1}), 2.0 / 3.0);
  EXPECT_THROW(accuracy(std::vector<int>{1}, std::vector<int>{1, 0}), std::invalid_argument);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::vector<int> p(1000), t(1000);
  int tally = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<int>(rng() % 2);
    t[i] = static_cast<int>(rng() % 2);
    tally += p[i] == t[i];
  }
  EXPECT_DOUBLE_EQ(accuracy(p, t), tally / 1000.0);
}

TEST(Metrics, BalancedAccuracy) {
  std::vector<int> truth(100, 0);
  std::fill(truth.begin(), truth.begin() + 10, 1);
  EXPECT_DOUBLE_EQ(balanced_accuracy(std::vector<int>(100, 1), truth), 0.5);
  EXPECT_DOUBLE_EQ(balanced_accuracy(truth, truth), 1.0);

  // TPR 8/10, TNR 6/10.
  std::vector<int> t(20), q(20);
  for (int i = 0; i < 20; ++i) {
    t[i] = i < 10;
    q[i] = i < 10 ? (i < 8) : (i >= 16);
  }
  EXPECT_NEAR(balanced_accuracy(q, t), 0.7, 1e-12);
  EXPECT_THROW(balanced_accuracy(std::vector<int>{1, 0}, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST(Metrics, BalancedEqualsPlainOnSymmetricBalancedCase) {
  const std::vector<int> t{1, 1, 1, 1, 0, 0, 0, 0};
  const std::vector<int> q{1, 1, 1, 0, 0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(balanced_accuracy(q, t), accuracy(q, t));
}

TEST(Metrics, PermutationInvariant) {
  std::mt19937_64 rng(2);
  std::vector<std::pair<int, int>> pairs(200);
  for (auto& [a, b] : pairs) {
    a = static_cast<int>(rng() % 2);
    b = static_cast<int>(rng() % 2);
  }
  const auto split = [](const auto& v) {
    std::vector<int> a, b;
    for (auto [x, y] : v) {
      a.push_back(x);
      b.push_back(y);
    }
    return std::pair{a, b};
  };
  const auto [p1, t1] = split(pairs);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto [p2, t2] = split(pairs);
  EXPECT_DOUBLE_EQ(accuracy(p1, t1), accuracy(p2, t2));
  EXPECT_DOUBLE_EQ(balanced_accuracy(p1, t1), balanced_accuracy(p2, t2));
}

TEST(Metrics, HardPredictionsUseStrictHalf) {
  Vector p(3);
  p << 0.5, 0.5000001, 0.2;
  EXPECT_EQ(hard_predictions(p), (std::vector<int>{0, 1, 0}));
}

TEST(Aggregate, SampleStatistics) {
  const Aggregate same = aggregate(std::vector<double>{0.7, 0.7, 0.7});
  EXPECT_EQ(same.std, 0.0);
  const Aggregate two = aggregate(std::vector<double>{0.9, 0.7});
  EXPECT_NEAR(two.mean, 0.8, 1e-15);
  EXPECT_NEAR(two.std, std::sqrt(0.02), 1e-12);
  EXPECT_THROW(aggregate(std::vector<double>{0.5}), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.8, 0.05);
  std::vector<double> xs(20);
  for (auto& x : xs) x = n(rng);
  long double sum = 0, sq = 0;
  for (double x : xs) sum += x;
  const long double mean = sum / 20;
  for (double x : xs) sq += (x - mean) * (x - mean);
  const Aggregate a = aggregate(xs);
  EXPECT_NEAR(a.mean, static_cast<double>(mean), 1e-12);
  EXPECT_NEAR(a.std, static_cast<double>(std::sqrt(sq / 19)), 1e-12);
  EXPECT_EQ(a.n, 20);
}

TEST(Significance, MatchesReferenceValues) {
  for (const auto& c : kWelch) {
    EXPECT_NEAR(significance(c.ma, c.sa, c.na, c.mb, c.sb, c.nb), c.p, 1e-6);
    EXPECT_NEAR(significance(c.mb, c.sb, c.nb, c.ma, c.sa, c.na), c.p, 1e-6);
  }
  // Raw samples through aggregate(); scipy.stats.ttest_ind(equal_var=False).
  const Aggregate a = aggregate(kWelchSampleA);
  const Aggregate b = aggregate(kWelchSampleB);
  EXPECT_NEAR(significance(a, b), kWelchSampleP, 1e-6);
}

TEST(Significance, TableCriticalValue) {
  // Equal n and std: Welch df = 2(n - 1) = 8, and t_{0.975, 8} = 2.306004.
  const double s = 1.0, n = 5;
  const double diff = kT975Df8 * std::sqrt(2.0 * s * s / n);
  EXPECT_NEAR(significance(diff, s, 5, 0.0, s, 5), 0.05, 1e-6);
}

TEST(Significance, EdgeCases) {
  EXPECT_EQ(significance(0.8, 0.0, 5, 0.8, 0.0, 5), 1.0);
  EXPECT_EQ(significance(0.8, 0.0, 5, 0.7, 0.0, 5), 0.0);
  EXPECT_EQ(significance(0.8, 0.1, 5, 0.8, 0.1, 5), 1.0);
  EXPECT_LT(significance(1.0, 0.1, 20, 0.0, 0.1, 20), 1e-6);
  EXPECT_THROW(significance(0.8, 0.1, 1, 0.7, 0.1, 5), std::invalid_argument);
  EXPECT_THROW(significance(0.8, -0.1, 5, 0.7, 0.1, 5), std::invalid_argument);
}

TEST(Scores, CellRules) {
  auto s = cell_scores({{"a", tight(0.9)}, {"b", tight(0.8)}});
  EXPECT_EQ(s["a"], 1.0);
  EXPECT_EQ(s["b"], 0.5);

  s = cell_scores({{"a", {0.9491, 0.01, 10}}, {"b", {0.9474, 0.01, 10}}});
  EXPECT_EQ(s["a"], 1.0);
  EXPECT_EQ(s["b"], 1.0);

  s = cell_scores({{"a", tight(0.9)}, {"b", tight(0.8)}, {"c", tight(0.7)}});
  EXPECT_EQ(s["a"], 1.0);
  EXPECT_EQ(s["b"], 0.5);
  EXPECT_EQ(s["c"], 0.0);

  // Two tied at the top: no extra half point for the third.
  s = cell_scores({{"a", {0.9, 0.01, 10}}, {"b", {0.899, 0.01, 10}}, {"c", tight(0.5)}});
  EXPECT_EQ(s["a"] + s["b"] + s["c"], 2.0);
}

TEST(Scores, CellTotalsAreAtLeastOne) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> m(0.6, 0.9), sd(0.0, 0.05);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, Aggregate> stats;
    for (const char* name : {"x", "y", "z"}) stats[name] = {m(rng), sd(rng), 5};
    double total = 0.0;
    for (const auto& [k, v] : cell_scores(stats)) {
      EXPECT_TRUE(v == 0.0 || v == 0.5 || v == 1.0);
      total += v;
    }
    EXPECT_GE(total, 1.0);
    EXPECT_EQ(std::fmod(total * 2.0, 1.0), 0.0);
  }
}

TEST(Scores, SummaryOverCells) {
  std::map<CellKey, std::map<std::string, Aggregate>> cells;
  cells[{"s", 0.05}] = {{"a", tight(0.9)}, {"b", tight(0.8)}};
  cells[{"s", 0.5}] = {{"a", tight(0.7)}, {"b", tight(0.8)}};
  const auto total = summary_score(cells, {"a", "b"});
  EXPECT_EQ(total.at("a"), 1.5);
  EXPECT_EQ(total.at("b"), 1.5);

  cells[{"t", 0.1}] = {{"a", tight(0.9)}};
  try {
    summary_score(cells, {"a", "b"});
    FAIL() << "missing cell accepted";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("[t c=0.1 b]"), std::string::npos) << e.what();
  }
}

TEST(Table, BuildsFromRunsAndIgnoresFailures) {
  std::vector<RunResult> runs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    runs.push_back(run("a", 0.05, s, 0.90 + 0.001 * s));
    runs.push_back(run("b", 0.05, s, 0.80 + 0.001 * s));
  }
  RunResult failed = run("b", 0.05, 9, 0.0);
  failed.status = "failed";
  runs.push_back(failed);
  runs.push_back(run("a", 0.5, 0, 0.9));
  const BenchmarkTable t = build_table(runs);
  EXPECT_EQ(t.methods, (std::vector<std::string>{"a", "b"}));
  const auto& cell = t.cells.at({"toy", 0.05});
  EXPECT_EQ(cell.at("b").accuracy.n, 3);
  EXPECT_EQ(cell.at("b").failed, 1);
  EXPECT_EQ(t.cell_scores.at({"toy", 0.05}).at("a"), 1.0);
  EXPECT_EQ(t.summary.at("b"), 0.5);
  ASSERT_EQ(t.gaps.size(), 1u);
  const std::string text = format_table(t);
  EXPECT_NE(text.find("90.10 +- 0.10 *"), std::string::npos) << text;

  std::vector<RunResult> shuffled = runs;
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_EQ(format_table(build_table(shuffled)), text);
}

TEST(Table, ResultsCsvRoundTrip) {
  TempDir dir("results");
  std::vector<RunResult> runs{run("pu_da", 0.05, 0, 0.1 + 0.2), run("nnpu_only", 1.0, 7, 2.0 / 3.0)};
  runs[1].status = "degraded";
  write_results(dir.path() / "r.csv", runs);
  EXPECT_EQ(read_results(dir.path() / "r.csv"), runs);
  write_table_csv(dir.path() / "t.csv", build_table(runs));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "t.csv"));
}
