#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "puda/common.hpp"

namespace puda {

double accuracy(std::span<const int> predictions, std::span<const int> truths);
// (TPR + TNR) / 2 with label 1 as the positive class.
double balanced_accuracy(std::span<const int> predictions, std::span<const int> truths);

// p > 0.5 counts as positive.
std::vector<int> hard_predictions(const Vector& probabilities);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, n - 1
  int n = 0;
};

Aggregate aggregate(std::span<const double> values);

// Two-sided Welch t-test from summary statistics.
double significance(double mean_a, double std_a, int n_a, double mean_b, double std_b, int n_b);
double significance(const Aggregate& a, const Aggregate& b);

struct RunResult {
  std::string method;
  std::string scenario;
  double c = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  int n_eval = 0;
  std::string status = "success";  // success | degraded | failed

  bool operator==(const RunResult&) const = default;
};

struct CellKey {
  std::string scenario;
  double c = 0.0;

  auto operator<=>(const CellKey&) const = default;
};

struct MethodCell {
  Aggregate accuracy;
  Aggregate balanced_accuracy;
  int failed = 0;
};

// Per (scenario, c) cell: method -> aggregated stats and the points awarded.
struct BenchmarkTable {
  std::vector<std::string> methods;
  std::map<CellKey, std::map<std::string, MethodCell>> cells;
  std::map<CellKey, std::map<std::string, double>> cell_scores;
  std::map<std::string, double> summary;
  // Cells where some method had fewer than two successful runs.
  std::vector<std::string> gaps;
};

// Points for one (scenario, c) cell. The best mean and every method not
// significantly different from it (p >= alpha) get 1; if the best stands
// alone, the runner-up gets 0.5.
std::map<std::string, double> cell_scores(const std::map<std::string, Aggregate>& stats, double alpha = 0.05);

// Sums cell scores over all cells; every cell must have every method.
std::map<std::string, double> summary_score(const std::map<CellKey, std::map<std::string, Aggregate>>& cells,
                                            const std::vector<std::string>& methods, double alpha = 0.05);

// Aggregates raw runs by `metric` ("accuracy" | "balanced_accuracy") for scoring.
BenchmarkTable build_table(std::span<const RunResult> runs, const std::string& metric = "accuracy");

void write_results(const std::filesystem::path& file, std::span<const RunResult> runs);
std::vector<RunResult> read_results(const std::filesystem::path& file);

void write_table_csv(const std::filesystem::path& file, const BenchmarkTable& table);
std::string format_table(const BenchmarkTable& table);

}  // namespace puda
