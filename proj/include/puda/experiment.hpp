#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "puda/evaluation.hpp"
#include "puda/manifest.hpp"
#include "puda/pipeline.hpp"

namespace puda {

struct ExperimentConfig {
  std::filesystem::path scenario;  // scenario manifest
  std::vector<Method> methods;
  std::vector<double> c_values;
  std::vector<std::uint64_t> seeds;
  nlohmann::json train = nlohmann::json::object();  // TrainConfig overrides
  std::filesystem::path out;
  int jobs = 1;
  bool resume = false;

  void validate() const;
};

// Relative paths in the file resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

// PUDA_SEED_OFFSET, added to every run seed; 0 when unset.
std::uint64_t seed_offset_from_env();

// Overrides layered on top of `base` (nested objects merge key by key).
TrainConfig apply_overrides(const TrainConfig& base, const nlohmann::json& overrides);

struct CellSpec {
  ScenarioManifest manifest;
  std::filesystem::path manifest_dir;  // base for relative data paths
  Method method = Method::pu_da;
  double c = 0.05;
  std::uint64_t seed = 0;  // effective seed, offset already applied
  TrainConfig train;
};

// Cache key over (manifest, method, c, seed, train config).
std::string cell_hash(const CellSpec& cell);
std::filesystem::path cell_directory(const std::filesystem::path& out, const CellSpec& cell);

// Accuracy metrics of `classifier` on the scenario's evaluation set.
RunResult evaluate_run(const BinaryClassifier& classifier, const ScenarioBundle& scenario);

struct PseudoQuality {
  int epoch = 0;
  std::size_t extracted = 0;
  double precision = 0.0;  // NaN when nothing is extracted
  double recall = 0.0;
};

// Extraction applied to the records harvested up to each epoch, scored
// against true labels of the examples that were never revealed.
std::vector<PseudoQuality> pseudo_label_quality(const CandidateSet& candidates, const ExtractionConfig& config,
                                                const ScenarioBundle& scenario, int first_epoch, int last_epoch);

struct CellOutcome {
  RunResult result;
  bool cached = false;
  std::string error;
};

// Builds the scenario for (c, seed), trains, evaluates and writes the run
// directory. A finished directory with a matching hash is reused when
// `resume` is set. Failures are reported in the outcome, not thrown.
CellOutcome execute_cell(const CellSpec& cell, const std::filesystem::path& dir, bool resume);

struct BenchmarkOutput {
  std::vector<RunResult> results;
  BenchmarkTable table;
  int computed = 0;
  int cached = 0;
  int failed = 0;
};

// Runs every (method, c, seed) cell, then writes results.csv, table.csv
// and table.txt under config.out.
BenchmarkOutput run_benchmark(const ExperimentConfig& config);

// Re-aggregates <dir>/results.csv into table files; a pure function of it.
BenchmarkTable aggregate_results(const std::filesystem::path& benchmark_dir);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> error;  // optional, same length as y
};

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

// Accuracy-vs-c and pseudo-label precision/recall-vs-epoch plots plus a
// summary text. Returns the written files.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& benchmark_dir,
                                                const std::filesystem::path& report_dir);

}  // namespace puda
