#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "puda/datasets.hpp"
#include "puda/losses.hpp"
#include "puda/models.hpp"
#include "puda/objective.hpp"
#include "puda/optimizer.hpp"
#include "puda/selector.hpp"

namespace puda {

enum class Method { pu_da, source_only, nnpu_only };
std::string to_string(Method method);
Method method_from_string(const std::string& name);

enum class StoppingMode { fixed, patience };
std::string to_string(StoppingMode mode);
StoppingMode stopping_mode_from_string(const std::string& name);

struct TrainConfig {
  int warm_up = 20;
  int step1_max_epoch = 50;
  int step2_max_epoch = 30;
  int source_batch = 64;
  int positive_batch = 16;
  int unlabeled_batch = 64;
  int step2_batch = 64;
  OptimizerConfig optimizer;
  OptimizerConfig step2_optimizer;
  LossConfig loss;
  ExtractionConfig extraction;
  LabelMode label_mode = LabelMode::soft;
  StoppingMode stopping = StoppingMode::fixed;
  int patience = 5;
  double holdout_fraction = 0.1;
  // Use the scenario's class prior for pi instead of loss.pi.
  bool prior_from_scenario = true;
  std::uint64_t seed = 0;
  std::optional<ModelConfig> model;  // unset: default_model_config(shape)

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

ModelConfig resolve_model(const TrainConfig& config, const Shape& shape);
LossConfig resolve_loss(const TrainConfig& config, const ScenarioBundle& scenario);

// Independent generator streams derived from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Step1EpochTrace {
  int epoch = 0;
  Step1Terms mean_terms;
  double clamped_fraction = 0.0;
  double learning_rate = 0.0;
  std::size_t harvested = 0;
};

struct Step1Result {
  PuDaNetwork network;
  ModelConfig model;
  CandidateSet candidates;
  std::vector<Step1EpochTrace> trace;
  std::vector<Thresholds> thresholds;
  std::int64_t steps = 0;
};

// Trains (G, F, D) on the objective weighted for `method`. Thresholds and
// harvesting only run for pu_da; the baselines reuse the loop.
Step1Result run_step1(const ScenarioBundle& scenario, const TrainConfig& config);
Step1Result run_step1(const ScenarioBundle& scenario, const TrainConfig& config, Method method);

struct Step2EpochTrace {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;  // NaN without a holdout
};

struct Step2Result {
  FinalClassifier classifier;
  std::vector<Step2EpochTrace> trace;
  int epochs_run = 0;
  bool stopped_early = false;
};

// Trains C on the pseudo-labeled target examples only.
Step2Result run_step2(const PseudoLabeledSet& pseudo, const ScenarioBundle& scenario, const TrainConfig& config);

enum class RunStatus { success, degraded };
std::string to_string(RunStatus status);

struct RunArtifacts {
  Method method = Method::pu_da;
  RunStatus status = RunStatus::success;
  std::string status_reason;
  CandidateSet candidates;
  PseudoLabeledSet pseudo_labels;
  std::vector<Step1EpochTrace> step1_trace;
  std::vector<Thresholds> thresholds;
  std::vector<Step2EpochTrace> step2_trace;
  nlohmann::json manifest;
};

struct RunOutcome {
  std::unique_ptr<BinaryClassifier> classifier;
  RunArtifacts artifacts;
};

// Step 1, extraction, step 2. An empty extraction falls back to (G, F)
// from step 1 and marks the run degraded.
RunOutcome run_pu_da(const ScenarioBundle& scenario, const TrainConfig& config);
RunOutcome run_baseline(Method kind, const ScenarioBundle& scenario, const TrainConfig& config);
RunOutcome run_method(Method method, const ScenarioBundle& scenario, const TrainConfig& config);

// manifest.json, classifier.json, traces, and for pu_da candidates.csv
// and pseudo_labels.csv.
void write_run_artifacts(const std::filesystem::path& dir, const RunOutcome& outcome);

}  // namespace puda
