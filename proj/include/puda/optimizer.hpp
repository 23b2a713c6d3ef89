#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "puda/layers.hpp"

namespace puda {

struct OptimizerConfig {
  std::string method = "sgd";  // "sgd" (with momentum) | "adam"
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  std::string schedule = "none";  // "none" | "step"
  int step_size = 10;             // epochs between decays for "step"
  double gamma = 0.5;

  void validate() const;
};

nlohmann::json to_json(const OptimizerConfig& config);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

// Keeps per-parameter state by position, so it must always see the same
// parameter list in the same order.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  void step(const std::vector<Parameter*>& params);
  void set_epoch(int epoch);
  double learning_rate() const { return learning_rate_; }

 private:
  OptimizerConfig config_;
  double learning_rate_;
  long steps_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

}  // namespace puda
