#include "puda/optimizer.hpp"

#include <cmath>

namespace puda {

void OptimizerConfig::validate() const {
  if (method != "sgd" && method != "adam") throw ConfigError("unknown optimizer: " + method);
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (schedule != "none" && schedule != "step") throw ConfigError("unknown schedule: " + schedule);
  if (schedule == "step" && (step_size < 1 || !(gamma > 0.0))) throw ConfigError("invalid step schedule");
}

nlohmann::json to_json(const OptimizerConfig& c) {
  return {{"method", c.method},       {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"beta1", c.beta1},         {"beta2", c.beta2},                 {"adam_epsilon", c.adam_epsilon},
          {"weight_decay", c.weight_decay}, {"schedule", c.schedule},     {"step_size", c.step_size},
          {"gamma", c.gamma}};
}

OptimizerConfig optimizer_config_from_json(const nlohmann::json& j) {
  OptimizerConfig c;
  c.method = j.value("method", c.method);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.schedule = j.value("schedule", c.schedule);
  c.step_size = j.value("step_size", c.step_size);
  c.gamma = j.value("gamma", c.gamma);
  return c;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(std::move(config)), learning_rate_(config_.learning_rate) {
  config_.validate();
}

void Optimizer::set_epoch(int epoch) {
  if (config_.schedule == "step") {
    learning_rate_ = config_.learning_rate * std::pow(config_.gamma, (epoch - 1) / config_.step_size);
  }
}

void Optimizer::step(const std::vector<Parameter*>& params) {
  if (first_.empty()) {
    for (const auto* p : params) {
      first_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      if (config_.method == "adam") second_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (first_.size() != params.size()) throw ConfigError("optimizer parameter list changed between steps");
  ++steps_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    Matrix g = p.grad;
    if (config_.weight_decay > 0.0) g += config_.weight_decay * p.value;
    if (config_.method == "sgd") {
      first_[i] = config_.momentum * first_[i] + g;
      p.value -= learning_rate_ * first_[i];
    } else {
      first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
      second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
      p.value.array() -=
          learning_rate_ * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + config_.adam_epsilon);
    }
  }
}

}  // namespace puda
