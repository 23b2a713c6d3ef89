#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "puda/common.hpp"

namespace puda {

// l(x, 1) and l(x, 0) as functions of the positive-class probability p.
//   logistic: -log p,  -log(1 - p)
//   sigmoid:  1 - p,   p          (sigmoid loss of the logit margin)
enum class BaseLoss { logistic, sigmoid };

// What the non-negative correction does to the gradient once the implied
// negative risk goes below zero: `zero` follows the max(0, .) subgradient,
// `ascend` steps up the negative risk instead.
enum class ClampGradient { zero, ascend };

enum class LabelMode { soft, hard };

std::string to_string(BaseLoss loss);
BaseLoss base_loss_from_string(const std::string& name);
std::string to_string(ClampGradient mode);
ClampGradient clamp_gradient_from_string(const std::string& name);
std::string to_string(LabelMode mode);
LabelMode label_mode_from_string(const std::string& name);

struct LossConfig {
  double alpha = 1.0;
  double beta = 0.1;
  double delta = 1.0;
  double pi = 0.5;
  BaseLoss base_loss = BaseLoss::logistic;
  double epsilon = 1e-7;
  ClampGradient clamp_gradient = ClampGradient::zero;

  void validate() const;
};

nlohmann::json to_json(const LossConfig& config);
LossConfig loss_config_from_json(const nlohmann::json& j);

// Loss on a probability batch together with dL/dp.
struct ProbabilityLoss {
  double value = 0.0;
  Vector d_p;
};

struct KlLoss {
  double value = 0.0;
  Matrix d_mean;
  Matrix d_log_variance;
};

struct ReconstructionLoss {
  double value = 0.0;
  Matrix d_embeddings;
  Matrix d_prior;
};

struct SafnLoss {
  double value = 0.0;
  Vector d_current;  // no gradient flows to the previous-parameter norms
};

struct NnpuLoss {
  double value = 0.0;
  double positive_risk = 0.0;  // (pi / n_P) sum l(pos, 1)
  double negative_risk = 0.0;  // the bracket before clamping
  bool clamped = false;
  Vector d_p_positive;
  Vector d_p_unlabeled;
};

// Mean binary cross-entropy, -[y log p + (1 - y) log(1 - p)].
ProbabilityLoss source_ce_loss(const Vector& p, std::span<const int> y, double epsilon = 1e-7);

// Mean over the batch of KL(N(mean, exp(log_var)) || N(0, I)). An empty
// `log_variance` means unit variance.
KlLoss kl_prior_loss(const Matrix& mean, const Matrix& log_variance);

// Mean over rows of ||a_i - b_i||_1.
ReconstructionLoss target_reconstruction_loss(const Matrix& decoded_embeddings, const Matrix& decoded_prior);

// Root-mean-square over the batch of h_prev + delta - h_curr.
SafnLoss safn_loss(const Vector& h_previous, const Vector& h_current, double delta);

NnpuLoss nnpu_loss(const Vector& p_positive, const Vector& p_unlabeled, double pi, BaseLoss base_loss,
                   double epsilon = 1e-7, ClampGradient clamp_gradient = ClampGradient::zero);

double alignment_loss(double source, double target, double safn);

double total_step1_loss(double pu, double cls, double align, double alpha, double beta);

// Cross-entropy against pseudo-labels in [0, 1]. Hard mode thresholds the
// labels at 0.5 first.
ProbabilityLoss pseudo_label_ce_loss(const Vector& p, const Vector& y, double epsilon = 1e-7,
                                     LabelMode mode = LabelMode::soft);

// Binary entropy in nats.
double binary_entropy(double q);

}  // namespace puda
