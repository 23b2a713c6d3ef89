#pragma once

#include <vector>

#include "puda/losses.hpp"
#include "puda/models.hpp"

namespace puda {

// One optimizer step's worth of data and randomness. Any of the three
// pools may be empty when the corresponding terms are switched off.
struct Step1Batch {
  Matrix source_x;
  std::vector<int> source_y;
  Matrix positive_x;
  Matrix unlabeled_x;
  // Reparameterization noise, one row per example of each pool.
  Matrix source_noise;
  Matrix positive_noise;
  Matrix unlabeled_noise;
  // Prior draws z paired row-wise with `unlabeled_x` for D(z).
  Matrix prior;
};

// Per-term multipliers. from_config gives L_PU + a L_cls + b (L_S + L_T + L_SAFN).
struct ObjectiveWeights {
  double pu = 1.0;
  double cls = 1.0;
  double kl = 0.1;
  double reconstruction = 0.1;
  double safn = 0.1;

  static ObjectiveWeights from_config(const LossConfig& config);
  static ObjectiveWeights source_only();
  static ObjectiveWeights pu_only();
};

struct Step1Terms {
  double pu = 0.0;
  double cls = 0.0;
  double kl = 0.0;
  double reconstruction = 0.0;
  double safn = 0.0;
  double total = 0.0;
  bool pu_clamped = false;
};

// Evaluates the weighted step-1 objective on `batch`. SAFN compares the
// live network with `previous` on the source and unlabeled rows. With
// `accumulate_gradients`, parameter gradients of the total are added into
// the network (call zero_grad first).
Step1Terms evaluate_step1(PuDaNetwork& network, const ParameterSnapshot& previous, const Step1Batch& batch,
                          const LossConfig& config, const ObjectiveWeights& weights, bool accumulate_gradients);

// Pseudo-label cross-entropy through C; accumulates gradients on request.
double evaluate_step2(FinalClassifier& classifier, const Matrix& x, const Vector& labels, LabelMode mode,
                      double epsilon, bool accumulate_gradients);

}  // namespace puda
