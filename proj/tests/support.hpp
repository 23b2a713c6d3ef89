#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "puda/datasets.hpp"
#include "puda/layers.hpp"
#include "puda/models.hpp"
#include "puda/objective.hpp"
#include "puda/pipeline.hpp"

namespace puda::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

struct GradientCheck {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0.0;
  double analytic_norm = 0.0;
  std::size_t parameters = 0;
};

// Central differences of `loss` over every entry of `params`, compared with
// the gradients already stored in them.
inline GradientCheck check_gradients(const std::vector<Parameter*>& params, const std::function<double()>& loss,
                                     double step = 1e-5) {
  std::vector<double> analytic, numeric;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      analytic.push_back(p->grad.data()[i]);
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + step;
      const double up = loss();
      p->value.data()[i] = saved - step;
      const double down = loss();
      p->value.data()[i] = saved;
      numeric.push_back((up - down) / (2.0 * step));
    }
  }
  GradientCheck out;
  out.parameters = analytic.size();
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
    out.max_abs_error = std::max(out.max_abs_error, std::abs(analytic[i] - numeric[i]));
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nn));
  out.analytic_norm = std::sqrt(na);
  out.relative_error = scale < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / scale;
  return out;
}

// Tanh network on 2-d inputs with 35 parameters: G 2->2 (variational),
// F 2->3->2, D 2->2.
inline ModelConfig toy_model_config() {
  ModelConfig c;
  c.encoder.input = Shape{1, 1, 2};
  c.encoder.embedding_dim = 2;
  c.encoder.hidden = {};
  c.encoder.variational = true;
  c.encoder.activation = ActivationKind::tanh;
  c.head.widths = {3};
  c.head.activation = ActivationKind::tanh;
  c.decoder.hidden = {};
  c.decoder.activation = ActivationKind::tanh;
  c.classifier.hidden = {3};
  c.classifier.activation = ActivationKind::tanh;
  return c;
}

inline Step1Batch toy_batch(std::mt19937_64& rng, int n_source = 6, int n_positive = 3, int n_unlabeled = 5) {
  Step1Batch b;
  b.source_x = random_matrix(n_source, 2, rng);
  for (int i = 0; i < n_source; ++i) b.source_y.push_back(i % 2);
  b.positive_x = random_matrix(n_positive, 2, rng);
  b.unlabeled_x = random_matrix(n_unlabeled, 2, rng);
  b.source_noise = random_matrix(n_source, 2, rng);
  b.positive_noise = random_matrix(n_positive, 2, rng);
  b.unlabeled_noise = random_matrix(n_unlabeled, 2, rng);
  b.prior = random_matrix(n_unlabeled, 2, rng);
  return b;
}

// Separable two-Gaussian problem in `dim` dimensions; no domain shift
// unless `shift` is non-zero along the first axis.
inline SyntheticShiftSpec easy_spec(int dim, int n_per_class, double separation, double shift = 0.0) {
  Vector s = Vector::Zero(dim);
  s(0) = shift;
  return isotropic_shift_spec(dim, n_per_class, separation, s);
}

// Gradient check of the weighted step-1 objective over every parameter of
// a toy network. The snapshot comes from a perturbed copy so SAFN has a
// non-trivial target.
inline GradientCheck objective_gradient_check(const ObjectiveWeights& weights, const LossConfig& loss,
                                              std::uint64_t seed) {
  PuDaNetwork net = make_network(toy_model_config(), seed);
  PuDaNetwork older = make_network(toy_model_config(), seed + 1000);
  const ParameterSnapshot previous(older, 0);
  std::mt19937_64 rng(seed);
  const Step1Batch batch = toy_batch(rng);
  net.zero_grad();
  evaluate_step1(net, previous, batch, loss, weights, true);
  return check_gradients(net.parameters(),
                         [&] { return evaluate_step1(net, previous, batch, loss, weights, false).total; });
}

// Small vector model and short schedule so end-to-end runs take well
// under a second.
inline TrainConfig fast_train_config(int dim, std::uint64_t seed = 0) {
  TrainConfig c;
  c.warm_up = 5;
  c.step1_max_epoch = 15;
  c.step2_max_epoch = 15;
  c.source_batch = 32;
  c.positive_batch = 8;
  c.unlabeled_batch = 32;
  c.step2_batch = 32;
  c.optimizer.method = "adam";
  c.optimizer.learning_rate = 0.005;
  c.step2_optimizer = c.optimizer;
  c.extraction.m = 5;
  c.seed = seed;
  ModelConfig m;
  m.encoder.input = Shape{1, 1, dim};
  m.encoder.embedding_dim = 4;
  m.encoder.hidden = {16};
  m.head.widths = {8};
  m.decoder.hidden = {16};
  m.classifier.hidden = {16};
  c.model = m;
  return c;
}

inline double accuracy_on(const BinaryClassifier& model, const ExampleSet& set) {
  const Vector p = model.predict_proba(set.features());
  int correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) correct += (p(static_cast<Eigen::Index>(i)) > 0.5) == (set.true_label(i) == 1);
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("puda_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace puda::testing
