#include "puda/losses.hpp"

#include <algorithm>
#include <cmath>

namespace puda {

std::string to_string(BaseLoss loss) { return loss == BaseLoss::logistic ? "logistic" : "sigmoid"; }

BaseLoss base_loss_from_string(const std::string& name) {
  if (name == "logistic") return BaseLoss::logistic;
  if (name == "sigmoid") return BaseLoss::sigmoid;
  throw ConfigError("unknown base loss: " + name);
}

std::string to_string(ClampGradient mode) { return mode == ClampGradient::zero ? "zero" : "ascend"; }

ClampGradient clamp_gradient_from_string(const std::string& name) {
  if (name == "zero") return ClampGradient::zero;
  if (name == "ascend") return ClampGradient::ascend;
  throw ConfigError("unknown clamp gradient mode: " + name);
}

std::string to_string(LabelMode mode) { return mode == LabelMode::soft ? "soft" : "hard"; }

LabelMode label_mode_from_string(const std::string& name) {
  if (name == "soft") return LabelMode::soft;
  if (name == "hard") return LabelMode::hard;
  throw ConfigError("unknown label mode: " + name);
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(delta >= 0.0)) throw ConfigError("alpha, beta, delta must be >= 0");
  if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("class prior must lie strictly inside (0, 1)");
  if (!(epsilon > 0.0 && epsilon <= 1e-6)) throw ConfigError("epsilon must lie in (0, 1e-6]");
}

nlohmann::json to_json(const LossConfig& c) {
  return {{"alpha", c.alpha},     {"beta", c.beta},       {"delta", c.delta},
          {"pi", c.pi},           {"base_loss", to_string(c.base_loss)}, {"epsilon", c.epsilon},
          {"clamp_gradient", to_string(c.clamp_gradient)}};
}

LossConfig loss_config_from_json(const nlohmann::json& j) {
  LossConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.delta = j.value("delta", c.delta);
  c.pi = j.value("pi", c.pi);
  c.base_loss = base_loss_from_string(j.value("base_loss", to_string(c.base_loss)));
  c.epsilon = j.value("epsilon", c.epsilon);
  c.clamp_gradient = clamp_gradient_from_string(j.value("clamp_gradient", to_string(c.clamp_gradient)));
  return c;
}

namespace {

struct Clamped {
  double value;
  double slope;  // d clamp(p) / dp
};

Clamped clamp_probability(double p, double eps) {
  if (p < eps) return {eps, 0.0};
  if (p > 1.0 - eps) return {1.0 - eps, 0.0};
  return {p, 1.0};
}

// Value and derivative wrt p of l(p, label).
std::pair<double, double> base_loss(double p, int label, BaseLoss kind, double eps) {
  if (kind == BaseLoss::sigmoid) {
    return label == 1 ? std::pair{1.0 - p, -1.0} : std::pair{p, 1.0};
  }
  const auto c = clamp_probability(p, eps);
  if (label == 1) return {-std::log(c.value), -c.slope / c.value};
  return {-std::log(1.0 - c.value), c.slope / (1.0 - c.value)};
}

// Soft-target cross-entropy -[y log p + (1 - y) log(1 - p)] and d/dp.
std::pair<double, double> soft_cross_entropy(double p, double y, double eps) {
  const auto c = clamp_probability(p, eps);
  const double value = -(y * std::log(c.value) + (1.0 - y) * std::log(1.0 - c.value));
  const double slope = c.slope * (-y / c.value + (1.0 - y) / (1.0 - c.value));
  return {value, slope};
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw LossError(std::string(what) + " contains non-finite values");
}

}  // namespace

ProbabilityLoss source_ce_loss(const Vector& p, std::span<const int> y, double epsilon) {
  if (p.size() == 0) throw LossError("cross-entropy on an empty batch");
  if (static_cast<std::size_t>(p.size()) != y.size()) throw LossError("probability and label counts differ");
  ProbabilityLoss out;
  out.d_p.resize(p.size());
  const double n = static_cast<double>(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    if (label != 0 && label != 1) throw LossError("labels must be 0 or 1");
    const auto [value, slope] = soft_cross_entropy(p(i), label, epsilon);
    out.value += value / n;
    out.d_p(i) = slope / n;
  }
  return out;
}

KlLoss kl_prior_loss(const Matrix& mean, const Matrix& log_variance) {
  if (mean.rows() == 0) throw LossError("KL term on an empty batch");
  require_finite(mean, "mean");
  const bool unit_variance = log_variance.size() == 0;
  if (!unit_variance) {
    if (log_variance.rows() != mean.rows() || log_variance.cols() != mean.cols()) {
      throw LossError("mean and log-variance shapes differ");
    }
    require_finite(log_variance, "log-variance");
  }
  const double n = static_cast<double>(mean.rows());
  KlLoss out;
  out.d_mean = mean / n;
  if (unit_variance) {
    out.value = 0.5 * mean.squaredNorm() / n;
    return out;
  }
  const auto var = log_variance.array().exp();
  out.value = 0.5 * (var + mean.array().square() - 1.0 - log_variance.array()).sum() / n;
  out.d_log_variance = (0.5 * (var - 1.0) / n).matrix();
  return out;
}

ReconstructionLoss target_reconstruction_loss(const Matrix& decoded_embeddings, const Matrix& decoded_prior) {
  if (decoded_embeddings.rows() != decoded_prior.rows() || decoded_embeddings.cols() != decoded_prior.cols()) {
    throw LossError("reconstruction batches have different shapes");
  }
  if (decoded_embeddings.rows() == 0) throw LossError("reconstruction term on an empty batch");
  const double n = static_cast<double>(decoded_embeddings.rows());
  const auto diff = (decoded_embeddings - decoded_prior).array();
  ReconstructionLoss out;
  out.value = diff.abs().sum() / n;
  out.d_embeddings = (diff.sign() / n).matrix();
  out.d_prior = -out.d_embeddings;
  return out;
}

SafnLoss safn_loss(const Vector& h_previous, const Vector& h_current, double delta) {
  if (h_previous.size() != h_current.size()) throw LossError("feature-norm batches differ in size");
  if (h_current.size() == 0) throw LossError("feature-norm term on an empty batch");
  const double n = static_cast<double>(h_current.size());
  const Vector deviation = (h_previous.array() + delta - h_current.array()).matrix();
  SafnLoss out;
  out.value = std::sqrt(deviation.squaredNorm() / n);
  if (out.value > 0.0) {
    out.d_current = -deviation / (n * out.value);
  } else {
    out.d_current = Vector::Zero(h_current.size());
  }
  return out;
}

NnpuLoss nnpu_loss(const Vector& p_positive, const Vector& p_unlabeled, double pi, BaseLoss kind, double epsilon,
                   ClampGradient clamp_gradient) {
  if (p_positive.size() == 0) throw LossError("nnPU risk needs at least one labeled positive");
  if (p_unlabeled.size() == 0) throw LossError("nnPU risk needs at least one unlabeled example");
  if (!(pi > 0.0 && pi < 1.0)) throw LossError("class prior must lie strictly inside (0, 1)");

  const double n_p = static_cast<double>(p_positive.size());
  const double n_u = static_cast<double>(p_unlabeled.size());
  NnpuLoss out;
  Vector d_pos_as_positive(p_positive.size());
  Vector d_pos_as_negative(p_positive.size());
  double pos_as_negative = 0.0;
  for (Eigen::Index i = 0; i < p_positive.size(); ++i) {
    const auto [l1, g1] = base_loss(p_positive(i), 1, kind, epsilon);
    const auto [l0, g0] = base_loss(p_positive(i), 0, kind, epsilon);
    out.positive_risk += pi * l1 / n_p;
    pos_as_negative += pi * l0 / n_p;
    d_pos_as_positive(i) = pi * g1 / n_p;
    d_pos_as_negative(i) = pi * g0 / n_p;
  }
  double unlabeled_as_negative = 0.0;
  Vector d_unlabeled(p_unlabeled.size());
  for (Eigen::Index i = 0; i < p_unlabeled.size(); ++i) {
    const auto [l0, g0] = base_loss(p_unlabeled(i), 0, kind, epsilon);
    unlabeled_as_negative += l0 / n_u;
    d_unlabeled(i) = g0 / n_u;
  }
  out.negative_risk = unlabeled_as_negative - pos_as_negative;
  out.clamped = out.negative_risk < 0.0;
  out.value = out.positive_risk + std::max(0.0, out.negative_risk);

  if (!out.clamped) {
    out.d_p_positive = d_pos_as_positive - d_pos_as_negative;
    out.d_p_unlabeled = d_unlabeled;
  } else if (clamp_gradient == ClampGradient::zero) {
    out.d_p_positive = d_pos_as_positive;
    out.d_p_unlabeled = Vector::Zero(p_unlabeled.size());
  } else {
    out.d_p_positive = d_pos_as_positive + d_pos_as_negative;
    out.d_p_unlabeled = -d_unlabeled;
  }
  return out;
}

double alignment_loss(double source, double target, double safn) { return source + target + safn; }

double total_step1_loss(double pu, double cls, double align, double alpha, double beta) {
  return pu + alpha * cls + beta * align;
}

ProbabilityLoss pseudo_label_ce_loss(const Vector& p, const Vector& y, double epsilon, LabelMode mode) {
  if (p.size() == 0) throw LossError("pseudo-labeled set is empty");
  if (p.size() != y.size()) throw LossError("probability and pseudo-label counts differ");
  ProbabilityLoss out;
  out.d_p.resize(p.size());
  const double n = static_cast<double>(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(y(i) >= 0.0 && y(i) <= 1.0)) throw LossError("pseudo-labels must lie in [0, 1]");
    const double target = mode == LabelMode::hard ? (y(i) > 0.5 ? 1.0 : 0.0) : y(i);
    const auto [value, slope] = soft_cross_entropy(p(i), target, epsilon);
    out.value += value / n;
    out.d_p(i) = slope / n;
  }
  return out;
}

double binary_entropy(double q) {
  if (q <= 0.0 || q >= 1.0) return 0.0;
  return -(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
}

}  // namespace puda
