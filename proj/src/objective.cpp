#include "puda/objective.hpp"

namespace puda {

ObjectiveWeights ObjectiveWeights::from_config(const LossConfig& config) {
  return {1.0, config.alpha, config.beta, config.beta, config.beta};
}

ObjectiveWeights ObjectiveWeights::source_only() { return {0.0, 1.0, 0.0, 0.0, 0.0}; }

ObjectiveWeights ObjectiveWeights::pu_only() { return {1.0, 0.0, 0.0, 0.0, 0.0}; }

namespace {

Matrix stack_rows(std::initializer_list<const Matrix*> parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const auto* m : parts) rows += m->rows();
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto* m : parts) {
    if (m->rows() == 0) continue;
    if (m->cols() != cols) throw ShapeError("batch parts have inconsistent widths");
    out.middleRows(at, m->rows()) = *m;
    at += m->rows();
  }
  return out;
}

}  // namespace

Step1Terms evaluate_step1(PuDaNetwork& network, const ParameterSnapshot& previous, const Step1Batch& batch,
                          const LossConfig& config, const ObjectiveWeights& weights, bool accumulate_gradients) {
  const Eigen::Index ns = batch.source_x.rows();
  const Eigen::Index np = batch.positive_x.rows();
  const Eigen::Index nu = batch.unlabeled_x.rows();
  const Eigen::Index n = ns + np + nu;
  const Eigen::Index unl = ns + np;  // first unlabeled row
  const bool use_pu = weights.pu != 0.0;
  const bool use_cls = weights.cls != 0.0;
  const bool use_kl = weights.kl != 0.0;
  const bool use_rec = weights.reconstruction != 0.0;
  const bool use_safn = weights.safn != 0.0;
  const int input_dim = network.encoder.spec().input.size();
  const int dz = network.encoder.embedding_dim();
  const bool variational = network.encoder.variational();

  if (n == 0) throw LossError("step-1 objective on an empty batch");
  if (static_cast<std::size_t>(ns) != batch.source_y.size()) throw ShapeError("source labels do not match rows");

  // G over every row once; sampled embeddings feed F and D.
  const Matrix x = stack_rows({&batch.source_x, &batch.positive_x, &batch.unlabeled_x}, input_dim);
  const EncoderOutput enc = network.encoder.forward(x);
  Matrix z = enc.mean;
  Matrix noise;
  Matrix half_std;
  if (variational) {
    noise = stack_rows({&batch.source_noise, &batch.positive_noise, &batch.unlabeled_noise}, dz);
    if (noise.rows() != n) throw ShapeError("reparameterization noise does not match the batch");
    half_std = (0.5 * enc.log_variance.array()).exp().matrix();
    z.array() += half_std.array() * noise.array();
  }

  // F over the sampled embeddings plus, for SAFN, the mean embeddings of
  // the source and unlabeled rows.
  const Eigen::Index n_safn = use_safn ? ns + nu : 0;
  Matrix head_input(n + n_safn, dz);
  head_input.topRows(n) = z;
  if (use_safn) {
    head_input.middleRows(n, ns) = enc.mean.topRows(ns);
    head_input.bottomRows(nu) = enc.mean.middleRows(unl, nu);
  }
  const HeadOutput head = network.head.forward(head_input);
  const Vector p = positive_probability(head.logits.topRows(n));

  Step1Terms terms;
  Vector d_p = Vector::Zero(n);

  if (use_cls) {
    const Vector p_src = p.head(ns);
    const auto ce = source_ce_loss(p_src, batch.source_y, config.epsilon);
    terms.cls = ce.value;
    d_p.head(ns) += weights.cls * ce.d_p;
  }
  if (use_pu) {
    const auto pu = nnpu_loss(p.segment(np > 0 ? ns : 0, np), p.segment(unl, nu), config.pi, config.base_loss,
                              config.epsilon, config.clamp_gradient);
    terms.pu = pu.value;
    terms.pu_clamped = pu.clamped;
    d_p.segment(ns, np) += weights.pu * pu.d_p_positive;
    d_p.segment(unl, nu) += weights.pu * pu.d_p_unlabeled;
  }

  Matrix d_features;
  if (use_safn) {
    const Matrix features = head.features.bottomRows(n_safn);
    const Vector h_current = features.rowwise().norm();
    const Matrix safn_x = stack_rows({&batch.source_x, &batch.unlabeled_x}, input_dim);
    const Vector h_previous = previous.feature_norm(safn_x);
    const auto safn = safn_loss(h_previous, h_current, config.delta);
    terms.safn = safn.value;
    d_features = Matrix::Zero(n + n_safn, head.features.cols());
    for (Eigen::Index i = 0; i < n_safn; ++i) {
      if (h_current(i) > 0.0) {
        d_features.row(n + i) = (weights.safn * safn.d_current(i) / h_current(i)) * features.row(i);
      }
    }
  }

  KlLoss kl;
  if (use_kl) {
    const Matrix mean_src = enc.mean.topRows(ns);
    const Matrix log_var_src = variational ? Matrix(enc.log_variance.topRows(ns)) : Matrix();
    kl = kl_prior_loss(mean_src, log_var_src);
    terms.kl = kl.value;
  }

  ReconstructionLoss rec;
  if (use_rec) {
    if (batch.prior.rows() != nu || batch.prior.cols() != dz) throw ShapeError("prior draws do not match the batch");
    Matrix decoder_input(2 * nu, dz);
    decoder_input.topRows(nu) = z.middleRows(unl, nu);
    decoder_input.bottomRows(nu) = batch.prior;
    const Matrix decoded = network.decoder.forward(decoder_input);
    rec = target_reconstruction_loss(decoded.topRows(nu), decoded.bottomRows(nu));
    terms.reconstruction = rec.value;
  }

  terms.total = weights.pu * terms.pu + weights.cls * terms.cls + weights.kl * terms.kl +
                weights.reconstruction * terms.reconstruction + weights.safn * terms.safn;
  if (!accumulate_gradients) return terms;

  Matrix d_logits = Matrix::Zero(n + n_safn, 2);
  d_logits.topRows(n) = logit_gradient(p, d_p);
  const Matrix d_head_input = network.head.backward(d_features, d_logits);

  Matrix d_z = d_head_input.topRows(n);
  if (use_rec) {
    Matrix d_decoded(2 * nu, input_dim);
    d_decoded.topRows(nu) = weights.reconstruction * rec.d_embeddings;
    d_decoded.bottomRows(nu) = weights.reconstruction * rec.d_prior;
    const Matrix d_decoder_input = network.decoder.backward(d_decoded);
    d_z.middleRows(unl, nu) += d_decoder_input.topRows(nu);
  }

  Matrix d_mean = d_z;
  if (use_safn) {
    d_mean.topRows(ns) += d_head_input.middleRows(n, ns);
    d_mean.middleRows(unl, nu) += d_head_input.bottomRows(nu);
  }
  if (use_kl) d_mean.topRows(ns) += weights.kl * kl.d_mean;

  Matrix d_log_var;
  if (variational) {
    d_log_var = (d_z.array() * noise.array() * 0.5 * half_std.array()).matrix();
    if (use_kl) d_log_var.topRows(ns) += weights.kl * kl.d_log_variance;
  }
  network.encoder.backward(d_mean, d_log_var);
  return terms;
}

double evaluate_step2(FinalClassifier& classifier, const Matrix& x, const Vector& labels, LabelMode mode,
                      double epsilon, bool accumulate_gradients) {
  const Matrix logits = classifier.forward(x);
  const Vector p = positive_probability(logits);
  const auto loss = pseudo_label_ce_loss(p, labels, epsilon, mode);
  if (accumulate_gradients) classifier.backward(logit_gradient(p, loss.d_p));
  return loss.value;
}

}  // namespace puda
