#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "puda/layers.hpp"

namespace puda {

// G. A non-empty `conv_channels` selects a convolutional trunk (3x3,
// stride 2, padding 1 per layer); `hidden` lists fully-connected widths
// that follow it.
struct EncoderSpec {
  Shape input{1, 1, 2};
  int embedding_dim = 32;
  std::vector<int> conv_channels;
  std::vector<int> hidden{64, 64};
  bool variational = true;
  ActivationKind activation = ActivationKind::relu;
};

// F with l = widths.size() + 1 layers; the first l-1 produce the
// penultimate features F_l.
struct ClassifierHeadSpec {
  std::vector<int> widths{32};
  ActivationKind activation = ActivationKind::relu;
};

// D: embedding -> input shape, fully connected.
struct DecoderSpec {
  std::vector<int> hidden{64, 64};
  std::optional<ActivationKind> output_activation;
  ActivationKind activation = ActivationKind::relu;
};

// C: independent network trained in step 2.
struct FinalClassifierSpec {
  std::vector<int> conv_channels;
  std::vector<int> hidden{64, 32};
  ActivationKind activation = ActivationKind::relu;
};

struct ModelConfig {
  EncoderSpec encoder;
  ClassifierHeadSpec head;
  DecoderSpec decoder;
  FinalClassifierSpec classifier;
};

// Desk-scale defaults: fully connected for vectors, convolutional for images.
ModelConfig default_model_config(const Shape& input);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct EncoderOutput {
  Matrix mean;
  Matrix log_variance;  // empty for a deterministic encoder
};

class Encoder {
 public:
  Encoder(const EncoderSpec& spec, std::mt19937_64& rng);

  EncoderOutput forward(const Matrix& x);
  EncoderOutput infer(const Matrix& x) const;
  // `d_log_variance` may be empty.
  void backward(const Matrix& d_mean, const Matrix& d_log_variance);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  const EncoderSpec& spec() const { return spec_; }
  bool variational() const { return spec_.variational; }
  int embedding_dim() const { return spec_.embedding_dim; }

 private:
  EncoderSpec spec_;
  Sequential trunk_;
  Sequential mean_head_;
  Sequential log_variance_head_;
};

struct HeadOutput {
  Matrix features;  // F_l(z)
  Matrix logits;    // 2 columns: negative, positive
};

class ClassifierHead {
 public:
  ClassifierHead(int input_dim, const ClassifierHeadSpec& spec, std::mt19937_64& rng);

  HeadOutput forward(const Matrix& z);
  HeadOutput infer(const Matrix& z) const;
  // Either gradient may be empty. Returns the gradient wrt z.
  Matrix backward(const Matrix& d_features, const Matrix& d_logits);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  int layer_count() const { return static_cast<int>(spec_.widths.size()) + 1; }
  int feature_dim() const { return features_.output_dim(); }

 private:
  ClassifierHeadSpec spec_;
  Sequential features_;
  Sequential output_;
};

class Decoder {
 public:
  Decoder(int embedding_dim, int output_dim, const DecoderSpec& spec, std::mt19937_64& rng);

  Matrix forward(const Matrix& z) { return net_.forward(z); }
  Matrix infer(const Matrix& z) const { return net_.infer(z); }
  Matrix backward(const Matrix& grad) { return net_.backward(grad); }
  std::vector<Parameter*> parameters() { return net_.parameters(); }
  std::vector<const Parameter*> parameters() const { return net_.parameters(); }

 private:
  Sequential net_;
};

// softmax(logits)[positive]; computed as a stable logistic of l1 - l0.
Vector positive_probability(const Matrix& logits);
// Chain rule from dL/dp to dL/dlogits for the two-logit softmax.
Matrix logit_gradient(const Vector& p, const Vector& d_p);

// Inference interface shared by C and by (G, F) used as a classifier.
class BinaryClassifier {
 public:
  virtual ~BinaryClassifier() = default;
  virtual Vector predict_proba(const Matrix& x) const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<BinaryClassifier> clone() const = 0;
};

class FinalClassifier final : public BinaryClassifier {
 public:
  FinalClassifier(const Shape& input, const FinalClassifierSpec& spec, std::mt19937_64& rng);

  Matrix forward(const Matrix& x) { return net_.forward(x); }
  Matrix infer(const Matrix& x) const { return net_.infer(x); }
  void backward(const Matrix& d_logits) { net_.backward(d_logits); }
  std::vector<Parameter*> parameters() { return net_.parameters(); }
  std::vector<const Parameter*> parameters() const { return net_.parameters(); }

  Vector predict_proba(const Matrix& x) const override { return positive_probability(infer(x)); }
  std::string kind() const override { return "final_classifier"; }
  nlohmann::json to_json() const override;
  std::unique_ptr<BinaryClassifier> clone() const override { return std::make_unique<FinalClassifier>(*this); }

  const Shape& input_shape() const { return input_; }
  const FinalClassifierSpec& spec() const { return spec_; }

 private:
  Shape input_;
  FinalClassifierSpec spec_;
  Sequential net_;
};

// G, F and D trained jointly in step 1.
struct PuDaNetwork {
  Encoder encoder;
  ClassifierHead head;
  Decoder decoder;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
};

PuDaNetwork make_network(const ModelConfig& config, std::uint64_t seed);

Vector predict_proba(const Encoder& encoder, const ClassifierHead& head, const Matrix& x);
Vector predict_proba(const PuDaNetwork& network, const Matrix& x);
// h(x) = ||F_l(G(x))||_2 along the deterministic (mean) embedding.
Vector feature_norm(const Encoder& encoder, const ClassifierHead& head, const Matrix& x);
Vector feature_norm(const PuDaNetwork& network, const Matrix& x);

Matrix sample_prior(int n, int dim, std::uint64_t seed);
Matrix sample_prior(int n, int dim, std::mt19937_64& rng);

// Frozen copy of (G, F). Evaluation through a snapshot never touches the
// live network, so its outputs are constants for gradient purposes.
class ParameterSnapshot {
 public:
  ParameterSnapshot(const PuDaNetwork& network, std::int64_t iteration)
      : encoder_(network.encoder), head_(network.head), iteration_(iteration) {}

  Vector feature_norm(const Matrix& x) const { return puda::feature_norm(encoder_, head_, x); }
  Vector predict_proba(const Matrix& x) const { return puda::predict_proba(encoder_, head_, x); }
  std::int64_t iteration() const { return iteration_; }

 private:
  Encoder encoder_;
  ClassifierHead head_;
  std::int64_t iteration_;
};

ParameterSnapshot snapshot(const PuDaNetwork& network, std::int64_t iteration = 0);

// (G, F) as the inference model: baselines and the empty-extraction fallback.
class EmbeddingClassifier final : public BinaryClassifier {
 public:
  EmbeddingClassifier(const PuDaNetwork& network, const ModelConfig& config)
      : encoder_(network.encoder), head_(network.head), config_(config) {}

  Vector predict_proba(const Matrix& x) const override { return puda::predict_proba(encoder_, head_, x); }
  std::string kind() const override { return "embedding_classifier"; }
  nlohmann::json to_json() const override;
  std::unique_ptr<BinaryClassifier> clone() const override {
    return std::make_unique<EmbeddingClassifier>(*this);
  }

 private:
  friend std::unique_ptr<BinaryClassifier> classifier_from_json(const nlohmann::json& j);
  EmbeddingClassifier(Encoder encoder, ClassifierHead head, ModelConfig config)
      : encoder_(std::move(encoder)), head_(std::move(head)), config_(std::move(config)) {}

  Encoder encoder_;
  ClassifierHead head_;
  ModelConfig config_;
};

std::unique_ptr<BinaryClassifier> classifier_from_json(const nlohmann::json& j);
void save_classifier(const std::filesystem::path& file, const BinaryClassifier& classifier);
std::unique_ptr<BinaryClassifier> load_classifier(const std::filesystem::path& file);

nlohmann::json network_to_json(const PuDaNetwork& network, const ModelConfig& config);
PuDaNetwork network_from_json(const nlohmann::json& j);

}  // namespace puda
