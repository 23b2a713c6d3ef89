#include "puda/models.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace puda {

using nlohmann::json;

namespace {

int append_conv_stack(Sequential& net, Shape shape, const std::vector<int>& channels, ActivationKind act,
                      std::mt19937_64& rng) {
  for (const int ch : channels) {
    auto conv = std::make_unique<Conv2d>(shape, ch, 3, 2, 1, rng);
    shape = conv->output_shape();
    net.add(std::move(conv));
    net.add(std::make_unique<Activation>(act, shape.size()));
  }
  return shape.size();
}

int append_dense_stack(Sequential& net, int in, const std::vector<int>& widths, ActivationKind act,
                       std::mt19937_64& rng) {
  for (const int w : widths) {
    net.add(std::make_unique<Dense>(in, w, rng));
    net.add(std::make_unique<Activation>(act, w));
    in = w;
  }
  return in;
}

json activation_json(const std::optional<ActivationKind>& kind) {
  return kind ? json(to_string(*kind)) : json("none");
}

std::optional<ActivationKind> optional_activation(const json& j) {
  const auto name = j.get<std::string>();
  if (name == "none") return std::nullopt;
  return activation_from_string(name);
}

}  // namespace

// ---------------------------------------------------------------- config

ModelConfig default_model_config(const Shape& input) {
  ModelConfig config;
  config.encoder.input = input;
  config.encoder.embedding_dim = 32;
  const bool image = input.height > 1 && input.width > 1;
  if (image) {
    config.encoder.conv_channels = {16, 32, 32};
    config.encoder.hidden = {};
    config.decoder.hidden = {64, 128};
    config.decoder.output_activation = ActivationKind::sigmoid;
    config.classifier.conv_channels = {16, 32};
    config.classifier.hidden = {64};
  } else {
    config.encoder.hidden = {64, 64};
    config.decoder.hidden = {64, 64};
    config.classifier.hidden = {64, 32};
  }
  config.head.widths = {32};
  return config;
}

json to_json(const ModelConfig& c) {
  json j;
  j["encoder"] = {{"input", to_string(c.encoder.input)},
                  {"input_shape", {c.encoder.input.channels, c.encoder.input.height, c.encoder.input.width}},
                  {"embedding_dim", c.encoder.embedding_dim},
                  {"conv_channels", c.encoder.conv_channels},
                  {"hidden", c.encoder.hidden},
                  {"variational", c.encoder.variational},
                  {"activation", to_string(c.encoder.activation)}};
  j["head"] = {{"widths", c.head.widths}, {"activation", to_string(c.head.activation)}};
  j["decoder"] = {{"hidden", c.decoder.hidden},
                  {"output_activation", activation_json(c.decoder.output_activation)},
                  {"activation", to_string(c.decoder.activation)}};
  j["classifier"] = {{"conv_channels", c.classifier.conv_channels},
                     {"hidden", c.classifier.hidden},
                     {"activation", to_string(c.classifier.activation)}};
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  // Any field may be omitted; omitted fields keep the ModelConfig defaults.
  static const std::map<std::string, std::set<std::string>> known = {
      {"encoder", {"input", "input_shape", "embedding_dim", "conv_channels", "hidden", "variational", "activation"}},
      {"head", {"widths", "activation"}},
      {"decoder", {"hidden", "output_activation", "activation"}},
      {"classifier", {"conv_channels", "hidden", "activation"}}};
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  for (const auto& [block, value] : j.items()) {
    const auto it = known.find(block);
    if (it == known.end()) throw ConfigError("unknown model config key: " + block);
    for (const auto& [key, v] : value.items()) {
      if (!it->second.count(key)) throw ConfigError("unknown model config key: " + block + "." + key);
    }
  }
  ModelConfig c;
  const json empty = json::object();
  const auto& e = j.contains("encoder") ? j["encoder"] : empty;
  if (e.contains("input_shape")) {
    const auto dims = e["input_shape"].get<std::vector<int>>();
    if (dims.size() != 3) throw ConfigError("encoder input_shape must have 3 entries");
    c.encoder.input = {dims[0], dims[1], dims[2]};
  }
  c.encoder.embedding_dim = e.value("embedding_dim", c.encoder.embedding_dim);
  c.encoder.conv_channels = e.value("conv_channels", c.encoder.conv_channels);
  c.encoder.hidden = e.value("hidden", c.encoder.hidden);
  c.encoder.variational = e.value("variational", c.encoder.variational);
  c.encoder.activation = activation_from_string(e.value("activation", to_string(c.encoder.activation)));
  const auto& h = j.contains("head") ? j["head"] : empty;
  c.head.widths = h.value("widths", c.head.widths);
  c.head.activation = activation_from_string(h.value("activation", to_string(c.head.activation)));
  const auto& d = j.contains("decoder") ? j["decoder"] : empty;
  c.decoder.hidden = d.value("hidden", c.decoder.hidden);
  if (d.contains("output_activation")) c.decoder.output_activation = optional_activation(d["output_activation"]);
  c.decoder.activation = activation_from_string(d.value("activation", to_string(c.decoder.activation)));
  const auto& k = j.contains("classifier") ? j["classifier"] : empty;
  c.classifier.conv_channels = k.value("conv_channels", c.classifier.conv_channels);
  c.classifier.hidden = k.value("hidden", c.classifier.hidden);
  c.classifier.activation = activation_from_string(k.value("activation", to_string(c.classifier.activation)));
  return c;
}

// --------------------------------------------------------------- Encoder

Encoder::Encoder(const EncoderSpec& spec, std::mt19937_64& rng) : spec_(spec), trunk_(spec.input.size()) {
  if (spec.embedding_dim < 1) throw ConfigError("embedding dimension must be positive");
  int dim = append_conv_stack(trunk_, spec.input, spec.conv_channels, spec.activation, rng);
  dim = append_dense_stack(trunk_, dim, spec.hidden, spec.activation, rng);
  mean_head_ = Sequential(dim);
  mean_head_.add(std::make_unique<Dense>(dim, spec.embedding_dim, rng));
  if (spec.variational) {
    log_variance_head_ = Sequential(dim);
    log_variance_head_.add(std::make_unique<Dense>(dim, spec.embedding_dim, rng));
  }
}

EncoderOutput Encoder::forward(const Matrix& x) {
  const Matrix hidden = trunk_.forward(x);
  EncoderOutput out;
  out.mean = mean_head_.forward(hidden);
  if (spec_.variational) out.log_variance = log_variance_head_.forward(hidden);
  return out;
}

EncoderOutput Encoder::infer(const Matrix& x) const {
  const Matrix hidden = trunk_.infer(x);
  EncoderOutput out;
  out.mean = mean_head_.infer(hidden);
  if (spec_.variational) out.log_variance = log_variance_head_.infer(hidden);
  return out;
}

void Encoder::backward(const Matrix& d_mean, const Matrix& d_log_variance) {
  Matrix g = mean_head_.backward(d_mean);
  if (spec_.variational && d_log_variance.size() > 0) g += log_variance_head_.backward(d_log_variance);
  trunk_.backward(g);
}

std::vector<Parameter*> Encoder::parameters() {
  auto out = trunk_.parameters();
  for (auto* p : mean_head_.parameters()) out.push_back(p);
  for (auto* p : log_variance_head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Encoder::parameters() const {
  auto out = trunk_.parameters();
  for (const auto* p : mean_head_.parameters()) out.push_back(p);
  for (const auto* p : log_variance_head_.parameters()) out.push_back(p);
  return out;
}

// -------------------------------------------------------- ClassifierHead

ClassifierHead::ClassifierHead(int input_dim, const ClassifierHeadSpec& spec, std::mt19937_64& rng)
    : spec_(spec), features_(input_dim) {
  if (spec.widths.empty()) throw ConfigError("classifier head needs at least two layers");
  const int dim = append_dense_stack(features_, input_dim, spec.widths, spec.activation, rng);
  output_ = Sequential(dim);
  output_.add(std::make_unique<Dense>(dim, 2, rng));
}

HeadOutput ClassifierHead::forward(const Matrix& z) {
  HeadOutput out;
  out.features = features_.forward(z);
  out.logits = output_.forward(out.features);
  return out;
}

HeadOutput ClassifierHead::infer(const Matrix& z) const {
  HeadOutput out;
  out.features = features_.infer(z);
  out.logits = output_.infer(out.features);
  return out;
}

Matrix ClassifierHead::backward(const Matrix& d_features, const Matrix& d_logits) {
  Matrix g;
  if (d_logits.size() > 0) g = output_.backward(d_logits);
  if (d_features.size() > 0) {
    if (g.size() == 0) {
      g = d_features;
    } else {
      g += d_features;
    }
  }
  return features_.backward(g);
}

std::vector<Parameter*> ClassifierHead::parameters() {
  auto out = features_.parameters();
  for (auto* p : output_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> ClassifierHead::parameters() const {
  auto out = features_.parameters();
  for (const auto* p : output_.parameters()) out.push_back(p);
  return out;
}

// --------------------------------------------------------------- Decoder

Decoder::Decoder(int embedding_dim, int output_dim, const DecoderSpec& spec, std::mt19937_64& rng)
    : net_(embedding_dim) {
  const int dim = append_dense_stack(net_, embedding_dim, spec.hidden, spec.activation, rng);
  net_.add(std::make_unique<Dense>(dim, output_dim, rng));
  if (spec.output_activation) net_.add(std::make_unique<Activation>(*spec.output_activation, output_dim));
}

// ------------------------------------------------------- FinalClassifier

FinalClassifier::FinalClassifier(const Shape& input, const FinalClassifierSpec& spec, std::mt19937_64& rng)
    : input_(input), spec_(spec), net_(input.size()) {
  int dim = append_conv_stack(net_, input, spec.conv_channels, spec.activation, rng);
  dim = append_dense_stack(net_, dim, spec.hidden, spec.activation, rng);
  net_.add(std::make_unique<Dense>(dim, 2, rng));
}

json FinalClassifier::to_json() const {
  ModelConfig config;
  config.classifier = spec_;
  return {{"kind", kind()},
          {"input_shape", {input_.channels, input_.height, input_.width}},
          {"spec", puda::to_json(config).at("classifier")},
          {"parameters", parameters_to_json(parameters())}};
}

// ------------------------------------------------------------- functions

Vector positive_probability(const Matrix& logits) {
  if (logits.cols() != 2) throw ShapeError("expected two logits per example");
  Vector p(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double a = logits(i, 1) - logits(i, 0);
    if (a >= 0.0) {
      p(i) = 1.0 / (1.0 + std::exp(-a));
    } else {
      const double e = std::exp(a);
      p(i) = e / (1.0 + e);
    }
  }
  return p;
}

Matrix logit_gradient(const Vector& p, const Vector& d_p) {
  Matrix g(p.size(), 2);
  const Vector slope = (d_p.array() * p.array() * (1.0 - p.array())).matrix();
  g.col(1) = slope;
  g.col(0) = -slope;
  return g;
}

std::vector<Parameter*> PuDaNetwork::parameters() {
  auto out = encoder.parameters();
  for (auto* p : head.parameters()) out.push_back(p);
  for (auto* p : decoder.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> PuDaNetwork::parameters() const {
  auto out = encoder.parameters();
  for (const auto* p : head.parameters()) out.push_back(p);
  for (const auto* p : decoder.parameters()) out.push_back(p);
  return out;
}

void PuDaNetwork::zero_grad() {
  for (auto* p : parameters()) p->grad.setZero();
}

PuDaNetwork make_network(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Encoder encoder(config.encoder, rng);
  ClassifierHead head(config.encoder.embedding_dim, config.head, rng);
  Decoder decoder(config.encoder.embedding_dim, config.encoder.input.size(), config.decoder, rng);
  return PuDaNetwork{std::move(encoder), std::move(head), std::move(decoder)};
}

Vector predict_proba(const Encoder& encoder, const ClassifierHead& head, const Matrix& x) {
  return positive_probability(head.infer(encoder.infer(x).mean).logits);
}

Vector predict_proba(const PuDaNetwork& network, const Matrix& x) {
  return predict_proba(network.encoder, network.head, x);
}

Vector feature_norm(const Encoder& encoder, const ClassifierHead& head, const Matrix& x) {
  return head.infer(encoder.infer(x).mean).features.rowwise().norm();
}

Vector feature_norm(const PuDaNetwork& network, const Matrix& x) {
  return feature_norm(network.encoder, network.head, x);
}

Matrix sample_prior(int n, int dim, std::mt19937_64& rng) {
  if (n < 1 || dim < 1) throw ConfigError("prior sample size and dimension must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, dim);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  return z;
}

Matrix sample_prior(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_prior(n, dim, rng);
}

ParameterSnapshot snapshot(const PuDaNetwork& network, std::int64_t iteration) {
  return ParameterSnapshot(network, iteration);
}

// ----------------------------------------------------------- checkpoints

json EmbeddingClassifier::to_json() const {
  std::vector<const Parameter*> params = encoder_.parameters();
  for (const auto* p : head_.parameters()) params.push_back(p);
  return {{"kind", kind()}, {"config", puda::to_json(config_)}, {"parameters", parameters_to_json(params)}};
}

std::unique_ptr<BinaryClassifier> classifier_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  std::mt19937_64 rng(0);
  if (kind == "final_classifier") {
    const auto dims = j.at("input_shape").get<std::vector<int>>();
    ModelConfig wrapper;
    json config_json = puda::to_json(wrapper);
    config_json["classifier"] = j.at("spec");
    const auto spec = model_config_from_json(config_json).classifier;
    auto clf = std::make_unique<FinalClassifier>(Shape{dims.at(0), dims.at(1), dims.at(2)}, spec, rng);
    parameters_from_json(j.at("parameters"), clf->parameters());
    return clf;
  }
  if (kind == "embedding_classifier") {
    const ModelConfig config = model_config_from_json(j.at("config"));
    Encoder encoder(config.encoder, rng);
    ClassifierHead head(config.encoder.embedding_dim, config.head, rng);
    std::vector<Parameter*> params = encoder.parameters();
    for (auto* p : head.parameters()) params.push_back(p);
    parameters_from_json(j.at("parameters"), params);
    return std::unique_ptr<BinaryClassifier>(new EmbeddingClassifier(std::move(encoder), std::move(head), config));
  }
  throw ConfigError("unknown classifier kind: " + kind);
}

void save_classifier(const std::filesystem::path& file, const BinaryClassifier& classifier) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write checkpoint: " + file.string());
  out << classifier.to_json().dump() << "\n";
}

std::unique_ptr<BinaryClassifier> load_classifier(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read checkpoint: " + file.string());
  return classifier_from_json(json::parse(in));
}

json network_to_json(const PuDaNetwork& network, const ModelConfig& config) {
  return {{"kind", "pu_da_network"},
          {"config", to_json(config)},
          {"parameters", parameters_to_json(network.parameters())}};
}

PuDaNetwork network_from_json(const json& j) {
  const ModelConfig config = model_config_from_json(j.at("config"));
  PuDaNetwork network = make_network(config, 0);
  parameters_from_json(j.at("parameters"), network.parameters());
  return network;
}

}  // namespace puda
