#include "puda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "puda/manifest.hpp"

namespace puda {

std::string to_string(Method method) {
  switch (method) {
    case Method::pu_da: return "pu_da";
    case Method::source_only: return "source_only";
    case Method::nnpu_only: return "nnpu_only";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "pu_da") return Method::pu_da;
  if (name == "source_only") return Method::source_only;
  if (name == "nnpu_only") return Method::nnpu_only;
  throw ConfigError("unknown method: " + name + " (expected pu_da, source_only or nnpu_only)");
}

std::string to_string(StoppingMode mode) { return mode == StoppingMode::fixed ? "fixed" : "patience"; }

StoppingMode stopping_mode_from_string(const std::string& name) {
  if (name == "fixed") return StoppingMode::fixed;
  if (name == "patience") return StoppingMode::patience;
  throw ConfigError("unknown stopping mode: " + name);
}

std::string to_string(RunStatus status) { return status == RunStatus::success ? "success" : "degraded"; }

void TrainConfig::validate() const {
  // warm_up == step1_max_epoch is allowed: it trains without harvesting.
  if (warm_up < 0 || warm_up > step1_max_epoch) throw ConfigError("need 0 <= warm_up <= step1_max_epoch");
  if (step1_max_epoch < 1 || step2_max_epoch < 1) throw ConfigError("epoch counts must be >= 1");
  if (source_batch < 1 || positive_batch < 1 || unlabeled_batch < 1 || step2_batch < 1) {
    throw ConfigError("batch sizes must be >= 1");
  }
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must lie in (0, 1)");
  optimizer.validate();
  step2_optimizer.validate();
  extraction.validate();
  if (!prior_from_scenario) loss.validate();
}

namespace {

const std::set<std::string> kTrainKeys = {
    "warm_up",        "step1_max_epoch", "step2_max_epoch", "source_batch", "positive_batch",
    "unlabeled_batch", "step2_batch",    "optimizer",       "step2_optimizer", "loss",
    "extraction",     "label_mode",      "stopping",        "patience",     "holdout_fraction",
    "prior_from_scenario", "seed",       "model"};

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["warm_up"] = c.warm_up;
  j["step1_max_epoch"] = c.step1_max_epoch;
  j["step2_max_epoch"] = c.step2_max_epoch;
  j["source_batch"] = c.source_batch;
  j["positive_batch"] = c.positive_batch;
  j["unlabeled_batch"] = c.unlabeled_batch;
  j["step2_batch"] = c.step2_batch;
  j["optimizer"] = to_json(c.optimizer);
  j["step2_optimizer"] = to_json(c.step2_optimizer);
  j["loss"] = to_json(c.loss);
  j["extraction"] = {{"t_p", c.extraction.t_p}, {"t_n", c.extraction.t_n}, {"m", c.extraction.m}};
  j["label_mode"] = to_string(c.label_mode);
  j["stopping"] = to_string(c.stopping);
  j["patience"] = c.patience;
  j["holdout_fraction"] = c.holdout_fraction;
  j["prior_from_scenario"] = c.prior_from_scenario;
  j["seed"] = c.seed;
  j["model"] = c.model ? to_json(*c.model) : nlohmann::json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kTrainKeys.count(key)) throw ConfigError("unknown train config key: " + key);
  }
  TrainConfig c;
  // Nested blocks are checked against the keys their defaults serialize to.
  const nlohmann::json defaults = to_json(c);
  for (const char* block : {"optimizer", "step2_optimizer", "loss", "extraction"}) {
    if (!j.contains(block)) continue;
    if (!j[block].is_object()) throw ConfigError(std::string("train config '") + block + "' must be an object");
    for (const auto& [key, value] : j[block].items()) {
      if (!defaults[block].contains(key)) throw ConfigError("unknown key " + std::string(block) + "." + key);
    }
  }
  try {
    c.warm_up = j.value("warm_up", c.warm_up);
    c.step1_max_epoch = j.value("step1_max_epoch", c.step1_max_epoch);
    c.step2_max_epoch = j.value("step2_max_epoch", c.step2_max_epoch);
    c.source_batch = j.value("source_batch", c.source_batch);
    c.positive_batch = j.value("positive_batch", c.positive_batch);
    c.unlabeled_batch = j.value("unlabeled_batch", c.unlabeled_batch);
    c.step2_batch = j.value("step2_batch", c.step2_batch);
    if (j.contains("optimizer")) c.optimizer = optimizer_config_from_json(j["optimizer"]);
    c.step2_optimizer = j.contains("step2_optimizer") ? optimizer_config_from_json(j["step2_optimizer"]) : c.optimizer;
    if (j.contains("loss")) c.loss = loss_config_from_json(j["loss"]);
    if (j.contains("extraction")) {
      const auto& e = j["extraction"];
      c.extraction.t_p = e.value("t_p", c.extraction.t_p);
      c.extraction.t_n = e.value("t_n", c.extraction.t_n);
      c.extraction.m = e.value("m", c.extraction.m);
    }
    if (j.contains("label_mode")) c.label_mode = label_mode_from_string(j["label_mode"].get<std::string>());
    if (j.contains("stopping")) c.stopping = stopping_mode_from_string(j["stopping"].get<std::string>());
    c.patience = j.value("patience", c.patience);
    c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
    c.prior_from_scenario = j.value("prior_from_scenario", c.prior_from_scenario);
    c.seed = j.value("seed", c.seed);
    if (j.contains("model") && !j["model"].is_null()) c.model = model_config_from_json(j["model"]);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig resolve_model(const TrainConfig& config, const Shape& shape) {
  ModelConfig model = config.model ? *config.model : default_model_config(shape);
  model.encoder.input = shape;
  return model;
}

LossConfig resolve_loss(const TrainConfig& config, const ScenarioBundle& scenario) {
  LossConfig loss = config.loss;
  if (config.prior_from_scenario) loss.pi = scenario.class_prior;
  if (!(loss.pi > 0.0 && loss.pi < 1.0)) throw ScenarioError("class prior must lie in (0, 1)");
  loss.validate();
  return loss;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t { kInit = 1, kBatches = 2, kNoise = 3, kStep2Init = 4, kStep2Batches = 5 };

// Endless reshuffled pass over one pool. Smaller pools simply wrap more often.
class BatchCycler {
 public:
  BatchCycler(std::size_t size, std::mt19937_64& rng) : order_(size), rng_(&rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    if (order_.empty()) return out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (cursor_ == order_.size()) reshuffle();
      out.push_back(order_[cursor_++]);
      // A pool smaller than the batch contributes each example once.
      if (out.size() == order_.size()) break;
    }
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), *rng_);
    cursor_ = 0;
  }

  std::vector<std::size_t> order_;
  std::mt19937_64* rng_;
  std::size_t cursor_ = 0;
};

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
  return out;
}

std::string recent_trace(const std::deque<double>& totals, int epoch, std::int64_t step) {
  std::ostringstream out;
  out << std::setprecision(10) << "epoch " << epoch << ", step " << step << "; recent totals:";
  for (double t : totals) out << " " << t;
  return out.str();
}

Step1Terms accumulate(const Step1Terms& sum, const Step1Terms& t) {
  Step1Terms out = sum;
  out.pu += t.pu;
  out.cls += t.cls;
  out.kl += t.kl;
  out.reconstruction += t.reconstruction;
  out.safn += t.safn;
  out.total += t.total;
  return out;
}

Step1Terms scaled(Step1Terms t, double s) {
  t.pu *= s;
  t.cls *= s;
  t.kl *= s;
  t.reconstruction *= s;
  t.safn *= s;
  t.total *= s;
  return t;
}

ObjectiveWeights weights_for(Method method, const LossConfig& loss) {
  switch (method) {
    case Method::pu_da: return ObjectiveWeights::from_config(loss);
    case Method::source_only: return ObjectiveWeights::source_only();
    case Method::nnpu_only: return ObjectiveWeights::pu_only();
  }
  return ObjectiveWeights::from_config(loss);
}

}  // namespace

Step1Result run_step1(const ScenarioBundle& scenario, const TrainConfig& config) {
  return run_step1(scenario, config, Method::pu_da);
}

Step1Result run_step1(const ScenarioBundle& scenario, const TrainConfig& config, Method method) {
  config.validate();
  const LossConfig loss = resolve_loss(config, scenario);
  const ObjectiveWeights weights = weights_for(method, loss);
  const bool harvesting = method == Method::pu_da;
  const bool uses_source = weights.cls != 0.0 || weights.kl != 0.0 || weights.safn != 0.0;
  const bool uses_target = weights.pu != 0.0 || weights.reconstruction != 0.0 || weights.safn != 0.0;

  const ExampleSet& source = scenario.source;
  const ExampleSet& positives = scenario.target_positive;
  const ExampleSet& unlabeled = scenario.target_unlabeled;
  if (uses_source && source.empty()) throw ScenarioError("source domain is empty");
  if (uses_target && unlabeled.empty()) throw ScenarioError("target unlabeled pool is empty");
  if (weights.pu != 0.0 && positives.empty()) throw ScenarioError("no labeled target positives");
  const ExampleSet source_negatives = scenario.source_negatives();
  if (harvesting && source_negatives.empty()) throw ScenarioError("source domain has no negatives");

  Step1Result result{make_network(resolve_model(config, scenario.shape()), derive_seed(config.seed, kInit)),
                     resolve_model(config, scenario.shape()),
                     {},
                     {},
                     {},
                     0};
  PuDaNetwork& network = result.network;
  const int dz = network.encoder.embedding_dim();
  const bool variational = network.encoder.variational();
  const bool needs_snapshot = weights.safn != 0.0;

  std::mt19937_64 batch_rng(derive_seed(config.seed, kBatches));
  std::mt19937_64 noise_rng(derive_seed(config.seed, kNoise));
  BatchCycler source_cycle(uses_source ? source.size() : 0, batch_rng);
  BatchCycler positive_cycle(weights.pu != 0.0 ? positives.size() : 0, batch_rng);
  BatchCycler unlabeled_cycle(uses_target ? unlabeled.size() : 0, batch_rng);

  const std::size_t epoch_pool = uses_target ? unlabeled.size() : source.size();
  const std::size_t epoch_batch =
      static_cast<std::size_t>(uses_target ? config.unlabeled_batch : config.source_batch);
  const std::size_t steps_per_epoch = (epoch_pool + epoch_batch - 1) / epoch_batch;

  const std::vector<int> source_labels(source.true_labels().begin(), source.true_labels().end());
  Optimizer optimizer(config.optimizer);
  // Lags one optimizer step: the first step sees the initialization.
  std::optional<ParameterSnapshot> previous;
  previous.emplace(network, 0);

  std::deque<double> recent;
  for (int epoch = 1; epoch <= config.step1_max_epoch; ++epoch) {
    optimizer.set_epoch(epoch);
    Thresholds thresholds;
    if (harvesting) thresholds = compute_thresholds(network, positives, source_negatives, epoch);

    Step1Terms sum;
    std::size_t clamped = 0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      Step1Batch batch;
      if (uses_source) {
        const auto idx = source_cycle.next(static_cast<std::size_t>(config.source_batch));
        batch.source_x = source.gather(idx);
        batch.source_y.reserve(idx.size());
        for (auto i : idx) batch.source_y.push_back(source_labels[i]);
      }
      if (weights.pu != 0.0) batch.positive_x = positives.gather(positive_cycle.next(config.positive_batch));
      if (uses_target) batch.unlabeled_x = unlabeled.gather(unlabeled_cycle.next(config.unlabeled_batch));
      if (variational) {
        batch.source_noise = gaussian(batch.source_x.rows(), dz, noise_rng);
        batch.positive_noise = gaussian(batch.positive_x.rows(), dz, noise_rng);
        batch.unlabeled_noise = gaussian(batch.unlabeled_x.rows(), dz, noise_rng);
      }
      if (weights.reconstruction != 0.0) batch.prior = sample_prior(static_cast<int>(batch.unlabeled_x.rows()), dz, noise_rng);

      network.zero_grad();
      const Step1Terms terms = evaluate_step1(network, *previous, batch, loss, weights, true);
      ++result.steps;
      recent.push_back(terms.total);
      if (recent.size() > 20) recent.pop_front();
      if (!std::isfinite(terms.total)) {
        throw TrainingDivergedError("step-1 loss became non-finite", recent_trace(recent, epoch, result.steps));
      }
      if (needs_snapshot) previous.emplace(network, result.steps);
      optimizer.step(network.parameters());
      sum = accumulate(sum, terms);
      if (terms.pu_clamped) ++clamped;
    }

    Step1EpochTrace trace;
    trace.epoch = epoch;
    trace.mean_terms = scaled(sum, 1.0 / static_cast<double>(steps_per_epoch));
    trace.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(steps_per_epoch);
    trace.learning_rate = optimizer.learning_rate();
    if (harvesting) {
      result.thresholds.push_back(thresholds);
      if (epoch > config.warm_up) {
        const auto records = harvest_epoch(network, unlabeled, thresholds, epoch);
        result.candidates.append(records);
        trace.harvested = records.size();
      }
    }
    result.trace.push_back(trace);
  }
  return result;
}

namespace {

struct PseudoData {
  Matrix x;
  Vector labels;
};

PseudoData pseudo_rows(const PseudoLabeledSet& pseudo, const ExampleSet& unlabeled,
                       std::span<const std::size_t> entries) {
  std::unordered_map<Id, std::size_t> row_of;
  row_of.reserve(unlabeled.size());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) row_of.emplace(unlabeled.id(i), i);
  std::vector<std::size_t> rows;
  PseudoData out;
  out.labels.resize(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = pseudo.entries[entries[k]];
    const auto it = row_of.find(e.example_id);
    if (it == row_of.end()) throw ScenarioError("pseudo-label for unknown id " + std::to_string(e.example_id));
    rows.push_back(it->second);
    out.labels(static_cast<Eigen::Index>(k)) = e.label;
  }
  out.x = unlabeled.gather(rows);
  return out;
}

std::vector<Parameter> copy_values(const std::vector<Parameter*>& params) {
  std::vector<Parameter> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back({p->value, Matrix()});
  return out;
}

}  // namespace

Step2Result run_step2(const PseudoLabeledSet& pseudo, const ScenarioBundle& scenario, const TrainConfig& config) {
  config.validate();
  if (pseudo.empty()) throw ScenarioError("step 2 needs a non-empty pseudo-labeled set");
  const ModelConfig model = resolve_model(config, scenario.shape());
  std::mt19937_64 init_rng(derive_seed(config.seed, kStep2Init));
  Step2Result result{FinalClassifier(scenario.shape(), model.classifier, init_rng), {}, 0, false};
  FinalClassifier& classifier = result.classifier;

  std::mt19937_64 rng(derive_seed(config.seed, kStep2Batches));
  std::vector<std::size_t> order(pseudo.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t n_holdout = 0;
  if (config.stopping == StoppingMode::patience && pseudo.size() >= 2) {
    std::shuffle(order.begin(), order.end(), rng);
    n_holdout = std::max<std::size_t>(1, static_cast<std::size_t>(config.holdout_fraction * pseudo.size()));
  }
  const std::span<const std::size_t> all(order);
  const PseudoData holdout = pseudo_rows(pseudo, scenario.target_unlabeled, all.first(n_holdout));
  const PseudoData train = pseudo_rows(pseudo, scenario.target_unlabeled, all.subspan(n_holdout));
  const double epsilon = config.loss.epsilon;

  Optimizer optimizer(config.step2_optimizer);
  BatchCycler cycle(static_cast<std::size_t>(train.x.rows()), rng);
  const std::size_t batch = static_cast<std::size_t>(config.step2_batch);
  const std::size_t steps = (static_cast<std::size_t>(train.x.rows()) + batch - 1) / batch;

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Parameter> best_values;
  for (int epoch = 1; epoch <= config.step2_max_epoch; ++epoch) {
    optimizer.set_epoch(epoch);
    double total = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto idx = cycle.next(batch);
      Matrix x(static_cast<Eigen::Index>(idx.size()), train.x.cols());
      Vector y(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = train.x.row(static_cast<Eigen::Index>(idx[k]));
        y(static_cast<Eigen::Index>(k)) = train.labels(static_cast<Eigen::Index>(idx[k]));
      }
      for (auto* p : classifier.parameters()) p->grad.setZero();
      const double value = evaluate_step2(classifier, x, y, config.label_mode, epsilon, true);
      if (!std::isfinite(value)) {
        throw TrainingDivergedError("step-2 loss became non-finite",
                                    "epoch " + std::to_string(epoch) + ", step " + std::to_string(s));
      }
      optimizer.step(classifier.parameters());
      total += value;
    }
    Step2EpochTrace trace{epoch, total / static_cast<double>(steps), std::numeric_limits<double>::quiet_NaN()};
    result.epochs_run = epoch;
    if (n_holdout > 0) {
      trace.holdout_loss = evaluate_step2(classifier, holdout.x, holdout.labels, config.label_mode, epsilon, false);
      result.trace.push_back(trace);
      if (trace.holdout_loss < best) {
        best = trace.holdout_loss;
        since_best = 0;
        best_values = copy_values(classifier.parameters());
      } else if (++since_best >= config.patience) {
        result.stopped_early = epoch < config.step2_max_epoch;
        break;
      }
    } else {
      result.trace.push_back(trace);
    }
  }
  if (!best_values.empty()) {
    const auto params = classifier.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i].value;
  }
  return result;
}

namespace {

nlohmann::json run_manifest(Method method, const ScenarioBundle& scenario, const TrainConfig& config,
                            const LossConfig& loss, const ModelConfig& model) {
  nlohmann::json j;
  j["method"] = to_string(method);
  j["seed"] = config.seed;
  TrainConfig effective = config;
  effective.model = model;
  j["train_config"] = to_json(effective);
  j["effective_pi"] = loss.pi;
  j["scenario"] = {{"class_prior", scenario.class_prior},
                   {"label_frequency", scenario.label_frequency},
                   {"seed", scenario.seed},
                   {"shape", to_json(scenario.shape())},
                   {"n_source", scenario.source.size()},
                   {"n_target_positive", scenario.target_positive.size()},
                   {"n_target_unlabeled", scenario.target_unlabeled.size()}};
  j["fingerprints"] = {{"source", hex64(fingerprint(scenario.source))},
                       {"target_positive", hex64(fingerprint(scenario.target_positive))},
                       {"target_unlabeled", hex64(fingerprint(scenario.target_unlabeled))}};
  return j;
}

}  // namespace

RunOutcome run_pu_da(const ScenarioBundle& scenario, const TrainConfig& config) {
  const LossConfig loss = resolve_loss(config, scenario);
  Step1Result step1 = run_step1(scenario, config, Method::pu_da);
  ExtractionResult extraction = extract_pseudo_labels(step1.candidates, config.extraction);

  RunOutcome out;
  auto& a = out.artifacts;
  a.method = Method::pu_da;
  a.manifest = run_manifest(Method::pu_da, scenario, config, loss, step1.model);
  a.step1_trace = std::move(step1.trace);
  a.thresholds = std::move(step1.thresholds);
  a.candidates = std::move(step1.candidates);
  a.pseudo_labels = std::move(extraction.pseudo_labels);
  if (extraction.status == ExtractionStatus::empty) {
    a.status = RunStatus::degraded;
    a.status_reason = "empty pseudo-labeled set; (G, F) from step 1 used as the classifier";
    out.classifier = std::make_unique<EmbeddingClassifier>(step1.network, step1.model);
  } else {
    Step2Result step2 = run_step2(a.pseudo_labels, scenario, config);
    a.step2_trace = std::move(step2.trace);
    a.manifest["step2_epochs_run"] = step2.epochs_run;
    a.manifest["step2_stopped_early"] = step2.stopped_early;
    out.classifier = std::make_unique<FinalClassifier>(std::move(step2.classifier));
  }
  a.manifest["status"] = to_string(a.status);
  a.manifest["status_reason"] = a.status_reason;
  a.manifest["pseudo_labels"] = {{"positives", a.pseudo_labels.positives()},
                                 {"negatives", a.pseudo_labels.negatives()}};
  a.manifest["classifier"] = out.classifier->kind();
  return out;
}

RunOutcome run_baseline(Method kind, const ScenarioBundle& scenario, const TrainConfig& config) {
  if (kind == Method::pu_da) throw ConfigError("pu_da is not a baseline");
  const LossConfig loss = resolve_loss(config, scenario);
  Step1Result step1 = run_step1(scenario, config, kind);
  RunOutcome out;
  auto& a = out.artifacts;
  a.method = kind;
  a.manifest = run_manifest(kind, scenario, config, loss, step1.model);
  a.step1_trace = std::move(step1.trace);
  a.manifest["status"] = to_string(a.status);
  a.manifest["status_reason"] = a.status_reason;
  out.classifier = std::make_unique<EmbeddingClassifier>(step1.network, step1.model);
  a.manifest["classifier"] = out.classifier->kind();
  return out;
}

RunOutcome run_method(Method method, const ScenarioBundle& scenario, const TrainConfig& config) {
  return method == Method::pu_da ? run_pu_da(scenario, config) : run_baseline(method, scenario, config);
}

namespace {

std::ofstream open_output(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_run_artifacts(const std::filesystem::path& dir, const RunOutcome& outcome) {
  std::filesystem::create_directories(dir);
  const auto& a = outcome.artifacts;
  open_output(dir / "manifest.json") << a.manifest.dump(2) << "\n";
  save_classifier(dir / "classifier.json", *outcome.classifier);

  auto loss = open_output(dir / "loss_trace.csv");
  loss << "epoch,total,pu,cls,kl,reconstruction,safn,clamped_fraction,learning_rate,harvested\n";
  for (const auto& t : a.step1_trace) {
    const auto& m = t.mean_terms;
    loss << t.epoch << "," << m.total << "," << m.pu << "," << m.cls << "," << m.kl << "," << m.reconstruction << ","
         << m.safn << "," << t.clamped_fraction << "," << t.learning_rate << "," << t.harvested << "\n";
  }
  if (a.method != Method::pu_da) return;

  auto thresholds = open_output(dir / "thresholds.csv");
  thresholds << "epoch,t_pos,t_neg\n";
  for (const auto& t : a.thresholds) thresholds << t.epoch << "," << t.t_pos << "," << t.t_neg << "\n";
  auto step2 = open_output(dir / "step2_trace.csv");
  step2 << "epoch,train_loss,holdout_loss\n";
  for (const auto& t : a.step2_trace) {
    step2 << t.epoch << "," << t.train_loss << ",";
    if (std::isfinite(t.holdout_loss)) step2 << t.holdout_loss;
    step2 << "\n";
  }
  write_candidates(dir / "candidates.csv", a.candidates);
  write_pseudo_labels(dir / "pseudo_labels.csv", a.pseudo_labels);
}

}  // namespace puda
