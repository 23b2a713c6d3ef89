#include "puda/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace puda {

namespace fs = std::filesystem;

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << shape.channels << "x" << shape.height << "x" << shape.width;
  return out.str();
}

void ExampleSet::add(const Example& example) {
  add(example.id, std::span<const double>(example.features.data(), example.features.size()), example.true_label,
      example.labeled);
}

void ExampleSet::add(Id id, std::span<const double> features, int true_label, int labeled) {
  if (static_cast<int>(features.size()) != dim()) {
    throw ShapeError("example " + std::to_string(id) + " has " + std::to_string(features.size()) +
                     " features, expected " + std::to_string(dim()) + " (" + to_string(shape_) + ")");
  }
  data_.insert(data_.end(), features.begin(), features.end());
  ids_.push_back(id);
  labels_.push_back(true_label);
  labeled_.push_back(labeled);
}

Example ExampleSet::at(std::size_t index) const {
  Example example;
  example.id = ids_.at(index);
  example.features = Eigen::Map<const Vector>(data_.data() + index * dim(), dim());
  example.true_label = labels_[index];
  example.labeled = labeled_[index];
  return example;
}

std::span<const double> ExampleSet::row(std::size_t index) const {
  return {data_.data() + index * dim(), static_cast<std::size_t>(dim())};
}

Eigen::Map<const Matrix> ExampleSet::features() const {
  return {data_.data(), static_cast<Eigen::Index>(size()), dim()};
}

Matrix ExampleSet::gather(std::span<const std::size_t> indices) const {
  Matrix out(static_cast<Eigen::Index>(indices.size()), dim());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(static_cast<Eigen::Index>(r)).data());
  }
  return out;
}

ExampleSet ExampleSet::subset(std::span<const std::size_t> indices) const {
  ExampleSet out(shape_);
  for (const auto i : indices) {
    out.add(ids_[i], row(i), labels_[i], labeled_[i]);
  }
  return out;
}

ExampleSet ScenarioBundle::source_negatives() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source.true_label(i) == 0) rows.push_back(i);
  }
  return source.subset(rows);
}

bool SyntheticShiftSpec::operator==(const SyntheticShiftSpec& other) const {
  if (n_per_class != other.n_per_class || noise_scale != other.noise_scale) return false;
  for (int k = 0; k < 2; ++k) {
    if (source_means[k] != other.source_means[k] || target_means[k] != other.target_means[k] ||
        source_covariances[k] != other.source_covariances[k] ||
        target_covariances[k] != other.target_covariances[k]) {
      return false;
    }
  }
  return true;
}

SyntheticShiftSpec isotropic_shift_spec(int dim, int n_per_class, double separation, const Vector& shift) {
  if (dim < 1 || shift.size() != dim) throw ConfigError("shift vector must have `dim` entries");
  SyntheticShiftSpec spec;
  spec.n_per_class = n_per_class;
  for (int k = 0; k < 2; ++k) {
    Vector mean = Vector::Zero(dim);
    mean(0) = (k == 1 ? 0.5 : -0.5) * separation;
    spec.source_means[k] = mean;
    spec.target_means[k] = mean + shift;
    spec.source_covariances[k] = Matrix::Identity(dim, dim);
    spec.target_covariances[k] = Matrix::Identity(dim, dim);
  }
  return spec;
}

ExampleSet binarize(const ExampleSet& dataset, int positive_class, int negative_class) {
  if (positive_class == negative_class) {
    throw ScenarioError("positive and negative class must differ");
  }
  const auto labels = dataset.true_labels();
  const bool has_pos = std::find(labels.begin(), labels.end(), positive_class) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), negative_class) != labels.end();
  if (!has_pos || !has_neg) {
    throw ScenarioError("class " + std::to_string(has_pos ? negative_class : positive_class) +
                        " not present in dataset");
  }
  ExampleSet out(dataset.shape());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int label = labels[i];
    if (label == positive_class || label == negative_class) {
      out.add(dataset.id(i), dataset.row(i), label == positive_class ? 1 : 0, 0);
    }
  }
  return out;
}

std::size_t labeled_count(std::size_t n_positive, double c) {
  const auto k = static_cast<std::size_t>(std::llround(c * static_cast<double>(n_positive)));
  return std::clamp<std::size_t>(k, 1, n_positive);
}

LabelSplit apply_label_frequency(const ExampleSet& binary_target, double c, std::uint64_t seed) {
  if (!(c > 0.0 && c <= 1.0)) {
    throw ScenarioError("label frequency c must lie in (0, 1], got " + std::to_string(c));
  }
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < binary_target.size(); ++i) {
    const int y = binary_target.true_label(i);
    if (y != 0 && y != 1) throw ScenarioError("target set is not binarized");
    if (y == 1) positives.push_back(i);
  }
  if (positives.empty()) throw ScenarioError("target set contains no positives");

  const std::size_t k = labeled_count(positives.size(), c);
  std::mt19937_64 rng(seed);
  std::shuffle(positives.begin(), positives.end(), rng);
  std::vector<std::size_t> chosen(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());

  LabelSplit split;
  split.target_unlabeled = binary_target;
  for (std::size_t i = 0; i < binary_target.size(); ++i) split.target_unlabeled.set_labeled(i, 0);
  for (const auto i : chosen) split.target_unlabeled.set_labeled(i, 1);
  split.target_positive = split.target_unlabeled.subset(chosen);
  return split;
}

namespace {

Matrix cholesky_factor(const Matrix& cov, const std::string& what) {
  if (cov.rows() != cov.cols()) throw ScenarioError(what + " covariance is not square");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ScenarioError(what + " covariance is not symmetric");
  }
  const Eigen::MatrixXd dense = cov;
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) throw ScenarioError(what + " covariance is not positive definite");
  return llt.matrixL().toDenseMatrix();
}

void sample_domain(ExampleSet& out, const std::array<Vector, 2>& means, const std::array<Matrix, 2>& covs,
                   const SyntheticShiftSpec& spec, Id& next_id, std::mt19937_64& rng, const std::string& name) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = spec.dim();
  Vector draw(d);
  for (int k = 0; k < 2; ++k) {
    if (means[k].size() != d || covs[k].rows() != d) {
      throw ScenarioError(name + " class " + std::to_string(k) + " has inconsistent dimension");
    }
    const Matrix factor = cholesky_factor(covs[k], name + " class " + std::to_string(k));
    for (int n = 0; n < spec.n_per_class; ++n) {
      for (int j = 0; j < d; ++j) draw(j) = normal(rng);
      Vector x = means[k] + factor * draw;
      if (spec.noise_scale > 0.0) {
        for (int j = 0; j < d; ++j) x(j) += spec.noise_scale * normal(rng);
      }
      out.add(next_id++, std::span<const double>(x.data(), static_cast<std::size_t>(d)), k, 0);
    }
  }
}

}  // namespace

std::pair<ExampleSet, ExampleSet> sample_synthetic_domains(const SyntheticShiftSpec& spec, std::uint64_t seed) {
  if (spec.n_per_class < 1) throw ScenarioError("n_per_class must be positive");
  if (spec.dim() < 1) throw ScenarioError("synthetic spec has empty means");
  if (spec.noise_scale < 0.0) throw ScenarioError("noise_scale must be >= 0");
  const Shape shape{1, 1, spec.dim()};
  ExampleSet source(shape);
  ExampleSet target(shape);
  std::mt19937_64 rng(seed);
  Id next_id = 0;
  sample_domain(source, spec.source_means, spec.source_covariances, spec, next_id, rng, "source");
  sample_domain(target, spec.target_means, spec.target_covariances, spec, next_id, rng, "target");
  return {std::move(source), std::move(target)};
}

ScenarioBundle assemble_scenario(ExampleSet source, const ExampleSet& binary_target, double c, std::uint64_t seed) {
  if (source.shape() != binary_target.shape()) {
    throw ScenarioError("source shape " + to_string(source.shape()) + " differs from target shape " +
                        to_string(binary_target.shape()));
  }
  std::unordered_set<Id> seen;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const int y = source.true_label(i);
    if (y != 0 && y != 1) throw ScenarioError("source set is not binarized");
    source.set_labeled(i, 1);
    if (!seen.insert(source.id(i)).second) throw ScenarioError("duplicate id " + std::to_string(source.id(i)));
  }
  for (const auto id : binary_target.ids()) {
    if (!seen.insert(id).second) throw ScenarioError("duplicate id " + std::to_string(id));
  }
  auto split = apply_label_frequency(binary_target, c, seed);
  ScenarioBundle bundle;
  bundle.source = std::move(source);
  bundle.target_positive = std::move(split.target_positive);
  bundle.target_unlabeled = std::move(split.target_unlabeled);
  bundle.class_prior = empirical_prior(bundle.target_unlabeled);
  bundle.label_frequency = c;
  bundle.seed = seed;
  return bundle;
}

ScenarioBundle make_synthetic_shift(const SyntheticShiftSpec& spec, double c, std::uint64_t seed) {
  auto [source, target] = sample_synthetic_domains(spec, seed);
  return assemble_scenario(std::move(source), target, c, seed);
}

ExampleSet load_image_folder(const fs::path& root, const ImageFolderOptions& options) {
  if (!fs::is_directory(root)) throw ScenarioError("image folder not found: " + root.string());
  const Shape shape = options.shape;
  if (shape.channels != 1 && shape.channels != 3) throw ScenarioError("only 1 or 3 channel images are supported");

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  std::vector<std::pair<fs::path, int>> classes;
  if (options.class_map.empty()) {
    for (std::size_t k = 0; k < class_dirs.size(); ++k) classes.emplace_back(class_dirs[k], static_cast<int>(k));
  } else {
    for (const auto& [name, label] : options.class_map) {
      const auto dir = root / name;
      if (!fs::is_directory(dir)) throw ScenarioError("class directory missing: " + dir.string());
      classes.emplace_back(dir, label);
    }
    std::sort(classes.begin(), classes.end());
  }
  if (classes.empty()) throw ScenarioError("no class directories under " + root.string());

  ExampleSet out(shape);
  Id next_id = options.first_id;
  std::vector<double> buffer(static_cast<std::size_t>(shape.size()));
  for (const auto& [dir, label] : classes) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    if (files.empty()) throw ScenarioError("empty class directory: " + dir.string());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      cv::Mat image = cv::imread(file.string(), shape.channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
      if (image.empty()) throw ScenarioError("cannot decode image: " + file.string());
      if (shape.channels == 3) cv::cvtColor(image, image, cv::COLOR_BGR2RGB);
      const double max_value = image.depth() == CV_16U ? 65535.0 : 255.0;
      if (image.rows != shape.height || image.cols != shape.width) {
        cv::resize(image, image, cv::Size(shape.width, shape.height), 0, 0, cv::INTER_AREA);
      }
      cv::Mat scaled;
      image.convertTo(scaled, CV_MAKETYPE(CV_64F, shape.channels), 1.0 / max_value);
      const int plane = shape.height * shape.width;
      for (int r = 0; r < shape.height; ++r) {
        const double* px = scaled.ptr<double>(r);
        for (int col = 0; col < shape.width; ++col) {
          for (int ch = 0; ch < shape.channels; ++ch) {
            buffer[static_cast<std::size_t>(ch * plane + r * shape.width + col)] = px[col * shape.channels + ch];
          }
        }
      }
      out.add(next_id++, buffer, label, 0);
    }
  }
  return out;
}

double empirical_prior(const ExampleSet& target) {
  if (target.empty()) return 0.0;
  const auto labels = target.true_labels();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  return static_cast<double>(positives) / static_cast<double>(target.size());
}

EvaluationSet evaluation_set(const ScenarioBundle& scenario) {
  const auto& pool = scenario.target_unlabeled;
  std::vector<std::size_t> rows;
  EvaluationSet eval;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.labeled(i) == 0) {
      rows.push_back(i);
      eval.truths.push_back(pool.true_label(i));
      eval.ids.push_back(pool.id(i));
    }
  }
  eval.features = pool.gather(rows);
  return eval;
}

}  // namespace puda
