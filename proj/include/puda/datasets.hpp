#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "puda/common.hpp"

namespace puda {

// Feature layout of every example in a scenario. Plain vectors use
// {1, 1, d}; images are stored channel-major.
struct Shape {
  int channels = 1;
  int height = 1;
  int width = 1;

  int size() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

struct Example {
  Id id = 0;
  Vector features;
  int true_label = 0;
  int labeled = 0;  // s: only ever 1 for positives
};

// Columnar storage for a pool of examples of one shape. Labels are
// class labels before binarization and {0,1} after.
class ExampleSet {
 public:
  ExampleSet() = default;
  explicit ExampleSet(Shape shape) : shape_(shape) {}

  void add(const Example& example);
  void add(Id id, std::span<const double> features, int true_label, int labeled);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const Shape& shape() const { return shape_; }
  int dim() const { return shape_.size(); }

  Example at(std::size_t index) const;
  Id id(std::size_t index) const { return ids_[index]; }
  int true_label(std::size_t index) const { return labels_[index]; }
  int labeled(std::size_t index) const { return labeled_[index]; }
  std::span<const Id> ids() const { return ids_; }
  std::span<const int> true_labels() const { return labels_; }
  std::span<const int> labeled_flags() const { return labeled_; }
  std::span<const double> row(std::size_t index) const;

  Eigen::Map<const Matrix> features() const;
  Matrix gather(std::span<const std::size_t> indices) const;
  ExampleSet subset(std::span<const std::size_t> indices) const;

  void set_labeled(std::size_t index, int labeled) { labeled_[index] = labeled; }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<Id> ids_;
  std::vector<int> labels_;
  std::vector<int> labeled_;
};

struct ScenarioBundle {
  ExampleSet source;            // D_S, fully labeled, s = 1
  ExampleSet target_positive;   // D_T^P
  ExampleSet target_unlabeled;  // D_T^U, contains D_T^P by id
  double class_prior = 0.5;
  double label_frequency = 1.0;
  std::uint64_t seed = 0;

  Shape shape() const { return source.shape(); }
  // Source examples with label 0 (D_S^N).
  ExampleSet source_negatives() const;
};

// Two-class Gaussian shift generator. Index 0 is the negative class and
// index 1 the positive class.
struct SyntheticShiftSpec {
  int n_per_class = 200;
  std::array<Vector, 2> source_means;
  std::array<Matrix, 2> source_covariances;
  std::array<Vector, 2> target_means;
  std::array<Matrix, 2> target_covariances;
  double noise_scale = 0.0;

  int dim() const { return static_cast<int>(source_means[0].size()); }
  bool operator==(const SyntheticShiftSpec& other) const;
};

// Isotropic two-class problem with class means +-separation/2 along the
// first axis, unit covariances, and the target translated by `shift`.
SyntheticShiftSpec isotropic_shift_spec(int dim, int n_per_class, double separation, const Vector& shift);

ExampleSet binarize(const ExampleSet& dataset, int positive_class, int negative_class);

struct LabelSplit {
  ExampleSet target_positive;
  ExampleSet target_unlabeled;
};

LabelSplit apply_label_frequency(const ExampleSet& binary_target, double c, std::uint64_t seed);

std::size_t labeled_count(std::size_t n_positive, double c);

// Samples both domains without any labeling. Ids: source first, then target.
std::pair<ExampleSet, ExampleSet> sample_synthetic_domains(const SyntheticShiftSpec& spec, std::uint64_t seed);

ScenarioBundle assemble_scenario(ExampleSet source, const ExampleSet& binary_target, double c, std::uint64_t seed);

ScenarioBundle make_synthetic_shift(const SyntheticShiftSpec& spec, double c, std::uint64_t seed);

struct ImageFolderOptions {
  Shape shape{1, 16, 16};
  // Directory name -> class label. Empty: sorted directory index.
  std::map<std::string, int> class_map;
  Id first_id = 0;
};

ExampleSet load_image_folder(const std::filesystem::path& root, const ImageFolderOptions& options);

double empirical_prior(const ExampleSet& target);

// Evaluation view of D_T^U: everything except the revealed positives.
struct EvaluationSet {
  Matrix features;
  std::vector<int> truths;
  std::vector<Id> ids;
};

EvaluationSet evaluation_set(const ScenarioBundle& scenario);

}  // namespace puda
