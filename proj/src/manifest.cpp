#include "puda/manifest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace puda {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ConfigError("ragged matrix in manifest");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json domain_to_json(const DomainSource& d) {
  return {{"path", d.path},
          {"positive_class", d.positive_class},
          {"negative_class", d.negative_class},
          {"max_per_class", d.max_per_class}};
}

DomainSource domain_from_json(const json& j) {
  DomainSource d;
  d.path = j.at("path").get<std::string>();
  d.positive_class = j.at("positive_class").get<std::string>();
  d.negative_class = j.at("negative_class").get<std::string>();
  d.max_per_class = j.value("max_per_class", 0);
  return d;
}

ExampleSet load_binary_domain(const DomainSource& domain, const Shape& shape, Id first_id, const fs::path& base) {
  fs::path root = domain.path;
  if (root.is_relative() && !base.empty()) root = base / root;
  ImageFolderOptions options;
  options.shape = shape;
  options.class_map = {{domain.positive_class, 1}, {domain.negative_class, 0}};
  options.first_id = first_id;
  ExampleSet all = load_image_folder(root, options);
  ExampleSet binary = binarize(all, 1, 0);
  if (domain.max_per_class <= 0) return binary;
  std::vector<std::size_t> keep;
  int kept[2] = {0, 0};
  for (std::size_t i = 0; i < binary.size(); ++i) {
    const int y = binary.true_label(i);
    if (kept[y] < domain.max_per_class) {
      keep.push_back(i);
      ++kept[y];
    }
  }
  return binary.subset(keep);
}

}  // namespace

json to_json(const Shape& shape) { return json::array({shape.channels, shape.height, shape.width}); }

Shape shape_from_json(const json& j) {
  const auto dims = j.get<std::vector<int>>();
  if (dims.size() != 3) throw ConfigError("shape must be [channels, height, width]");
  return {dims[0], dims[1], dims[2]};
}

json to_json(const SyntheticShiftSpec& spec) {
  json j;
  j["n_per_class"] = spec.n_per_class;
  j["noise_scale"] = spec.noise_scale;
  for (int k = 0; k < 2; ++k) {
    const std::string cls = k == 1 ? "positive" : "negative";
    j["source"][cls]["mean"] = vector_to_json(spec.source_means[k]);
    j["source"][cls]["covariance"] = matrix_to_json(spec.source_covariances[k]);
    j["target"][cls]["mean"] = vector_to_json(spec.target_means[k]);
    j["target"][cls]["covariance"] = matrix_to_json(spec.target_covariances[k]);
  }
  return j;
}

SyntheticShiftSpec synthetic_spec_from_json(const json& j) {
  SyntheticShiftSpec spec;
  spec.n_per_class = j.at("n_per_class").get<int>();
  spec.noise_scale = j.value("noise_scale", 0.0);
  for (int k = 0; k < 2; ++k) {
    const std::string cls = k == 1 ? "positive" : "negative";
    spec.source_means[k] = vector_from_json(j.at("source").at(cls).at("mean"));
    spec.source_covariances[k] = matrix_from_json(j.at("source").at(cls).at("covariance"));
    spec.target_means[k] = vector_from_json(j.at("target").at(cls).at("mean"));
    spec.target_covariances[k] = matrix_from_json(j.at("target").at(cls).at("covariance"));
  }
  return spec;
}

json to_json(const ScenarioManifest& m) {
  json j;
  j["name"] = m.name;
  j["kind"] = m.kind;
  j["shape"] = to_json(m.shape);
  j["label_frequency"] = m.label_frequency;
  j["seed"] = m.seed;
  j["class_prior"] = m.class_prior;
  if (m.kind == "synthetic") {
    j["synthetic"] = to_json(m.synthetic);
    j["data_seed"] = m.data_seed;
  } else {
    j["source"] = domain_to_json(m.source);
    j["target"] = domain_to_json(m.target);
  }
  return j;
}

ScenarioManifest manifest_from_json(const json& j) {
  ScenarioManifest m;
  m.name = j.value("name", std::string("scenario"));
  m.kind = j.at("kind").get<std::string>();
  m.label_frequency = j.at("label_frequency").get<double>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.class_prior = j.value("class_prior", 0.0);
  if (m.kind == "synthetic") {
    m.synthetic = synthetic_spec_from_json(j.at("synthetic"));
    m.data_seed = j.value("data_seed", std::uint64_t{0});
    m.shape = Shape{1, 1, m.synthetic.dim()};
  } else if (m.kind == "image_folder") {
    m.source = domain_from_json(j.at("source"));
    m.target = domain_from_json(j.at("target"));
    m.shape = shape_from_json(j.at("shape"));
  } else {
    throw ConfigError("unknown scenario kind: " + m.kind);
  }
  return m;
}

void save_manifest(const fs::path& file, const ScenarioManifest& manifest) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write manifest: " + file.string());
  out << to_json(manifest).dump(2) << "\n";
}

ScenarioManifest load_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read manifest: " + file.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + file.string() + ": " + e.what());
  }
}

ScenarioBundle build_scenario(const ScenarioManifest& manifest, double c, std::uint64_t seed,
                              const fs::path& base_dir) {
  if (manifest.kind == "synthetic") {
    auto [source, target] = sample_synthetic_domains(manifest.synthetic, manifest.data_seed);
    return assemble_scenario(std::move(source), target, c, seed);
  }
  ExampleSet source = load_binary_domain(manifest.source, manifest.shape, 0, base_dir);
  Id offset = 0;
  for (const Id id : source.ids()) offset = std::max(offset, id + 1);
  ExampleSet target = load_binary_domain(manifest.target, manifest.shape, offset, base_dir);
  return assemble_scenario(std::move(source), target, c, seed);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::uint64_t fingerprint(const ExampleSet& set) {
  std::uint64_t h = fnv1a(to_string(set.shape()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Id id = set.id(i);
    const int meta[2] = {set.true_label(i), set.labeled(i)};
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&id), sizeof id), h);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(meta), sizeof meta), h);
    const auto row = set.row(i);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(row.data()), row.size_bytes()), h);
  }
  return h;
}

}  // namespace puda
