#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "puda/datasets.hpp"

namespace puda {

// One image-folder domain: `<path>/<class_name>/<image files>`.
struct DomainSource {
  std::string path;
  std::string positive_class;
  std::string negative_class;
  int max_per_class = 0;  // 0 keeps every image

  bool operator==(const DomainSource&) const = default;
};

// Recipe for a scenario. Stores the generator, not a labeled subset: the
// labeled positives are drawn per run seed.
struct ScenarioManifest {
  std::string name = "scenario";
  std::string kind = "synthetic";  // "synthetic" | "image_folder"
  SyntheticShiftSpec synthetic;
  std::uint64_t data_seed = 0;
  DomainSource source;
  DomainSource target;
  Shape shape{1, 1, 1};
  double label_frequency = 0.05;
  std::uint64_t seed = 0;
  double class_prior = 0.0;  // recorded on prepare, recomputed on build

  bool operator==(const ScenarioManifest&) const = default;
};

nlohmann::json to_json(const Shape& shape);
Shape shape_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticShiftSpec& spec);
SyntheticShiftSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioManifest& manifest);
ScenarioManifest manifest_from_json(const nlohmann::json& j);

void save_manifest(const std::filesystem::path& file, const ScenarioManifest& manifest);
ScenarioManifest load_manifest(const std::filesystem::path& file);

// Relative dataset paths resolve against `base_dir`.
ScenarioBundle build_scenario(const ScenarioManifest& manifest, double c, std::uint64_t seed,
                              const std::filesystem::path& base_dir = {});

// Stable 64-bit FNV-1a, used for cache keys and data fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t value);
std::uint64_t fingerprint(const ExampleSet& set);

}  // namespace puda
