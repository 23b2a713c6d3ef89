#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "puda/datasets.hpp"
#include "puda/models.hpp"

namespace puda {

struct Thresholds {
  double t_pos = 0.5;  // mean p over D_T^P
  double t_neg = 0.5;  // mean p over D_S^N
  int epoch = 0;
};

struct CandidateRecord {
  Id example_id = 0;
  double probability = 0.0;
  int epoch = 0;

  bool operator==(const CandidateRecord&) const = default;
};

// D_c: append-only multiset of harvested records. An id may recur with
// different probabilities across epochs.
class CandidateSet {
 public:
  void append(const CandidateRecord& record);
  void append(std::span<const CandidateRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::span<const CandidateRecord> records() const { return records_; }
  // Distinct ids in first-harvest order.
  std::span<const Id> ids() const { return order_; }
  std::size_t count(Id example_id) const;
  // Indices into records() for one id, in append order.
  std::span<const std::size_t> occurrences(Id example_id) const;

  bool operator==(const CandidateSet& other) const { return records_ == other.records_; }

 private:
  std::vector<CandidateRecord> records_;
  std::vector<Id> order_;
  std::unordered_map<Id, std::vector<std::size_t>> by_id_;
};

std::size_t count(Id example_id, const CandidateSet& candidates);

struct ExtractionConfig {
  double t_p = 0.95;
  double t_n = 0.05;
  int m = 20;

  void validate() const;
};

enum class Polarity { positive, negative };

struct PseudoLabel {
  Id example_id = 0;
  double label = 0.0;  // mean recorded probability
  Polarity polarity = Polarity::positive;

  bool operator==(const PseudoLabel&) const = default;
};

// D_pseudo = D_pseudo^P and D_pseudo^N, disjoint by id. Entries are sorted by id.
struct PseudoLabeledSet {
  std::vector<PseudoLabel> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  std::size_t positives() const;
  std::size_t negatives() const;
  bool operator==(const PseudoLabeledSet&) const = default;
};

enum class ExtractionStatus { ok, empty };

struct ExtractionResult {
  ExtractionStatus status = ExtractionStatus::empty;
  PseudoLabeledSet pseudo_labels;
};

Thresholds compute_thresholds(std::span<const double> p_target_positive, std::span<const double> p_source_negative,
                              int epoch = 0);
Thresholds compute_thresholds(const PuDaNetwork& network, const ExampleSet& target_positive,
                              const ExampleSet& source_negatives, int epoch = 0);

// Records for every example with p > t_pos or p < t_neg (strict).
std::vector<CandidateRecord> harvest_epoch(std::span<const Id> ids, std::span<const double> probabilities,
                                           const Thresholds& thresholds, int epoch);
std::vector<CandidateRecord> harvest_epoch(const PuDaNetwork& network, const ExampleSet& target_unlabeled,
                                           const Thresholds& thresholds, int epoch);

ExtractionResult extract_pseudo_labels(const CandidateSet& candidates, const ExtractionConfig& config);

// Flat tabular exports: `id,p,epoch` and `id,label,polarity`.
void write_candidates(const std::filesystem::path& file, const CandidateSet& candidates);
CandidateSet read_candidates(const std::filesystem::path& file);
void write_pseudo_labels(const std::filesystem::path& file, const PseudoLabeledSet& pseudo);
PseudoLabeledSet read_pseudo_labels(const std::filesystem::path& file);

}  // namespace puda
