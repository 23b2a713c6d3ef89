#include "puda/selector.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace puda {

void CandidateSet::append(const CandidateRecord& record) {
  auto& slots = by_id_[record.example_id];
  if (slots.empty()) order_.push_back(record.example_id);
  slots.push_back(records_.size());
  records_.push_back(record);
}

void CandidateSet::append(std::span<const CandidateRecord> records) {
  for (const auto& r : records) append(r);
}

std::size_t CandidateSet::count(Id example_id) const {
  const auto it = by_id_.find(example_id);
  return it == by_id_.end() ? 0 : it->second.size();
}

std::span<const std::size_t> CandidateSet::occurrences(Id example_id) const {
  const auto it = by_id_.find(example_id);
  if (it == by_id_.end()) return {};
  return it->second;
}

std::size_t count(Id example_id, const CandidateSet& candidates) { return candidates.count(example_id); }

void ExtractionConfig::validate() const {
  if (!(t_n >= 0.0 && t_n < t_p && t_p <= 1.0)) throw ConfigError("extraction thresholds need 0 <= t_N < t_P <= 1");
  if (m < 1) throw ConfigError("extraction count m must be >= 1");
}

std::size_t PseudoLabeledSet::positives() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                [](const auto& e) { return e.polarity == Polarity::positive; }));
}

std::size_t PseudoLabeledSet::negatives() const { return size() - positives(); }

Thresholds compute_thresholds(std::span<const double> p_target_positive, std::span<const double> p_source_negative,
                              int epoch) {
  if (p_target_positive.empty()) throw ScenarioError("threshold needs at least one labeled target positive");
  if (p_source_negative.empty()) throw ScenarioError("threshold needs source negatives; the source has none");
  Thresholds t;
  t.t_pos = std::accumulate(p_target_positive.begin(), p_target_positive.end(), 0.0) /
            static_cast<double>(p_target_positive.size());
  t.t_neg = std::accumulate(p_source_negative.begin(), p_source_negative.end(), 0.0) /
            static_cast<double>(p_source_negative.size());
  t.epoch = epoch;
  return t;
}

Thresholds compute_thresholds(const PuDaNetwork& network, const ExampleSet& target_positive,
                              const ExampleSet& source_negatives, int epoch) {
  if (target_positive.empty()) throw ScenarioError("threshold needs at least one labeled target positive");
  if (source_negatives.empty()) throw ScenarioError("threshold needs source negatives; the source has none");
  const Vector p_pos = predict_proba(network, target_positive.features());
  const Vector p_neg = predict_proba(network, source_negatives.features());
  return compute_thresholds(std::span<const double>(p_pos.data(), static_cast<std::size_t>(p_pos.size())),
                            std::span<const double>(p_neg.data(), static_cast<std::size_t>(p_neg.size())), epoch);
}

std::vector<CandidateRecord> harvest_epoch(std::span<const Id> ids, std::span<const double> probabilities,
                                           const Thresholds& thresholds, int epoch) {
  if (ids.size() != probabilities.size()) throw ShapeError("harvest: id and probability counts differ");
  std::vector<CandidateRecord> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double p = probabilities[i];
    if (p > thresholds.t_pos || p < thresholds.t_neg) out.push_back({ids[i], p, epoch});
  }
  return out;
}

std::vector<CandidateRecord> harvest_epoch(const PuDaNetwork& network, const ExampleSet& target_unlabeled,
                                           const Thresholds& thresholds, int epoch) {
  if (target_unlabeled.empty()) return {};
  const Vector p = predict_proba(network, target_unlabeled.features());
  return harvest_epoch(target_unlabeled.ids(), std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                       thresholds, epoch);
}

ExtractionResult extract_pseudo_labels(const CandidateSet& candidates, const ExtractionConfig& config) {
  config.validate();
  std::vector<Id> ids(candidates.ids().begin(), candidates.ids().end());
  std::sort(ids.begin(), ids.end());
  const auto records = candidates.records();

  ExtractionResult result;
  for (const Id id : ids) {
    const auto slots = candidates.occurrences(id);
    if (slots.size() < static_cast<std::size_t>(config.m)) continue;
    double lo = 1.0;
    double hi = 0.0;
    double sum = 0.0;
    for (const auto s : slots) {
      const double p = records[s].probability;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      sum += p;
    }
    const double mean = sum / static_cast<double>(slots.size());
    if (lo > config.t_p) {
      result.pseudo_labels.entries.push_back({id, mean, Polarity::positive});
    } else if (hi < config.t_n) {
      result.pseudo_labels.entries.push_back({id, mean, Polarity::negative});
    }
  }
  result.status = result.pseudo_labels.empty() ? ExtractionStatus::empty : ExtractionStatus::ok;
  return result;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void write_candidates(const std::filesystem::path& file, const CandidateSet& candidates) {
  auto out = open_for_write(file);
  out << "id,p,epoch\n";
  for (const auto& r : candidates.records()) out << r.example_id << "," << r.probability << "," << r.epoch << "\n";
}

CandidateSet read_candidates(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  CandidateSet out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw ConfigError("malformed candidate row: " + line);
    out.append(CandidateRecord{std::stoll(f[0]), std::stod(f[1]), std::stoi(f[2])});
  }
  return out;
}

void write_pseudo_labels(const std::filesystem::path& file, const PseudoLabeledSet& pseudo) {
  auto out = open_for_write(file);
  out << "id,label,polarity\n";
  for (const auto& e : pseudo.entries) {
    out << e.example_id << "," << e.label << "," << (e.polarity == Polarity::positive ? "P" : "N") << "\n";
  }
}

PseudoLabeledSet read_pseudo_labels(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  PseudoLabeledSet out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3 || (f[2] != "P" && f[2] != "N")) throw ConfigError("malformed pseudo-label row: " + line);
    out.entries.push_back({std::stoll(f[0]), std::stod(f[1]), f[2] == "P" ? Polarity::positive : Polarity::negative});
  }
  return out;
}

}  // namespace puda
