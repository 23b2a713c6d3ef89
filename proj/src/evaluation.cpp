#include "puda/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace puda {

namespace {

void check_pairs(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("predictions and truths differ in length");
  if (truths.empty()) throw std::invalid_argument("metrics need at least one example");
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> truths) {
  check_pairs(predictions, truths);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) correct += predictions[i] == truths[i];
  return static_cast<double>(correct) / static_cast<double>(truths.size());
}

double balanced_accuracy(std::span<const int> predictions, std::span<const int> truths) {
  check_pairs(predictions, truths);
  std::size_t tp = 0, pos = 0, tn = 0, neg = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == 1) {
      ++pos;
      tp += predictions[i] == 1;
    } else {
      ++neg;
      tn += predictions[i] != 1;
    }
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("balanced accuracy needs both classes in the truths");
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) + static_cast<double>(tn) / static_cast<double>(neg));
}

std::vector<int> hard_predictions(const Vector& probabilities) {
  std::vector<int> out(static_cast<std::size_t>(probabilities.size()));
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) out[static_cast<std::size_t>(i)] = probabilities(i) > 0.5;
  return out;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("aggregation needs at least two runs");
  Aggregate a;
  a.n = static_cast<int>(values.size());
  // Shifted by the first value so identical runs give exactly zero spread.
  const double shift = values[0];
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double offset = sum / a.n;
  a.mean = shift + offset;
  double ss = 0.0;
  for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
  a.std = std::sqrt(ss / (a.n - 1));
  return a;
}

double significance(double mean_a, double std_a, int n_a, double mean_b, double std_b, int n_b) {
  if (n_a < 2 || n_b < 2) throw std::invalid_argument("t-test needs n >= 2 per group");
  if (!(std_a >= 0.0 && std_b >= 0.0)) throw std::invalid_argument("standard deviations must be >= 0");
  const double va = std_a * std_a / n_a;
  const double vb = std_b * std_b / n_b;
  const double se2 = va + vb;
  if (se2 == 0.0) return mean_a == mean_b ? 1.0 : 0.0;
  const double t = (mean_a - mean_b) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (n_a - 1) + vb * vb / (n_b - 1));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double significance(const Aggregate& a, const Aggregate& b) {
  return significance(a.mean, a.std, a.n, b.mean, b.std, b.n);
}

std::map<std::string, double> cell_scores(const std::map<std::string, Aggregate>& stats, double alpha) {
  if (stats.size() < 2) throw std::invalid_argument("scoring needs at least two methods per cell");
  std::vector<std::pair<std::string, Aggregate>> ranked(stats.begin(), stats.end());
  // Map order breaks exact ties deterministically.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.mean > b.second.mean; });
  std::map<std::string, double> scores;
  for (const auto& [name, s] : ranked) scores[name] = 0.0;
  const Aggregate& best = ranked.front().second;
  int top = 0;
  for (const auto& [name, s] : ranked) {
    if (&s == &best || significance(best, s) >= alpha) {
      scores[name] = 1.0;
      ++top;
    }
  }
  if (top == 1) scores[ranked[1].first] = 0.5;
  return scores;
}

std::map<std::string, double> summary_score(const std::map<CellKey, std::map<std::string, Aggregate>>& cells,
                                            const std::vector<std::string>& methods, double alpha) {
  std::vector<std::string> missing;
  for (const auto& [key, stats] : cells) {
    for (const auto& m : methods) {
      if (!stats.count(m)) {
        std::ostringstream s;
        s << key.scenario << " c=" << key.c << " " << m;
        missing.push_back(s.str());
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing cells:";
    for (const auto& m : missing) msg += " [" + m + "]";
    throw std::invalid_argument(msg);
  }
  std::map<std::string, double> total;
  for (const auto& m : methods) total[m] = 0.0;
  for (const auto& [key, stats] : cells) {
    std::map<std::string, Aggregate> subset;
    for (const auto& m : methods) subset[m] = stats.at(m);
    for (const auto& [m, s] : cell_scores(subset, alpha)) total[m] += s;
  }
  return total;
}

BenchmarkTable build_table(std::span<const RunResult> runs, const std::string& metric) {
  if (metric != "accuracy" && metric != "balanced_accuracy") throw std::invalid_argument("unknown metric: " + metric);
  BenchmarkTable table;
  std::map<CellKey, std::map<std::string, std::vector<const RunResult*>>> grouped;
  std::map<CellKey, std::map<std::string, int>> failures;
  for (const auto& r : runs) {
    if (std::find(table.methods.begin(), table.methods.end(), r.method) == table.methods.end()) {
      table.methods.push_back(r.method);
    }
    const CellKey key{r.scenario, r.c};
    if (r.status == "failed") {
      ++failures[key][r.method];
      grouped[key][r.method];
    } else {
      grouped[key][r.method].push_back(&r);
    }
  }
  std::sort(table.methods.begin(), table.methods.end());

  std::map<CellKey, std::map<std::string, Aggregate>> scored;
  for (const auto& [key, by_method] : grouped) {
    bool complete = by_method.size() == table.methods.size();
    for (const auto& [method, list] : by_method) {
      MethodCell cell;
      cell.failed = failures[key][method];
      if (list.size() >= 2) {
        std::vector<double> acc, bacc;
        for (const auto* r : list) {
          acc.push_back(r->accuracy);
          bacc.push_back(r->balanced_accuracy);
        }
        cell.accuracy = aggregate(acc);
        cell.balanced_accuracy = aggregate(bacc);
      } else {
        cell.accuracy.n = cell.balanced_accuracy.n = static_cast<int>(list.size());
        complete = false;
      }
      table.cells[key][method] = cell;
    }
    if (!complete) {
      std::ostringstream s;
      s << key.scenario << " c=" << key.c;
      table.gaps.push_back(s.str());
      continue;
    }
    for (const auto& [method, cell] : table.cells[key]) {
      scored[key][method] = metric == "accuracy" ? cell.accuracy : cell.balanced_accuracy;
    }
    table.cell_scores[key] = cell_scores(scored[key]);
  }
  for (const auto& m : table.methods) table.summary[m] = 0.0;
  for (const auto& [key, scores] : table.cell_scores) {
    for (const auto& [m, s] : scores) table.summary[m] += s;
  }
  return table;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_csv(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_results(const std::filesystem::path& file, std::span<const RunResult> runs) {
  auto out = open_csv(file);
  out << "method,scenario,c,seed,accuracy,balanced_accuracy,n_eval,status\n";
  for (const auto& r : runs) {
    out << r.method << "," << r.scenario << "," << r.c << "," << r.seed << "," << r.accuracy << ","
        << r.balanced_accuracy << "," << r.n_eval << "," << r.status << "\n";
  }
}

std::vector<RunResult> read_results(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<RunResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 8) throw std::runtime_error("malformed result row: " + line);
    RunResult r;
    r.method = f[0];
    r.scenario = f[1];
    r.c = std::stod(f[2]);
    r.seed = std::stoull(f[3]);
    r.accuracy = std::stod(f[4]);
    r.balanced_accuracy = std::stod(f[5]);
    r.n_eval = std::stoi(f[6]);
    r.status = f[7];
    out.push_back(r);
  }
  return out;
}

void write_table_csv(const std::filesystem::path& file, const BenchmarkTable& table) {
  auto out = open_csv(file);
  out << "scenario,c,method,runs,failed,accuracy_mean,accuracy_std,balanced_accuracy_mean,balanced_accuracy_std,score\n";
  for (const auto& [key, by_method] : table.cells) {
    const auto scores = table.cell_scores.find(key);
    for (const auto& [method, cell] : by_method) {
      out << key.scenario << "," << key.c << "," << method << "," << cell.accuracy.n << "," << cell.failed << ",";
      if (cell.accuracy.n >= 2) {
        out << cell.accuracy.mean << "," << cell.accuracy.std << "," << cell.balanced_accuracy.mean << ","
            << cell.balanced_accuracy.std << ",";
      } else {
        out << ",,,,";
      }
      if (scores != table.cell_scores.end()) out << scores->second.at(method);
      out << "\n";
    }
  }
  for (const auto& [method, score] : table.summary) out << "summary,," << method << ",,,,,,," << score << "\n";
}

std::string format_table(const BenchmarkTable& table) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"scenario", "c"};
  for (const auto& m : table.methods) header.push_back(m);
  rows.push_back(header);
  for (const auto& [key, by_method] : table.cells) {
    std::ostringstream c;
    c << key.c;
    std::vector<std::string> row{key.scenario, c.str()};
    const auto scores = table.cell_scores.find(key);
    for (const auto& m : table.methods) {
      const auto it = by_method.find(m);
      std::ostringstream cell;
      if (it == by_method.end() || it->second.accuracy.n < 2) {
        cell << "-";
      } else {
        cell << std::fixed << std::setprecision(2) << 100.0 * it->second.accuracy.mean << " +- "
             << 100.0 * it->second.accuracy.std;
        if (scores != table.cell_scores.end()) {
          const double s = scores->second.at(m);
          if (s > 0.0) cell << (s == 1.0 ? " *" : " '");
        }
      }
      row.push_back(cell.str());
    }
    rows.push_back(row);
  }
  std::vector<std::string> summary{"summary", ""};
  for (const auto& m : table.methods) {
    std::ostringstream s;
    s << table.summary.at(m);
    summary.push_back(s.str());
  }
  rows.push_back(summary);

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      out << std::left << std::setw(static_cast<int>(width[i])) << rows[r][i] << (i + 1 < rows[r].size() ? "  " : "");
    }
    out << "\n";
    if (r == 0 || r + 2 == rows.size()) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << "\n";
    }
  }
  out << "accuracy in %, mean +- std; * one point, ' half a point\n";
  if (!table.gaps.empty()) {
    out << "incomplete cells (not scored):";
    for (const auto& g : table.gaps) out << " " << g << ";";
    out << "\n";
  }
  return out.str();
}

}  // namespace puda
