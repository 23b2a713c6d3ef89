#include "puda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

namespace puda {

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("experiment needs at least one method");
  if (c_values.empty()) throw ConfigError("experiment needs at least one label frequency");
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  for (double c : c_values) {
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("label frequency must lie in (0, 1]");
  }
  if (scenario.empty() || !std::filesystem::is_regular_file(scenario)) {
    throw ConfigError("scenario manifest not found: " + scenario.string());
  }
  if (out.empty()) throw ConfigError("experiment needs an output directory");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> keys = {"scenario", "methods", "c", "seeds", "train", "out", "jobs", "resume"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError("unknown experiment config key: " + key);
  }
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  ExperimentConfig c;
  try {
    if (j.contains("scenario")) c.scenario = resolve(j["scenario"].get<std::string>());
    if (j.contains("methods")) {
      for (const auto& m : j["methods"]) c.methods.push_back(method_from_string(m.get<std::string>()));
    }
    if (j.contains("c")) c.c_values = j["c"].get<std::vector<double>>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("train")) c.train = j["train"];
    if (j.contains("out")) c.out = resolve(j["out"].get<std::string>());
    c.jobs = j.value("jobs", c.jobs);
    c.resume = j.value("resume", c.resume);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  // Train-only files are accepted as well.
  if (j.is_object() && !j.contains("train") && !j.contains("methods") && !j.contains("scenario")) {
    ExperimentConfig c;
    c.train = j;
    return c;
  }
  return experiment_config_from_json(j, file.parent_path());
}

std::uint64_t seed_offset_from_env() {
  const char* raw = std::getenv("PUDA_SEED_OFFSET");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("PUDA_SEED_OFFSET must be a non-negative integer, got ") + raw);
  }
}

TrainConfig apply_overrides(const TrainConfig& base, const nlohmann::json& overrides) {
  if (!overrides.is_object()) throw ConfigError("train overrides must be a JSON object");
  nlohmann::json merged = to_json(base);
  nlohmann::json patch = overrides;
  // An optimizer override also applies to step 2 unless it has its own.
  if (patch.contains("optimizer") && !patch.contains("step2_optimizer")) patch["step2_optimizer"] = patch["optimizer"];
  merged.merge_patch(patch);
  return train_config_from_json(merged);
}

namespace {

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string short_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

nlohmann::json to_json(const RunResult& r) {
  return {{"method", r.method},     {"scenario", r.scenario},
          {"c", r.c},               {"seed", r.seed},
          {"accuracy", r.accuracy}, {"balanced_accuracy", r.balanced_accuracy},
          {"n_eval", r.n_eval},     {"status", r.status}};
}

RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.method = j.at("method").get<std::string>();
  r.scenario = j.at("scenario").get<std::string>();
  r.c = j.at("c").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.balanced_accuracy = j.at("balanced_accuracy").get<double>();
  r.n_eval = j.at("n_eval").get<int>();
  r.status = j.at("status").get<std::string>();
  return r;
}

}  // namespace

std::string cell_hash(const CellSpec& cell) {
  std::string key = to_json(cell.manifest).dump();
  key += "|" + to_string(cell.method) + "|" + format_number(cell.c) + "|" + std::to_string(cell.seed) + "|";
  key += to_json(cell.train).dump();
  return hex64(fnv1a(key));
}

std::filesystem::path cell_directory(const std::filesystem::path& out, const CellSpec& cell) {
  return out / "runs" / cell.manifest.name / to_string(cell.method) / ("c" + short_number(cell.c)) /
         ("seed" + std::to_string(cell.seed));
}

RunResult evaluate_run(const BinaryClassifier& classifier, const ScenarioBundle& scenario) {
  const EvaluationSet eval = evaluation_set(scenario);
  if (eval.truths.empty()) throw ScenarioError("evaluation set is empty");
  const auto predictions = hard_predictions(classifier.predict_proba(eval.features));
  RunResult r;
  r.c = scenario.label_frequency;
  r.seed = scenario.seed;
  r.n_eval = static_cast<int>(eval.truths.size());
  r.accuracy = accuracy(predictions, eval.truths);
  const bool both = std::count(eval.truths.begin(), eval.truths.end(), 1) > 0 &&
                    std::count(eval.truths.begin(), eval.truths.end(), 0) > 0;
  r.balanced_accuracy = both ? balanced_accuracy(predictions, eval.truths) : r.accuracy;
  return r;
}

std::vector<PseudoQuality> pseudo_label_quality(const CandidateSet& candidates, const ExtractionConfig& config,
                                                const ScenarioBundle& scenario, int first_epoch, int last_epoch) {
  std::unordered_map<Id, int> truth;
  const auto& unl = scenario.target_unlabeled;
  for (std::size_t i = 0; i < unl.size(); ++i) {
    if (!unl.labeled(i)) truth.emplace(unl.id(i), unl.true_label(i));
  }
  std::vector<PseudoQuality> out;
  for (int epoch = first_epoch; epoch <= last_epoch; ++epoch) {
    CandidateSet upto;
    for (const auto& r : candidates.records()) {
      if (r.epoch <= epoch) upto.append(r);
    }
    const auto extracted = extract_pseudo_labels(upto, config).pseudo_labels;
    PseudoQuality q;
    q.epoch = epoch;
    std::size_t correct = 0;
    for (const auto& e : extracted.entries) {
      const auto it = truth.find(e.example_id);
      if (it == truth.end()) continue;
      ++q.extracted;
      correct += (e.polarity == Polarity::positive) == (it->second == 1);
    }
    q.precision = q.extracted ? static_cast<double>(correct) / static_cast<double>(q.extracted)
                              : std::numeric_limits<double>::quiet_NaN();
    q.recall = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
    out.push_back(q);
  }
  return out;
}

CellOutcome execute_cell(const CellSpec& cell, const std::filesystem::path& dir, bool resume) {
  CellOutcome outcome;
  const std::string hash = cell_hash(cell);
  const auto marker = dir / "cell.json";
  if (resume && std::filesystem::is_regular_file(marker)) {
    try {
      std::ifstream in(marker);
      const auto j = nlohmann::json::parse(in);
      if (j.at("hash").get<std::string>() == hash && j.at("result").at("status") != "failed") {
        outcome.result = run_result_from_json(j.at("result"));
        outcome.cached = true;
        return outcome;
      }
    } catch (const std::exception&) {
      // unreadable marker: recompute
    }
  }
  std::filesystem::remove(marker);

  RunResult& r = outcome.result;
  r.method = to_string(cell.method);
  r.scenario = cell.manifest.name;
  r.c = cell.c;
  r.seed = cell.seed;
  nlohmann::json record;
  try {
    TrainConfig train = cell.train;
    train.seed = cell.seed;
    const ScenarioBundle scenario = build_scenario(cell.manifest, cell.c, cell.seed, cell.manifest_dir);
    const RunOutcome run = run_method(cell.method, scenario, train);
    write_run_artifacts(dir, run);
    save_manifest(dir / "scenario.json", cell.manifest);

    const RunResult eval = evaluate_run(*run.classifier, scenario);
    r.accuracy = eval.accuracy;
    r.balanced_accuracy = eval.balanced_accuracy;
    r.n_eval = eval.n_eval;
    r.status = to_string(run.artifacts.status);
    record["status_reason"] = run.artifacts.status_reason;

    if (cell.method == Method::pu_da && train.warm_up < train.step1_max_epoch) {
      const auto quality =
          pseudo_label_quality(run.artifacts.candidates, train.extraction, scenario, train.warm_up + 1,
                               train.step1_max_epoch);
      std::ostringstream csv;
      csv << std::setprecision(17) << "epoch,extracted,precision,recall\n";
      for (const auto& q : quality) {
        csv << q.epoch << "," << q.extracted << ",";
        if (std::isfinite(q.precision)) csv << q.precision;
        csv << "," << q.recall << "\n";
      }
      write_text(dir / "pseudo_quality.csv", csv.str());
    }
  } catch (const std::exception& e) {
    r.status = "failed";
    r.accuracy = r.balanced_accuracy = 0.0;
    r.n_eval = 0;
    outcome.error = e.what();
    record["error"] = outcome.error;
    if (const auto* diverged = dynamic_cast<const TrainingDivergedError*>(&e)) record["trace"] = diverged->trace();
  }
  record["hash"] = hash;
  record["result"] = to_json(r);
  write_text(marker, record.dump(2) + "\n");
  return outcome;
}

namespace {

bool result_order(const RunResult& a, const RunResult& b) {
  return std::tie(a.scenario, a.c, a.method, a.seed) < std::tie(b.scenario, b.c, b.method, b.seed);
}

void write_tables(const std::filesystem::path& dir, const BenchmarkTable& table) {
  write_table_csv(dir / "table.csv", table);
  write_text(dir / "table.txt", format_table(table));
}

}  // namespace

BenchmarkOutput run_benchmark(const ExperimentConfig& config) {
  config.validate();
  const ScenarioManifest manifest = load_manifest(config.scenario);
  const TrainConfig train = apply_overrides(TrainConfig{}, config.train);
  const std::uint64_t offset = seed_offset_from_env();

  std::vector<CellSpec> cells;
  for (const Method m : config.methods) {
    for (const double c : config.c_values) {
      for (const auto seed : config.seeds) {
        cells.push_back({manifest, config.scenario.parent_path(), m, c, seed + offset, train});
      }
    }
  }
  std::filesystem::create_directories(config.out);

  BenchmarkOutput out;
  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      outcomes[i] = execute_cell(cells[i], cell_directory(config.out, cells[i]), config.resume);
      if (!outcomes[i].error.empty()) {
        std::lock_guard lock(log_mutex);
        std::cerr << "cell " << to_string(cells[i].method) << " c=" << cells[i].c << " seed=" << cells[i].seed
                  << " failed: " << outcomes[i].error << "\n";
      }
    }
  };
  const int jobs = std::min<int>(config.jobs, static_cast<int>(cells.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& o : outcomes) {
    out.results.push_back(o.result);
    if (o.cached) ++out.cached;
    else ++out.computed;
    if (o.result.status == "failed") ++out.failed;
  }
  std::sort(out.results.begin(), out.results.end(), result_order);
  write_results(config.out / "results.csv", out.results);
  out.table = build_table(out.results);
  write_tables(config.out, out.table);
  return out;
}

BenchmarkTable aggregate_results(const std::filesystem::path& benchmark_dir) {
  const auto file = benchmark_dir / "results.csv";
  if (!std::filesystem::is_regular_file(file)) throw ConfigError("no results.csv in " + benchmark_dir.string());
  auto results = read_results(file);
  if (results.empty()) throw ConfigError("results.csv in " + benchmark_dir.string() + " has no runs");
  std::sort(results.begin(), results.end(), result_order);
  return build_table(results);
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string tick_label(double v) {
  std::ostringstream out;
  out << std::setprecision(3) << v;
  return out.str();
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  const double width = 640, height = 420, left = 70, right = 170, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double e = s.error.empty() ? 0.0 : s.error[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.05, y1 += 0.05;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    svg << "<line x1=\"" << fixed(px(xv)) << "\" y1=\"" << top + ph << "\" x2=\"" << fixed(px(xv)) << "\" y2=\""
        << top + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << tick_label(xv) << "</text>\n";
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fixed(py(yv)) << "\" x2=\"" << left + pw << "\" y2=\""
        << fixed(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fixed(py(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << xml_escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& line = series[s];
    const std::string color = palette[s % std::size(palette)];
    std::string points;
    for (std::size_t i = 0; i < line.x.size(); ++i) {
      if (!std::isfinite(line.y[i])) continue;
      points += fixed(px(line.x[i])) + "," + fixed(py(line.y[i])) + " ";
    }
    if (!points.empty()) points.pop_back();
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
    for (std::size_t i = 0; i < line.x.size(); ++i) {
      if (!std::isfinite(line.y[i])) continue;
      const double cx = px(line.x[i]), cy = py(line.y[i]);
      svg << "<circle cx=\"" << fixed(cx) << "\" cy=\"" << fixed(cy) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (!line.error.empty() && line.error[i] > 0.0) {
        svg << "<line x1=\"" << fixed(cx) << "\" y1=\"" << fixed(py(line.y[i] - line.error[i])) << "\" x2=\""
            << fixed(cx) << "\" y2=\"" << fixed(py(line.y[i] + line.error[i])) << "\" stroke=\"" << color
            << "\"/>\n";
      }
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(line.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

struct QualityRow {
  int epoch;
  double precision;
  double recall;
};

std::vector<QualityRow> read_quality(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  std::vector<QualityRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream s(line);
    std::string f[4];
    for (auto& field : f) std::getline(s, field, ',');
    rows.push_back({std::stoi(f[0]), f[2].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[2]),
                    std::stod(f[3])});
  }
  return rows;
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_';
  return out;
}

}  // namespace

std::vector<std::filesystem::path> write_report(const std::filesystem::path& benchmark_dir,
                                                const std::filesystem::path& report_dir) {
  // Everything is computed before the first write.
  const BenchmarkTable table = aggregate_results(benchmark_dir);
  std::map<std::string, std::string> files;

  std::set<std::string> scenarios;
  for (const auto& [key, cell] : table.cells) scenarios.insert(key.scenario);
  for (const auto& scenario : scenarios) {
    std::vector<PlotSeries> series;
    for (const auto& method : table.methods) {
      PlotSeries s{method, {}, {}, {}};
      for (const auto& [key, by_method] : table.cells) {
        if (key.scenario != scenario) continue;
        const auto it = by_method.find(method);
        if (it == by_method.end() || it->second.accuracy.n < 2) continue;
        s.x.push_back(key.c);
        s.y.push_back(it->second.accuracy.mean);
        s.error.push_back(it->second.accuracy.std);
      }
      if (!s.x.empty()) series.push_back(s);
    }
    files["accuracy_vs_c_" + file_safe(scenario) + ".svg"] =
        svg_line_plot(scenario + ": accuracy vs label frequency", "label frequency c", "accuracy (mean +- std)",
                      series);

    const auto pu_dir = benchmark_dir / "runs" / scenario / "pu_da";
    if (!std::filesystem::is_directory(pu_dir)) continue;
    std::vector<std::filesystem::path> c_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(pu_dir)) {
      if (entry.is_directory()) c_dirs.push_back(entry.path());
    }
    std::sort(c_dirs.begin(), c_dirs.end());
    std::vector<PlotSeries> quality;
    for (const auto& c_dir : c_dirs) {
      std::map<int, std::vector<double>> precision, recall;
      std::vector<std::filesystem::path> seed_dirs;
      for (const auto& entry : std::filesystem::directory_iterator(c_dir)) seed_dirs.push_back(entry.path());
      std::sort(seed_dirs.begin(), seed_dirs.end());
      for (const auto& seed_dir : seed_dirs) {
        const auto file = seed_dir / "pseudo_quality.csv";
        if (!std::filesystem::is_regular_file(file)) continue;
        for (const auto& row : read_quality(file)) {
          if (std::isfinite(row.precision)) precision[row.epoch].push_back(row.precision);
          recall[row.epoch].push_back(row.recall);
        }
      }
      if (recall.empty()) continue;
      const std::string c = c_dir.filename().string().substr(1);
      PlotSeries p{"precision c=" + c, {}, {}, {}}, r{"recall c=" + c, {}, {}, {}};
      for (const auto& [epoch, values] : recall) {
        r.x.push_back(epoch);
        double sum = 0.0;
        for (double v : values) sum += v;
        r.y.push_back(sum / static_cast<double>(values.size()));
        const auto pit = precision.find(epoch);
        p.x.push_back(epoch);
        if (pit == precision.end()) {
          p.y.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          double ps = 0.0;
          for (double v : pit->second) ps += v;
          p.y.push_back(ps / static_cast<double>(pit->second.size()));
        }
      }
      quality.push_back(p);
      quality.push_back(r);
    }
    if (!quality.empty()) {
      files["pseudo_labels_" + file_safe(scenario) + ".svg"] =
          svg_line_plot(scenario + ": pseudo-label quality", "epoch", "precision / recall", quality);
    }
  }
  files["summary.txt"] = format_table(table);

  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    write_text(report_dir / name, text);
    written.push_back(report_dir / name);
  }
  return written;
}

}  // namespace puda
