// puda: prepare scenarios, train single runs, run benchmarks, emit reports.
//
// Exit status: 0 success, 1 failure, 2 usage error, 3 degraded run
// (empty pseudo-label fallback), 4 benchmark with failed cells.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "puda/experiment.hpp"

namespace fs = std::filesystem;
using namespace puda;

namespace {

constexpr int kSuccess = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;
constexpr int kDegraded = 3;
constexpr int kPartial = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "0,3,5" or "0-9" or a mix of both.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    try {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw UsageError("empty seed range " + item);
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw UsageError("invalid seed list: " + text);
    }
  }
  if (out.empty()) throw UsageError("empty seed list");
  return out;
}

std::vector<double> parse_c_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    double c = 0.0;
    try {
      c = std::stod(item);
    } catch (const std::logic_error&) {
      throw UsageError("invalid label frequency: " + item);
    }
    if (!(c > 0.0 && c <= 1.0)) throw UsageError("label frequency c must lie in (0, 1], got " + item);
    out.push_back(c);
  }
  if (out.empty()) throw UsageError("empty label frequency list");
  return out;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& entry : names) {
    for (const auto& name : split_list(entry)) {
      try {
        out.push_back(method_from_string(name));
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
    }
  }
  return out;
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

std::string split_csv(const ExampleSet& set) {
  std::ostringstream out;
  out << "id,label,labeled\n";
  for (std::size_t i = 0; i < set.size(); ++i) out << set.id(i) << "," << set.true_label(i) << "," << set.labeled(i) << "\n";
  return out.str();
}

struct PrepareArgs {
  fs::path config;
  fs::path out;
  std::string name;  // default: "synthetic" or "<source>_<target>"
  std::string c = "0.05";
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  int dim = 2;
  int n_per_class = 200;
  double separation = 3.0;
  std::vector<double> shift;
  fs::path image_source;
  fs::path image_target;
  std::string positive_class;
  std::string negative_class;
  int image_size = 16;
  int channels = 1;
  int max_per_class = 0;
};

int cmd_prepare(const PrepareArgs& a) {
  const auto c_values = parse_c_values(a.c);
  if (c_values.size() != 1) throw UsageError("prepare takes a single label frequency");

  ScenarioManifest m;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot read " + a.config.string());
    try {
      m = manifest_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("invalid scenario template " + a.config.string() + ": " + e.what());
    }
  } else if (!a.image_source.empty() || !a.image_target.empty()) {
    if (a.image_source.empty() || a.image_target.empty() || a.positive_class.empty() || a.negative_class.empty()) {
      throw UsageError("image scenarios need --source-dir, --target-dir, --positive and --negative");
    }
    m.kind = "image_folder";
    const auto leaf = [](const fs::path& p) {
      fs::path n = fs::absolute(p).lexically_normal();
      return (n.has_filename() ? n : n.parent_path()).filename().string();
    };
    m.name = a.name.empty() ? leaf(a.image_source) + "_" + leaf(a.image_target) : a.name;
    m.shape = Shape{a.channels, a.image_size, a.image_size};
    const auto relative = [&](const fs::path& p) { return fs::relative(fs::absolute(p), fs::absolute(a.out)).string(); };
    m.source = {relative(a.image_source), a.positive_class, a.negative_class, a.max_per_class};
    m.target = {relative(a.image_target), a.positive_class, a.negative_class, a.max_per_class};
  } else {
    m.kind = "synthetic";
    m.name = a.name.empty() ? "synthetic" : a.name;
    Vector shift = Vector::Zero(a.dim);
    if (!a.shift.empty()) {
      if (static_cast<int>(a.shift.size()) != a.dim) throw UsageError("--shift needs exactly --dim values");
      for (int i = 0; i < a.dim; ++i) shift(i) = a.shift[static_cast<std::size_t>(i)];
    }
    m.synthetic = isotropic_shift_spec(a.dim, a.n_per_class, a.separation, shift);
    m.shape = Shape{1, 1, a.dim};
    m.data_seed = a.data_seed;
  }
  m.label_frequency = c_values.front();
  m.seed = a.seed;

  fs::create_directories(a.out);
  const ScenarioBundle bundle = build_scenario(m, m.label_frequency, m.seed, a.out);
  m.class_prior = bundle.class_prior;
  save_manifest(a.out / "manifest.json", m);
  write_file(a.out / "splits" / "source.csv", split_csv(bundle.source));
  write_file(a.out / "splits" / "target_unlabeled.csv", split_csv(bundle.target_unlabeled));
  write_file(a.out / "splits" / "target_positive.csv", split_csv(bundle.target_positive));
  std::cout << "scenario " << m.name << ": pi=" << bundle.class_prior << " c=" << m.label_frequency
            << " source=" << bundle.source.size() << " target=" << bundle.target_unlabeled.size()
            << " labeled positives=" << bundle.target_positive.size() << "\n"
            << "wrote " << (a.out / "manifest.json").string() << "\n";
  return kSuccess;
}

TrainConfig train_config_from(const fs::path& config) {
  if (config.empty()) return TrainConfig{};
  const ExperimentConfig e = load_experiment_config(config);
  return apply_overrides(TrainConfig{}, e.train);
}

struct TrainArgs {
  fs::path scenario;
  std::string method = "pu_da";
  std::string c;
  std::string seeds;
  fs::path out;
  fs::path config;
};

int cmd_train(const TrainArgs& a) {
  if (!fs::is_regular_file(a.scenario)) throw ConfigError("scenario manifest not found: " + a.scenario.string());
  const ScenarioManifest m = load_manifest(a.scenario);
  const auto methods = parse_methods({a.method});
  if (methods.size() != 1) throw UsageError("train takes a single method");
  const double c = a.c.empty() ? m.label_frequency : parse_c_values(a.c).front();
  const std::uint64_t seed = (a.seeds.empty() ? m.seed : parse_seeds(a.seeds).front()) + seed_offset_from_env();

  CellSpec cell{m, a.scenario.parent_path(), methods.front(), c, seed, train_config_from(a.config)};
  const CellOutcome outcome = execute_cell(cell, a.out, false);
  const auto& r = outcome.result;
  if (r.status == "failed") {
    std::cerr << "training failed: " << outcome.error << "\n";
    return kFailure;
  }
  std::cout << std::fixed << std::setprecision(4) << r.method << " on " << r.scenario << " c=" << r.c
            << " seed=" << r.seed << ": accuracy " << r.accuracy << ", balanced accuracy " << r.balanced_accuracy
            << " (n=" << r.n_eval << ", " << r.status << ")\n"
            << "artifacts in " << a.out.string() << "\n";
  return r.status == "degraded" ? kDegraded : kSuccess;
}

struct BenchmarkArgs {
  fs::path config;
  fs::path scenario;
  std::vector<std::string> methods;
  std::string c;
  std::string seeds;
  fs::path out;
  bool resume = false;
  int jobs = 0;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  ExperimentConfig e = a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
  if (!a.scenario.empty()) e.scenario = a.scenario;
  if (!a.methods.empty()) e.methods = parse_methods(a.methods);
  if (!a.c.empty()) e.c_values = parse_c_values(a.c);
  if (!a.seeds.empty()) e.seeds = parse_seeds(a.seeds);
  if (!a.out.empty()) e.out = a.out;
  if (a.resume) e.resume = true;
  if (a.jobs > 0) e.jobs = a.jobs;
  if (e.methods.empty()) e.methods = {Method::pu_da, Method::source_only, Method::nnpu_only};
  try {
    e.validate();
  } catch (const ConfigError& err) {
    throw UsageError(err.what());
  }

  const BenchmarkOutput out = run_benchmark(e);
  std::cout << format_table(out.table);
  std::cout << out.results.size() << " runs (" << out.computed << " computed, " << out.cached << " cached, "
            << out.failed << " failed); tables in " << e.out.string() << "\n";
  if (out.failed > 0) return kPartial;
  for (const auto& r : out.results) {
    if (r.status == "degraded") return kDegraded;
  }
  return kSuccess;
}

int cmd_report(const fs::path& benchmark_dir, fs::path report_dir) {
  if (report_dir.empty()) report_dir = benchmark_dir / "report";
  const auto files = write_report(benchmark_dir, report_dir);
  for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PU domain adaptation: scenarios, training, benchmarks, reports"};
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* p = app.add_subcommand("prepare", "Write a scenario manifest and its labeled split");
  p->add_option("--out", prepare.out, "Output directory")->required();
  p->add_option("--config", prepare.config, "Scenario template (manifest JSON)");
  p->add_option("--name", prepare.name, "Scenario name");
  p->add_option("--c", prepare.c, "Label frequency in (0, 1]");
  p->add_option("--seed,--seeds", prepare.seed, "Seed for the labeled subset");
  p->add_option("--data-seed", prepare.data_seed, "Seed for synthetic sampling");
  p->add_option("--dim", prepare.dim, "Synthetic dimension");
  p->add_option("--n-per-class", prepare.n_per_class, "Synthetic examples per class and domain");
  p->add_option("--separation", prepare.separation, "Distance between synthetic class means");
  p->add_option("--shift", prepare.shift, "Target translation, one value per dimension")->delimiter(',');
  p->add_option("--source-dir", prepare.image_source, "Source image folder root");
  p->add_option("--target-dir", prepare.image_target, "Target image folder root");
  p->add_option("--positive", prepare.positive_class, "Positive class folder name");
  p->add_option("--negative", prepare.negative_class, "Negative class folder name");
  p->add_option("--image-size", prepare.image_size, "Square image side after resizing");
  p->add_option("--channels", prepare.channels, "1 (grayscale) or 3 (RGB)");
  p->add_option("--max-per-class", prepare.max_per_class, "Cap per class and domain, 0 keeps all");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one method on one scenario");
  t->add_option("--scenario", train.scenario, "Scenario manifest")->required();
  t->add_option("--method", train.method, "pu_da | source_only | nnpu_only");
  t->add_option("--c", train.c, "Label frequency (default: manifest)");
  t->add_option("--seeds,--seed", train.seeds, "Run seed (default: manifest)");
  t->add_option("--out", train.out, "Run directory")->required();
  t->add_option("--config", train.config, "Train config JSON");

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "Run methods x c x seeds and aggregate");
  b->add_option("--config", bench.config, "Experiment config JSON");
  b->add_option("--scenario", bench.scenario, "Scenario manifest");
  b->add_option("--method", bench.methods, "Methods (repeat or comma-separated)");
  b->add_option("--c", bench.c, "Comma-separated label frequencies");
  b->add_option("--seeds", bench.seeds, "Seeds, e.g. 0-9 or 1,4,7");
  b->add_option("--out", bench.out, "Benchmark directory");
  b->add_flag("--resume", bench.resume, "Reuse finished cells with a matching hash");
  b->add_option("--jobs", bench.jobs, "Concurrent cells");

  fs::path report_in, report_out;
  auto* r = app.add_subcommand("report", "Plots and summary from a benchmark directory");
  r->add_option("--out", report_in, "Benchmark directory")->required();
  r->add_option("--report-dir", report_out, "Where to write (default: <out>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kSuccess : kUsage;
  }

  try {
    if (*p) return cmd_prepare(prepare);
    if (*t) return cmd_train(train);
    if (*b) return cmd_benchmark(bench);
    if (*r) return cmd_report(report_in, report_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n" << e.trace() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
