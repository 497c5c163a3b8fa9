#pragma once

// Experiment orchestration: JSON config, the method x scenario x budget x seed
// matrix, result persistence, and plot emission.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ulbench/report.hpp"
#include "ulbench/scenario.hpp"
#include "ulbench/sisa.hpp"
#include "ulbench/train.hpp"
#include "ulbench/unlearn.hpp"

namespace ulbench {

struct DatasetSpec {
  std::string kind = "synthetic";  // synthetic | cifar10 | gaussian
  // synthetic
  SyntheticImageSpec synthetic;
  // cifar10
  std::vector<std::filesystem::path> train_files, test_files;
  std::size_t max_per_class = 0;
  // gaussian
  int classes = 10, per_class = 100, dim = 16;
  double separation = 3.0, noise = 1.0;
  std::uint64_t seed = 0;
};

struct ArchSpec {
  std::string kind = "cnn3";  // cnn3 | mlp | logistic
  int base_channels = 16;
  int hidden = 64;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kOneClass;
  int class_id = 0;                     // one_class / class_wise
  std::vector<std::size_t> budgets;     // absolute sample counts
  std::vector<double> budget_percents;  // resolved against |D_train|
  std::vector<std::uint64_t> seeds;
  std::optional<PoisonSpec> poison;  // depoison only
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path output_dir = "out";
  DatasetSpec dataset;
  ArchSpec arch;
  TrainConfig train;
  std::vector<ScenarioSpec> scenarios;
  std::vector<MethodSpec> methods;  // registry ids plus "sisa" / "amnesiac"
  std::vector<MiaFeatureKind> mia_features;
  std::size_t mia_n_per_side = 0;  // 0 = min(|D_r|, |D_t|, 5000)
  double sub_retain_fraction = 0.1;
  int sisa_shards = 5;
  int sisa_slices = 1;
  std::string config_text;  // verbatim JSON, hashed into the manifest

  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& data);

// Append-only result sink backed by results.csv / results.jsonl /
// manifest.json under the output directory. Re-appending a cell key that is
// already present flags the new row as duplicate.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path out_dir);

  void write_manifest(const std::string& experiment_name,
                      const std::string& config_hash);
  void append(MetricsReport row);  // sets row.duplicate before persisting

  const std::vector<MetricsReport>& rows() const { return rows_; }
  const std::filesystem::path& dir() const { return dir_; }

  // Reads rows back from results.csv (for `report` / `plot` on a past run).
  static std::vector<MetricsReport> load_rows(const std::filesystem::path& out_dir);

 private:
  std::filesystem::path dir_;
  std::vector<MetricsReport> rows_;
};

// Trains (or loads, if previously saved under the output directory) the
// original model for the config's dataset.
ModelState train_original(const ExperimentConfig& config,
                          const LabeledDataset& train_ds);

// Full matrix run. A method failure records a failed row for that cell; it
// never aborts the rest of the matrix.
ResultsStore run_experiment(const ExperimentConfig& config);

// One SVG + CSV pair per scenario present in the rows: `metric` vs. budget
// with one series per method. Returns the written file paths.
std::vector<std::filesystem::path> emit_budget_plot(
    const std::vector<MetricsReport>& rows, const std::string& metric,
    const std::filesystem::path& plot_dir);

// Dataset / metric helpers shared by the CLI.
std::pair<LabeledDataset, LabeledDataset> build_datasets(const DatasetSpec& spec);
Arch build_arch(const ArchSpec& spec, Shape3 input, int num_classes);
double metric_value(const MetricsReport& row, const std::string& metric);

}  // namespace ulbench
