#pragma once

#include "hq/complementarity.hpp"
#include "hq/ensembles.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hq {

enum class OutputFormat { json, csv };

struct RunConfig {
  /// Dataset stems (`<stem>_TRAIN.*`), explicit `train,test` pairs, or
  /// `synthetic:<kind>` for a generated pair.
  std::vector<std::string> datasets;
  std::vector<Strategy> strategies;
  std::vector<std::uint64_t> seeds{42};
  int folds = 5;
  double alpha = 4.0;
  std::size_t cap = 5000;
  std::optional<double> timeout_seconds;
  std::filesystem::path out_dir;
  OutputFormat format = OutputFormat::json;
  /// Runs datasets concurrently. Phases inside a run are unaffected.
  bool parallel_datasets = false;
  /// Wraps every run in a TaintGuard.
  bool taint_check = true;
  /// Overrides the forest size (meta-learner and Quant base alike).
  std::optional<std::size_t> n_trees;

  /// Throws ConfigError on an empty dataset or strategy list and bad numbers.
  void validate(bool need_strategies) const;
  EnsembleConfig ensemble_config(std::uint64_t seed) const;
};

/// Resolves one --data entry into a validated train/test pair.
DatasetPair load_run_data(const std::string& spec);

struct RunResult {
  std::string dataset;
  Strategy strategy = Strategy::fc_et;
  std::uint64_t seed = 42;
  int folds = 5;
  double alpha = 4.0;
  /// "ok", "failed" or "timeout".
  std::string status = "ok";
  std::string error;

  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_classes = 0;

  std::optional<double> acc_hydra;
  std::optional<double> acc_quant;
  std::optional<double> acc_ensemble;
  std::optional<double> gain;
  std::optional<PredictionMetrics> oracle;
  MaybeValue utilization;
  std::optional<OracleExceeding> exceeding;
  bool probs_from_scores = false;
  std::optional<CawpeReport> cawpe;
  PhaseTimings timings;

  bool ok() const { return status == "ok"; }
  double time_per_1000_train() const;
};

/// Deterministic fields only; timings and environment are left out.
nlohmann::json metrics_json(const RunResult& r);
/// Full record, matching docs/run_record.schema.json.
nlohmann::json to_json(const RunResult& r);

/// Runs every (dataset x seed x strategy) combination. The two bases are
/// evaluated once per (dataset, seed) and shared by its strategies. A failing
/// run is recorded and the rest continue.
std::vector<RunResult> cmd_bench(const RunConfig& config);

/// One row per (dataset, seed): base and strategy accuracies with the columns
/// that reach the row maximum (1e-9 tolerance) listed under `best`.
void write_summary_csv(std::ostream& out, const std::vector<RunResult>& results,
                       const std::vector<Strategy>& strategies);

/// Writes `<out>/records/*.json`, `<out>/runs.jsonl` and `<out>/summary.csv`.
void write_bench_outputs(const RunConfig& config, const std::vector<RunResult>& results);

struct ComplementarityResult {
  std::string status = "ok";
  std::string error;
  ComplementarityReport report;
};

/// Fits both bases on the full training split (seed = first configured seed);
/// feature metrics use a capped test subsample, prediction metrics the full
/// test split.
std::vector<ComplementarityResult> cmd_complementarity(const RunConfig& config);
nlohmann::json to_json(const ComplementarityResult& r);

enum class TransformKind { hydra, quant };
TransformKind parse_transform(const std::string& name);

struct ExtractResult {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::optional<std::filesystem::path> transform_path;
  std::size_t n_features = 0;
};

/// Fits the transform on train and writes `<out>_train.hqf`, `<out>_test.hqf`
/// and, for Hydra, the fitted transform as `<out>.hqt`.
ExtractResult cmd_extract(const std::string& dataset, TransformKind transform, const std::filesystem::path& out,
                          std::uint64_t seed = 42);

struct OracleProbe {
  std::string dataset;
  double acc_hydra = 0.0;
  double acc_quant = 0.0;
  double acc_oracle = 0.0;
  double oracle_gain = 0.0;
  double threshold = 0.05;
  bool recommended = false;
};

OracleProbe cmd_oracle_probe(const std::string& dataset, const RunConfig& config, double threshold = 0.05);
void print_probe(std::ostream& out, const OracleProbe& probe);

}  // namespace hq
