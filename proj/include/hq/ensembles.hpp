#pragma once

#include "hq/data.hpp"
#include "hq/features.hpp"
#include "hq/forest.hpp"
#include "hq/hydra.hpp"
#include "hq/quant.hpp"
#include "hq/ridge.hpp"
#include "hq/run_control.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hq {

enum class Strategy { fc_ridge, fc_et, qfeat_hlogit_ridge, qfeat_hlogit_et, dual_oof_et, cawpe };

inline constexpr std::array<Strategy, 6> kAllStrategies = {
    Strategy::fc_ridge,        Strategy::fc_et,       Strategy::qfeat_hlogit_ridge,
    Strategy::qfeat_hlogit_et, Strategy::dual_oof_et, Strategy::cawpe};

std::string to_string(Strategy s);
/// Throws ConfigError for unknown names.
Strategy parse_strategy(std::string_view name);

enum class BaseModel { hydra_ridge = 0, quant_forest = 1 };
enum class MetaLearner { ridge, forest };

std::string to_string(BaseModel b);

struct EnsembleConfig {
  int folds = 5;
  std::uint64_t seed = 42;
  double cawpe_alpha = 4.0;
  HydraConfig hydra;
  QuantConfig quant;
  ForestConfig forest;
  RidgeOptions ridge;

  /// Sets the fold seed, the Hydra kernel seed and the forest seed at once.
  EnsembleConfig& with_seed(std::uint64_t s);
  void validate() const;
};

/// Wall-clock seconds per phase.
///
/// transform_fit covers fitting transforms and extracting training features;
/// transform_apply covers test-side extraction; base_refit is the full-train
/// refit of a stacked base that produces its test-time logits.
struct PhaseTimings {
  double transform_fit = 0.0;
  double transform_apply = 0.0;
  double classifier_fit = 0.0;
  double oof_generation = 0.0;
  double base_refit = 0.0;
  double predict = 0.0;

  /// Feature extraction through final model fitting, including OOF work and
  /// the full-train base refits.
  double training_time() const { return transform_fit + classifier_fit + oof_generation + base_refit; }
  PhaseTimings& operator+=(const PhaseTimings& o);
};

struct RunContext {
  PhaseTimings timings;
  Deadline deadline;
};

/// Hydra features with a ridge classifier; probabilities are softmaxed scores.
struct HydraRidgeBase {
  HydraTransform transform;
  RidgeModel ridge;

  static HydraRidgeBase fit(const Dataset& train, const EnsembleConfig& config, RunContext& ctx);
  FeatureMatrix features(const Dataset& d) const { return transform.transform(d); }
  Matrix predict_proba(const FeatureMatrix& features) const;
};

/// Quant features with an extremely randomised forest.
struct QuantForestBase {
  QuantConfig quant;
  ForestModel forest;

  static QuantForestBase fit(const Dataset& train, const EnsembleConfig& config, RunContext& ctx);
  FeatureMatrix features(const Dataset& d) const { return quant_transform(quant, d); }
  Matrix predict_proba(const FeatureMatrix& features) const { return forest_predict_proba(forest, features); }
};

/// Base-model prediction on a test split.
struct BaseResult {
  BaseModel base = BaseModel::hydra_ridge;
  Matrix probs;
  Labels predictions;
  PhaseTimings timings;
};

BaseResult run_base(BaseModel base, const Dataset& train, const Dataset& test, const EnsembleConfig& config,
                    const Deadline& deadline = {});

/// Fits on (fit_x, fit_y) and returns n_predict x c probabilities for predict_x.
using FoldFitPredict = std::function<Matrix(const FeatureMatrix& fit_x, const Labels& fit_y,
                                            const FeatureMatrix& predict_x, int fold)>;

/// Out-of-fold predictions in original row order. Folds come from
/// stratified_kfold(y, folds, seed), except folds == rows which means
/// leave-one-out.
Matrix out_of_fold(const FeatureMatrix& x, const Labels& y, std::size_t n_classes, int folds, std::uint64_t seed,
                   const FoldFitPredict& fit_predict, const Deadline& deadline = {});

struct LogitMatrix {
  Matrix values;
  BaseModel source = BaseModel::hydra_ridge;
  bool oof = false;
};

/// OOF class probabilities of a base pipeline on the training split. The
/// transform is refitted per fold (Hydra normalisation uses training-fold rows
/// only); the fold RNG streams derive from (seed, fold).
LogitMatrix oof_logits(BaseModel base, const Dataset& train, const EnsembleConfig& config, RunContext& ctx);

struct CawpeReport {
  double alpha = 4.0;
  double train_accuracy_hydra = 0.0;
  double train_accuracy_quant = 0.0;
  double weight_hydra = 0.0;
  double weight_quant = 0.0;
};

struct EnsembleResult {
  Strategy strategy = Strategy::fc_et;
  Matrix probs;
  Labels predictions;
  /// Probabilities are a softmax of ridge scores rather than leaf frequencies.
  bool probs_from_scores = false;
  std::vector<ColumnInfo> meta_columns;
  std::optional<CawpeReport> cawpe;
  PhaseTimings timings;
};

/// Trains the meta-learner on train_in and returns test probabilities.
Matrix fit_predict_meta(MetaLearner meta, const FeatureMatrix& train_in, const Labels& y, std::size_t n_classes,
                        const FeatureMatrix& test_in, const EnsembleConfig& config, RunContext& ctx);

/// [Hydra | Quant] features into one meta-learner.
EnsembleResult run_fc(const Dataset& train, const Dataset& test, MetaLearner meta, const EnsembleConfig& config,
                      RunContext& ctx);

/// [Quant features | Hydra OOF probabilities]; Hydra is refitted on the full
/// training split for the test-time block.
EnsembleResult run_qfeat_hlogit(const Dataset& train, const Dataset& test, MetaLearner meta,
                                const EnsembleConfig& config, RunContext& ctx);

/// Forest on [Hydra OOF | Quant OOF] probabilities (width 2c).
EnsembleResult run_dual_oof(const Dataset& train, const Dataset& test, const EnsembleConfig& config,
                            RunContext& ctx);

/// (acc_h^a p_h + acc_q^a p_q) / (acc_h^a + acc_q^a), row by row.
Matrix cawpe_combine(const Matrix& p_h, const Matrix& p_q, double acc_h, double acc_q, double alpha);

/// Both bases on the full training split, weighted by training accuracy.
EnsembleResult run_cawpe(const Dataset& train, const Dataset& test, const EnsembleConfig& config, RunContext& ctx);

EnsembleResult run_strategy(Strategy strategy, const Dataset& train, const Dataset& test,
                            const EnsembleConfig& config, RunContext& ctx);

/// acc_ensemble - max(acc_h, acc_q).
double ensemble_gain(double acc_ensemble, double acc_h, double acc_q);

}  // namespace hq
