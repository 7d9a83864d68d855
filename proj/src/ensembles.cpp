#include "hq/ensembles.hpp"

#include "hq/random.hpp"

#include <algorithm>
#include <cmath>

namespace hq {

namespace {

// RNG stream ids under ForestConfig::seed.
constexpr std::uint64_t kMetaForestStream = 100;
constexpr std::uint64_t kFoldForestStream = 1000;

ForestConfig with_forest_seed(const ForestConfig& base, std::uint64_t seed) {
  ForestConfig c = base;
  c.seed = seed;
  return c;
}

Matrix hydra_fold_fit_predict(const HydraTransform& initialized, const FeatureMatrix& fit_raw, const Labels& fit_y,
                              std::size_t n_classes, const FeatureMatrix& predict_raw, const RidgeOptions& options) {
  HydraTransform t = initialized;
  t.fit_normalization(fit_raw);
  const RidgeModel model = ridge_fit(t.normalize(fit_raw), fit_y, n_classes, options);
  return scores_to_probs(ridge_decision(model, t.normalize(predict_raw)));
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::fc_ridge: return "fc_ridge";
    case Strategy::fc_et: return "fc_et";
    case Strategy::qfeat_hlogit_ridge: return "qfeat_hlogit_ridge";
    case Strategy::qfeat_hlogit_et: return "qfeat_hlogit_et";
    case Strategy::dual_oof_et: return "dual_oof_et";
    case Strategy::cawpe: return "cawpe";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (expected fc_ridge, fc_et, qfeat_hlogit_ridge, qfeat_hlogit_et, dual_oof_et or cawpe)");
}

std::string to_string(BaseModel b) { return b == BaseModel::hydra_ridge ? "hydra_ridge" : "quant_forest"; }

EnsembleConfig& EnsembleConfig::with_seed(std::uint64_t s) {
  seed = s;
  hydra.seed = s;
  forest.seed = s;
  return *this;
}

void EnsembleConfig::validate() const {
  if (folds < 2) throw ConfigError("ensemble: folds must be >= 2");
  if (!(cawpe_alpha > 0.0) || !std::isfinite(cawpe_alpha)) throw ConfigError("ensemble: cawpe alpha must be > 0");
  hydra.validate();
  quant.validate();
  forest.validate();
}

PhaseTimings& PhaseTimings::operator+=(const PhaseTimings& o) {
  transform_fit += o.transform_fit;
  transform_apply += o.transform_apply;
  classifier_fit += o.classifier_fit;
  oof_generation += o.oof_generation;
  base_refit += o.base_refit;
  predict += o.predict;
  return *this;
}

namespace {

HydraRidgeBase fit_hydra_base(const Dataset& train, const EnsembleConfig& config, RunContext& ctx,
                              FeatureMatrix* train_features) {
  HydraRidgeBase base{HydraTransform::initialize(config.hydra, train.n_channels, train.series_length), {}};
  FeatureMatrix features;
  {
    ScopedTimer timer(ctx.timings.transform_fit);
    check_fit_input(train.is_test(), "hydra_fit");
    FeatureMatrix raw = base.transform.raw_features(train);
    base.transform.fit_normalization(raw);
    features = base.transform.normalize(std::move(raw));
  }
  ctx.deadline.check("hydra base fit");
  {
    ScopedTimer timer(ctx.timings.classifier_fit);
    base.ridge = ridge_fit(features, train.y, train.n_classes(), config.ridge);
  }
  if (train_features) *train_features = std::move(features);
  return base;
}

QuantForestBase fit_quant_base(const Dataset& train, const EnsembleConfig& config, RunContext& ctx,
                               FeatureMatrix* train_features) {
  QuantForestBase base{config.quant, {}};
  FeatureMatrix features;
  {
    ScopedTimer timer(ctx.timings.transform_fit);
    features = quant_transform(config.quant, train);
  }
  ctx.deadline.check("quant base fit");
  {
    ScopedTimer timer(ctx.timings.classifier_fit);
    base.forest = forest_fit(features, train.y, train.n_classes(), config.forest, ctx.deadline);
  }
  if (train_features) *train_features = std::move(features);
  return base;
}

}  // namespace

HydraRidgeBase HydraRidgeBase::fit(const Dataset& train, const EnsembleConfig& config, RunContext& ctx) {
  return fit_hydra_base(train, config, ctx, nullptr);
}

Matrix HydraRidgeBase::predict_proba(const FeatureMatrix& features) const {
  return scores_to_probs(ridge_decision(ridge, features));
}

QuantForestBase QuantForestBase::fit(const Dataset& train, const EnsembleConfig& config, RunContext& ctx) {
  return fit_quant_base(train, config, ctx, nullptr);
}

BaseResult run_base(BaseModel base, const Dataset& train, const Dataset& test, const EnsembleConfig& config,
                    const Deadline& deadline) {
  config.validate();
  RunContext ctx{{}, deadline};
  BaseResult result;
  result.base = base;
  if (base == BaseModel::hydra_ridge) {
    const HydraRidgeBase fitted = HydraRidgeBase::fit(train, config, ctx);
    FeatureMatrix features;
    {
      ScopedTimer timer(ctx.timings.transform_apply);
      features = fitted.features(test);
    }
    ScopedTimer timer(ctx.timings.predict);
    result.probs = fitted.predict_proba(features);
  } else {
    const QuantForestBase fitted = QuantForestBase::fit(train, config, ctx);
    FeatureMatrix features;
    {
      ScopedTimer timer(ctx.timings.transform_apply);
      features = fitted.features(test);
    }
    ScopedTimer timer(ctx.timings.predict);
    result.probs = fitted.predict_proba(features);
  }
  result.predictions = row_argmax(result.probs);
  result.timings = ctx.timings;
  return result;
}

Matrix out_of_fold(const FeatureMatrix& x, const Labels& y, std::size_t n_classes, int folds, std::uint64_t seed,
                   const FoldFitPredict& fit_predict, const Deadline& deadline) {
  if (x.rows() != y.size()) throw ConfigError("out_of_fold: row/label count mismatch");
  FoldAssignment assignment;
  if (folds >= 2 && static_cast<std::size_t>(folds) == y.size()) {
    assignment.k = folds;
    assignment.seed = seed;
    assignment.fold_of.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) assignment.fold_of[i] = static_cast<int>(i);
  } else {
    assignment = stratified_kfold(y, folds, seed);
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(n_classes));
  for (int fold = 0; fold < folds; ++fold) {
    deadline.check("out-of-fold generation");
    const auto fit_rows = assignment.training(fold);
    const auto held_rows = assignment.held_out(fold);
    if (held_rows.empty()) continue;
    Labels fit_y(fit_rows.size());
    for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_y[i] = y[fit_rows[i]];
    const Matrix pred = fit_predict(select_rows(x, fit_rows), fit_y, select_rows(x, held_rows), fold);
    if (pred.rows() != static_cast<Eigen::Index>(held_rows.size()) ||
        pred.cols() != static_cast<Eigen::Index>(n_classes)) {
      throw ConfigError("out_of_fold: fold predictor returned the wrong shape");
    }
    for (std::size_t i = 0; i < held_rows.size(); ++i) {
      out.row(static_cast<Eigen::Index>(held_rows[i])) = pred.row(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

LogitMatrix oof_logits(BaseModel base, const Dataset& train, const EnsembleConfig& config, RunContext& ctx) {
  config.validate();
  check_fit_input(train.is_test(), "oof_logits");
  ScopedTimer timer(ctx.timings.oof_generation);
  LogitMatrix logits;
  logits.source = base;
  logits.oof = true;
  const std::size_t c = train.n_classes();
  if (base == BaseModel::hydra_ridge) {
    // Kernels depend only on (config, shape), so counts are extracted once;
    // normalisation and ridge are refitted on each fold's training rows.
    const HydraTransform initialized =
        HydraTransform::initialize(config.hydra, train.n_channels, train.series_length);
    const FeatureMatrix raw = initialized.raw_features(train);
    logits.values = out_of_fold(
        raw, train.y, c, config.folds, config.seed,
        [&](const FeatureMatrix& fit_x, const Labels& fit_y, const FeatureMatrix& predict_x, int) {
          return hydra_fold_fit_predict(initialized, fit_x, fit_y, c, predict_x, config.ridge);
        },
        ctx.deadline);
  } else {
    const FeatureMatrix features = quant_transform(config.quant, train);
    logits.values = out_of_fold(
        features, train.y, c, config.folds, config.seed,
        [&](const FeatureMatrix& fit_x, const Labels& fit_y, const FeatureMatrix& predict_x, int fold) {
          const ForestConfig fold_config =
              with_forest_seed(config.forest, derive_seed(config.forest.seed, kFoldForestStream + static_cast<std::uint64_t>(fold)));
          const ForestModel model = forest_fit(fit_x, fit_y, c, fold_config, ctx.deadline);
          return forest_predict_proba(model, predict_x);
        },
        ctx.deadline);
  }
  return logits;
}

Matrix fit_predict_meta(MetaLearner meta, const FeatureMatrix& train_in, const Labels& y, std::size_t n_classes,
                        const FeatureMatrix& test_in, const EnsembleConfig& config, RunContext& ctx) {
  ctx.deadline.check("meta-learner fit");
  if (meta == MetaLearner::ridge) {
    RidgeModel model;
    {
      ScopedTimer timer(ctx.timings.classifier_fit);
      model = ridge_fit(train_in, y, n_classes, config.ridge);
    }
    ScopedTimer timer(ctx.timings.predict);
    return scores_to_probs(ridge_decision(model, test_in));
  }
  ForestModel model;
  {
    ScopedTimer timer(ctx.timings.classifier_fit);
    model = forest_fit(train_in, y, n_classes,
                       with_forest_seed(config.forest, derive_seed(config.forest.seed, kMetaForestStream)),
                       ctx.deadline);
  }
  ScopedTimer timer(ctx.timings.predict);
  return forest_predict_proba(model, test_in);
}

namespace {

EnsembleResult finish(Strategy strategy, Matrix probs, bool from_scores, std::vector<ColumnInfo> columns,
                      const RunContext& ctx) {
  EnsembleResult r;
  r.strategy = strategy;
  r.predictions = row_argmax(probs);
  r.probs = std::move(probs);
  r.probs_from_scores = from_scores;
  r.meta_columns = std::move(columns);
  r.timings = ctx.timings;
  return r;
}

}  // namespace

EnsembleResult run_fc(const Dataset& train, const Dataset& test, MetaLearner meta, const EnsembleConfig& config,
                      RunContext& ctx) {
  config.validate();
  check_fit_input(train.is_test(), "run_fc");
  HydraTransform hydra = HydraTransform::initialize(config.hydra, train.n_channels, train.series_length);
  FeatureMatrix train_in, test_in;
  {
    ScopedTimer timer(ctx.timings.transform_fit);
    FeatureMatrix raw = hydra.raw_features(train);
    hydra.fit_normalization(raw);
    train_in = hconcat(hydra.normalize(std::move(raw)), quant_transform(config.quant, train));
  }
  ctx.deadline.check("feature extraction");
  {
    ScopedTimer timer(ctx.timings.transform_apply);
    test_in = hconcat(hydra.transform(test), quant_transform(config.quant, test));
  }
  Matrix probs = fit_predict_meta(meta, train_in, train.y, train.n_classes(), test_in, config, ctx);
  return finish(meta == MetaLearner::ridge ? Strategy::fc_ridge : Strategy::fc_et, std::move(probs),
                meta == MetaLearner::ridge, train_in.columns, ctx);
}

EnsembleResult run_qfeat_hlogit(const Dataset& train, const Dataset& test, MetaLearner meta,
                                const EnsembleConfig& config, RunContext& ctx) {
  config.validate();
  check_fit_input(train.is_test(), "run_qfeat_hlogit");
  FeatureMatrix quant_train;
  {
    ScopedTimer timer(ctx.timings.transform_fit);
    quant_train = quant_transform(config.quant, train);
  }
  const LogitMatrix hydra_oof = oof_logits(BaseModel::hydra_ridge, train, config, ctx);

  RunContext refit{{}, ctx.deadline};
  const HydraRidgeBase hydra = HydraRidgeBase::fit(train, config, refit);
  ctx.timings.base_refit += refit.timings.training_time();

  FeatureMatrix quant_test, hydra_test;
  {
    ScopedTimer timer(ctx.timings.transform_apply);
    quant_test = quant_transform(config.quant, test);
    hydra_test = hydra.features(test);
  }
  Matrix hydra_test_probs;
  {
    ScopedTimer timer(ctx.timings.predict);
    hydra_test_probs = hydra.predict_proba(hydra_test);
  }
  const auto base_id = static_cast<std::int32_t>(BaseModel::hydra_ridge);
  const FeatureMatrix train_in = hconcat(quant_train, logit_features(hydra_oof.values, base_id, false));
  const FeatureMatrix test_in = hconcat(quant_test, logit_features(hydra_test_probs, base_id, test.is_test()));
  Matrix probs = fit_predict_meta(meta, train_in, train.y, train.n_classes(), test_in, config, ctx);
  return finish(meta == MetaLearner::ridge ? Strategy::qfeat_hlogit_ridge : Strategy::qfeat_hlogit_et,
                std::move(probs), meta == MetaLearner::ridge, train_in.columns, ctx);
}

EnsembleResult run_dual_oof(const Dataset& train, const Dataset& test, const EnsembleConfig& config,
                            RunContext& ctx) {
  config.validate();
  check_fit_input(train.is_test(), "run_dual_oof");
  const LogitMatrix hydra_oof = oof_logits(BaseModel::hydra_ridge, train, config, ctx);
  const LogitMatrix quant_oof = oof_logits(BaseModel::quant_forest, train, config, ctx);

  RunContext refit{{}, ctx.deadline};
  const HydraRidgeBase hydra = HydraRidgeBase::fit(train, config, refit);
  const QuantForestBase quant = QuantForestBase::fit(train, config, refit);
  ctx.timings.base_refit += refit.timings.training_time();

  FeatureMatrix hydra_test, quant_test;
  {
    ScopedTimer timer(ctx.timings.transform_apply);
    hydra_test = hydra.features(test);
    quant_test = quant.features(test);
  }
  Matrix hydra_probs, quant_probs;
  {
    ScopedTimer timer(ctx.timings.predict);
    hydra_probs = hydra.predict_proba(hydra_test);
    quant_probs = quant.predict_proba(quant_test);
  }
  const auto h_id = static_cast<std::int32_t>(BaseModel::hydra_ridge);
  const auto q_id = static_cast<std::int32_t>(BaseModel::quant_forest);
  const FeatureMatrix train_in =
      hconcat(logit_features(hydra_oof.values, h_id, false), logit_features(quant_oof.values, q_id, false));
  const FeatureMatrix test_in = hconcat(logit_features(hydra_probs, h_id, test.is_test()),
                                        logit_features(quant_probs, q_id, test.is_test()));
  Matrix probs = fit_predict_meta(MetaLearner::forest, train_in, train.y, train.n_classes(), test_in, config, ctx);
  return finish(Strategy::dual_oof_et, std::move(probs), false, train_in.columns, ctx);
}

Matrix cawpe_combine(const Matrix& p_h, const Matrix& p_q, double acc_h, double acc_q, double alpha) {
  if (p_h.rows() != p_q.rows() || p_h.cols() != p_q.cols()) throw ConfigError("cawpe_combine: shape mismatch");
  if (!(alpha > 0.0)) throw ConfigError("cawpe_combine: alpha must be > 0");
  if (acc_h < 0.0 || acc_h > 1.0 || acc_q < 0.0 || acc_q > 1.0) {
    throw ConfigError("cawpe_combine: accuracies must lie in [0, 1]");
  }
  const double w_h = std::pow(acc_h, alpha);
  const double w_q = std::pow(acc_q, alpha);
  if (!(w_h + w_q > 0.0)) throw ConfigError("cawpe_combine: both weights are zero, combination undefined");
  return (w_h * p_h + w_q * p_q) / (w_h + w_q);
}

EnsembleResult run_cawpe(const Dataset& train, const Dataset& test, const EnsembleConfig& config, RunContext& ctx) {
  config.validate();
  check_fit_input(train.is_test(), "run_cawpe");
  FeatureMatrix hydra_train, quant_train;
  const HydraRidgeBase hydra = fit_hydra_base(train, config, ctx, &hydra_train);
  const QuantForestBase quant = fit_quant_base(train, config, ctx, &quant_train);

  CawpeReport report;
  report.alpha = config.cawpe_alpha;
  {
    ScopedTimer timer(ctx.timings.classifier_fit);
    report.train_accuracy_hydra = accuracy(row_argmax(hydra.predict_proba(hydra_train)), train.y);
    report.train_accuracy_quant = accuracy(row_argmax(quant.predict_proba(quant_train)), train.y);
  }
  report.weight_hydra = std::pow(report.train_accuracy_hydra, config.cawpe_alpha);
  report.weight_quant = std::pow(report.train_accuracy_quant, config.cawpe_alpha);

  FeatureMatrix hydra_test, quant_test;
  {
    ScopedTimer timer(ctx.timings.transform_apply);
    hydra_test = hydra.features(test);
    quant_test = quant.features(test);
  }
  Matrix probs;
  {
    ScopedTimer timer(ctx.timings.predict);
    probs = cawpe_combine(hydra.predict_proba(hydra_test), quant.predict_proba(quant_test),
                          report.train_accuracy_hydra, report.train_accuracy_quant, config.cawpe_alpha);
  }
  EnsembleResult r = finish(Strategy::cawpe, std::move(probs), false, {}, ctx);
  r.cawpe = report;
  return r;
}

EnsembleResult run_strategy(Strategy strategy, const Dataset& train, const Dataset& test,
                            const EnsembleConfig& config, RunContext& ctx) {
  switch (strategy) {
    case Strategy::fc_ridge: return run_fc(train, test, MetaLearner::ridge, config, ctx);
    case Strategy::fc_et: return run_fc(train, test, MetaLearner::forest, config, ctx);
    case Strategy::qfeat_hlogit_ridge: return run_qfeat_hlogit(train, test, MetaLearner::ridge, config, ctx);
    case Strategy::qfeat_hlogit_et: return run_qfeat_hlogit(train, test, MetaLearner::forest, config, ctx);
    case Strategy::dual_oof_et: return run_dual_oof(train, test, config, ctx);
    case Strategy::cawpe: return run_cawpe(train, test, config, ctx);
  }
  throw ConfigError("unknown strategy");
}

double ensemble_gain(double acc_ensemble, double acc_h, double acc_q) { return acc_ensemble - std::max(acc_h, acc_q); }

}  // namespace hq
