#include "hq/harness.hpp"

#include "hq/parallel.hpp"
#include "hq/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace hq {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr double kBestTolerance = 1e-9;

json maybe(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json maybe(const MaybeValue& v) {
  if (v.defined()) return {{"value", *v.value}, {"reason", nullptr}};
  return {{"value", nullptr}, {"reason", v.reason}};
}

json environment_json() {
  return {{"threads", num_threads()},
          {"compiler", __VERSION__},
#ifdef NDEBUG
          {"optimized", true},
#else
          {"optimized", false},
#endif
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)}};
}

json timings_json(const PhaseTimings& t) {
  return {{"transform_fit", t.transform_fit},   {"transform_apply", t.transform_apply},
          {"classifier_fit", t.classifier_fit}, {"oof_generation", t.oof_generation},
          {"base_refit", t.base_refit},         {"predict", t.predict}};
}

std::string safe_name(std::string s) {
  for (char& ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  }
  return s;
}

struct BasePair {
  BaseResult hydra;
  BaseResult quant;
};

std::string describe(const std::exception& e) { return e.what(); }

}  // namespace

void RunConfig::validate(bool need_strategies) const {
  if (datasets.empty()) throw ConfigError("no dataset given (--data)");
  if (need_strategies && strategies.empty()) throw ConfigError("no strategy given (--strategy)");
  if (seeds.empty()) throw ConfigError("no seed given");
  if (folds < 2) throw ConfigError("--folds must be >= 2");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("--alpha must be a positive number");
  if (cap < 1) throw ConfigError("--cap must be >= 1");
  if (timeout_seconds && !(*timeout_seconds > 0.0)) throw ConfigError("--timeout must be positive");
  if (n_trees && *n_trees < 1) throw ConfigError("--trees must be >= 1");
}

EnsembleConfig RunConfig::ensemble_config(std::uint64_t seed) const {
  EnsembleConfig c;
  c.folds = folds;
  c.cawpe_alpha = alpha;
  if (n_trees) c.forest.n_trees = static_cast<int>(*n_trees);
  c.with_seed(seed);
  return c;
}

DatasetPair load_run_data(const std::string& spec) {
  constexpr std::string_view prefix = "synthetic:";
  if (spec.rfind(prefix, 0) == 0) {
    // synthetic:<kind>[:<seed>]
    std::string rest = spec.substr(prefix.size());
    synthetic::Spec s;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      try {
        s.seed = std::stoull(rest.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad synthetic seed in '" + spec + "'");
      }
      rest = rest.substr(0, colon);
    }
    s.kind = synthetic::parse_kind(rest);
    return synthetic::make(s);
  }
  if (const auto comma = spec.find(','); comma != std::string::npos) {
    return load_pair(spec.substr(0, comma), spec.substr(comma + 1));
  }
  return load_pair(spec);
}

double RunResult::time_per_1000_train() const {
  if (n_train == 0) return 0.0;
  return timings.training_time() / (static_cast<double>(n_train) / 1000.0);
}

json metrics_json(const RunResult& r) {
  json j;
  j["dataset"] = r.dataset;
  j["strategy"] = to_string(r.strategy);
  j["seed"] = r.seed;
  j["folds"] = r.folds;
  j["alpha"] = r.alpha;
  j["status"] = r.status;
  j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["n_classes"] = r.n_classes;
  j["accuracy"] = {{"hydra", maybe(r.acc_hydra)}, {"quant", maybe(r.acc_quant)}, {"ensemble", maybe(r.acc_ensemble)}};
  j["ensemble_gain"] = maybe(r.gain);
  if (r.oracle) {
    const auto& o = *r.oracle;
    j["oracle"] = {{"acc_oracle", o.acc_oracle},
                   {"oracle_gain", o.oracle_gain},
                   {"disagreement", o.disagreement},
                   {"error_corr", maybe(o.error_corr)},
                   {"both_wrong", o.both_wrong},
                   {"utilization_pct", maybe(r.utilization)}};
  } else {
    j["oracle"] = nullptr;
  }
  if (r.exceeding) {
    j["oracle_exceeding"] = {
        {"both_wrong", r.exceeding->both_wrong}, {"rescued", r.exceeding->rescued}, {"rate", maybe(r.exceeding->rate)}};
  } else {
    j["oracle_exceeding"] = nullptr;
  }
  j["probs_from_scores"] = r.probs_from_scores;
  if (r.cawpe) {
    const auto& c = *r.cawpe;
    j["cawpe"] = {{"alpha", c.alpha},
                  {"train_accuracy_hydra", c.train_accuracy_hydra},
                  {"train_accuracy_quant", c.train_accuracy_quant},
                  {"weight_hydra", c.weight_hydra},
                  {"weight_quant", c.weight_quant}};
  } else {
    j["cawpe"] = nullptr;
  }
  return j;
}

json to_json(const RunResult& r) {
  json j = metrics_json(r);
  j["schema_version"] = kSchemaVersion;
  j["timings"] = timings_json(r.timings);
  j["training_time"] = r.timings.training_time();
  j["time_per_1000_train"] = r.time_per_1000_train();
  j["environment"] = environment_json();
  return j;
}

namespace {

RunResult failed(RunResult r, const std::string& status, const std::string& error) {
  r.status = status;
  r.error = error;
  return r;
}

template <typename Fn>
void guarded(RunResult& r, Fn&& fn) {
  try {
    fn();
  } catch (const TimeoutError& e) {
    r = failed(std::move(r), "timeout", describe(e));
  } catch (const std::exception& e) {
    r = failed(std::move(r), "failed", describe(e));
  }
}

Deadline deadline_for(const RunConfig& config) {
  return config.timeout_seconds ? Deadline::after_seconds(*config.timeout_seconds) : Deadline{};
}

std::vector<RunResult> bench_dataset(const RunConfig& config, const std::string& spec) {
  std::vector<RunResult> out;
  RunResult proto;
  proto.dataset = spec;
  DatasetPair data;
  try {
    data = load_run_data(spec);
    proto.dataset = data.train.name.empty() ? spec : data.train.name;
    proto.n_train = data.train.n_instances;
    proto.n_test = data.test.n_instances;
    proto.n_classes = data.train.n_classes();
  } catch (const std::exception& e) {
    for (std::uint64_t seed : config.seeds) {
      for (Strategy s : config.strategies) {
        RunResult r = proto;
        r.seed = seed;
        r.strategy = s;
        r.folds = config.folds;
        r.alpha = config.alpha;
        out.push_back(failed(std::move(r), "failed", describe(e)));
      }
    }
    return out;
  }

  for (std::uint64_t seed : config.seeds) {
    const EnsembleConfig ec = config.ensemble_config(seed);
    std::optional<BasePair> bases;
    std::string base_error;
    std::string base_status = "failed";
    try {
      std::optional<TaintGuard> guard;
      if (config.taint_check) guard.emplace();
      BasePair b;
      b.hydra = run_base(BaseModel::hydra_ridge, data.train, data.test, ec, deadline_for(config));
      b.quant = run_base(BaseModel::quant_forest, data.train, data.test, ec, deadline_for(config));
      bases = std::move(b);
    } catch (const TimeoutError& e) {
      base_status = "timeout";
      base_error = std::string("base model: ") + e.what();
    } catch (const std::exception& e) {
      base_error = std::string("base model: ") + e.what();
    }

    for (Strategy s : config.strategies) {
      RunResult r = proto;
      r.seed = seed;
      r.strategy = s;
      r.folds = config.folds;
      r.alpha = config.alpha;
      if (!bases) {
        out.push_back(failed(std::move(r), base_status, base_error));
        continue;
      }
      r.acc_hydra = accuracy(bases->hydra.predictions, data.test.y);
      r.acc_quant = accuracy(bases->quant.predictions, data.test.y);
      guarded(r, [&] {
        std::optional<TaintGuard> guard;
        if (config.taint_check) guard.emplace();
        RunContext ctx{{}, deadline_for(config)};
        const EnsembleResult e = run_strategy(s, data.train, data.test, ec, ctx);
        r.timings = e.timings;
        r.probs_from_scores = e.probs_from_scores;
        r.cawpe = e.cawpe;
        r.acc_ensemble = accuracy(e.predictions, data.test.y);
        r.gain = ensemble_gain(*r.acc_ensemble, *r.acc_hydra, *r.acc_quant);
        r.oracle = prediction_metrics(bases->hydra.predictions, bases->quant.predictions, data.test.y);
        r.utilization = oracle_utilization(*r.gain, r.oracle->oracle_gain);
        r.exceeding = oracle_exceeding(bases->hydra.predictions, bases->quant.predictions, e.predictions, data.test.y);
      });
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

std::vector<RunResult> cmd_bench(const RunConfig& config) {
  config.validate(true);
  std::vector<std::vector<RunResult>> per_dataset(config.datasets.size());
  if (config.parallel_datasets && config.datasets.size() > 1) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < config.datasets.size(); ++i) {
      workers.emplace_back([&, i] { per_dataset[i] = bench_dataset(config, config.datasets[i]); });
    }
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < config.datasets.size(); ++i) {
      per_dataset[i] = bench_dataset(config, config.datasets[i]);
    }
  }
  std::vector<RunResult> all;
  for (auto& v : per_dataset) {
    for (auto& r : v) all.push_back(std::move(r));
  }
  return all;
}

void write_summary_csv(std::ostream& out, const std::vector<RunResult>& results,
                       const std::vector<Strategy>& strategies) {
  out << "dataset,seed,hydra,quant";
  for (Strategy s : strategies) out << ',' << to_string(s);
  out << ",best\n";

  // Rows in first-appearance order of (dataset, seed).
  std::vector<std::pair<std::string, std::uint64_t>> rows;
  std::map<std::pair<std::string, std::uint64_t>, std::vector<const RunResult*>> by_row;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.dataset, r.seed);
    if (!by_row.count(key)) rows.push_back(key);
    by_row[key].push_back(&r);
  }

  auto cell = [](std::optional<double> v) {
    if (!v) return std::string();
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };

  for (const auto& key : rows) {
    const auto& runs = by_row[key];
    std::optional<double> acc_h, acc_q;
    for (const RunResult* r : runs) {
      if (r->acc_hydra) acc_h = r->acc_hydra;
      if (r->acc_quant) acc_q = r->acc_quant;
    }
    std::vector<std::pair<std::string, std::optional<double>>> columns = {{"hydra", acc_h}, {"quant", acc_q}};
    for (Strategy s : strategies) {
      std::optional<double> v;
      for (const RunResult* r : runs) {
        if (r->strategy == s && r->ok()) v = r->acc_ensemble;
      }
      columns.emplace_back(to_string(s), v);
    }
    double best = -1.0;
    for (const auto& c : columns) {
      if (c.second) best = std::max(best, *c.second);
    }
    std::string marks;
    for (const auto& c : columns) {
      if (c.second && *c.second >= best - kBestTolerance) marks += (marks.empty() ? "" : ";") + c.first;
    }
    out << key.first << ',' << key.second;
    for (const auto& c : columns) out << ',' << cell(c.second);
    out << ',' << marks << '\n';
  }
}

void write_bench_outputs(const RunConfig& config, const std::vector<RunResult>& results) {
  namespace fs = std::filesystem;
  const fs::path records = config.out_dir / "records";
  fs::create_directories(records);
  std::ofstream jsonl(config.out_dir / "runs.jsonl");
  if (!jsonl) throw Error("cannot write " + (config.out_dir / "runs.jsonl").string());
  for (const auto& r : results) {
    const json j = to_json(r);
    const fs::path file =
        records / (safe_name(r.dataset) + "__" + to_string(r.strategy) + "__seed" + std::to_string(r.seed) + ".json");
    std::ofstream f(file);
    if (!f) throw Error("cannot write " + file.string());
    f << j.dump(2) << '\n';
    jsonl << j.dump() << '\n';
  }
  std::ofstream csv(config.out_dir / "summary.csv");
  if (!csv) throw Error("cannot write " + (config.out_dir / "summary.csv").string());
  write_summary_csv(csv, results, config.strategies);
}

std::vector<ComplementarityResult> cmd_complementarity(const RunConfig& config) {
  config.validate(false);
  const std::uint64_t seed = config.seeds.front();
  std::vector<ComplementarityResult> out;
  for (const auto& spec : config.datasets) {
    ComplementarityResult res;
    res.report.dataset = spec;
    try {
      const DatasetPair data = load_run_data(spec);
      if (!data.train.name.empty()) res.report.dataset = data.train.name;
      const EnsembleConfig ec = config.ensemble_config(seed);
      ec.validate();
      RunContext ctx{{}, deadline_for(config)};
      FeatureMatrix h_test, q_test;
      Labels pred_h, pred_q;
      {
        std::optional<TaintGuard> guard;
        if (config.taint_check) guard.emplace();
        const HydraRidgeBase hydra = HydraRidgeBase::fit(data.train, ec, ctx);
        const QuantForestBase quant = QuantForestBase::fit(data.train, ec, ctx);
        h_test = hydra.features(data.test);
        q_test = quant.features(data.test);
        pred_h = row_argmax(hydra.predict_proba(h_test));
        pred_q = row_argmax(quant.predict_proba(q_test));
      }
      ComplementarityReport& rep = res.report;
      rep.n_test = data.test.n_instances;
      rep.subsample_seed = 42;
      const auto rows = subsample_indices(rep.n_test, config.cap, rep.subsample_seed);
      rep.subsample_n = rows.size();
      const FeatureMatrix h_sub = select_rows(h_test, rows);
      const FeatureMatrix q_sub = select_rows(q_test, rows);
      const CrossCorrelation cc = median_max_cross_correlation(h_sub.values, q_sub.values);
      rep.median_max_cross_corr = cc.median_max;
      rep.constant_columns_h = cc.constant_columns_h;
      rep.constant_columns_q = cc.constant_columns_q;
      rep.canonical_corrs = canonical_correlations(h_sub.values, q_sub.values);
      rep.prediction = prediction_metrics(pred_h, pred_q, data.test.y);
    } catch (const TimeoutError& e) {
      res.status = "timeout";
      res.error = e.what();
    } catch (const std::exception& e) {
      res.status = "failed";
      res.error = e.what();
    }
    out.push_back(std::move(res));
  }
  return out;
}

json to_json(const ComplementarityResult& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = r.report.dataset;
  j["status"] = r.status;
  j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  if (r.status != "ok") return j;
  const auto& rep = r.report;
  const auto& p = rep.prediction;
  j["n_test"] = rep.n_test;
  j["subsample_n"] = rep.subsample_n;
  j["subsample_seed"] = rep.subsample_seed;
  j["median_max_cross_corr"] = rep.median_max_cross_corr;
  j["constant_columns"] = {{"hydra", rep.constant_columns_h}, {"quant", rep.constant_columns_q}};
  j["canonical_corrs"] = rep.canonical_corrs;
  j["prediction"] = {{"n", p.n},
                     {"acc_hydra", p.acc_h},
                     {"acc_quant", p.acc_q},
                     {"acc_oracle", p.acc_oracle},
                     {"oracle_gain", p.oracle_gain},
                     {"disagreement", p.disagreement},
                     {"error_corr", maybe(p.error_corr)},
                     {"both_wrong", p.both_wrong}};
  return j;
}

TransformKind parse_transform(const std::string& name) {
  if (name == "hydra") return TransformKind::hydra;
  if (name == "quant") return TransformKind::quant;
  throw ConfigError("unknown transform '" + name + "' (expected hydra or quant)");
}

ExtractResult cmd_extract(const std::string& dataset, TransformKind transform, const std::filesystem::path& out,
                          std::uint64_t seed) {
  const DatasetPair data = load_run_data(dataset);
  ExtractResult res;
  res.train_path = out.string() + "_train.hqf";
  res.test_path = out.string() + "_test.hqf";
  FeatureMatrix train_f, test_f;
  if (transform == TransformKind::hydra) {
    HydraConfig hc;
    hc.seed = seed;
    const HydraTransform t = HydraTransform::fit(hc, data.train);
    train_f = t.transform(data.train);
    test_f = t.transform(data.test);
    res.transform_path = out.string() + ".hqt";
    std::ofstream f(*res.transform_path, std::ios::binary);
    if (!f) throw Error("cannot write " + res.transform_path->string());
    t.save(f);
    if (!f) throw Error("write failed: " + res.transform_path->string());
  } else {
    const QuantConfig qc;
    train_f = quant_transform(qc, data.train);
    test_f = quant_transform(qc, data.test);
  }
  save_features(train_f, res.train_path);
  save_features(test_f, res.test_path);
  res.n_features = train_f.cols();
  return res;
}

OracleProbe cmd_oracle_probe(const std::string& dataset, const RunConfig& config, double threshold) {
  if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
  const DatasetPair data = load_run_data(dataset);
  const EnsembleConfig ec = config.ensemble_config(config.seeds.empty() ? 42 : config.seeds.front());
  std::optional<TaintGuard> guard;
  if (config.taint_check) guard.emplace();
  const BaseResult h = run_base(BaseModel::hydra_ridge, data.train, data.test, ec, deadline_for(config));
  const BaseResult q = run_base(BaseModel::quant_forest, data.train, data.test, ec, deadline_for(config));
  const PredictionMetrics m = prediction_metrics(h.predictions, q.predictions, data.test.y);
  OracleProbe p;
  p.dataset = data.train.name.empty() ? dataset : data.train.name;
  p.acc_hydra = m.acc_h;
  p.acc_quant = m.acc_q;
  p.acc_oracle = m.acc_oracle;
  p.oracle_gain = m.oracle_gain;
  p.threshold = threshold;
  p.recommended = m.oracle_gain > threshold;
  return p;
}

void print_probe(std::ostream& out, const OracleProbe& p) {
  out << std::fixed << std::setprecision(4);
  out << "dataset      " << p.dataset << '\n'
      << "acc_hydra    " << p.acc_hydra << '\n'
      << "acc_quant    " << p.acc_quant << '\n'
      << "acc_oracle   " << p.acc_oracle << '\n'
      << "oracle_gain  " << p.oracle_gain << " (threshold " << p.threshold << ")\n"
      << (p.recommended ? "ensemble recommended" : "ensemble not recommended") << '\n';
  out.unsetf(std::ios::floatfield);
}

}  // namespace hq
