// hqbench: benchmark, complementarity analysis and feature extraction for
// Hydra/Quant ensembles.

#include "hq/harness.hpp"
#include "hq/parallel.hpp"
#include "hq/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRunsFailed = 2;

struct Options {
  std::vector<std::string> data;
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> seeds;
  int folds = 5;
  double alpha = 4.0;
  std::size_t cap = 5000;
  double timeout = 0.0;
  std::string out;
  std::string format = "json";
  std::size_t threads = 0;
  std::size_t trees = 0;
  bool parallel = false;
  bool no_taint_check = false;
};

void add_common(CLI::App* cmd, Options& o, bool strategies) {
  cmd->add_option("--data", o.data, "Dataset stem, 'train,test' pair or synthetic:<kind>[:seed]")->required();
  if (strategies) cmd->add_option("--strategy", o.strategies, "Strategy name(s), or 'all'");
  cmd->add_option("--seed", o.seeds, "Seed(s) (default 42)");
  cmd->add_option("--folds", o.folds, "Out-of-fold folds")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "CAWPE exponent")->capture_default_str();
  cmd->add_option("--cap", o.cap, "Test subsample cap for feature metrics")->capture_default_str();
  cmd->add_option("--timeout", o.timeout, "Per-run wall-clock limit in seconds");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Stdout format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (default: HQ_NUM_THREADS or all cores)");
  cmd->add_option("--trees", o.trees, "Override forest size");
  cmd->add_flag("--parallel-datasets", o.parallel, "Run datasets concurrently");
  cmd->add_flag("--no-taint-check", o.no_taint_check, "Disable the test-split tripwire");
}

hq::RunConfig to_config(const Options& o) {
  hq::RunConfig c;
  c.datasets = o.data;
  for (const auto& s : o.strategies) {
    if (s == "all") {
      c.strategies.assign(hq::kAllStrategies.begin(), hq::kAllStrategies.end());
    } else {
      c.strategies.push_back(hq::parse_strategy(s));
    }
  }
  if (!o.seeds.empty()) c.seeds = o.seeds;
  c.folds = o.folds;
  c.alpha = o.alpha;
  c.cap = o.cap;
  if (o.timeout > 0.0) c.timeout_seconds = o.timeout;
  if (o.timeout < 0.0) throw hq::ConfigError("--timeout must be positive");
  c.out_dir = o.out;
  c.format = o.format == "csv" ? hq::OutputFormat::csv : hq::OutputFormat::json;
  c.parallel_datasets = o.parallel;
  c.taint_check = !o.no_taint_check;
  if (o.trees > 0) c.n_trees = o.trees;
  if (o.threads > 0) hq::set_num_threads(o.threads);
  return c;
}

int run_bench(const Options& o) {
  const hq::RunConfig config = to_config(o);
  config.validate(true);
  const auto results = hq::cmd_bench(config);
  if (!config.out_dir.empty()) hq::write_bench_outputs(config, results);
  if (config.format == hq::OutputFormat::csv) {
    hq::write_summary_csv(std::cout, results, config.strategies);
  } else {
    for (const auto& r : results) std::cout << hq::to_json(r).dump() << '\n';
  }
  bool all_ok = true;
  for (const auto& r : results) {
    if (!r.ok()) {
      all_ok = false;
      std::cerr << "run failed: " << r.dataset << " " << hq::to_string(r.strategy) << " seed " << r.seed << ": "
                << r.error << '\n';
    }
  }
  return all_ok ? kExitOk : kExitRunsFailed;
}

int run_complementarity(const Options& o) {
  const hq::RunConfig config = to_config(o);
  config.validate(false);
  const auto results = hq::cmd_complementarity(config);
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : results) all.push_back(hq::to_json(r));
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream f(config.out_dir / "complementarity.json");
    if (!f) throw hq::Error("cannot write " + (config.out_dir / "complementarity.json").string());
    f << all.dump(2) << '\n';
  }
  if (config.format == hq::OutputFormat::csv) {
    std::cout << "dataset,status,median_max_cross_corr,cca1,acc_hydra,acc_quant,acc_oracle,oracle_gain,"
                 "disagreement,error_corr\n";
    for (const auto& r : results) {
      std::cout << r.report.dataset << ',' << r.status;
      if (r.status == "ok") {
        const auto& p = r.report.prediction;
        std::cout << ',' << r.report.median_max_cross_corr << ','
                  << (r.report.canonical_corrs.empty() ? 0.0 : r.report.canonical_corrs.front()) << ',' << p.acc_h
                  << ',' << p.acc_q << ',' << p.acc_oracle << ',' << p.oracle_gain << ',' << p.disagreement << ','
                  << (p.error_corr.defined() ? std::to_string(*p.error_corr.value) : std::string());
      } else {
        std::cout << ",,,,,,,,";
      }
      std::cout << '\n';
    }
  } else {
    std::cout << all.dump(2) << '\n';
  }
  for (const auto& r : results) {
    if (r.status != "ok") return kExitRunsFailed;
  }
  return kExitOk;
}

int run_extract(const Options& o, const std::string& transform) {
  if (o.data.size() != 1) throw hq::ConfigError("extract takes exactly one --data");
  if (o.out.empty()) throw hq::ConfigError("extract needs --out <path prefix>");
  const auto kind = hq::parse_transform(transform);
  if (o.threads > 0) hq::set_num_threads(o.threads);
  const auto res = hq::cmd_extract(o.data.front(), kind, o.out, o.seeds.empty() ? 42 : o.seeds.front());
  std::cout << "features " << res.n_features << '\n' << "train " << res.train_path.string() << '\n'
            << "test " << res.test_path.string() << '\n';
  if (res.transform_path) std::cout << "transform " << res.transform_path->string() << '\n';
  return kExitOk;
}

int run_probe(const Options& o, double threshold) {
  const hq::RunConfig config = to_config(o);
  config.validate(false);
  int code = kExitOk;
  for (const auto& d : config.datasets) {
    try {
      hq::print_probe(std::cout, hq::cmd_oracle_probe(d, config, threshold));
    } catch (const hq::ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      std::cerr << "probe failed: " << d << ": " << e.what() << '\n';
      code = kExitRunsFailed;
    }
  }
  return code;
}

int run_make_synthetic(const std::string& kind, const hq::synthetic::Spec& base, const std::string& out) {
  hq::synthetic::Spec spec = base;
  spec.kind = hq::synthetic::parse_kind(kind);
  const auto pair = hq::synthetic::make(spec);
  std::filesystem::path stem(out);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  hq::save_dataset(pair.train, stem.string() + "_TRAIN.tsd");
  hq::save_dataset(pair.test, stem.string() + "_TEST.tsd");
  std::cout << stem.string() << "_TRAIN.tsd\n" << stem.string() << "_TEST.tsd\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hydra/Quant ensemble benchmark"};
  app.require_subcommand(1);

  Options bench_o, comp_o, extract_o, probe_o;
  auto* bench = app.add_subcommand("bench", "Run strategies on datasets and record results");
  add_common(bench, bench_o, true);

  auto* comp = app.add_subcommand("complementarity", "Feature and prediction complementarity report");
  add_common(comp, comp_o, false);

  std::string transform = "quant";
  auto* extract = app.add_subcommand("extract", "Fit a transform and write feature blobs");
  add_common(extract, extract_o, false);
  extract->add_option("--transform", transform, "hydra or quant")->capture_default_str();

  double threshold = 0.05;
  auto* probe = app.add_subcommand("oracle-probe", "Fit both bases once and report the oracle gain");
  add_common(probe, probe_o, false);
  probe->add_option("--threshold", threshold, "Minimum oracle gain to recommend an ensemble")->capture_default_str();

  std::string syn_kind = "planted_complementarity";
  std::string syn_out;
  hq::synthetic::Spec syn;
  auto* make = app.add_subcommand("make-synthetic", "Write a synthetic train/test pair");
  make->add_option("--kind", syn_kind, "planted_complementarity, cross_interaction, level_shift, random_labels")
      ->capture_default_str();
  make->add_option("--out", syn_out, "Output stem")->required();
  make->add_option("--n-train", syn.n_train)->capture_default_str();
  make->add_option("--n-test", syn.n_test)->capture_default_str();
  make->add_option("--length", syn.length)->capture_default_str();
  make->add_option("--channels", syn.channels)->capture_default_str();
  make->add_option("--classes", syn.classes)->capture_default_str();
  make->add_option("--seed", syn.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*bench) return run_bench(bench_o);
    if (*comp) return run_complementarity(comp_o);
    if (*extract) return run_extract(extract_o, transform);
    if (*probe) return run_probe(probe_o, threshold);
    if (*make) return run_make_synthetic(syn_kind, syn, syn_out);
  } catch (const hq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunsFailed;
  }
  return kExitConfig;
}
