#include "hq/complementarity.hpp"
#include "hq/ensembles.hpp"
#include "hq/harness.hpp"
#include "hq/hydra.hpp"
#include "hq/parallel.hpp"
#include "hq/quant.hpp"
#include "hq/run_control.hpp"
#include "hq/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <map>

namespace py = pybind11;
using namespace hq;

namespace {

py::array_t<float> series_array(const Dataset& d) {
  py::array_t<float> out({d.n_instances, d.n_channels, d.series_length});
  std::copy(d.x.begin(), d.x.end(), out.mutable_data());
  return out;
}

// x is (n, length) or (n, channels, length); labels are arbitrary integers.
// A test split must pass the training label values so both share one mapping.
Dataset from_arrays(py::array_t<float, py::array::c_style | py::array::forcecast> x, std::vector<std::int64_t> y,
                    const std::string& split, const std::string& name,
                    std::optional<std::vector<std::int64_t>> label_values) {
  if (x.ndim() != 2 && x.ndim() != 3) throw ConfigError("x must be 2-D or 3-D");
  Dataset d;
  d.name = name;
  if (split != "train" && split != "test") throw ConfigError("split must be 'train' or 'test'");
  d.split = split == "train" ? Split::train : Split::test;
  d.n_instances = static_cast<std::size_t>(x.shape(0));
  d.n_channels = x.ndim() == 3 ? static_cast<std::size_t>(x.shape(1)) : 1;
  d.series_length = static_cast<std::size_t>(x.shape(x.ndim() - 1));
  if (y.size() != d.n_instances) throw ConfigError("x and y disagree on the number of instances");
  d.x.assign(x.data(), x.data() + x.size());
  if (label_values) {
    d.label_values = *label_values;
  } else {
    d.label_values = y;
    std::sort(d.label_values.begin(), d.label_values.end());
    d.label_values.erase(std::unique(d.label_values.begin(), d.label_values.end()), d.label_values.end());
  }
  std::map<std::int64_t, int> index;
  for (std::size_t c = 0; c < d.label_values.size(); ++c) index[d.label_values[c]] = static_cast<int>(c);
  d.y.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto it = index.find(y[i]);
    if (it == index.end()) throw DataError("label " + std::to_string(y[i]) + " not among the training labels");
    d.y[i] = it->second;
  }
  validate(d, d.split == Split::train);
  return d;
}

RunConfig make_config(std::vector<std::string> datasets, const std::vector<std::string>& strategies,
                      std::vector<std::uint64_t> seeds, int folds, double alpha, std::size_t cap,
                      std::optional<double> timeout, std::optional<std::size_t> n_trees) {
  RunConfig c;
  c.datasets = std::move(datasets);
  for (const auto& s : strategies) {
    if (s == "all") {
      c.strategies.assign(kAllStrategies.begin(), kAllStrategies.end());
    } else {
      c.strategies.push_back(parse_strategy(s));
    }
  }
  if (!seeds.empty()) c.seeds = std::move(seeds);
  c.folds = folds;
  c.alpha = alpha;
  c.cap = cap;
  c.timeout_seconds = timeout;
  c.n_trees = n_trees;
  return c;
}

EnsembleConfig ensemble_config(std::uint64_t seed, int folds, std::optional<std::size_t> n_trees) {
  RunConfig r;
  r.folds = folds;
  r.n_trees = n_trees;
  return r.ensemble_config(seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hydra and Quant features, their ensembles and complementarity metrics";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<TaintError>(m, "TaintError", base.ptr());
  py::register_exception<TimeoutError>(m, "TimeoutError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("name", &Dataset::name)
      .def_readonly("n_instances", &Dataset::n_instances)
      .def_readonly("n_channels", &Dataset::n_channels)
      .def_readonly("series_length", &Dataset::series_length)
      .def_readonly("label_values", &Dataset::label_values)
      .def_property_readonly("n_classes", &Dataset::n_classes)
      .def_property_readonly("is_test", &Dataset::is_test)
      .def_property_readonly("x", &series_array)
      .def_property_readonly("y", [](const Dataset& d) { return py::array_t<int>(d.y.size(), d.y.data()); })
      .def("__repr__", [](const Dataset& d) {
        return "<Dataset " + d.name + (d.is_test() ? " test" : " train") + " n=" + std::to_string(d.n_instances) +
               " channels=" + std::to_string(d.n_channels) + " length=" + std::to_string(d.series_length) + ">";
      });

  m.def("dataset_from_arrays", &from_arrays, py::arg("x"), py::arg("y"), py::arg("split") = "train",
        py::arg("name") = "", py::arg("label_values") = py::none());
  m.def(
      "load_data",
      [](const std::string& spec) {
        DatasetPair p = load_run_data(spec);
        return py::make_tuple(std::move(p.train), std::move(p.test));
      },
      py::arg("spec"), "Loads a dataset stem, a 'train,test' pair or synthetic:<kind>[:seed].");
  m.def(
      "make_synthetic",
      [](const std::string& kind, std::size_t n_train, std::size_t n_test, std::size_t length, std::size_t channels,
         std::size_t classes, std::uint64_t seed) {
        synthetic::Spec s;
        s.kind = synthetic::parse_kind(kind);
        s.n_train = n_train;
        s.n_test = n_test;
        s.length = length;
        s.channels = channels;
        s.classes = classes;
        s.seed = seed;
        DatasetPair p = synthetic::make(s);
        return py::make_tuple(std::move(p.train), std::move(p.test));
      },
      py::arg("kind"), py::arg("n_train") = 600, py::arg("n_test") = 400, py::arg("length") = 64,
      py::arg("channels") = 1, py::arg("classes") = 2, py::arg("seed") = 42);
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));

  m.def(
      "hydra_features",
      [](const Dataset& train, const Dataset& test, std::uint64_t seed) {
        py::gil_scoped_release release;
        HydraConfig c;
        c.seed = seed;
        const HydraTransform t = HydraTransform::fit(c, train);
        Matrix a = t.transform(train).values;
        Matrix b = t.transform(test).values;
        return std::make_pair(std::move(a), std::move(b));
      },
      py::arg("train"), py::arg("test"), py::arg("seed") = 42, "Normalised Hydra features of both splits.");
  m.def(
      "quant_features",
      [](const Dataset& d) {
        py::gil_scoped_release release;
        return Matrix(quant_transform(QuantConfig{}, d).values);
      },
      py::arg("dataset"));

  m.def(
      "run_strategy",
      [](const std::string& strategy, const Dataset& train, const Dataset& test, std::uint64_t seed, int folds,
         std::optional<std::size_t> n_trees) {
        const EnsembleConfig config = ensemble_config(seed, folds, n_trees);
        const Strategy s = parse_strategy(strategy);
        EnsembleResult r;
        {
          py::gil_scoped_release release;
          TaintGuard guard;
          RunContext ctx;
          r = run_strategy(s, train, test, config, ctx);
        }
        py::dict out;
        out["probs"] = r.probs;
        out["predictions"] = r.predictions;
        out["accuracy"] = accuracy(r.predictions, test.y);
        out["training_time"] = r.timings.training_time();
        return out;
      },
      py::arg("strategy"), py::arg("train"), py::arg("test"), py::arg("seed") = 42, py::arg("folds") = 5,
      py::arg("n_trees") = py::none());

  m.def(
      "bench_json",
      [](std::vector<std::string> datasets, const std::vector<std::string>& strategies,
         std::vector<std::uint64_t> seeds, int folds, double alpha, std::optional<double> timeout,
         std::optional<std::size_t> n_trees, std::optional<std::filesystem::path> out_dir) {
        RunConfig c = make_config(std::move(datasets), strategies, std::move(seeds), folds, alpha, 5000, timeout,
                                  n_trees);
        if (out_dir) c.out_dir = *out_dir;
        c.validate(true);
        std::vector<std::string> records;
        {
          py::gil_scoped_release release;
          const auto results = cmd_bench(c);
          if (out_dir) write_bench_outputs(c, results);
          for (const auto& r : results) records.push_back(to_json(r).dump());
        }
        return records;
      },
      py::arg("datasets"), py::arg("strategies"), py::arg("seeds") = std::vector<std::uint64_t>{},
      py::arg("folds") = 5, py::arg("alpha") = 4.0, py::arg("timeout") = py::none(), py::arg("n_trees") = py::none(),
      py::arg("out_dir") = py::none());

  m.def(
      "complementarity_json",
      [](std::vector<std::string> datasets, std::uint64_t seed, std::size_t cap, std::optional<std::size_t> n_trees) {
        RunConfig c = make_config(std::move(datasets), {}, {seed}, 5, 4.0, cap, std::nullopt, n_trees);
        c.validate(false);
        std::vector<std::string> records;
        py::gil_scoped_release release;
        for (const auto& r : cmd_complementarity(c)) records.push_back(to_json(r).dump());
        return records;
      },
      py::arg("datasets"), py::arg("seed") = 42, py::arg("cap") = 5000, py::arg("n_trees") = py::none());

  m.def(
      "oracle_probe",
      [](const std::string& dataset, std::uint64_t seed, double threshold, std::optional<std::size_t> n_trees) {
        const RunConfig c = make_config({dataset}, {}, {seed}, 5, 4.0, 5000, std::nullopt, n_trees);
        OracleProbe p;
        {
          py::gil_scoped_release release;
          p = cmd_oracle_probe(dataset, c, threshold);
        }
        py::dict out;
        out["acc_hydra"] = p.acc_hydra;
        out["acc_quant"] = p.acc_quant;
        out["acc_oracle"] = p.acc_oracle;
        out["oracle_gain"] = p.oracle_gain;
        out["threshold"] = p.threshold;
        out["recommended"] = p.recommended;
        return out;
      },
      py::arg("dataset"), py::arg("seed") = 42, py::arg("threshold") = 0.05, py::arg("n_trees") = py::none());

  m.def(
      "prediction_metrics",
      [](const Labels& h, const Labels& q, const Labels& truth) {
        const PredictionMetrics p = prediction_metrics(h, q, truth);
        py::dict out;
        out["n"] = p.n;
        out["acc_hydra"] = p.acc_h;
        out["acc_quant"] = p.acc_q;
        out["acc_oracle"] = p.acc_oracle;
        out["oracle_gain"] = p.oracle_gain;
        out["disagreement"] = p.disagreement;
        out["error_corr"] = p.error_corr.value ? py::object(py::float_(*p.error_corr.value)) : py::object(py::none());
        out["both_wrong"] = p.both_wrong;
        return out;
      },
      py::arg("pred_hydra"), py::arg("pred_quant"), py::arg("truth"));
  m.def("cawpe_combine", &cawpe_combine, py::arg("p_hydra"), py::arg("p_quant"), py::arg("acc_hydra"),
        py::arg("acc_quant"), py::arg("alpha") = 4.0);
  m.def("canonical_correlations", &canonical_correlations, py::arg("h"), py::arg("q"),
        py::arg("max_components") = 5, py::arg("eps") = 1e-6);
  m.def(
      "median_max_cross_correlation",
      [](const Matrix& h, const Matrix& q) { return median_max_cross_correlation(h, q).median_max; }, py::arg("h"),
      py::arg("q"));

  m.def("strategies", [] {
    std::vector<std::string> out;
    for (Strategy s : kAllStrategies) out.push_back(to_string(s));
    return out;
  });
  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);
}
