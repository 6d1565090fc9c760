// Copyright 2026 The aretrim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch front end: synthetic data generation, conventional and trimmed GMM
// training, maximum-likelihood classification, dispersion export, the
// synthetic benchmark, and the distribution-theory verification suites.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aretrim/aretrim.hpp"

namespace fs = std::filesystem;
using namespace aretrim;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& flag, const fs::path& path) {
  if (!fs::exists(path))
    throw UsageError(flag + ": file not found: " + path.string());
}

DatasetFormat format_for(const std::string& format_flag, const fs::path& path) {
  if (format_flag == "csv") return DatasetFormat::kCsv;
  if (format_flag == "binary") return DatasetFormat::kBinary;
  return path.extension() == ".csv" ? DatasetFormat::kCsv : DatasetFormat::kBinary;
}

// "--contaminate rate=0.1,mode=point_mass,scale=10"
ContaminationSpec parse_contamination(const std::string& text) {
  ContaminationSpec spec;
  bool have_rate = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos)
        throw UsageError("--contaminate: expected key=value, got '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string val = item.substr(eq + 1);
      try {
        if (key == "rate") {
          spec.rate = std::stod(val);
          have_rate = true;
        } else if (key == "scale") {
          spec.scale = std::stod(val);
        } else if (key == "mode") {
          spec.mode = contamination_mode_from_name(val);
        } else {
          throw UsageError("--contaminate: unknown key '" + key + "'");
        }
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        throw UsageError("--contaminate: bad value for '" + key + "': " + e.what());
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!have_rate) throw UsageError("--contaminate: 'rate' is required");
  try {
    check_contamination(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--contaminate: ") + e.what());
  }
  return spec;
}

double default_tau(Metric metric) {
  return metric == Metric::kEuclidean ? 0.96 : 0.92;
}

struct SynthArgs {
  std::string model, out, contaminate, format = "auto";
  std::uint64_t n = 0, seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  require_file("--model", a.model);
  if (a.n < 1) throw UsageError("--n: must be at least 1");
  const Gmm model = load_gmm(a.model);
  SampledData sampled = sample_gmm(model, a.n, Seed{a.seed});
  Mask outliers(a.n, 0);
  if (!a.contaminate.empty()) {
    const ContaminationSpec spec = parse_contamination(a.contaminate);
    ContaminatedData cd =
        contaminate(sampled.data, spec, derive_seed(Seed{a.seed}, 1));
    sampled.data = std::move(cd.data);
    outliers = std::move(cd.outliers);
  }
  save_dataset(a.out, sampled.data, format_for(a.format, a.out));
  save_mask(a.out + ".mask", outliers);
  std::size_t n_out = 0;
  for (auto b : outliers) n_out += b;
  std::cout << "wrote " << a.out << ": T=" << sampled.data.size()
            << " d=" << sampled.data.dim() << " outliers=" << n_out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data, method, out, report, ll_trace, metric = "euclidean";
  std::string format = "auto";
  int k = 32;
  std::optional<double> tau;
  double var_floor = 0.01, min_weight = 0.05;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  require_file("--data", a.data);
  if (a.k < 1) throw UsageError("--k: must be at least 1");
  if (a.method != "conventional" && a.method != "are-trim")
    throw UsageError("--method: expected 'conventional' or 'are-trim'");
  const Metric metric = metric_from_name(a.metric);
  const double tau = a.tau.value_or(default_tau(metric));
  if (!(tau > 0.0 && tau <= 1.0)) throw UsageError("--tau: must lie in (0, 1]");

  const Dataset data = load_dataset(a.data, format_for(a.format, a.data));
  TrainConfig cfg;
  cfg.k = a.k;
  cfg.kmeans.seed = Seed{a.seed};
  cfg.em.variance_floor_factor = a.var_floor;
  cfg.em.min_weight = a.min_weight;
  TrainedModel tm;
  if (a.method == "conventional") {
    tm = train_conventional(data, cfg);
  } else {
    cfg.policy = TrimPolicy{metric, tau};
    tm = train_are_trim(data, cfg);
  }
  save_gmm(a.out, tm.model);

  if (!a.report.empty()) {
    nlohmann::ordered_json j;
    j["method"] = a.method;
    j["metric"] = a.method == "are-trim" ? metric_name(metric) : "none";
    j["tau"] = a.method == "are-trim" ? tau : 1.0;
    j["retained_fraction"] = tm.retained_fraction;
    j["nu_euclidean"] = tm.dispersion_report.nu_euclidean;
    j["nu_mahalanobis"] = tm.dispersion_report.nu_mahalanobis;
    if (tm.dispersion_report.fitted) {
      j["mu_hat"] = tm.dispersion_report.fitted->mu_hat;
      j["sigma_hat"] = tm.dispersion_report.fitted->sigma_hat;
    } else {
      j["mu_hat"] = nullptr;
      j["sigma_hat"] = nullptr;
    }
    j["em_iterations"] = tm.ll_trace.size();
    j["final_log_likelihood"] =
        tm.ll_trace.empty() ? 0.0 : tm.ll_trace.back().log_likelihood;
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto& row : tm.ll_trace)
      trace.push_back({{"iteration", row.iteration},
                       {"log_likelihood", row.log_likelihood},
                       {"num_floored_variances", row.num_floored_variances},
                       {"num_floored_weights", row.num_floored_weights}});
    j["ll_trace"] = std::move(trace);
    atomic_write(a.report, j.dump(2) + "\n");
  }
  if (!a.ll_trace.empty()) atomic_write(a.ll_trace, ll_trace_csv(tm.ll_trace));

  std::cout << "wrote " << a.out << ": K=" << tm.model.num_components()
            << " d=" << tm.model.dim()
            << " retained_fraction=" << tm.retained_fraction << "\n";
  return 0;
}

struct ClassifyArgs {
  std::string models, test, out, format = "auto";
  int chunk_len = 0;
};

int cmd_classify(const ClassifyArgs& a) {
  if (!fs::is_directory(a.models))
    throw UsageError("--models: not a directory: " + a.models);
  if (a.chunk_len < 1) throw UsageError("--chunk-len: must be at least 1");
  require_file("--test", a.test);

  std::map<std::string, fs::path> model_files;  // label -> path, sorted
  for (const auto& entry : fs::directory_iterator(a.models))
    if (entry.path().extension() == ".json")
      model_files[entry.path().stem().string()] = entry.path();
  if (model_files.empty())
    throw UsageError("--models: no .json model files in " + a.models);

  std::vector<LabeledGmm> models;
  for (const auto& [label, path] : model_files)
    models.push_back({label, load_gmm(path)});

  const Dataset test = load_dataset(a.test, format_for(a.format, a.test));
  const std::vector<Dataset> chunks = split_chunks(test, a.chunk_len);

  std::string csv = "chunk_index,predicted_label";
  for (const auto& m : models) csv += ",ll_" + m.label;
  csv += '\n';
  std::vector<std::string> predicted;
  for (std::size_t j = 0; j < chunks.size(); ++j) {
    const ClassifyResult res = classify_chunk(chunks[j], models);
    predicted.push_back(models[res.best_index].label);
    csv += std::to_string(j) + ',' + predicted.back();
    for (const double ll : res.log_likelihoods)
      csv += ',' + detail::format_double(ll);
    csv += '\n';
  }
  atomic_write(a.out, csv);

  const fs::path labels_path = a.test + ".labels";
  if (fs::exists(labels_path)) {
    std::istringstream in(read_file(labels_path));
    std::vector<std::string> truth;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) truth.push_back(line);
    }
    if (truth.size() != chunks.size())
      throw std::runtime_error("label sidecar has " + std::to_string(truth.size()) +
                               " labels for " + std::to_string(chunks.size()) +
                               " chunks");
    std::size_t hits = 0;
    for (std::size_t j = 0; j < chunks.size(); ++j)
      if (truth[j] == predicted[j]) ++hits;
    std::cout << "accuracy=" << static_cast<double>(hits) / chunks.size() << " ("
              << hits << "/" << chunks.size() << ")\n";
  }
  std::cout << "wrote " << a.out << ": " << chunks.size() << " chunks, "
            << models.size() << " models\n";
  return 0;
}

struct DispersionArgs {
  std::string data, model, out, metric = "euclidean", format = "auto";
  std::optional<double> tau;
};

int cmd_dispersion(const DispersionArgs& a) {
  require_file("--data", a.data);
  require_file("--model", a.model);
  const Metric metric = metric_from_name(a.metric);
  const double tau = a.tau.value_or(default_tau(metric));
  if (!(tau > 0.0 && tau <= 1.0)) throw UsageError("--tau: must lie in (0, 1]");
  const Dataset data = load_dataset(a.data, format_for(a.format, a.data));
  const Gmm model = load_gmm(a.model);
  DispersionModel fitted{};
  TheoreticalModel theo{};
  const auto records =
      dispersion_records(data, model, TrimPolicy{metric, tau}, &fitted, &theo);
  export_dispersion(a.out, records, fitted, theo);
  std::cout << "wrote " << a.out << ": " << records.size() << " rows, nu="
            << theo.nu << " mu_hat=" << fitted.mu_hat
            << " sigma_hat=" << fitted.sigma_hat << "\n";
  return 0;
}

struct BenchArgs {
  std::string spec, out;
};

int cmd_bench(const BenchArgs& a) {
  require_file("--spec", a.spec);
  BenchmarkSpec spec;
  try {
    spec = benchmark_spec_from_json(read_file(a.spec));
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  const auto rows = run_benchmark(spec);
  atomic_write(a.out, benchmark_csv(rows));
  std::cout << "wrote " << a.out << ": " << rows.size() << " rows\n";
  return 0;
}

struct VerifyArgs {
  std::string suite;
  int trials = 0;  // 0 = per-suite default
  std::uint64_t seed = 20260809;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<CheckResult> results;
  const Seed seed{a.seed};
  if (a.suite == "liu") {
    results = verify_liu(a.trials > 0 ? a.trials : 100000, seed);
  } else if (a.suite == "chi") {
    results = verify_chi(a.trials > 0 ? a.trials : 100000, seed);
  } else if (a.suite == "chi2") {
    results = verify_chi2(a.trials > 0 ? a.trials : 100000, seed);
  } else if (a.suite == "normal-approx") {
    results = verify_normal_approx(a.trials > 0 ? a.trials : 100000, seed);
  } else if (a.suite == "breakdown") {
    results = verify_breakdown(a.trials > 0 ? a.trials : 100, seed);
  } else {
    throw UsageError("--suite: unknown suite '" + a.suite + "'");
  }
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << ": " << r.detail
              << "\n";
    all_pass &= r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Robust Gaussian-mixture estimation with automatic dispersion-degree "
      "trimming"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Sample a dataset from a model file");
  synth->add_option("--model", synth_args.model, "model JSON to sample from")
      ->required();
  synth->add_option("--n", synth_args.n, "number of samples")->required();
  synth->add_option("--contaminate", synth_args.contaminate,
                    "outlier injection, e.g. rate=0.1,mode=point_mass,scale=10 "
                    "(modes: uniform_box, shifted_gaussian, point_mass)");
  synth->add_option("--seed", synth_args.seed, "RNG seed")->required();
  synth->add_option("--out", synth_args.out,
                    "output dataset path; a .mask sidecar is written too")
      ->required();
  synth->add_option("--format", synth_args.format,
                    "dataset format: auto (by extension), csv, binary")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a mixture model");
  train->add_option("--data", train_args.data, "training dataset")->required();
  train->add_option("--k", train_args.k, "number of Gaussians (default 32)");
  train
      ->add_option("--method", train_args.method,
                   "conventional (k-means + EM) or are-trim (trimmed k-means + "
                   "dispersion trimming + EM)")
      ->required();
  train->add_option("--metric", train_args.metric,
                    "trim metric: euclidean or mahalanobis")
      ->check(CLI::IsMember({"euclidean", "mahalanobis"}));
  train->add_option("--tau", train_args.tau,
                    "trim threshold in (0,1]; 1.0 disables trimming "
                    "(default 0.96 euclidean, 0.92 mahalanobis)");
  train->add_option("--var-floor", train_args.var_floor,
                    "variance floor factor (default 0.01)");
  train->add_option("--min-weight", train_args.min_weight,
                    "minimum Gaussian weight (default 0.05)");
  train->add_option("--seed", train_args.seed, "RNG seed")->required();
  train->add_option("--out", train_args.out, "output model JSON")->required();
  train->add_option("--report", train_args.report,
                    "training report JSON (retained fraction, nu, fitted "
                    "dispersion model, LL trace)");
  train->add_option("--ll-trace", train_args.ll_trace,
                    "per-iteration log-likelihood trace CSV");
  train->add_option("--format", train_args.format,
                    "dataset format: auto, csv, binary")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));

  ClassifyArgs classify_args;
  auto* classify =
      app.add_subcommand("classify", "Maximum-likelihood chunk classification");
  classify->add_option("--models", classify_args.models,
                       "directory of model .json files (label = file stem)")
      ->required();
  classify->add_option("--test", classify_args.test, "test dataset")->required();
  classify->add_option("--chunk-len", classify_args.chunk_len,
                       "samples per classification chunk")
      ->required();
  classify->add_option("--out", classify_args.out, "per-chunk results CSV")
      ->required();
  classify->add_option("--format", classify_args.format,
                       "dataset format: auto, csv, binary")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));

  DispersionArgs dispersion_args;
  auto* dispersion = app.add_subcommand(
      "dispersion", "Export per-sample dispersion degrees against a model");
  dispersion->add_option("--data", dispersion_args.data, "dataset")->required();
  dispersion->add_option("--model", dispersion_args.model, "model JSON")
      ->required();
  dispersion->add_option("--metric", dispersion_args.metric,
                         "euclidean or mahalanobis")
      ->check(CLI::IsMember({"euclidean", "mahalanobis"}));
  dispersion->add_option("--tau", dispersion_args.tau,
                         "threshold for the is_outlier column "
                         "(default 0.96 euclidean, 0.92 mahalanobis)");
  dispersion->add_option("--out", dispersion_args.out, "output CSV")->required();
  dispersion->add_option("--format", dispersion_args.format,
                         "dataset format: auto, csv, binary")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));

  BenchArgs bench_args;
  auto* bench = app.add_subcommand(
      "bench", "Synthetic contaminated-classification benchmark");
  bench->add_option("--spec", bench_args.spec, "benchmark spec JSON")->required();
  bench->add_option("--out", bench_args.out, "results CSV")->required();

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand(
      "verify", "Monte Carlo checks of the dispersion distribution theory");
  verify->add_option("--suite", verify_args.suite,
                     "liu, chi, chi2, normal-approx, or breakdown")
      ->required();
  verify->add_option("--trials", verify_args.trials,
                     "Monte Carlo draws (breakdown: seeds); 0 = suite default");
  verify->add_option("--seed", verify_args.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train->parsed()) return cmd_train(train_args);
    if (classify->parsed()) return cmd_classify(classify_args);
    if (dispersion->parsed()) return cmd_dispersion(dispersion_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    if (verify->parsed()) return cmd_verify(verify_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
