#include "zul/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zul/additive_unlearn.hpp"
#include "zul/errors.hpp"
#include "zul/log.hpp"
#include "zul/matrix_io.hpp"
#include "zul/pipeline.hpp"

namespace zul {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerifyFailed = 3;

// Rebuilds the memory and fact records an experiment directory describes.
struct LoadedExperiment {
  ExperimentConfig config;
  GeneratedMemory gen;
  KnowledgeSets sets;
};

LoadedExperiment load_experiment_dir(const fs::path& dir) {
  LoadedExperiment out;
  out.config = load_config(dir / "config.json");

  const Matrix w = read_zumx(dir / "w.csv");
  const Matrix vocab = read_zumx(dir / "vocab.csv");
  const Matrix keys = read_zumx(dir / "keys.csv");
  out.gen.memory.w = w;
  out.gen.memory.temperature = out.config.temperature;
  for (Index j = 0; j < vocab.cols(); ++j)
    out.gen.memory.vocabulary.push_back(vocab.col(j));

  for (const auto& [id, label] : read_facts_json(dir / "facts.json")) {
    if (id < 0 || id >= keys.cols())
      throw ValidationError("facts.json id " + std::to_string(id) +
                            " has no column in keys.csv");
    if (label < 0 || label >= vocab.cols())
      throw ValidationError("facts.json value_label " + std::to_string(label) +
                            " has no column in vocab.csv");
    FactRecord fact;
    fact.id = id;
    fact.key = keys.col(id);
    fact.value_label = label;
    fact.value = vocab.col(label);
    out.gen.facts.push_back(std::move(fact));
  }

  out.sets.k_f = read_zumx(dir / "k_f.csv");
  out.sets.m_f = read_zumx(dir / "m_f.csv");
  out.sets.k_0 = read_zumx(dir / "k_0.csv");
  out.sets.m_0 = read_zumx(dir / "m_0.csv");
  out.sets.m_n = read_zumx(dir / "m_n.csv");
  return out;
}

EditReport read_edit_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("cannot parse " + path.string() + ": " + e.what());
  }
  const nlohmann::json& edit = doc.contains("edit") ? doc.at("edit") : doc;

  EditReport report;
  report.method = edit.value("method", std::string{});
  const auto read_terms = [&](const char* key, ObjectiveTerms& terms) {
    if (!edit.contains(key)) return;
    const auto& t = edit.at(key);
    terms.zero = t.value("zero", 0.0);
    terms.forget = t.value("forget", 0.0);
    terms.utility = t.value("utility", 0.0);
    terms.reg = t.value("reg", 0.0);
  };
  read_terms("before", report.before);
  read_terms("after", report.after);
  report.projector_rank = edit.value("projector_rank", Index{0});
  report.stationarity_residual = edit.value("stationarity_residual", 0.0);
  report.wall_time_seconds = edit.value("wall_time_seconds", 0.0);
  if (edit.contains("iters")) {
    report.has_gd_stats = true;
    report.iters = edit.value("iters", 0);
    report.final_grad_norm = edit.value("final_grad_norm", 0.0);
    report.converged = edit.value("converged", true);
  }
  return report;
}

std::vector<int> parse_sizes(const std::string& csv) {
  std::vector<int> sizes;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      sizes.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ValidationError("--sizes: cannot parse '" + item + "'");
    }
  }
  return sizes;
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"zul: null-space knowledge unlearning on a synthetic "
               "associative memory"};
  app.require_subcommand(1);

  std::string config_path, in_dir, out_path;
  int trials = 20;
  std::uint64_t verify_seed = 1;
  bool inject_fault = false;
  std::string sizes_csv;
  int jobs = 1;

  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a memory and its knowledge sets");
  generate->add_option("--config", config_path, "config JSON")->required();
  generate->add_option("--out", out_path, "output directory")->required();

  CLI::App* edit = app.add_subcommand(
      "edit", "Apply the configured edit to a generated directory");
  edit->add_option("--config", config_path, "config JSON")->required();
  edit->add_option("--in", in_dir, "experiment directory")->required();
  edit->add_option("--out", out_path, "output directory")->required();

  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate metrics on an edited directory");
  eval->add_option("--in", in_dir, "experiment directory")->required();
  eval->add_option("--out", out_path, "report JSON path")->required();

  CLI::App* run = app.add_subcommand(
      "run", "generate + edit + eval + pca in one pass");
  run->add_option("--config", config_path, "config JSON")->required();
  run->add_option("--out", out_path, "output directory")->required();

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the numerical invariant suite");
  verify->add_option("--trials", trials, "instances per check");
  verify->add_option("--seed", verify_seed, "base seed");
  verify->add_option("--out", out_path, "verify JSON path");
  verify->add_flag("--inject-fault", inject_fault)->group("");  // test hook

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run the pipeline across forget-set sizes");
  sweep->add_option("--config", config_path, "config JSON")->required();
  sweep->add_option("--sizes", sizes_csv, "comma-separated forget sizes")
      ->required();
  sweep->add_option("--jobs", jobs, "worker threads");
  sweep->add_option("--out", out_path, "sweep CSV path")->required();

  CLI::App* pca = app.add_subcommand(
      "pca", "Project before/after forget outputs to 2-D");
  pca->add_option("--in", in_dir, "experiment directory")->required();
  pca->add_option("--out", out_path, "PCA CSV path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (generate->parsed()) {
    ExperimentConfig config = load_config(config_path);
    ExperimentResult result = run_pipeline(config);
    write_generation_artifacts(result, out_path);
    log_info("generated experiment " + result.hash + " in " + out_path);
    return kExitOk;
  }

  if (edit->parsed()) {
    const ExperimentConfig config = load_config(config_path);
    const LoadedExperiment loaded = load_experiment_dir(in_dir);
    const EditOutcome outcome =
        run_edit(config, loaded.gen.memory.w, loaded.sets);
    fs::create_directories(out_path);
    write_zumx(outcome.w_new, fs::path(out_path) / "w_after.csv");
    std::ofstream edit_json(fs::path(out_path) / "edit.json");
    if (!edit_json)
      throw IoError("cannot open for writing: " +
                    (fs::path(out_path) / "edit.json").string());
    edit_json << edit_json_string(outcome.report);
    return kExitOk;
  }

  if (eval->parsed()) {
    const LoadedExperiment loaded = load_experiment_dir(in_dir);
    const Matrix w_after = read_zumx(fs::path(in_dir) / "w_after.csv");
    const MetricsReport metrics = evaluate_memory(
        loaded.config, loaded.gen, loaded.gen.memory.w, w_after);

    // The edit report is not recomputed here; re-read what the producing
    // command left behind.
    EditReport edit_report;
    edit_report.method = to_string(loaded.config.method);
    for (const char* source : {"edit.json", "report.json"}) {
      const fs::path candidate = fs::path(in_dir) / source;
      if (!fs::exists(candidate)) continue;
      edit_report = read_edit_report(candidate);
      break;
    }
    ReportContext ctx{config_hash(loaded.config),
                      to_string(loaded.config.method),
                      loaded.config.layer_seeds()};
    write_report(ctx, metrics, edit_report, out_path);
    log_info("metrics written to " + out_path);
    return kExitOk;
  }

  if (run->parsed()) {
    ExperimentConfig config = load_config(config_path);
    ExperimentResult result = run_experiment(config, out_path);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "run %s: efficacy %.3f -> %.3f, specificity %.3f -> %.3f, "
                  "pseudo-ppl %.3f -> %.3f\n",
                  result.hash.c_str(), result.metrics.efficacy_before,
                  result.metrics.efficacy_after,
                  result.metrics.specificity_before,
                  result.metrics.specificity_after,
                  result.metrics.pseudo_ppl_before,
                  result.metrics.pseudo_ppl_after);
    std::cout << line;
    return kExitOk;
  }

  if (verify->parsed()) {
    VerifyOptions opts;
    opts.trials = trials;
    opts.seed = verify_seed;
    opts.inject_fault = inject_fault;
    const VerifyReport report = run_verify(opts);
    const std::string json = verify_json_string(report, opts);
    if (!out_path.empty()) {
      std::ofstream out(out_path);
      if (!out) throw IoError("cannot open for writing: " + out_path);
      out << json;
    }
    std::cout << json;
    return report.all_pass ? kExitOk : kExitVerifyFailed;
  }

  if (sweep->parsed()) {
    const ExperimentConfig base = load_config(config_path);
    const std::vector<SweepRow> rows =
        run_sweep(base, parse_sizes(sizes_csv), jobs);
    write_sweep_csv(rows, out_path);
    log_info("sweep written to " + out_path);
    return kExitOk;
  }

  if (pca->parsed()) {
    const fs::path dir(in_dir);
    const Matrix w = read_zumx(dir / "w.csv");
    const Matrix w_after = read_zumx(dir / "w_after.csv");
    const Matrix k_f = read_zumx(dir / "k_f.csv");
    write_pca_csv(pca_shift(w * k_f, w_after * k_f), out_path);
    return kExitOk;
  }

  return kExitValidation;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const ValidationError& e) {
    log_error(e.what());
    return kExitValidation;
  } catch (const IoError& e) {
    log_error(e.what());
    return kExitValidation;
  } catch (const ComplexityLimitError& e) {
    log_error(e.what());
    return kExitNumerical;
  } catch (const NumericalError& e) {
    log_error(e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    log_error(std::string("unexpected failure: ") + e.what());
    return kExitNumerical;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace zul
