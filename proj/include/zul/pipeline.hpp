#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zul/config.hpp"
#include "zul/evaluation.hpp"
#include "zul/fact_store.hpp"
#include "zul/zero_unlearn.hpp"

namespace zul {

struct LayerResult {
  std::uint64_t seed = 0;
  GeneratedMemory gen;
  KnowledgeSets sets;
  Matrix w_after;
  EditReport edit;
  MetricsReport metrics;
  Matrix outputs_before;  // W K_f
  Matrix outputs_after;   // W_new K_f
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string hash;
  std::vector<LayerResult> layers;
  MetricsReport metrics;  // per-layer mean (floats), summed counts
  EditReport edit;        // layer 0
};

// The whole pipeline in memory: generate -> build sets -> edit -> evaluate,
// once per layer seed. Pure function of the config.
ExperimentResult run_pipeline(const ExperimentConfig& config);

// Edit one memory with the configured method. Shared by the pipeline and
// the `zul edit` command.
struct EditOutcome {
  Matrix w_new;
  EditReport report;
};
EditOutcome run_edit(const ExperimentConfig& config, const Matrix& w,
                     const KnowledgeSets& sets);

// Metrics for a before/after weight pair over one generated memory.
MetricsReport evaluate_memory(const ExperimentConfig& config,
                              const GeneratedMemory& gen,
                              const Matrix& w_before, const Matrix& w_after);

// Artifact writers. Single-layer runs lay files flat in `dir`
// (w.csv, w_after.csv, k_f.csv, m_f.csv, k_0.csv, m_0.csv, m_n.csv,
// keys.csv, vocab.csv, facts.json); multi-layer runs use layer_<i>/
// subdirectories. report.json, pca.csv, config.json always sit at the top.
void write_generation_artifacts(const ExperimentResult& result,
                                const std::filesystem::path& dir);
void write_experiment_artifacts(const ExperimentResult& result,
                                const std::filesystem::path& dir);

// generate + edit + eval + pca, artifacts under `out`.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out);

std::string report_json_for(const ExperimentResult& result);

// ---- verification -------------------------------------------------------

struct VerifyOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  bool inject_fault = false;  // test hook: corrupts P in the projector check
};

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  double tolerance = 0.0;
  int trials = 0;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass = false;
};

// Runs the invariant suites (projector identities, rank law, Kronecker-vec
// identity, closed form vs oracle, stationarity, Sylvester residual, exact
// retain preservation, gradient checks, Kronecker vs GD agreement) over
// `trials` seeded instances each.
VerifyReport run_verify(const VerifyOptions& opts);

std::string verify_json_string(const VerifyReport& report,
                               const VerifyOptions& opts);
void write_verify_json(const VerifyReport& report, const VerifyOptions& opts,
                       const std::filesystem::path& path);

// ---- sweeps -------------------------------------------------------------

struct SweepRow {
  int size = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
  bool converged = true;
};

// One pipeline per forget-set size, seeds derived as seed + size * 1009.
// Duplicate sizes are dropped with a warning; failures become flagged rows.
// Rows may run concurrently (`jobs` worker threads).
std::vector<SweepRow> run_sweep(const ExperimentConfig& base,
                                const std::vector<int>& sizes, int jobs = 1);

std::string sweep_csv_string(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path);

}  // namespace zul
