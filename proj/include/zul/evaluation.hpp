#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zul/fact_store.hpp"
#include "zul/matrix.hpp"
#include "zul/zero_unlearn.hpp"

namespace zul {

// Desk-scale analogs of the LLM unlearning metrics.
//
// efficacy: mean readout probability of the original label over the forget
//   facts (lower after editing = better unlearning).
// generalization: same probability averaged over noisy paraphrase keys.
//   Reported as ORIGINAL-label probability, lower = better; paraphrase keys
//   are the extracted key plus Gaussian noise, not renormalized, so the
//   zero-noise limit equals efficacy exactly.
// specificity: argmax accuracy on the nearest retained neighbors (higher =
//   less collateral damage).
// pseudo_ppl: exp(-mean log p(correct label)) on held-out retained facts,
//   log floored at -50.
struct MetricsReport {
  double efficacy_before = 0.0;
  double efficacy_after = 0.0;
  double generalization_after = 0.0;
  double specificity_before = 0.0;
  double specificity_after = 0.0;
  double pseudo_ppl_before = 1.0;
  double pseudo_ppl_after = 1.0;
  int n_forget = 0;
  int n_neighborhood = 0;
  int n_heldout = 0;
};

// Keys are re-extracted deterministically from (seed, "eval-eff", fact.id)
// with the experiment's prefix parameters; the same stream serves before and
// after so the comparison is paired. Requires a non-empty forget set.
double efficacy(const AssociativeMemory& memory,
                const std::vector<FactRecord>& forget_facts,
                const KeyParams& keys, std::uint64_t seed);

// Requires paraphrase_noise > 0; noise drawn from the "paraphrase" stream.
double generalization(const AssociativeMemory& memory,
                      const std::vector<FactRecord>& forget_facts,
                      const KeyParams& keys, double paraphrase_noise,
                      int n_paraphrases, std::uint64_t seed);

// Fraction of neighborhood facts whose argmax readout equals their label,
// evaluated on the stored keys. Requires a non-empty neighborhood.
double specificity(const AssociativeMemory& memory,
                   const std::vector<FactRecord>& neighborhood_facts);

// Top-k retained facts by cosine similarity to any forget key,
// k = min(10, n_retained).
std::vector<FactRecord> select_neighborhood(
    const std::vector<FactRecord>& retained_facts,
    const std::vector<FactRecord>& forget_facts, int k = 10);

// exp(-mean log p(correct)) over held-out facts; >= 1 by construction.
double pseudo_perplexity(const AssociativeMemory& memory,
                         const std::vector<FactRecord>& heldout_facts);

struct PcaShift {
  Matrix coords;   // (n_before + n_after) x 2
  Index n_before;  // rows [0, n_before) are "before", the rest "after"

  double centroid_distance() const;
  double mean_within_cloud_spread() const;
};

// Joint 2-D PCA of the before/after output clouds (columns are samples of
// dimension d_m). Requires matching shapes and at least 2 total samples.
PcaShift pca_shift(const Matrix& outputs_before, const Matrix& outputs_after);

// CSV with header `x,y,group`, group in {before, after}.
void write_pca_csv(const PcaShift& shift, const std::filesystem::path& path);
std::string pca_csv_string(const PcaShift& shift);

struct ReportContext {
  std::string config_hash;
  std::string method;
  std::vector<std::uint64_t> seeds;
};

// Single JSON document, deterministic key ordering:
// {config_hash, method, metrics{...}, edit{...}, seeds}.
std::string report_json_string(const ReportContext& ctx,
                               const MetricsReport& metrics,
                               const EditReport& edit);
// Just the edit object (what `zul edit` leaves as edit.json).
std::string edit_json_string(const EditReport& edit);
void write_report(const ReportContext& ctx, const MetricsReport& metrics,
                  const EditReport& edit, const std::filesystem::path& path);

}  // namespace zul
