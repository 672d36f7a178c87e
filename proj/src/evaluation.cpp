#include "zul/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "zul/errors.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/rng.hpp"

namespace zul {

namespace {

constexpr double kLogFloor = -50.0;

double label_probability(const AssociativeMemory& memory, const Vector& key,
                         int label) {
  const Vector probs = readout(memory, key);
  if (label < 0 || label >= probs.size())
    throw ValidationError("evaluation: value_label out of vocabulary range");
  return probs[label];
}

}  // namespace

double efficacy(const AssociativeMemory& memory,
                const std::vector<FactRecord>& forget_facts,
                const KeyParams& keys, std::uint64_t seed) {
  if (forget_facts.empty())
    throw ValidationError("efficacy: forget set is empty");
  double sum = 0.0;
  for (const FactRecord& fact : forget_facts) {
    const Vector key = extract_key(
        fact, keys.n_prefixes, keys.prefix_noise,
        derive_seed(seed, "eval-eff", static_cast<std::uint64_t>(fact.id)));
    sum += label_probability(memory, key, fact.value_label);
  }
  return sum / static_cast<double>(forget_facts.size());
}

double generalization(const AssociativeMemory& memory,
                      const std::vector<FactRecord>& forget_facts,
                      const KeyParams& keys, double paraphrase_noise,
                      int n_paraphrases, std::uint64_t seed) {
  if (forget_facts.empty())
    throw ValidationError("generalization: forget set is empty");
  if (paraphrase_noise <= 0.0)
    throw ValidationError("generalization: paraphrase_noise must be > 0");
  if (n_paraphrases < 1)
    throw ValidationError("generalization: n_paraphrases must be >= 1");

  double sum = 0.0;
  for (const FactRecord& fact : forget_facts) {
    const Vector base = extract_key(
        fact, keys.n_prefixes, keys.prefix_noise,
        derive_seed(seed, "eval-eff", static_cast<std::uint64_t>(fact.id)));
    RngStream rng(seed, "paraphrase", static_cast<std::uint64_t>(fact.id));
    for (int j = 0; j < n_paraphrases; ++j) {
      const Vector key =
          base + paraphrase_noise * rng.gaussian_vector(base.size());
      sum += label_probability(memory, key, fact.value_label);
    }
  }
  return sum /
         static_cast<double>(forget_facts.size() * n_paraphrases);
}

double specificity(const AssociativeMemory& memory,
                   const std::vector<FactRecord>& neighborhood_facts) {
  if (neighborhood_facts.empty())
    throw ValidationError("specificity: neighborhood is empty");
  int correct = 0;
  for (const FactRecord& fact : neighborhood_facts)
    if (readout_argmax(memory, fact.key) == fact.value_label) ++correct;
  return static_cast<double>(correct) /
         static_cast<double>(neighborhood_facts.size());
}

std::vector<FactRecord> select_neighborhood(
    const std::vector<FactRecord>& retained_facts,
    const std::vector<FactRecord>& forget_facts, int k) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(retained_facts.size());
  for (std::size_t i = 0; i < retained_facts.size(); ++i) {
    double best = -2.0;  // keys are unit vectors, cosine = dot
    for (const FactRecord& f : forget_facts)
      best = std::max(best, retained_facts[i].key.dot(f.key));
    scored.emplace_back(best, i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                            scored.size());
  std::vector<FactRecord> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    out.push_back(retained_facts[scored[i].second]);
  return out;
}

double pseudo_perplexity(const AssociativeMemory& memory,
                         const std::vector<FactRecord>& heldout_facts) {
  if (heldout_facts.empty())
    throw ValidationError("pseudo_perplexity: held-out set is empty");
  double log_sum = 0.0;
  for (const FactRecord& fact : heldout_facts) {
    const double prob = label_probability(memory, fact.key, fact.value_label);
    log_sum += std::max(std::log(prob), kLogFloor);
  }
  return std::exp(-log_sum / static_cast<double>(heldout_facts.size()));
}

double PcaShift::centroid_distance() const {
  const Matrix before = coords.topRows(n_before);
  const Matrix after = coords.bottomRows(coords.rows() - n_before);
  return (before.colwise().mean() - after.colwise().mean()).norm();
}

double PcaShift::mean_within_cloud_spread() const {
  const auto spread = [](const Matrix& cloud) {
    if (cloud.rows() == 0) return 0.0;
    const Matrix centered = cloud.rowwise() - cloud.colwise().mean();
    return centered.rowwise().norm().mean();
  };
  return 0.5 * (spread(coords.topRows(n_before)) +
                spread(coords.bottomRows(coords.rows() - n_before)));
}

PcaShift pca_shift(const Matrix& outputs_before, const Matrix& outputs_after) {
  if (outputs_before.rows() != outputs_after.rows() ||
      outputs_before.cols() != outputs_after.cols())
    throw ValidationError("pca_shift: before/after clouds must have equal shape");
  const Index total = outputs_before.cols() + outputs_after.cols();
  if (total < 2)
    throw ValidationError("pca_shift: need at least 2 samples in total");

  Matrix stacked(total, outputs_before.rows());  // samples as rows
  stacked.topRows(outputs_before.cols()) = outputs_before.transpose();
  stacked.bottomRows(outputs_after.cols()) = outputs_after.transpose();

  PcaShift shift;
  shift.coords = pca_2d(stacked, /*center=*/true);
  shift.n_before = outputs_before.cols();
  return shift;
}

std::string pca_csv_string(const PcaShift& shift) {
  std::string out = "x,y,group\n";
  char buf[96];
  for (Index i = 0; i < shift.coords.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%s\n", shift.coords(i, 0),
                  shift.coords(i, 1), i < shift.n_before ? "before" : "after");
    out += buf;
  }
  return out;
}

void write_pca_csv(const PcaShift& shift, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << pca_csv_string(shift);
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

nlohmann::ordered_json terms_json(const ObjectiveTerms& t) {
  return {{"zero", t.zero},
          {"forget", t.forget},
          {"utility", t.utility},
          {"reg", t.reg}};
}

nlohmann::ordered_json edit_json(const EditReport& edit) {
  nlohmann::ordered_json doc;
  doc["method"] = edit.method;
  doc["before"] = terms_json(edit.before);
  doc["after"] = terms_json(edit.after);
  doc["projector_rank"] = edit.projector_rank;
  doc["stationarity_residual"] = edit.stationarity_residual;
  doc["wall_time_seconds"] = edit.wall_time_seconds;
  if (edit.has_gd_stats) {
    doc["iters"] = edit.iters;
    doc["final_grad_norm"] = edit.final_grad_norm;
    doc["converged"] = edit.converged;
  }
  return doc;
}

}  // namespace

std::string edit_json_string(const EditReport& edit) {
  return edit_json(edit).dump(2) + "\n";
}

std::string report_json_string(const ReportContext& ctx,
                               const MetricsReport& metrics,
                               const EditReport& edit) {
  nlohmann::ordered_json doc;
  doc["config_hash"] = ctx.config_hash;
  doc["method"] = ctx.method;
  doc["metrics"] = {{"efficacy_before", metrics.efficacy_before},
                    {"efficacy_after", metrics.efficacy_after},
                    {"generalization_after", metrics.generalization_after},
                    {"specificity_before", metrics.specificity_before},
                    {"specificity_after", metrics.specificity_after},
                    {"pseudo_ppl_before", metrics.pseudo_ppl_before},
                    {"pseudo_ppl_after", metrics.pseudo_ppl_after},
                    {"n_forget", metrics.n_forget},
                    {"n_neighborhood", metrics.n_neighborhood},
                    {"n_heldout", metrics.n_heldout}};
  doc["edit"] = edit_json(edit);
  doc["seeds"] = ctx.seeds;
  return doc.dump(2) + "\n";
}

void write_report(const ReportContext& ctx, const MetricsReport& metrics,
                  const EditReport& edit, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << report_json_string(ctx, metrics, edit);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace zul
