#include "zul/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "zul/additive_unlearn.hpp"
#include "zul/errors.hpp"
#include "zul/log.hpp"
#include "zul/matrix_io.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/rng.hpp"

namespace zul {

namespace {

std::vector<int> forget_ids_for(const ExperimentConfig& config) {
  std::vector<int> ids(static_cast<std::size_t>(config.n_forget));
  for (int i = 0; i < config.n_forget; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

std::vector<FactRecord> facts_with_ids(const std::vector<FactRecord>& facts,
                                       const std::vector<int>& ids,
                                       bool complement) {
  std::vector<FactRecord> out;
  for (const FactRecord& f : facts) {
    const bool in_set =
        std::find(ids.begin(), ids.end(), f.id) != ids.end();
    if (in_set != complement) out.push_back(f);
  }
  return out;
}

}  // namespace

EditOutcome run_edit(const ExperimentConfig& config, const Matrix& w,
                     const KnowledgeSets& sets) {
  EditOutcome out;
  switch (config.method) {
    case EditMethod::multiplicative: {
      ClosedFormResult result =
          closed_form_update(w, sets, config.rel_tol, config.ridge);
      out.w_new = std::move(result.w_new);
      out.report = std::move(result.report);
      return out;
    }
    case EditMethod::additive_closed: {
      const auto t0 = std::chrono::steady_clock::now();
      const Matrix p_m = retain_null_projector(sets.k_0);
      const SylvesterSystem sys = assemble_sylvester(w, sets, p_m);
      const Matrix d_tilde = solve_sylvester_kron(sys, config.dim_cap);
      out.w_new = apply_additive(w, d_tilde, p_m);
      out.report.method = "additive-closed";
      out.report.before = objective_terms(w, w, sets);
      out.report.after = objective_terms(out.w_new, w, sets);
      out.report.projector_rank =
          static_cast<Index>(std::llround(p_m.trace()));
      out.report.stationarity_residual = sylvester_residual(sys, d_tilde);
      out.report.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      return out;
    }
    case EditMethod::additive_gd: {
      const auto t0 = std::chrono::steady_clock::now();
      const Matrix p_m = retain_null_projector(sets.k_0);
      const SylvesterSystem sys = assemble_sylvester(w, sets, p_m);
      const GdResult gd = solve_gd(w, sets, p_m, config.gd);
      out.w_new = apply_additive(w, gd.d_tilde, p_m);
      out.report.method = "additive-gd";
      out.report.before = objective_terms(w, w, sets);
      out.report.after = objective_terms(out.w_new, w, sets);
      out.report.projector_rank =
          static_cast<Index>(std::llround(p_m.trace()));
      out.report.stationarity_residual = sylvester_residual(sys, gd.d_tilde);
      out.report.has_gd_stats = true;
      out.report.iters = gd.iters;
      out.report.final_grad_norm = gd.final_grad_norm;
      out.report.converged = gd.converged;
      out.report.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      return out;
    }
  }
  throw ValidationError("run_edit: unrecognized method");
}

MetricsReport evaluate_memory(const ExperimentConfig& config,
                              const GeneratedMemory& gen,
                              const Matrix& w_before, const Matrix& w_after) {
  const std::vector<int> ids = forget_ids_for(config);
  const std::vector<FactRecord> forget =
      facts_with_ids(gen.facts, ids, /*complement=*/false);
  const std::vector<FactRecord> retained =
      facts_with_ids(gen.facts, ids, /*complement=*/true);

  AssociativeMemory before = gen.memory;
  before.w = w_before;
  AssociativeMemory after = gen.memory;
  after.w = w_after;

  const std::vector<FactRecord> neighborhood =
      select_neighborhood(retained, forget);

  MetricsReport metrics;
  metrics.n_forget = static_cast<int>(forget.size());
  metrics.n_neighborhood = static_cast<int>(neighborhood.size());
  metrics.n_heldout = static_cast<int>(retained.size());

  const KeyParams keys = config.key_params();
  metrics.efficacy_before = efficacy(before, forget, keys, config.seed);
  metrics.efficacy_after = efficacy(after, forget, keys, config.seed);
  metrics.generalization_after =
      generalization(after, forget, keys, config.paraphrase_noise,
                     /*n_paraphrases=*/8, config.seed);
  metrics.specificity_before = specificity(before, neighborhood);
  metrics.specificity_after = specificity(after, neighborhood);
  metrics.pseudo_ppl_before = pseudo_perplexity(before, retained);
  metrics.pseudo_ppl_after = pseudo_perplexity(after, retained);
  return metrics;
}

ExperimentResult run_pipeline(const ExperimentConfig& config) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.hash = config_hash(config);

  for (const std::uint64_t layer_seed : config.layer_seeds()) {
    LayerResult layer;
    layer.seed = layer_seed;
    layer.gen = generate_memory(layer_seed, config.d_k, config.d_m,
                                config.n_facts, config.vocab_size,
                                config.temperature);
    KnowledgeSetParams set_params;
    set_params.n_utility = config.n_utility;
    set_params.m_n_mode = config.m_n_mode;
    set_params.keys = config.key_params();
    set_params.seed = layer_seed;
    layer.sets = build_knowledge_sets(layer.gen.memory, layer.gen.facts,
                                      forget_ids_for(config), set_params);

    EditOutcome edit = run_edit(config, layer.gen.memory.w, layer.sets);
    layer.w_after = std::move(edit.w_new);
    layer.edit = std::move(edit.report);
    layer.metrics =
        evaluate_memory(config, layer.gen, layer.gen.memory.w, layer.w_after);
    layer.outputs_before = layer.gen.memory.w * layer.sets.k_f;
    layer.outputs_after = layer.w_after * layer.sets.k_f;
    result.layers.push_back(std::move(layer));
  }

  // Aggregate: float fields averaged over layers, counts summed.
  MetricsReport& agg = result.metrics;
  const double n = static_cast<double>(result.layers.size());
  agg = MetricsReport{};
  agg.pseudo_ppl_before = 0.0;
  agg.pseudo_ppl_after = 0.0;
  for (const LayerResult& layer : result.layers) {
    agg.efficacy_before += layer.metrics.efficacy_before / n;
    agg.efficacy_after += layer.metrics.efficacy_after / n;
    agg.generalization_after += layer.metrics.generalization_after / n;
    agg.specificity_before += layer.metrics.specificity_before / n;
    agg.specificity_after += layer.metrics.specificity_after / n;
    agg.pseudo_ppl_before += layer.metrics.pseudo_ppl_before / n;
    agg.pseudo_ppl_after += layer.metrics.pseudo_ppl_after / n;
    agg.n_forget += layer.metrics.n_forget;
    agg.n_neighborhood += layer.metrics.n_neighborhood;
    agg.n_heldout += layer.metrics.n_heldout;
  }
  result.edit = result.layers.front().edit;
  return result;
}

namespace {

void write_layer_files(const LayerResult& layer, bool include_edit,
                       const std::filesystem::path& dir) {
  write_zumx(layer.gen.memory.w, dir / "w.csv");
  write_zumx(layer.sets.k_f, dir / "k_f.csv");
  write_zumx(layer.sets.m_f, dir / "m_f.csv");
  write_zumx(layer.sets.k_0, dir / "k_0.csv");
  write_zumx(layer.sets.m_0, dir / "m_0.csv");
  write_zumx(layer.sets.m_n, dir / "m_n.csv");
  write_facts_json(layer.gen.facts, dir / "facts.json");

  // keys.csv / vocab.csv let `zul eval` and `zul pca` rebuild the memory
  // from the directory alone.
  const Index d_k = layer.gen.memory.d_k();
  Matrix keys(d_k, static_cast<Index>(layer.gen.facts.size()));
  for (Index i = 0; i < keys.cols(); ++i)
    keys.col(i) = layer.gen.facts[static_cast<std::size_t>(i)].key;
  write_zumx(keys, dir / "keys.csv");

  const Index d_m = layer.gen.memory.d_m();
  Matrix vocab(d_m, static_cast<Index>(layer.gen.memory.vocabulary.size()));
  for (Index j = 0; j < vocab.cols(); ++j)
    vocab.col(j) = layer.gen.memory.vocabulary[static_cast<std::size_t>(j)];
  write_zumx(vocab, dir / "vocab.csv");

  if (include_edit) write_zumx(layer.w_after, dir / "w_after.csv");
}

std::filesystem::path layer_dir(const std::filesystem::path& root,
                                std::size_t index, std::size_t n_layers) {
  if (n_layers == 1) return root;
  return root / ("layer_" + std::to_string(index));
}

void write_layers(const ExperimentResult& result, bool include_edit,
                  const std::filesystem::path& dir) {
  for (std::size_t i = 0; i < result.layers.size(); ++i) {
    const std::filesystem::path target =
        layer_dir(dir, i, result.layers.size());
    std::filesystem::create_directories(target);
    write_layer_files(result.layers[i], include_edit, target);
    // keep layer directories self-contained for `zul eval` / `zul pca`
    if (result.layers.size() > 1) {
      ExperimentConfig layer_config = result.config;
      layer_config.seed = result.layers[i].seed;
      layer_config.layers.clear();
      write_config(layer_config, target / "config.json");
    }
  }
}

}  // namespace

void write_generation_artifacts(const ExperimentResult& result,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_config(result.config, dir / "config.json");
  write_layers(result, /*include_edit=*/false, dir);
}

std::string report_json_for(const ExperimentResult& result) {
  ReportContext ctx{result.hash, to_string(result.config.method),
                    result.config.layer_seeds()};
  return report_json_string(ctx, result.metrics, result.edit);
}

void write_experiment_artifacts(const ExperimentResult& result,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_config(result.config, dir / "config.json");
  write_layers(result, /*include_edit=*/true, dir);

  std::ofstream report(dir / "report.json");
  if (!report)
    throw IoError("cannot open for writing: " + (dir / "report.json").string());
  report << report_json_for(result);
  if (!report)
    throw IoError("write failed: " + (dir / "report.json").string());

  const LayerResult& first = result.layers.front();
  if (first.outputs_before.cols() + first.outputs_after.cols() >= 2)
    write_pca_csv(pca_shift(first.outputs_before, first.outputs_after),
                  dir / "pca.csv");
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out) {
  ExperimentResult result = run_pipeline(config);
  write_experiment_artifacts(result, out);
  log_info("experiment " + result.hash + " written to " + out.string());
  return result;
}

}  // namespace zul
