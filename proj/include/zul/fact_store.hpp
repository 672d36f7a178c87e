#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zul/matrix.hpp"

namespace zul {

// One (subject-analog, key, value-label) triple. `key` is unit-normalized;
// `value` is the vocabulary vector of `value_label`.
struct FactRecord {
  int id = 0;
  Vector key;
  int value_label = 0;
  Vector value;
};

// The editable layer: weight matrix W (d_m x d_k) plus a vocabulary of unit
// value vectors and a softmax readout temperature.
struct AssociativeMemory {
  Matrix w;
  std::vector<Vector> vocabulary;
  double temperature = 0.1;

  Index d_k() const { return w.cols(); }
  Index d_m() const { return w.rows(); }
};

// The bundled matrices every editor consumes. m_0 = w * k_0 exactly at
// construction; k_f/m_f/m_n have zero columns for an empty forget set.
struct KnowledgeSets {
  Matrix k_f;  // d_k x n_f
  Matrix m_f;  // d_m x n_f
  Matrix k_0;  // d_k x n_0
  Matrix m_0;  // d_m x n_0
  Matrix m_n;  // d_m x n_f

  Index n_forget() const { return k_f.cols(); }
  Index n_utility() const { return k_0.cols(); }
};

struct GeneratedMemory {
  AssociativeMemory memory;
  std::vector<FactRecord> facts;
};

// Synthetic stand-in for a pretrained projection: Gaussian unit keys,
// round-robin labels, W fit by ridge regression (ridge 1e-6) so every fact
// reads out to its own value within 1e-3. Deterministic given seed.
// Requires n_facts <= d_k and vocab_size >= 2.
GeneratedMemory generate_memory(std::uint64_t seed, Index d_k, Index d_m,
                                int n_facts, int vocab_size,
                                double temperature);

// Prefix-averaged key: mean over n_prefixes of normalize(key + eps_j),
// eps_j ~ N(0, prefix_noise^2 I) drawn from RngStream(seed, "prefix").
// prefix_noise = 0 collapses to the stored key exactly.
Vector extract_key(const FactRecord& fact, int n_prefixes, double prefix_noise,
                   std::uint64_t seed);

enum class NeutralMode { shared_neutral, per_fact_neutral };

struct KeyParams {
  int n_prefixes = 8;
  double prefix_noise = 0.05;
};

struct KnowledgeSetParams {
  int n_utility = 8;
  NeutralMode m_n_mode = NeutralMode::shared_neutral;
  KeyParams keys;
  std::uint64_t seed = 1;
};

// Algorithm phases 1-2: K_f via prefix-averaged extraction, M_f = W K_f,
// fresh Gaussian utility keys with M_0 = W K_0 exactly, and neutral targets
// orthogonalized against the whole vocabulary (Gram-Schmidt against an
// orthonormal basis of its span) so "neutral" reads out near-uniformly.
KnowledgeSets build_knowledge_sets(const AssociativeMemory& memory,
                                   const std::vector<FactRecord>& facts,
                                   const std::vector<int>& forget_ids,
                                   const KnowledgeSetParams& params);

// softmax_j(v_j . (W key) / temperature); a valid probability simplex point.
Vector readout(const AssociativeMemory& memory, const Vector& key);

// Argmax label with ties broken by lowest index.
int readout_argmax(const AssociativeMemory& memory, const Vector& key);

// facts.json: array of {id, value_label}.
void write_facts_json(const std::vector<FactRecord>& facts,
                      const std::filesystem::path& path);
std::vector<std::pair<int, int>> read_facts_json(
    const std::filesystem::path& path);

}  // namespace zul
