#include "zul/fact_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zul/errors.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/rng.hpp"

namespace zul {

GeneratedMemory generate_memory(std::uint64_t seed, Index d_k, Index d_m,
                                int n_facts, int vocab_size,
                                double temperature) {
  if (d_k < 1 || d_m < 1)
    throw ValidationError("generate_memory: d_k and d_m must be >= 1");
  if (n_facts < 0)
    throw ValidationError("generate_memory: n_facts must be >= 0");
  if (n_facts > d_k)
    throw ValidationError("generate_memory: n_facts (" +
                          std::to_string(n_facts) + ") must be <= d_k (" +
                          std::to_string(d_k) + ") to keep keys well-conditioned");
  if (vocab_size < 2)
    throw ValidationError("generate_memory: vocab_size must be >= 2");
  if (temperature <= 0.0)
    throw ValidationError("generate_memory: temperature must be > 0");

  GeneratedMemory out;
  out.memory.temperature = temperature;

  RngStream vocab_rng(seed, "vocab");
  out.memory.vocabulary.reserve(static_cast<std::size_t>(vocab_size));
  for (int j = 0; j < vocab_size; ++j)
    out.memory.vocabulary.push_back(vocab_rng.unit_vector(d_m));

  RngStream key_rng(seed, "keys");
  Matrix keys(d_k, n_facts);
  Matrix values(d_m, n_facts);
  out.facts.reserve(static_cast<std::size_t>(n_facts));
  for (int i = 0; i < n_facts; ++i) {
    FactRecord fact;
    fact.id = i;
    fact.key = key_rng.unit_vector(d_k);
    fact.value_label = i % vocab_size;
    fact.value = out.memory.vocabulary[static_cast<std::size_t>(fact.value_label)];
    keys.col(i) = fact.key;
    values.col(i) = fact.value;
    out.facts.push_back(std::move(fact));
  }

  if (n_facts == 0) {
    out.memory.w = Matrix::Zero(d_m, d_k);
    return out;
  }

  // Ridge fit: W = V K^T (K K^T + lambda I)^-1.
  constexpr double kFitRidge = 1e-6;
  const Matrix gram =
      keys * keys.transpose() + kFitRidge * Matrix::Identity(d_k, d_k);
  out.memory.w = solve_right_sym(values * keys.transpose(), gram, 0.0);
  require_finite(out.memory.w, "generate_memory W");

  for (const FactRecord& fact : out.facts) {
    const double err = (out.memory.w * fact.key - fact.value).norm();
    if (err > 1e-3) {
      std::ostringstream msg;
      msg << "generate_memory: fit residual " << err << " for fact "
          << fact.id << " exceeds 1e-3";
      throw NumericalError(msg.str());
    }
  }
  return out;
}

Vector extract_key(const FactRecord& fact, int n_prefixes, double prefix_noise,
                   std::uint64_t seed) {
  if (n_prefixes < 1)
    throw ValidationError("extract_key: n_prefixes must be >= 1");
  if (prefix_noise < 0.0)
    throw ValidationError("extract_key: prefix_noise must be >= 0");

  RngStream rng(seed, "prefix");
  Vector acc = Vector::Zero(fact.key.size());
  for (int j = 0; j < n_prefixes; ++j) {
    Vector noisy = fact.key + prefix_noise * rng.gaussian_vector(fact.key.size());
    const double norm = noisy.norm();
    if (norm > 0.0) noisy /= norm;
    acc += noisy;
  }
  return acc / static_cast<double>(n_prefixes);
}

namespace {

// Unit vector orthogonal to span(vocabulary): Gram-Schmidt the vocabulary
// into an orthonormal basis once, then strip a fresh Gaussian draw against
// it. Redraws when the residual degenerates.
Vector neutral_vector(const std::vector<Vector>& vocabulary, Index d_m,
                      RngStream& rng) {
  std::vector<Vector> basis;
  basis.reserve(vocabulary.size());
  for (const Vector& v : vocabulary) {
    Vector u = v;
    for (const Vector& b : basis) u -= b.dot(u) * b;
    const double norm = u.norm();
    if (norm > 1e-10) basis.push_back(u / norm);
  }
  if (static_cast<Index>(basis.size()) >= d_m)
    throw ValidationError(
        "build_knowledge_sets: vocabulary spans the value space; no neutral "
        "direction exists (need vocab rank < d_m)");

  for (int attempt = 0; attempt < 64; ++attempt) {
    Vector u = rng.gaussian_vector(d_m);
    // Two passes keep the result orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& b : basis) u -= b.dot(u) * b;
    const double norm = u.norm();
    if (norm > 1e-8) return u / norm;
  }
  throw NumericalError("build_knowledge_sets: could not sample a neutral direction");
}

}  // namespace

KnowledgeSets build_knowledge_sets(const AssociativeMemory& memory,
                                   const std::vector<FactRecord>& facts,
                                   const std::vector<int>& forget_ids,
                                   const KnowledgeSetParams& params) {
  if (params.n_utility < 1)
    throw ValidationError("build_knowledge_sets: n_utility must be >= 1");
  std::set<int> seen;
  for (int id : forget_ids)
    if (!seen.insert(id).second)
      throw ValidationError("build_knowledge_sets: duplicate forget id " +
                            std::to_string(id));

  const Index d_k = memory.d_k();
  const Index d_m = memory.d_m();
  const Index n_f = static_cast<Index>(forget_ids.size());

  KnowledgeSets sets;
  sets.k_f.resize(d_k, n_f);
  for (Index c = 0; c < n_f; ++c) {
    const int id = forget_ids[static_cast<std::size_t>(c)];
    const auto it = std::find_if(facts.begin(), facts.end(),
                                 [id](const FactRecord& f) { return f.id == id; });
    if (it == facts.end())
      throw ValidationError("build_knowledge_sets: unknown forget id " +
                            std::to_string(id));
    sets.k_f.col(c) =
        extract_key(*it, params.keys.n_prefixes, params.keys.prefix_noise,
                    derive_seed(params.seed, "forget-key",
                                static_cast<std::uint64_t>(id)));
  }
  sets.m_f = memory.w * sets.k_f;

  RngStream utility_rng(params.seed, "utility");
  sets.k_0.resize(d_k, params.n_utility);
  for (Index c = 0; c < params.n_utility; ++c)
    sets.k_0.col(c) = utility_rng.unit_vector(d_k);
  sets.m_0 = memory.w * sets.k_0;

  RngStream neutral_rng(params.seed, "neutral");
  sets.m_n.resize(d_m, n_f);
  if (n_f > 0) {
    if (params.m_n_mode == NeutralMode::shared_neutral) {
      const Vector shared = neutral_vector(memory.vocabulary, d_m, neutral_rng);
      for (Index c = 0; c < n_f; ++c) sets.m_n.col(c) = shared;
    } else {
      for (Index c = 0; c < n_f; ++c)
        sets.m_n.col(c) = neutral_vector(memory.vocabulary, d_m, neutral_rng);
    }
  }
  return sets;
}

Vector readout(const AssociativeMemory& memory, const Vector& key) {
  if (memory.temperature <= 0.0)
    throw ValidationError("readout: temperature must be > 0");
  if (key.size() != memory.d_k())
    throw ValidationError("readout: key dimension mismatch");

  const Vector output = memory.w * key;
  Vector logits(static_cast<Index>(memory.vocabulary.size()));
  for (Index j = 0; j < logits.size(); ++j)
    logits[j] = memory.vocabulary[static_cast<std::size_t>(j)].dot(output) /
                memory.temperature;

  const double peak = logits.maxCoeff();
  Vector probs = (logits.array() - peak).exp();
  probs /= probs.sum();
  return probs;
}

int readout_argmax(const AssociativeMemory& memory, const Vector& key) {
  const Vector probs = readout(memory, key);
  Index best = 0;
  probs.maxCoeff(&best);  // Eigen returns the first maximizer
  return static_cast<int>(best);
}

void write_facts_json(const std::vector<FactRecord>& facts,
                      const std::filesystem::path& path) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const FactRecord& fact : facts)
    arr.push_back({{"id", fact.id}, {"value_label", fact.value_label}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << arr.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::pair<int, int>> read_facts_json(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("facts.json parse error (" + path.string() +
                          "): " + e.what());
  }
  if (!arr.is_array())
    throw ValidationError("facts.json must be an array: " + path.string());
  std::vector<std::pair<int, int>> out;
  out.reserve(arr.size());
  for (const auto& item : arr)
    out.emplace_back(item.at("id").get<int>(),
                     item.at("value_label").get<int>());
  return out;
}

}  // namespace zul
