#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zul/additive_unlearn.hpp"
#include "zul/fact_store.hpp"

namespace zul {

enum class EditMethod { multiplicative, additive_closed, additive_gd };

std::string to_string(EditMethod m);
EditMethod edit_method_from_string(const std::string& s);

std::string to_string(NeutralMode m);
NeutralMode neutral_mode_from_string(const std::string& s);

// One experiment, fully determined by this document. Defaults target the
// d = 16 desk scale; `layers` lists per-layer generation seeds (empty means
// a single layer seeded by `seed`).
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int d_k = 16;
  int d_m = 16;
  int n_facts = 12;
  int vocab_size = 12;
  double temperature = 0.1;
  int n_forget = 3;
  int n_utility = 8;
  int n_prefixes = 8;
  double prefix_noise = 0.05;
  double paraphrase_noise = 0.05;
  NeutralMode m_n_mode = NeutralMode::shared_neutral;
  EditMethod method = EditMethod::multiplicative;
  double rel_tol = 1e-10;
  double ridge = 1e-8;
  GdConfig gd;
  Index dim_cap = kDefaultDimCap;
  std::vector<std::uint64_t> layers;

  std::vector<std::uint64_t> layer_seeds() const {
    return layers.empty() ? std::vector<std::uint64_t>{seed} : layers;
  }
  KeyParams key_params() const { return {n_prefixes, prefix_noise}; }
};

// Throws ValidationError with a field-level message.
void validate(const ExperimentConfig& config);

ExperimentConfig config_from_json_string(const std::string& text,
                                         const std::string& origin = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical serialization with every default echoed; config_hash is the
// FNV-1a 64 hash of this text.
std::string config_to_json_string(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
void write_config(const ExperimentConfig& config,
                  const std::filesystem::path& path);

}  // namespace zul
