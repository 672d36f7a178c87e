#include "zul/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zul/errors.hpp"
#include "zul/rng.hpp"

namespace zul {

std::string to_string(EditMethod m) {
  switch (m) {
    case EditMethod::multiplicative: return "multiplicative";
    case EditMethod::additive_closed: return "additive-closed";
    case EditMethod::additive_gd: return "additive-gd";
  }
  return "multiplicative";
}

EditMethod edit_method_from_string(const std::string& s) {
  if (s == "multiplicative") return EditMethod::multiplicative;
  if (s == "additive-closed") return EditMethod::additive_closed;
  if (s == "additive-gd") return EditMethod::additive_gd;
  throw ValidationError(
      "config.method: unknown method '" + s +
      "' (expected multiplicative | additive-closed | additive-gd)");
}

std::string to_string(NeutralMode m) {
  return m == NeutralMode::shared_neutral ? "shared_neutral"
                                          : "per_fact_neutral";
}

NeutralMode neutral_mode_from_string(const std::string& s) {
  if (s == "shared_neutral") return NeutralMode::shared_neutral;
  if (s == "per_fact_neutral") return NeutralMode::per_fact_neutral;
  throw ValidationError("config.m_n_mode: unknown mode '" + s +
                        "' (expected shared_neutral | per_fact_neutral)");
}

void validate(const ExperimentConfig& c) {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError("config." + field + ": " + why);
  };
  if (c.d_k < 1) fail("d_k", "must be >= 1");
  if (c.d_m < 1) fail("d_m", "must be >= 1");
  if (c.n_facts < 1) fail("n_facts", "must be >= 1");
  if (c.n_facts > c.d_k)
    fail("n_facts", "must be <= d_k (" + std::to_string(c.d_k) +
                        ") to keep keys well-conditioned");
  if (c.vocab_size < 2) fail("vocab_size", "must be >= 2");
  if (c.vocab_size >= c.d_m)
    fail("vocab_size", "must be < d_m so a neutral direction orthogonal to "
                       "the vocabulary exists");
  if (!(c.temperature > 0.0)) fail("temperature", "must be > 0");
  if (c.n_forget < 1) fail("n_forget", "must be >= 1");
  if (c.n_forget >= c.n_facts)
    fail("n_forget", "must be < n_facts (" + std::to_string(c.n_facts) +
                         ") so retained facts exist for evaluation");
  if (c.n_utility < 1) fail("n_utility", "must be >= 1");
  if (c.n_prefixes < 1) fail("n_prefixes", "must be >= 1");
  if (c.prefix_noise < 0.0) fail("prefix_noise", "must be >= 0");
  if (!(c.paraphrase_noise > 0.0)) fail("paraphrase_noise", "must be > 0");
  if (!(c.rel_tol > 0.0)) fail("rel_tol", "must be > 0");
  if (c.ridge < 0.0) fail("ridge", "must be >= 0");
  if (c.gd.max_iters < 1) fail("gd.max_iters", "must be >= 1");
  if (!(c.gd.grad_tol > 0.0)) fail("gd.grad_tol", "must be > 0");
  if (c.dim_cap < 1) fail("dim_cap", "must be >= 1");
}

namespace {

template <typename T>
void read_field(const nlohmann::json& doc, const char* name, T& out) {
  if (!doc.contains(name)) return;
  try {
    out = doc.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config.") + name +
                          ": wrong JSON type");
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",         "d_k",        "d_m",
      "n_facts",      "vocab_size", "temperature",
      "n_forget",     "n_utility",  "n_prefixes",
      "prefix_noise", "paraphrase_noise", "m_n_mode",
      "method",       "rel_tol",    "ridge",
      "gd",           "dim_cap",    "layers"};
  return keys;
}

}  // namespace

ExperimentConfig config_from_json_string(const std::string& text,
                                         const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config parse error (" + origin + "): " + e.what());
  }
  if (!doc.is_object())
    throw ValidationError("config (" + origin + ") must be a JSON object");

  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (known_keys().count(key) == 0)
      throw ValidationError("config." + key + ": unknown field");
  }

  ExperimentConfig c;
  read_field(doc, "seed", c.seed);
  read_field(doc, "d_k", c.d_k);
  read_field(doc, "d_m", c.d_m);
  read_field(doc, "n_facts", c.n_facts);
  read_field(doc, "vocab_size", c.vocab_size);
  read_field(doc, "temperature", c.temperature);
  read_field(doc, "n_forget", c.n_forget);
  read_field(doc, "n_utility", c.n_utility);
  read_field(doc, "n_prefixes", c.n_prefixes);
  read_field(doc, "prefix_noise", c.prefix_noise);
  read_field(doc, "paraphrase_noise", c.paraphrase_noise);
  if (doc.contains("m_n_mode"))
    c.m_n_mode = neutral_mode_from_string(doc.at("m_n_mode").get<std::string>());
  if (doc.contains("method"))
    c.method = edit_method_from_string(doc.at("method").get<std::string>());
  read_field(doc, "rel_tol", c.rel_tol);
  read_field(doc, "ridge", c.ridge);
  if (doc.contains("gd")) {
    const auto& gd = doc.at("gd");
    if (!gd.is_object())
      throw ValidationError("config.gd: must be an object");
    for (const auto& [key, value] : gd.items()) {
      (void)value;
      if (key != "max_iters" && key != "grad_tol")
        throw ValidationError("config.gd." + key + ": unknown field");
    }
    read_field(gd, "max_iters", c.gd.max_iters);
    read_field(gd, "grad_tol", c.gd.grad_tol);
  }
  std::int64_t dim_cap = c.dim_cap;
  read_field(doc, "dim_cap", dim_cap);
  c.dim_cap = static_cast<Index>(dim_cap);
  read_field(doc, "layers", c.layers);

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_string(buf.str(), path.string());
}

std::string config_to_json_string(const ExperimentConfig& c) {
  nlohmann::ordered_json doc;
  doc["seed"] = c.seed;
  doc["d_k"] = c.d_k;
  doc["d_m"] = c.d_m;
  doc["n_facts"] = c.n_facts;
  doc["vocab_size"] = c.vocab_size;
  doc["temperature"] = c.temperature;
  doc["n_forget"] = c.n_forget;
  doc["n_utility"] = c.n_utility;
  doc["n_prefixes"] = c.n_prefixes;
  doc["prefix_noise"] = c.prefix_noise;
  doc["paraphrase_noise"] = c.paraphrase_noise;
  doc["m_n_mode"] = to_string(c.m_n_mode);
  doc["method"] = to_string(c.method);
  doc["rel_tol"] = c.rel_tol;
  doc["ridge"] = c.ridge;
  doc["gd"] = {{"max_iters", c.gd.max_iters}, {"grad_tol", c.gd.grad_tol}};
  doc["dim_cap"] = static_cast<std::int64_t>(c.dim_cap);
  doc["layers"] = c.layers;
  return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string canonical = config_to_json_string(c);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(canonical));
  return buf;
}

void write_config(const ExperimentConfig& config,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << config_to_json_string(config);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace zul
