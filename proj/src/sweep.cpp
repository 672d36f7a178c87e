#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "zul/errors.hpp"
#include "zul/log.hpp"
#include "zul/pipeline.hpp"

namespace zul {

std::vector<SweepRow> run_sweep(const ExperimentConfig& base,
                                const std::vector<int>& sizes, int jobs) {
  if (sizes.empty())
    throw ValidationError("sweep: size list must not be empty");
  if (jobs < 1) throw ValidationError("sweep: jobs must be >= 1");
  for (int size : sizes)
    if (size < 1 || size > base.n_facts)
      throw ValidationError("sweep: size " + std::to_string(size) +
                            " out of range [1, n_facts=" +
                            std::to_string(base.n_facts) + "]");

  std::vector<int> unique_sizes;
  for (int size : sizes) {
    if (std::find(unique_sizes.begin(), unique_sizes.end(), size) !=
        unique_sizes.end()) {
      log_info("sweep: dropping duplicate size " + std::to_string(size));
      continue;
    }
    unique_sizes.push_back(size);
  }

  std::vector<SweepRow> rows(unique_sizes.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rows.size()) return;
      const int size = unique_sizes[i];
      SweepRow& row = rows[i];
      row.size = size;
      // Decorrelated but reproducible per-size seeds.
      row.seed = base.seed + static_cast<std::uint64_t>(size) * 1009u;
      try {
        ExperimentConfig config = base;
        config.seed = row.seed;
        config.n_forget = size;
        config.layers.clear();
        validate(config);
        const ExperimentResult result = run_pipeline(config);
        row.metrics = result.metrics;
        row.converged = !result.edit.has_gd_stats || result.edit.converged;
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        log_error("sweep: size " + std::to_string(size) + " failed: " +
                  row.error);
      }
    }
  };

  if (jobs == 1 || rows.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(rows.size()));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string sweep_csv_string(const std::vector<SweepRow>& rows) {
  std::string out =
      "size,seed,status,efficacy_before,efficacy_after,generalization_after,"
      "specificity_before,specificity_after,pseudo_ppl_before,"
      "pseudo_ppl_after,converged,error\n";
  char buf[512];
  for (const SweepRow& row : rows) {
    if (row.ok) {
      std::snprintf(buf, sizeof(buf),
                    "%d,%llu,ok,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,\n",
                    row.size, static_cast<unsigned long long>(row.seed),
                    row.metrics.efficacy_before, row.metrics.efficacy_after,
                    row.metrics.generalization_after,
                    row.metrics.specificity_before,
                    row.metrics.specificity_after,
                    row.metrics.pseudo_ppl_before,
                    row.metrics.pseudo_ppl_after,
                    row.converged ? "true" : "false");
      out += buf;
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%llu,failed,,,,,,,,,", row.size,
                    static_cast<unsigned long long>(row.seed));
      out += buf;
      out += csv_escape(row.error);
      out += "\n";
    }
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << sweep_csv_string(rows);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace zul
