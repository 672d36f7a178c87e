// Invariant suites behind `zul verify`: seeded random instances pushed
// through both solver routes and the algebraic identities they must satisfy.

#include <Eigen/QR>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zul/additive_unlearn.hpp"
#include "zul/errors.hpp"
#include "zul/log.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/oracle.hpp"
#include "zul/pipeline.hpp"
#include "zul/rng.hpp"
#include "zul/zero_unlearn.hpp"

namespace zul {

namespace {

struct Instance {
  Matrix w;
  KnowledgeSets sets;
};

// W with singular values in [0.5, 1.5]: keeps every instance solvable
// without the ridge fallback and keeps the oracle's GD iteration counts in
// the hundreds instead of the millions a near-singular W would need.
Matrix conditioned_weight(RngStream& rng, Index d_m, Index d_k) {
  const Index r = std::min(d_m, d_k);
  const Matrix qu = Eigen::HouseholderQR<Matrix>(rng.gaussian_matrix(d_m, r))
                        .householderQ() *
                    Matrix::Identity(d_m, r);
  const Matrix qv = Eigen::HouseholderQR<Matrix>(rng.gaussian_matrix(d_k, r))
                        .householderQ() *
                    Matrix::Identity(d_k, r);
  Vector sigma(r);
  for (Index i = 0; i < r; ++i) sigma[i] = 0.5 + rng.uniform();
  return qu * sigma.asDiagonal() * qv.transpose();
}

// Random editing instance; the identities under test hold for any M_n, so
// neutral targets are plain random unit columns.
Instance random_instance(RngStream& rng, Index d_k, Index d_m, Index n_f,
                         Index n_0) {
  Instance inst;
  inst.w = conditioned_weight(rng, d_m, d_k);
  inst.sets.k_f.resize(d_k, n_f);
  for (Index c = 0; c < n_f; ++c) inst.sets.k_f.col(c) = rng.unit_vector(d_k);
  inst.sets.m_f = inst.w * inst.sets.k_f;
  inst.sets.k_0.resize(d_k, n_0);
  for (Index c = 0; c < n_0; ++c) inst.sets.k_0.col(c) = rng.unit_vector(d_k);
  inst.sets.m_0 = inst.w * inst.sets.k_0;
  inst.sets.m_n.resize(d_m, n_f);
  for (Index c = 0; c < n_f; ++c) inst.sets.m_n.col(c) = rng.unit_vector(d_m);
  return inst;
}

using CheckFn = double(RngStream&);

VerifyCheck run_check(const char* name, double tolerance, int trials,
                      std::uint64_t seed, const std::function<CheckFn>& fn) {
  VerifyCheck check;
  check.name = name;
  check.tolerance = tolerance;
  check.trials = trials;
  check.worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(seed, name, static_cast<std::uint64_t>(t));
    check.worst = std::max(check.worst, fn(rng));
  }
  check.pass = check.worst <= tolerance;
  return check;
}

// ---- individual checks; each returns its instance's residual ------------

double check_projector_identity(RngStream& rng, bool inject_fault) {
  const Index rows = 1 + static_cast<Index>(rng.next_u64() % 6);
  const Index cols = 2 + static_cast<Index>(rng.next_u64() % 15);
  const Matrix m = rng.gaussian_matrix(rows, cols);
  Matrix p = row_null_projector(m, 1e-10);
  if (inject_fault) p(0, 0) += 1e-3;  // test hook
  const double sym = (p - p.transpose()).norm();
  const double idem = (p * p - p).norm();
  const double annihilation = (m * p).norm() / std::max(1.0, m.norm());
  return std::max({sym, idem, annihilation});
}

// A projector's spectrum is {0, 1}; count singular values above 1/2 rather
// than relative to sigma_1, which misfires when P is the zero matrix.
Index projector_rank(const Matrix& p) {
  const Vector sv = svd(p).singular_values;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 0.5) ++rank;
  return rank;
}

double check_rank_law(RngStream& rng) {
  const Index d = 4 + static_cast<Index>(rng.next_u64() % 29);
  const Index r = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d));
  const Index rows = r + static_cast<Index>(rng.next_u64() % 4);
  // Exact rank-r factor product.
  const Matrix m = rng.gaussian_matrix(rows, r) * rng.gaussian_matrix(r, d);
  const Matrix p = row_null_projector(m, 1e-10);
  const Index rank_m = numeric_rank(svd(m).singular_values, 1e-10);
  return std::abs(static_cast<double>(projector_rank(p) + rank_m - d));
}

double check_kron_vec_identity(RngStream& rng) {
  const Index m = 2 + static_cast<Index>(rng.next_u64() % 5);
  const Index n = 2 + static_cast<Index>(rng.next_u64() % 5);
  const Index p = 2 + static_cast<Index>(rng.next_u64() % 5);
  const Matrix a = rng.gaussian_matrix(m, n);
  const Matrix x = rng.gaussian_matrix(n, p);
  const Matrix b = rng.gaussian_matrix(p, m);
  const Matrix lhs = vectorize(a * x * b);
  const Matrix rhs = kronecker(b.transpose(), a) * vectorize(x);
  return (lhs - rhs).norm() / std::max(1.0, lhs.norm());
}

double check_closed_form_vs_oracle(RngStream& rng) {
  const Index d = 6 + static_cast<Index>(rng.next_u64() % 19);  // <= 24
  const Index n_f = 1 + static_cast<Index>(rng.next_u64() % 4);
  const Index n_0 = 4 + static_cast<Index>(rng.next_u64() % 12);
  const Instance inst = random_instance(rng, d, d, n_f, n_0);

  const ClosedFormResult cf = closed_form_update(inst.w, inst.sets, 1e-10, 1e-8);
  GdConfig cfg;
  cfg.max_iters = 20000;
  cfg.grad_tol = 1e-10;
  const OracleResult oracle =
      gd_multiplicative_oracle(inst.w, inst.sets, cfg, 1e-10);

  const double closed = cf.report.after.total();
  // Positive when the closed form is worse than the oracle.
  return (closed - oracle.objective_value) / (1.0 + oracle.objective_value);
}

double check_stationarity(RngStream& rng) {
  const Index d = 6 + static_cast<Index>(rng.next_u64() % 19);
  const Index n_f = 1 + static_cast<Index>(rng.next_u64() % 4);
  const Index n_0 = 4 + static_cast<Index>(rng.next_u64() % 12);
  const Instance inst = random_instance(rng, d, d, n_f, n_0);
  const ClosedFormResult cf = closed_form_update(inst.w, inst.sets, 1e-10, 1e-8);
  return cf.report.stationarity_residual;
}

struct AdditiveInstance {
  Instance inst;
  Matrix p_m;
};

AdditiveInstance random_additive_instance(RngStream& rng, Index d_k, Index d_m,
                                          Index n_f, Index n_0) {
  AdditiveInstance out{random_instance(rng, d_k, d_m, n_f, n_0), {}};
  out.p_m = retain_null_projector(out.inst.sets.k_0);
  return out;
}

double check_sylvester_residual(RngStream& rng) {
  const Index d_k = 6 + static_cast<Index>(rng.next_u64() % 11);
  const Index d_m = 4 + static_cast<Index>(rng.next_u64() % 11);
  const Index n_f = 1 + static_cast<Index>(rng.next_u64() % 4);
  const Index n_0 = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d_k - 1));
  const AdditiveInstance a = random_additive_instance(rng, d_k, d_m, n_f, n_0);
  const SylvesterSystem sys = assemble_sylvester(a.inst.w, a.inst.sets, a.p_m);
  const Matrix d_tilde = solve_sylvester_kron(sys);
  return sylvester_residual(sys, d_tilde);
}

double check_retain_preservation(RngStream& rng) {
  const Index d_k = 8 + static_cast<Index>(rng.next_u64() % 9);
  const Index d_m = 8 + static_cast<Index>(rng.next_u64() % 9);
  const Index n_f = 1 + static_cast<Index>(rng.next_u64() % 4);
  const Index n_0 = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d_k - 1));
  const AdditiveInstance a = random_additive_instance(rng, d_k, d_m, n_f, n_0);

  const SylvesterSystem sys = assemble_sylvester(a.inst.w, a.inst.sets, a.p_m);
  const Matrix closed = solve_sylvester_kron(sys);
  GdConfig cfg;
  cfg.grad_tol = 1e-9;
  cfg.max_iters = 50000;
  const GdResult gd = solve_gd(a.inst.w, a.inst.sets, a.p_m, cfg);

  const Matrix wk_0 = a.inst.w * a.inst.sets.k_0;
  const double scale = std::max(1e-300, wk_0.norm());
  const double via_closed =
      (apply_additive(a.inst.w, closed, a.p_m) * a.inst.sets.k_0 - wk_0).norm() / scale;
  const double via_gd =
      (apply_additive(a.inst.w, gd.d_tilde, a.p_m) * a.inst.sets.k_0 - wk_0).norm() / scale;
  return std::max(via_closed, via_gd);
}

double check_gradient(RngStream& rng) {
  const Index d_k = 3 + static_cast<Index>(rng.next_u64() % 4);  // <= 6
  const Index d_m = 3 + static_cast<Index>(rng.next_u64() % 4);
  const Index n_f = 1 + static_cast<Index>(rng.next_u64() % 3);
  const Index n_0 = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d_k - 1));
  const AdditiveInstance a = random_additive_instance(rng, d_k, d_m, n_f, n_0);
  const Matrix point = rng.gaussian_matrix(d_m, d_k);

  const Matrix analytic = objective_gradient(point, a.inst.w, a.inst.sets, a.p_m);
  const Matrix numeric = finite_diff_gradient(
      [&](const Matrix& x) {
        return additive_objective(x, a.inst.w, a.inst.sets, a.p_m);
      },
      point, 1e-6);
  return (analytic - numeric).norm() / std::max(1.0, analytic.norm());
}

double check_kron_vs_gd(RngStream& rng) {
  const Index d_k = 4 + static_cast<Index>(rng.next_u64() % 9);
  const Index d_m = 4 + static_cast<Index>(rng.next_u64() % 9);
  const Index n_f = 1 + static_cast<Index>(rng.next_u64() % 4);
  const Index n_0 = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d_k - 1));
  const AdditiveInstance a = random_additive_instance(rng, d_k, d_m, n_f, n_0);

  const SylvesterSystem sys = assemble_sylvester(a.inst.w, a.inst.sets, a.p_m);
  const Matrix closed = solve_sylvester_kron(sys);
  GdConfig cfg;
  cfg.grad_tol = 1e-10;
  cfg.max_iters = 100000;
  const GdResult gd = solve_gd(a.inst.w, a.inst.sets, a.p_m, cfg);
  return (closed - gd.d_tilde).norm() / (1.0 + closed.norm());
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts) {
  if (opts.trials < 1)
    throw ValidationError("verify: trials must be >= 1");

  const std::uint64_t seed = opts.seed;
  const int trials = opts.trials;
  VerifyReport report;

  report.checks.push_back(run_check(
      "projector_identity", 1e-10, trials, seed, [&](RngStream& rng) {
        return check_projector_identity(rng, opts.inject_fault);
      }));
  report.checks.push_back(
      run_check("rank_law", 0.0, trials, seed, check_rank_law));
  report.checks.push_back(run_check("kron_vec_identity", 1e-12, trials, seed,
                                    check_kron_vec_identity));
  report.checks.push_back(run_check("closed_form_vs_oracle", 1e-6, trials,
                                    seed, check_closed_form_vs_oracle));
  report.checks.push_back(
      run_check("stationarity", 1e-8, trials, seed, check_stationarity));
  report.checks.push_back(run_check("sylvester_residual", 1e-8, trials, seed,
                                    check_sylvester_residual));
  report.checks.push_back(run_check("retain_preservation", 1e-10, trials,
                                    seed, check_retain_preservation));
  report.checks.push_back(
      run_check("gradient_check", 1e-4, trials, seed, check_gradient));
  report.checks.push_back(
      run_check("kron_vs_gd", 1e-5, trials, seed, check_kron_vs_gd));

  report.all_pass = true;
  for (const VerifyCheck& check : report.checks) {
    if (!check.pass) {
      report.all_pass = false;
      log_error("verify check failed: " + check.name + " (worst " +
                std::to_string(check.worst) + ", tol " +
                std::to_string(check.tolerance) + ")");
    }
  }
  return report;
}

std::string verify_json_string(const VerifyReport& report,
                               const VerifyOptions& opts) {
  nlohmann::ordered_json doc;
  doc["seed"] = opts.seed;
  doc["trials"] = opts.trials;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const VerifyCheck& check : report.checks)
    checks.push_back({{"name", check.name},
                      {"pass", check.pass},
                      {"worst_residual", check.worst},
                      {"tolerance", check.tolerance},
                      {"trials", check.trials}});
  doc["checks"] = std::move(checks);
  doc["all_pass"] = report.all_pass;
  return doc.dump(2) + "\n";
}

void write_verify_json(const VerifyReport& report, const VerifyOptions& opts,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << verify_json_string(report, opts);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace zul
