#include "pslp/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "pslp/episodes.hpp"
#include "pslp/eval.hpp"
#include "pslp/graph.hpp"
#include "pslp/propagation.hpp"
#include "pslp/pslp.hpp"

namespace pslp::selftest {

namespace {

using Engine = std::mt19937_64;

class AlphaFaultScope {
 public:
  explicit AlphaFaultScope(bool active) : active_(active) {
    if (active_) propagation::hooks::set_invert_alpha_guard(true);
  }
  ~AlphaFaultScope() {
    if (active_) propagation::hooks::set_invert_alpha_guard(false);
  }
  AlphaFaultScope(const AlphaFaultScope&) = delete;
  AlphaFaultScope& operator=(const AlphaFaultScope&) = delete;

 private:
  bool active_;
};

Matrix random_points(Engine& rng, int T, int d) {
  std::normal_distribution<double> normal;
  Matrix X(T, d);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
    X.row(i).normalize();
  }
  return X;
}

Matrix random_normalized_adjacency(Engine& rng, int T) {
  std::uniform_int_distribution<int> pick_b(1, std::max(1, std::min(10, T - 1)));
  std::uniform_real_distribution<double> pick_gamma(0.5, 10.0);
  return graph::build_graph(random_points(rng, T, 8), pick_gamma(rng), pick_b(rng)).normalized;
}

Matrix random_labels(Engine& rng, int T, int N) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix Z(T, N);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < N; ++j) Z(i, j) = unit(rng);
  return Z;
}

SuiteResult run_suite(const std::string& name, int cases, const std::function<std::string(int)>& body) {
  SuiteResult result{name, true, 0, {}};
  for (int c = 0; c < cases; ++c) {
    try {
      std::string failure = body(c);
      ++result.cases;
      if (!failure.empty()) {
        result.passed = false;
        result.detail = "case " + std::to_string(c) + ": " + failure;
        return result;
      }
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = "case " + std::to_string(c) + " threw: " + e.what();
      return result;
    }
  }
  return result;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

}  // namespace

bool Report::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

Report run(const Options& options) {
  AlphaFaultScope fault(options.inject_alpha_fault);
  Report report;
  Engine rng(options.seed);
  const int max_t = options.quick ? 30 : 100;
  const int cases = options.quick ? 40 : 200;
  const double alphas[] = {0.0, 0.5, 0.7, 0.9};

  report.suites.push_back(run_suite("closed_form_vs_neumann", cases, [&](int c) -> std::string {
    std::uniform_int_distribution<int> pick_t(10, max_t), pick_n(2, 10);
    const int T = pick_t(rng);
    const double alpha = alphas[c % 4];
    const Matrix L = random_normalized_adjacency(rng, T);
    const Matrix Z = random_labels(rng, T, pick_n(rng));
    const auto P = propagation::propagation_matrix(L, alpha);
    const Matrix closed = P.values() * Z;
    const Matrix iterative = propagation::iterative_oracle(L, alpha, Z, 1e-12, 100000);
    const double err = (closed - iterative).cwiseAbs().maxCoeff();
    return err <= 1e-8 ? "" : "max-abs gap " + fmt(err);
  }));

  report.suites.push_back(run_suite("sinkhorn_marginals", cases, [&](int) -> std::string {
    std::uniform_int_distribution<int> pick_n(2, 10), pick_per(1, 15);
    const int N = pick_n(rng);
    const int M = N * pick_per(rng);
    const Matrix Zq = random_labels(rng, M, N).array() + 1e-3;
    const auto result = propagation::sinkhorn_balanced(Zq, {.max_iter = 1000, .tol = 1e-6});
    if (!result.converged) return "did not converge";
    const double row_err = (result.values.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err =
        (result.values.colwise().sum().array() - static_cast<double>(M) / N).abs().maxCoeff();
    const double err = std::max(row_err, col_err);
    return err <= 1e-6 ? "" : "marginal error " + fmt(err);
  }));

  report.suites.push_back(run_suite("normalized_adjacency_spectrum", cases, [&](int) -> std::string {
    std::uniform_int_distribution<int> pick_t(3, std::min(max_t, 64));
    const Matrix L = random_normalized_adjacency(rng, pick_t(rng));
    if ((L - L.transpose()).cwiseAbs().maxCoeff() > 1e-12) return "L not symmetric";
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(L, Eigen::EigenvaluesOnly).eigenvalues();
    const double radius = eig.cwiseAbs().maxCoeff();
    return radius <= 1.0 + 1e-9 ? "" : "spectral radius " + fmt(radius);
  }));

  report.suites.push_back(run_suite("alpha_guard", 1, [&](int) -> std::string {
    const Matrix L = random_normalized_adjacency(rng, 12);
    for (double bad : {-0.1, 1.0, 1.5}) {
      try {
        propagation::propagation_matrix(L, bad);
        return "alpha = " + fmt(bad) + " accepted";
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kBadAlpha) throw;
      }
    }
    for (double good : alphas) propagation::propagation_matrix(L, good);
    return "";
  }));

  const int episodes_count = options.quick ? 20 : 200;
  const auto bank = episodes::synthetic_gaussian_bank(20, 40, 40, 3.0, 1.0, options.seed);
  report.suites.push_back(run_suite("reduction_equivalence", episodes_count, [&](int c) -> std::string {
    const episodes::EpisodeSpec spec{5, 1, 75, episodes::SamplingMode::kBalanced, 2.0, options.seed};
    const auto ep = episodes::sample_task(bank, spec, static_cast<std::uint64_t>(c));
    PslpConfig cfg;
    cfg.alpha = 0.0;
    cfg.k = 0;
    cfg.t_pslp = 1;
    cfg.balanced = false;
    const auto full = pslp_infer(ep.support_X, ep.support_y, ep.query_X, cfg).predictions;
    const auto nearest = eval::baseline_nearest_prototype(ep, cfg.gamma, cfg.preprocess);
    return full == nearest ? "" : "predictions differ";
  }));

  return report;
}

}  // namespace pslp::selftest
