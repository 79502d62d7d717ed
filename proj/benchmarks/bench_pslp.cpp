#include <benchmark/benchmark.h>

#include "pslp/episodes.hpp"
#include "pslp/graph.hpp"
#include "pslp/jmp.hpp"
#include "pslp/propagation.hpp"
#include "pslp/pslp.hpp"

namespace {

using namespace pslp;

const features::FeatureBank& bank() {
  static const auto b = episodes::synthetic_gaussian_bank(20, 100, 40, 3.0, 1.0, 1);
  return b;
}

episodes::Episode episode(int m_query) {
  return episodes::sample_task(bank(), {5, 1, m_query, episodes::SamplingMode::kBalanced, 2.0, 1}, 0);
}

Matrix episode_features(int m_query) {
  const auto ep = episode(m_query);
  return preprocess_episode(ep.support_X, ep.query_X, features::PreprocessPipeline::default_pipeline());
}

void BM_PslpInfer(benchmark::State& state) {
  const auto ep = episode(static_cast<int>(state.range(0)));
  const auto cfg = PslpConfig::balanced_defaults();
  for (auto _ : state) benchmark::DoNotOptimize(pslp_infer(ep.support_X, ep.support_y, ep.query_X, cfg));
  state.SetLabel("T=" + std::to_string(ep.support_X.rows() + ep.query_X.rows()));
}
BENCHMARK(BM_PslpInfer)->Arg(25)->Arg(75)->Arg(150)->Unit(benchmark::kMicrosecond);

void BM_BuildGraph(benchmark::State& state) {
  const Matrix X = episode_features(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_graph(X, 10.0, 8));
}
BENCHMARK(BM_BuildGraph)->Arg(25)->Arg(75)->Arg(150)->Unit(benchmark::kMicrosecond);

void BM_JmpRefine(benchmark::State& state) {
  const Matrix X = episode_features(75);
  jmp::JmpConfig cfg;
  cfg.k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(jmp::jmp_refine(X, cfg));
}
BENCHMARK(BM_JmpRefine)->Arg(1)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_PropagationMatrix(benchmark::State& state) {
  const Matrix L = graph::build_graph(episode_features(static_cast<int>(state.range(0))), 10.0, 8).normalized;
  for (auto _ : state) benchmark::DoNotOptimize(propagation::propagation_matrix(L, 0.7));
}
BENCHMARK(BM_PropagationMatrix)->Arg(25)->Arg(75)->Arg(150)->Unit(benchmark::kMicrosecond);

void BM_SinkhornBalanced(benchmark::State& state) {
  const auto M = static_cast<Eigen::Index>(state.range(0));
  const Matrix Zq = (Matrix::Random(M, 5).array() + 1.5).matrix();
  for (auto _ : state) benchmark::DoNotOptimize(propagation::sinkhorn_balanced(Zq));
}
BENCHMARK(BM_SinkhornBalanced)->Arg(75)->Arg(150)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
