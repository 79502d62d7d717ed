#include "pslp/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>


namespace pslp::eval {

namespace {

double nearest_rank(std::vector<double> sorted_values, double fraction) {
  std::sort(sorted_values.begin(), sorted_values.end());
  const auto n = sorted_values.size();
  auto rank = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_values[rank - 1];
}

int clamp_neighbours(int B, Eigen::Index T) { return static_cast<int>(std::min<Eigen::Index>(B, T - 1)); }

struct TaskOutcome {
  std::vector<double> accuracy;  // per method
  std::vector<double> micros;
  std::exception_ptr error;
  bool done = false;
};

}  // namespace

double accuracy(const LabelVector& predictions, const LabelVector& truth) {
  if (predictions.size() != truth.size())
    throw Error(ErrorCode::kDimensionMismatch, "prediction and truth lengths differ");
  if (truth.empty()) return 1.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predictions[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

AccuracyStats summarize(std::span<const double> accuracies) {
  AccuracyStats stats;
  if (accuracies.empty()) return stats;
  const auto n = static_cast<double>(accuracies.size());
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  stats.mean = sum / n;
  double sq = 0.0;
  for (double a : accuracies) sq += (a - stats.mean) * (a - stats.mean);
  stats.ci95 = 1.96 * std::sqrt(sq / n) / std::sqrt(n);
  return stats;
}

LatencySummary summarize_latency(std::span<const double> micros) {
  LatencySummary s;
  s.n = micros.size();
  if (micros.empty()) return s;
  double total = 0.0;
  for (double m : micros) total += m;
  s.total_seconds = total * 1e-6;
  s.mean_us = total / static_cast<double>(micros.size());
  std::vector<double> values(micros.begin(), micros.end());
  s.p50_us = nearest_rank(values, 0.50);
  s.p95_us = nearest_rank(std::move(values), 0.95);
  return s;
}

LabelVector baseline_nearest_prototype(const episodes::Episode& episode, double gamma,
                                       const features::PreprocessPipeline& preprocess) {
  const int N = infer_num_classes(episode.support_y);
  const Matrix X = preprocess_episode(episode.support_X, episode.query_X, preprocess);
  const Prototypes C = init_prototypes(X, episode.support_y, N);
  return predict(soft_labels(X.bottomRows(episode.query_X.rows()), C, gamma));
}

LabelVector baseline_vanilla_lp(const episodes::Episode& episode, const PslpConfig& cfg) {
  cfg.validate();
  const int N = infer_num_classes(episode.support_y);
  const Matrix X0 = preprocess_episode(episode.support_X, episode.query_X, cfg.preprocess);
  auto jcfg = cfg.jmp_config();
  jcfg.B = clamp_neighbours(jcfg.B, X0.rows());
  const auto refined = jmp::jmp_refine(X0, jcfg);
  const auto P = propagation::propagation_matrix(refined.graph.normalized, cfg.alpha);
  propagation::LabelMatrix Z(Matrix::Zero(X0.rows(), N), episode.support_X.rows());
  Z = propagation::clamp_support(std::move(Z), episode.support_y);
  Z = propagation::propagate(P, Z);
  return predict(Z.query());
}

Method pslp_method(const PslpConfig& cfg, std::string name) {
  return {std::move(name), [cfg](const episodes::Episode& ep) {
            return pslp_infer(ep.support_X, ep.support_y, ep.query_X, cfg).predictions;
          }};
}

Method pslp_without_jmp_method(const PslpConfig& cfg) {
  PslpConfig no_jmp = cfg;
  no_jmp.k = 0;
  return pslp_method(no_jmp, "pslp_no_jmp");
}

Method nearest_prototype_method(const PslpConfig& cfg) {
  return {"nearest_prototype", [gamma = cfg.gamma, pipeline = cfg.preprocess](const episodes::Episode& ep) {
            return baseline_nearest_prototype(ep, gamma, pipeline);
          }};
}

Method vanilla_lp_method(const PslpConfig& cfg) {
  return {"vanilla_lp", [cfg](const episodes::Episode& ep) { return baseline_vanilla_lp(ep, cfg); }};
}

Method oracle_method() {
  return {"oracle", [](const episodes::Episode& ep) { return ep.truth_y; }};
}

BenchReport evaluate(const features::FeatureBank& bank, const episodes::EpisodeSpec& spec,
                     const std::vector<Method>& methods, std::size_t n_tasks, EvalOptions options) {
  if (methods.empty()) throw Error(ErrorCode::kConfig, "evaluate needs at least one method");
  std::vector<TaskOutcome> outcomes(n_tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto worker = [&] {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      TaskOutcome& out = outcomes[t];
      const std::uint64_t seed = episodes::task_seed(spec.base_seed, t);
      try {
        const auto ep = episodes::sample_task(bank, spec, t);
        for (const auto& method : methods) {
          const auto start = std::chrono::steady_clock::now();
          const LabelVector pred = method.predict(ep);
          const auto stop = std::chrono::steady_clock::now();
          out.accuracy.push_back(accuracy(pred, ep.truth_y));
          out.micros.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
        }
      } catch (const Error& e) {
        out.error = std::make_exception_ptr(e.with_seed(seed));
        if (!options.skip_errors) abort.store(true);
      } catch (...) {
        out.error = std::current_exception();
        if (!options.skip_errors) abort.store(true);
      }
      out.done = true;
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (!options.skip_errors) {
    for (const auto& out : outcomes)
      if (out.error) std::rethrow_exception(out.error);
  }

  BenchReport report;
  report.primary = methods.front().name;
  std::vector<std::vector<double>> acc(methods.size()), micros(methods.size());
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const auto& out = outcomes[t];
    if (out.error || !out.done) {
      ++report.n_failed;
      continue;
    }
    report.task_indices.push_back(t);
    report.task_seeds.push_back(episodes::task_seed(spec.base_seed, t));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      acc[m].push_back(out.accuracy[m]);
      micros[m].push_back(out.micros[m]);
    }
  }
  report.n_tasks = report.task_indices.size();

  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodReport mr;
    mr.name = methods[m].name;
    mr.n_tasks = report.n_tasks;
    const auto stats = summarize(acc[m]);
    mr.mean_accuracy = stats.mean;
    mr.ci95 = stats.ci95;
    mr.latency = summarize_latency(micros[m]);
    mr.per_task_accuracy = std::move(acc[m]);
    mr.per_task_micros = std::move(micros[m]);
    report.per_method[mr.name] = std::move(mr);
  }
  const auto& primary = report.per_method.at(report.primary);
  report.mean_accuracy = primary.mean_accuracy;
  report.ci95 = primary.ci95;
  report.per_task_micros = primary.latency;
  return report;
}

LatencyRun bench_latency(const features::FeatureBank& bank, const episodes::EpisodeSpec& spec,
                         const PslpConfig& cfg, std::size_t n_tasks) {
  std::vector<episodes::Episode> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) tasks.push_back(episodes::sample_task(bank, spec, t));

  LatencyRun run;
  std::vector<double> micros;
  micros.reserve(n_tasks);
  for (const auto& ep : tasks) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = pslp_infer(ep.support_X, ep.support_y, ep.query_X, cfg);
    const auto stop = std::chrono::steady_clock::now();
    micros.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
    run.accuracies.push_back(accuracy(result.predictions, ep.truth_y));
  }
  run.summary = summarize_latency(micros);
  return run;
}

}  // namespace pslp::eval
